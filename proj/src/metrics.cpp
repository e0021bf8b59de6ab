#include "defnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "defnet/errors.hpp"

namespace defnet {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, const char* who) {
  if (a.size() != b.size()) throw InvalidInput(std::string(who) + ": length mismatch");
  if (a.size() < 2) throw InvalidInput(std::string(who) + ": need at least two points");
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double srcc(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, "srcc");
  const auto rp = average_ranks(pred);
  const auto rt = average_ranks(truth);
  return pearson(rp, rt);
}

double plcc(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, "plcc");
  return pearson(pred, truth);
}

double normality_diag(std::span<const double> scores) {
  if (scores.size() < 20) throw InvalidInput("normality_diag: need at least 20 scores");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) throw InvalidInput("normality_diag: constant sample");
  const boost::math::normal standard;
  const double n = static_cast<double>(sorted.size());
  std::vector<double> theoretical(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    theoretical[i] = boost::math::quantile(standard, (static_cast<double>(i + 1) - 0.375) / (n + 0.25));
  }
  return pearson(sorted, theoretical);
}

Prediction predict(const TinyScorer& scorer, const Sample& sample, const FusionConfig& cfg) {
  const ScorerForward fwd = scorer_forward(scorer, sample);
  const TaskPrediction tp = task_prediction(fwd.views);
  Prediction p;
  p.q_hat = tp.q_hat;
  p.scene = argmax(tp.scene);
  p.distortion = argmax(tp.distortion);

  const auto fused = local_global_params(fwd.views, Task::Quality, scorer.proj, cfg.n_fuse);
  p.ci_width = predictive_interval(fused, 0.95).width();
  double single = 0.0;
  for (const auto& v : fwd.views.locals) {
    single += predictive_interval(view_params(v, Task::Quality, scorer.proj), 0.95).width();
  }
  p.ci_width_single = single / static_cast<double>(fwd.views.locals.size());
  return p;
}

MetricsReport evaluate(const TinyScorer& scorer, std::span<const Sample> samples,
                       const FusionConfig& cfg) {
  if (samples.empty()) throw InvalidInput("evaluate: empty dataset");
  std::vector<double> q_hat;
  std::vector<double> mos;
  MetricsReport m;
  m.n = samples.size();
  std::size_t scene_hits = 0;
  std::size_t distortion_hits = 0;
  for (const auto& s : samples) {
    const Prediction p = predict(scorer, s, cfg);
    q_hat.push_back(p.q_hat);
    mos.push_back(s.mos);
    scene_hits += p.scene == s.scene ? 1 : 0;
    distortion_hits += p.distortion == s.distortion ? 1 : 0;
    m.mean_ci_width += p.ci_width;
    m.mean_ci_width_single += p.ci_width_single;
  }
  const double n = static_cast<double>(samples.size());
  m.mean_ci_width /= n;
  m.mean_ci_width_single /= n;
  m.acc_scene = static_cast<double>(scene_hits) / n;
  m.acc_distortion = static_cast<double>(distortion_hits) / n;
  if (samples.size() >= 2) {
    m.srcc = srcc(q_hat, mos);
    m.plcc = plcc(q_hat, mos);
  } else {
    m.srcc = m.plcc = std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

std::string format_metrics(const MetricsReport& m) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "n=%zu\nsrcc=%.6f\nplcc=%.6f\nacc_scene=%.6f\nacc_distortion=%.6f\n"
                "mean_ci_width=%.6f\nmean_ci_width_single=%.6f\n",
                m.n, m.srcc, m.plcc, m.acc_scene, m.acc_distortion, m.mean_ci_width,
                m.mean_ci_width_single);
  return buf;
}

}  // namespace defnet
