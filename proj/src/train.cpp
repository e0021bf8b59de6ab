#include "defnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "defnet/errors.hpp"
#include "defnet/evidential_loss.hpp"
#include "defnet/metrics.hpp"

namespace defnet {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw InvalidInput("train: lr must be positive");
  if (epochs <= 0 || batch_size <= 0) throw InvalidInput("train: epochs and batch_size must be positive");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw InvalidInput("train: train_fraction must lie in (0, 1]");
  }
}

std::pair<std::span<const Sample>, std::span<const Sample>> split_dataset(std::span<const Sample> samples,
                                                                          double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw InvalidInput("split: train_fraction must lie in (0, 1]");
  }
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(samples.size())));
  return {samples.first(n_train), samples.subspan(n_train)};
}

JointShape shape_for(const SynthConfig& cfg) { return {kQualityLevels, cfg.scenes, cfg.distortions}; }

LossReport batch_objective(const TinyScorer& scorer, std::span<const Sample> batch,
                           std::span<const std::vector<std::size_t>> crops, const TaskWeights& weights,
                           const FusionConfig& cfg, TinyScorer* grad) {
  std::vector<ScorerForward> fwd;
  std::vector<ViewSet> views;
  std::vector<TaskTargets> targets;
  fwd.reserve(batch.size());
  for (const auto& s : batch) {
    fwd.push_back(scorer_forward(scorer, s));
    views.push_back(fwd.back().views);
    targets.push_back(sample_targets(s, scorer.shape));
  }
  const Batch b{views, targets, crops};
  BatchGrad bg;
  const LossReport report = overall_loss(b, scorer.proj, weights, cfg, grad ? &bg : nullptr);
  if (grad) {
    for (std::size_t i = 0; i < batch.size(); ++i) scorer_backward(scorer, batch[i], fwd[i], bg.samples[i], *grad);
    for (Task t : kAllTasks) {
      auto& dst = grad->proj[t];
      const auto& src = bg.d_proj[t];
      for (std::size_t k = 0; k < dst.weight.size(); ++k) dst.weight[k] += src.weight[k];
      for (std::size_t k = 0; k < 4; ++k) dst.bias[k] += src.bias[k];
    }
  }
  return report;
}

std::pair<double, double> quality_correlations(const TinyScorer& scorer, std::span<const Sample> samples) {
  std::vector<double> q_hat;
  std::vector<double> mos;
  for (const auto& s : samples) {
    const auto fwd = scorer_forward(scorer, s);
    q_hat.push_back(quality_expectation(quality_marginal(std::span<const JointScore>(fwd.views.locals))));
    mos.push_back(s.mos);
  }
  return {srcc(q_hat, mos), plcc(q_hat, mos)};
}

namespace {

class Adam {
 public:
  Adam(std::size_t n, const TrainConfig& cfg) : m_(n, 0.0), v_(n, 0.0), cfg_(cfg) {}

  void step(std::vector<double>& params, const std::vector<double>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.adam_beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.adam_beta2, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = cfg_.adam_beta1 * m_[i] + (1.0 - cfg_.adam_beta1) * grad[i];
      v_[i] = cfg_.adam_beta2 * v_[i] + (1.0 - cfg_.adam_beta2) * grad[i] * grad[i];
      params[i] -= cfg_.lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.adam_eps);
    }
  }

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  TrainConfig cfg_;
  int t_ = 0;
};

void accumulate(LossReport& acc, const LossReport& r) {
  acc.l_q += r.l_q;
  acc.l_s += r.l_s;
  acc.l_d += r.l_d;
  acc.multitask += r.multitask;
  acc.cross_region += r.cross_region;
  acc.local_global += r.local_global;
  acc.total += r.total;
}

}  // namespace

TrainResult train(std::span<const Sample> train_set, std::span<const Sample> val_set, JointShape shape,
                  const TrainConfig& tcfg, const FusionConfig& fcfg) {
  tcfg.validate();
  fcfg.validate();
  if (train_set.empty()) throw InvalidInput("train: empty training set");
  const int feature_dim = static_cast<int>(train_set.front().global_features.size());

  TrainResult result;
  result.scorer = TinyScorer::random(shape, feature_dim, tcfg.seed * 0x9E3779B97F4A7C15ULL + 1);
  std::mt19937_64 rng(tcfg.seed ^ 0xD1B54A32D192ED03ULL);
  Adam adam(parameter_count(result.scorer), tcfg);
  TaskWeights weights = TaskWeights::with_tasks(tcfg.enable_scene_task, tcfg.enable_distortion_task);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Sample> batch;
  std::vector<std::vector<std::size_t>> crops;

  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    LossReport sum;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tcfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(tcfg.batch_size));
      batch.clear();
      crops.clear();
      for (std::size_t k = start; k < stop; ++k) {
        batch.push_back(train_set[order[k]]);
        crops.push_back(choose_fusion_crops(batch.back().local_features.size(), fcfg.n_fuse, &rng));
      }
      TinyScorer grad = TinyScorer::zeros_like(result.scorer);
      const LossReport r = batch_objective(result.scorer, batch, crops, weights, fcfg, &grad);
      if (!std::isfinite(r.total)) {
        char msg[256];
        std::snprintf(msg, sizeof(msg),
                      "non-finite loss at epoch %d batch %d (L_M=%g L_U=%g L_F=%g kappa=%g)", epoch,
                      batches, r.multitask, r.cross_region, r.local_global, result.scorer.kappa());
        throw DivergenceError(msg);
      }
      auto params = flatten(result.scorer);
      adam.step(params, flatten(grad));
      unflatten(result.scorer, params);
      accumulate(sum, r);
      ++batches;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const double inv = 1.0 / static_cast<double>(batches);
    rec.loss = {sum.l_q * inv, sum.l_s * inv, sum.l_d * inv, sum.multitask * inv,
                sum.cross_region * inv, sum.local_global * inv, sum.total * inv, weights.lambda, false};
    rec.kappa = result.scorer.kappa();
    if (val_set.size() >= 2) {
      std::tie(rec.val_srcc, rec.val_plcc) = quality_correlations(result.scorer, val_set);
    }
    result.history.push_back(rec);
    weights = dwa_update(weights, {rec.loss.l_q, rec.loss.l_s, rec.loss.l_d});
  }
  return result;
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,l_q,l_s,l_d,L_M,L_U,L_F,total,lambda_q,lambda_s,lambda_d,kappa,val_srcc,val_plcc\n";
  char buf[512];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.epoch, r.loss.l_q, r.loss.l_s, r.loss.l_d, r.loss.multitask, r.loss.cross_region,
                  r.loss.local_global, r.loss.total, r.loss.lambda[0], r.loss.lambda[1], r.loss.lambda[2],
                  r.kappa, r.val_srcc, r.val_plcc);
    out << buf;
  }
}

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradcheckReport gradcheck_evidential(int trials, std::uint64_t seed, double step) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> alpha_d(1.2, 10.0);
  std::uniform_real_distribution<double> pos_d(0.1, 10.0);
  std::uniform_real_distribution<double> err_d(0.1, 5.0);
  std::uniform_real_distribution<double> delta_d(-3.0, 3.0);
  std::bernoulli_distribution sign_d(0.5);
  const char* names[4] = {"d_delta", "d_v", "d_alpha", "d_beta"};
  GradcheckReport report;
  for (const char* n : names) report.groups.push_back({n, 0, 0.0});

  const double tau = 0.05;
  for (int trial = 0; trial < trials; ++trial) {
    NigParams p{delta_d(rng), pos_d(rng), alpha_d(rng), pos_d(rng)};
    const double y = p.delta + (sign_d(rng) ? 1.0 : -1.0) * err_d(rng);
    const EvidentialGrad g = evidential_grad(p, y, tau);
    const double analytic[4] = {g.d_delta, g.d_v, g.d_alpha, g.d_beta};
    for (int k = 0; k < 4; ++k) {
      NigParams hi = p;
      NigParams lo = p;
      double* fields_hi[4] = {&hi.delta, &hi.v, &hi.alpha, &hi.beta};
      double* fields_lo[4] = {&lo.delta, &lo.v, &lo.alpha, &lo.beta};
      *fields_hi[k] += step;
      *fields_lo[k] -= step;
      const double numeric =
          (evidential_loss(hi, y, tau).total - evidential_loss(lo, y, tau).total) / (2.0 * step);
      auto& grp = report.groups[static_cast<std::size_t>(k)];
      grp.count += 1;
      grp.max_rel_error = std::max(grp.max_rel_error, relative_error(analytic[k], numeric));
    }
  }
  for (const auto& grp : report.groups) report.max_rel_error = std::max(report.max_rel_error, grp.max_rel_error);
  return report;
}

GradcheckReport gradcheck_end_to_end(const TinyScorer& scorer, std::span<const Sample> batch,
                                     const TaskWeights& weights, const FusionConfig& cfg, double step,
                                     bool corrupt) {
  TinyScorer grad = TinyScorer::zeros_like(scorer);
  batch_objective(scorer, batch, {}, weights, cfg, &grad);
  if (corrupt) {
    // Perturbs one weight gradient by 1% of its magnitude plus a fixed offset.
    grad.weight[0] = grad.weight[0] * 1.01 + 1e-3;
  }

  GradcheckReport report;
  TinyScorer probe = scorer;
  std::vector<std::span<double>> probe_groups;
  for_each_group(probe, [&](const std::string&, int, int, std::span<double> v) { probe_groups.push_back(v); });
  std::size_t gi = 0;
  for_each_group(grad, [&](const std::string& name, int, int, std::span<double> analytic) {
    GradcheckGroup grp{name, analytic.size(), 0.0};
    auto values = probe_groups[gi++];
    for (std::size_t k = 0; k < analytic.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + step;
      const double up = batch_objective(probe, batch, {}, weights, cfg, nullptr).total;
      values[k] = saved - step;
      const double down = batch_objective(probe, batch, {}, weights, cfg, nullptr).total;
      values[k] = saved;
      const double numeric = (up - down) / (2.0 * step);
      grp.max_rel_error = std::max(grp.max_rel_error, relative_error(analytic[k], numeric));
    }
    report.max_rel_error = std::max(report.max_rel_error, grp.max_rel_error);
    report.groups.push_back(std::move(grp));
  });
  return report;
}

}  // namespace defnet
