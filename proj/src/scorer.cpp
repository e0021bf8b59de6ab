#include "defnet/scorer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "defnet/errors.hpp"

namespace defnet {

double TinyScorer::kappa() const { return std::exp(log_kappa); }

TinyScorer TinyScorer::zeros(JointShape shape, int feature_dim) {
  if (feature_dim <= 0) throw InvalidInput("scorer: feature_dim must be positive");
  TinyScorer s;
  s.shape = shape;
  s.feature_dim = feature_dim;
  s.weight.assign(shape.size() * static_cast<std::size_t>(feature_dim), 0.0);
  s.bias.assign(shape.size(), 0.0);
  s.log_kappa = std::log(kInitialKappa);
  s.proj = EvidenceProjection::zeros(shape);
  // Expectation channel -> delta.
  s.proj[Task::Quality].weight[static_cast<std::size_t>(shape.quality) * 4] = 1.0;
  return s;
}

TinyScorer TinyScorer::random(JointShape shape, int feature_dim, std::uint64_t seed) {
  TinyScorer s = zeros(shape, feature_dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> w_init(0.0, 0.02);
  std::normal_distribution<double> p_init(0.0, 0.05);
  for (double& w : s.weight) w = w_init(rng);
  for (Task t : kAllTasks) {
    for (double& w : s.proj[t].weight) w += p_init(rng);
  }
  return s;
}

TinyScorer TinyScorer::zeros_like(const TinyScorer& like) {
  TinyScorer s = like;
  for_each_group(s, [](const std::string&, int, int, std::span<double> v) {
    std::fill(v.begin(), v.end(), 0.0);
  });
  return s;
}

void for_each_group(TinyScorer& s,
                    const std::function<void(const std::string&, int, int, std::span<double>)>& fn) {
  fn("weight", static_cast<int>(s.shape.size()), s.feature_dim, s.weight);
  fn("bias", static_cast<int>(s.shape.size()), 1, s.bias);
  fn("log_kappa", 1, 1, std::span<double>(&s.log_kappa, 1));
  for (Task t : kAllTasks) {
    auto& tp = s.proj[t];
    const std::string prefix = std::string("proj_") + task_name(t);
    fn(prefix + ".weight", tp.in_dim, 4, tp.weight);
    fn(prefix + ".bias", 1, 4, tp.bias);
  }
}

std::size_t parameter_count(const TinyScorer& s) {
  std::size_t n = 0;
  for_each_group(const_cast<TinyScorer&>(s),
                 [&](const std::string&, int, int, std::span<double> v) { n += v.size(); });
  return n;
}

std::vector<double> flatten(const TinyScorer& s) {
  std::vector<double> out;
  for_each_group(const_cast<TinyScorer&>(s), [&](const std::string&, int, int, std::span<double> v) {
    out.insert(out.end(), v.begin(), v.end());
  });
  return out;
}

void unflatten(TinyScorer& s, std::span<const double> values) {
  if (values.size() != parameter_count(s)) throw InvalidInput("unflatten: size mismatch");
  std::size_t pos = 0;
  for_each_group(s, [&](const std::string&, int, int, std::span<double> v) {
    for (double& x : v) x = values[pos++];
  });
}

std::vector<double> view_logits(const TinyScorer& s, std::span<const double> features) {
  if (static_cast<int>(features.size()) != s.feature_dim) {
    throw InvalidInput("scorer: feature width " + std::to_string(features.size()) +
                       " does not match model width " + std::to_string(s.feature_dim));
  }
  const std::size_t k_out = s.shape.size();
  const auto dim = static_cast<std::size_t>(s.feature_dim);
  std::vector<double> z(s.bias);
  for (std::size_t k = 0; k < k_out; ++k) {
    const double* row = s.weight.data() + k * dim;
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) acc += row[j] * features[j];
    z[k] += acc;
  }
  return z;
}

ScorerForward scorer_forward(const TinyScorer& s, const Sample& sample) {
  ScorerForward fwd;
  const double kappa = s.kappa();
  for (const auto& f : sample.local_features) {
    fwd.local_logits.push_back(view_logits(s, f));
    fwd.views.locals.push_back(joint_softmax(fwd.local_logits.back(), s.shape, kappa));
  }
  fwd.global_logits = view_logits(s, sample.global_features);
  fwd.views.global_view = joint_softmax(fwd.global_logits, s.shape, kappa);
  return fwd;
}

namespace {

void backprop_logits(const TinyScorer& s, std::span<const double> features, const JointScore& view,
                     std::span<const double> logits, const ViewGrad& vg, TinyScorer& g) {
  const auto g_probs = marginal_backward(s.shape, vg.d_quality, vg.d_scene, vg.d_distortion);
  const double kappa = s.kappa();
  const SoftmaxGrad sg = joint_softmax_backward(view, logits, kappa, g_probs);
  g.log_kappa += sg.d_kappa * kappa;
  const auto dim = static_cast<std::size_t>(s.feature_dim);
  for (std::size_t k = 0; k < sg.d_logits.size(); ++k) {
    const double dz = sg.d_logits[k];
    g.bias[k] += dz;
    double* row = g.weight.data() + k * dim;
    for (std::size_t j = 0; j < dim; ++j) row[j] += dz * features[j];
  }
}

}  // namespace

void scorer_backward(const TinyScorer& s, const Sample& sample, const ScorerForward& fwd,
                     const SampleGrad& grad, TinyScorer& grad_out) {
  for (std::size_t i = 0; i < fwd.views.locals.size(); ++i) {
    backprop_logits(s, sample.local_features[i], fwd.views.locals[i], fwd.local_logits[i],
                    grad.locals[i], grad_out);
  }
  backprop_logits(s, sample.global_features, fwd.views.global_view, fwd.global_logits,
                  grad.global_view, grad_out);
}

TaskTargets sample_targets(const Sample& sample, JointShape shape) {
  if (sample.scene < 0 || sample.scene >= shape.scenes || sample.distortion < 0 ||
      sample.distortion >= shape.distortions) {
    throw InvalidInput("sample labels out of range for the model's label sets");
  }
  TaskTargets t;
  t.y_q = sample.mos;
  t.y_s.assign(static_cast<std::size_t>(shape.scenes), 0.0);
  t.y_d.assign(static_cast<std::size_t>(shape.distortions), 0.0);
  t.y_s[static_cast<std::size_t>(sample.scene)] = 1.0;
  t.y_d[static_cast<std::size_t>(sample.distortion)] = 1.0;
  return t;
}

void save_model(std::ostream& out, const TinyScorer& s) {
  out << "joint_shape 1 4\n"
      << s.shape.quality << ' ' << s.shape.scenes << ' ' << s.shape.distortions << ' '
      << s.feature_dim << '\n';
  for_each_group(const_cast<TinyScorer&>(s),
                 [&](const std::string& name, int rows, int cols, std::span<double> v) {
                   out << name << ' ' << rows << ' ' << cols << '\n';
                   char buf[32];
                   for (std::size_t i = 0; i < v.size(); ++i) {
                     std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
                     out << (i ? " " : "") << buf;
                   }
                   out << '\n';
                 });
}

void save_model(const std::filesystem::path& path, const TinyScorer& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  save_model(out, s);
}

TinyScorer load_model(std::istream& in) {
  std::string name;
  int rows = 0;
  int cols = 0;
  if (!(in >> name >> rows >> cols) || name != "joint_shape" || rows != 1 || cols != 4) {
    throw InvalidInput("model: missing joint_shape header");
  }
  JointShape shape;
  int feature_dim = 0;
  if (!(in >> shape.quality >> shape.scenes >> shape.distortions >> feature_dim) ||
      shape.quality != kQualityLevels || shape.scenes <= 0 || shape.distortions <= 0) {
    throw InvalidInput("model: bad joint_shape");
  }
  TinyScorer s = TinyScorer::zeros(shape, feature_dim);
  for_each_group(s, [&](const std::string& expected, int r, int c, std::span<double> v) {
    if (!(in >> name >> rows >> cols) || name != expected || rows != r || cols != c) {
      throw InvalidInput("model: expected group " + expected);
    }
    for (double& x : v) {
      if (!(in >> x)) throw InvalidInput("model: truncated values in " + expected);
    }
  });
  return s;
}

TinyScorer load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open model " + path.string());
  return load_model(in);
}

}  // namespace defnet
