#include "defnet/joint_head.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "defnet/errors.hpp"

namespace defnet {

const char* task_name(Task t) {
  switch (t) {
    case Task::Quality: return "q";
    case Task::Scene: return "s";
    case Task::Distortion: return "d";
  }
  return "?";
}

JointScore joint_softmax(std::span<const double> logits, JointShape shape, double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw InvalidInput("joint_softmax: kappa must be positive");
  }
  if (logits.size() != shape.size()) {
    throw InvalidInput("joint_softmax: expected " + std::to_string(shape.size()) + " logits, got " +
                       std::to_string(logits.size()));
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  JointScore out{shape, std::vector<double>(logits.size())};
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.probs[i] = std::exp((logits[i] - top) / kappa);
    sum += out.probs[i];
  }
  for (double& p : out.probs) p /= sum;
  return out;
}

SoftmaxGrad joint_softmax_backward(const JointScore& out, std::span<const double> logits,
                                   double kappa, std::span<const double> grad_probs) {
  const std::size_t n = out.probs.size();
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += out.probs[i] * grad_probs[i];

  SoftmaxGrad g;
  g.d_logits.resize(n);
  // a = z / kappa; dL/da_i = p_i (g_i - <p, g>).
  for (std::size_t i = 0; i < n; ++i) {
    const double d_scaled = out.probs[i] * (grad_probs[i] - dot);
    g.d_logits[i] = d_scaled / kappa;
    g.d_kappa -= d_scaled * logits[i] / (kappa * kappa);
  }
  return g;
}

std::vector<double> quality_marginal(const JointScore& view) {
  const auto& sh = view.shape;
  std::vector<double> out(static_cast<std::size_t>(sh.quality), 0.0);
  const std::size_t block = static_cast<std::size_t>(sh.scenes) * sh.distortions;
  for (int c = 0; c < sh.quality; ++c) {
    const auto first = view.probs.begin() + static_cast<std::ptrdiff_t>(c * block);
    double sum = 0.0;
    for (auto it = first; it != first + static_cast<std::ptrdiff_t>(block); ++it) sum += *it;
    out[c] = sum;
  }
  return out;
}

std::vector<double> quality_marginal(std::span<const JointScore> views) {
  if (views.empty()) throw InvalidInput("quality_marginal: no views");
  std::vector<double> out(static_cast<std::size_t>(views.front().shape.quality), 0.0);
  for (const auto& v : views) {
    if (!(v.shape == views.front().shape)) throw InvalidInput("quality_marginal: shape mismatch");
    const auto pc = quality_marginal(v);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += pc[c];
  }
  for (double& x : out) x /= static_cast<double>(views.size());
  return out;
}

std::vector<double> scene_marginal(const JointScore& view) {
  const auto& sh = view.shape;
  std::vector<double> out(static_cast<std::size_t>(sh.scenes), 0.0);
  for (int c = 0; c < sh.quality; ++c)
    for (int s = 0; s < sh.scenes; ++s)
      for (int d = 0; d < sh.distortions; ++d) out[s] += view.at(c, s, d);
  return out;
}

std::vector<double> distortion_marginal(const JointScore& view) {
  const auto& sh = view.shape;
  std::vector<double> out(static_cast<std::size_t>(sh.distortions), 0.0);
  for (int c = 0; c < sh.quality; ++c)
    for (int s = 0; s < sh.scenes; ++s)
      for (int d = 0; d < sh.distortions; ++d) out[d] += view.at(c, s, d);
  return out;
}

double quality_expectation(std::span<const double> pc) {
  double total = 0.0;
  double expectation = 0.0;
  for (std::size_t c = 0; c < pc.size(); ++c) {
    total += pc[c];
    expectation += static_cast<double>(c + 1) * pc[c];
  }
  if (std::abs(total - 1.0) > 1e-4) {
    throw InvalidInput("quality_expectation: marginal sums to " + std::to_string(total));
  }
  return expectation;
}

std::vector<double> marginal_backward(JointShape shape, std::span<const double> grad_quality,
                                      std::span<const double> grad_scene,
                                      std::span<const double> grad_distortion) {
  std::vector<double> out(shape.size(), 0.0);
  for (int c = 0; c < shape.quality; ++c) {
    const double gc = grad_quality.empty() ? 0.0 : grad_quality[c];
    for (int s = 0; s < shape.scenes; ++s) {
      const double gs = grad_scene.empty() ? 0.0 : grad_scene[s];
      for (int d = 0; d < shape.distortions; ++d) {
        const double gd = grad_distortion.empty() ? 0.0 : grad_distortion[d];
        out[shape.index(c, s, d)] = gc + gs + gd;
      }
    }
  }
  return out;
}

int projection_input_dim(JointShape shape, Task t) {
  switch (t) {
    case Task::Quality: return shape.quality + 1;
    case Task::Scene: return shape.scenes;
    case Task::Distortion: return shape.distortions;
  }
  return 0;
}

EvidenceProjection EvidenceProjection::zeros(JointShape shape) {
  EvidenceProjection proj;
  for (Task t : kAllTasks) {
    auto& tp = proj[t];
    tp.in_dim = projection_input_dim(shape, t);
    tp.weight.assign(static_cast<std::size_t>(tp.in_dim) * 4, 0.0);
    tp.bias.fill(0.0);
  }
  return proj;
}

std::vector<double> task_features(const JointScore& view, Task t) {
  switch (t) {
    case Task::Quality: {
      auto pc = quality_marginal(view);
      const double e = quality_expectation(pc);
      pc.push_back(e);
      return pc;
    }
    case Task::Scene: return scene_marginal(view);
    case Task::Distortion: return distortion_marginal(view);
  }
  return {};
}

RawEvidence task_evidence(const JointScore& view, Task t, const EvidenceProjection& proj) {
  const auto& tp = proj[t];
  const auto x = task_features(view, t);
  if (static_cast<int>(x.size()) != tp.in_dim ||
      tp.weight.size() != static_cast<std::size_t>(tp.in_dim) * 4) {
    throw InvalidInput(std::string("task_evidence: projection dimension mismatch for task ") +
                       task_name(t));
  }
  RawEvidence raw = tp.bias;
  for (int i = 0; i < tp.in_dim; ++i)
    for (int k = 0; k < 4; ++k) raw[k] += x[i] * tp.weight[static_cast<std::size_t>(i) * 4 + k];
  return raw;
}

std::vector<double> task_evidence_backward(const JointScore& view, Task t,
                                           const EvidenceProjection& proj,
                                           const RawEvidence& grad_raw,
                                           EvidenceProjection& grad_proj) {
  const auto& tp = proj[t];
  auto& gp = grad_proj[t];
  const auto x = task_features(view, t);

  std::vector<double> gx(x.size(), 0.0);
  for (int k = 0; k < 4; ++k) gp.bias[k] += grad_raw[k];
  for (int i = 0; i < tp.in_dim; ++i) {
    for (int k = 0; k < 4; ++k) {
      const std::size_t idx = static_cast<std::size_t>(i) * 4 + k;
      gp.weight[idx] += x[i] * grad_raw[k];
      gx[i] += tp.weight[idx] * grad_raw[k];
    }
  }
  if (t == Task::Quality) {
    const double g_expect = gx.back();
    gx.pop_back();
    for (std::size_t c = 0; c < gx.size(); ++c) gx[c] += g_expect * static_cast<double>(c + 1);
  }
  return gx;
}

}  // namespace defnet
