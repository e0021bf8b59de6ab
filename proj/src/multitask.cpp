#include "defnet/multitask.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "defnet/errors.hpp"

namespace defnet {

namespace {

constexpr double kProbClip = 1e-12;

void check_unit(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidInput(std::string(what) + " must lie in [0, 1]");
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

PairLabel pair_label(double mos1, double mos2) {
  if (mos1 > mos2) return {1.0};
  if (mos1 < mos2) return {0.0};
  return {0.5};
}

double thurstone_prob(double q1, double q2) { return 0.5 * std::erfc(-(q1 - q2) / 2.0); }

double fidelity(double p, double phat) {
  check_unit(p, "fidelity: label");
  check_unit(phat, "fidelity: prediction");
  return 1.0 - std::sqrt(p * phat) - std::sqrt((1.0 - p) * (1.0 - phat));
}

double fidelity_grad(double p, double phat) {
  const double q = std::clamp(phat, kProbClip, 1.0 - kProbClip);
  double g = 0.0;
  if (p > 0.0) g -= 0.5 * std::sqrt(p / q);
  if (p < 1.0) g += 0.5 * std::sqrt((1.0 - p) / (1.0 - q));
  return g;
}

double quality_pair_loss(double q1_hat, double q2_hat, PairLabel label) {
  return fidelity(label.prob, thurstone_prob(q1_hat, q2_hat));
}

double scene_loss(std::span<const double> phat, std::span<const double> truth) {
  if (phat.size() != truth.size() || phat.empty()) {
    throw InvalidInput("scene_loss: dimension mismatch");
  }
  double mass = 0.0;
  for (double p : phat) mass += p;
  if (mass > 1.0 + 1e-6) throw InvalidInput("scene_loss: predicted mass exceeds 1");
  double sum = 0.0;
  for (std::size_t s = 0; s < phat.size(); ++s) {
    if (truth[s] != 0.0 && truth[s] != 1.0) throw InvalidInput("scene_loss: labels must be binary");
    sum += fidelity(truth[s], std::min(phat[s], 1.0));
  }
  return sum / static_cast<double>(phat.size());
}

double distortion_loss(std::span<const double> phat, std::span<const double> truth) {
  if (phat.size() != truth.size() || phat.empty()) {
    throw InvalidInput("distortion_loss: dimension mismatch");
  }
  int ones = 0;
  double overlap = 0.0;
  for (std::size_t d = 0; d < truth.size(); ++d) {
    if (truth[d] == 1.0) {
      ++ones;
    } else if (truth[d] != 0.0) {
      throw InvalidInput("distortion_loss: truth must be one-hot");
    }
    overlap += std::sqrt(truth[d] * std::max(phat[d], 0.0));
  }
  if (ones != 1) throw InvalidInput("distortion_loss: truth must be one-hot");
  return 1.0 - overlap;
}

TaskWeights TaskWeights::with_tasks(bool scene, bool distortion) {
  TaskWeights w;
  w.enabled = {true, scene, distortion};
  for (int k = 0; k < 3; ++k) w.lambda[k] = w.enabled[k] ? 1.0 : 0.0;
  return w;
}

TaskWeights dwa_update(const TaskWeights& weights, const std::array<double, 3>& epoch_losses) {
  TaskWeights out = weights;
  out.history.push_back(epoch_losses);
  if (out.history.size() > 2) out.history.erase(out.history.begin());

  int active = 0;
  for (bool e : out.enabled) active += e ? 1 : 0;
  if (out.history.size() < 2 || active == 0) {
    for (int k = 0; k < 3; ++k) out.lambda[k] = out.enabled[k] ? 1.0 : 0.0;
    return out;
  }

  const auto& older = out.history[0];
  const auto& newer = out.history[1];
  std::array<double, 3> score{};
  double norm = 0.0;
  for (int k = 0; k < 3; ++k) {
    if (!out.enabled[k]) continue;
    const double rate = older[k] != 0.0 ? newer[k] / older[k] : 1.0;
    score[k] = std::exp(rate / TaskWeights::kTemperature);
    norm += score[k];
  }
  for (int k = 0; k < 3; ++k) {
    out.lambda[k] = out.enabled[k] ? static_cast<double>(active) * score[k] / norm : 0.0;
  }
  return out;
}

MultitaskLoss multitask_loss(std::span<const TaskPrediction> preds, std::span<const TaskTargets> truth,
                             const TaskWeights& weights, MultitaskGrad* grad) {
  if (preds.size() != truth.size() || preds.empty()) {
    throw InvalidInput("multitask_loss: predictions and targets must be non-empty and aligned");
  }
  const std::size_t n = preds.size();
  const auto [lq, ls, ld] = weights.lambda;

  if (grad) {
    grad->d_q_hat.assign(n, 0.0);
    grad->d_scene.resize(n);
    grad->d_distortion.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      grad->d_scene[i].assign(preds[i].scene.size(), 0.0);
      grad->d_distortion[i].assign(preds[i].distortion.size(), 0.0);
    }
  }

  MultitaskLoss out;
  if (n < 2) {
    out.quality_skipped = true;
  } else {
    out.pairs = n * (n - 1) / 2;
    const double inv_pairs = 1.0 / static_cast<double>(out.pairs);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const PairLabel label = pair_label(truth[i].y_q, truth[j].y_q);
        const double phat = thurstone_prob(preds[i].q_hat, preds[j].q_hat);
        sum += fidelity(label.prob, phat);
        if (grad && weights.enabled[0]) {
          const double x = (preds[i].q_hat - preds[j].q_hat) / std::numbers::sqrt2;
          const double g = lq * inv_pairs * fidelity_grad(label.prob, phat) * normal_pdf(x) /
                           std::numbers::sqrt2;
          grad->d_q_hat[i] += g;
          grad->d_q_hat[j] -= g;
        }
      }
    }
    out.l_q = sum * inv_pairs;
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  double sum_s = 0.0;
  double sum_d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights.enabled[1]) {
      sum_s += scene_loss(preds[i].scene, truth[i].y_s);
      if (grad) {
        const double per_slot = ls * inv_n / static_cast<double>(preds[i].scene.size());
        for (std::size_t s = 0; s < preds[i].scene.size(); ++s) {
          grad->d_scene[i][s] = per_slot * fidelity_grad(truth[i].y_s[s], preds[i].scene[s]);
        }
      }
    }
    if (weights.enabled[2]) {
      sum_d += distortion_loss(preds[i].distortion, truth[i].y_d);
      if (grad) {
        for (std::size_t d = 0; d < truth[i].y_d.size(); ++d) {
          if (truth[i].y_d[d] == 1.0) {
            const double p = std::max(preds[i].distortion[d], kProbClip);
            grad->d_distortion[i][d] = -ld * inv_n * 0.5 / std::sqrt(p);
          }
        }
      }
    }
  }
  out.l_s = sum_s * inv_n;
  out.l_d = sum_d * inv_n;
  out.total = (weights.enabled[0] ? lq * out.l_q : 0.0) + ls * out.l_s + ld * out.l_d;
  return out;
}

}  // namespace defnet
