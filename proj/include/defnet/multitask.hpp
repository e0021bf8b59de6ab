#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace defnet {

// Preference label p(x1, x2): 1 if MOS1 > MOS2, 0 if lower, 0.5 on a tie.
struct PairLabel {
  double prob = 0.5;
};
PairLabel pair_label(double mos1, double mos2);

// Phi((q1 - q2) / sqrt(2)).
double thurstone_prob(double q1, double q2);

// 1 - sqrt(p phat) - sqrt((1 - p)(1 - phat)). Throws InvalidInput outside [0, 1].
double fidelity(double p, double phat);
// d fidelity / d phat, with phat clipped away from {0, 1}.
double fidelity_grad(double p, double phat);

double quality_pair_loss(double q1_hat, double q2_hat, PairLabel label);

// Mean over scene slots of fidelity(truth[s], phat[s]); truth may be multi-hot.
double scene_loss(std::span<const double> phat, std::span<const double> truth);
// 1 - sqrt(phat[true class]). Throws InvalidInput unless truth is exactly one-hot.
double distortion_loss(std::span<const double> phat, std::span<const double> truth);

// Dynamic weight averaging over the per-task loss descent rate.
struct TaskWeights {
  static constexpr double kTemperature = 2.0;

  std::array<double, 3> lambda{1.0, 1.0, 1.0};  // q, s, d
  std::array<bool, 3> enabled{true, true, true};
  // Epoch-mean losses of the two most recent epochs, oldest first.
  std::vector<std::array<double, 3>> history;

  static TaskWeights with_tasks(bool scene, bool distortion);
};

TaskWeights dwa_update(const TaskWeights& weights, const std::array<double, 3>& epoch_losses);

// What a scorer predicts for one sample, as consumed by the multitask loss.
struct TaskPrediction {
  double q_hat = 3.0;
  std::vector<double> scene;       // p(s | x)
  std::vector<double> distortion;  // p(d | x)
};

struct TaskTargets {
  double y_q = 3.0;          // MOS
  std::vector<double> y_s;   // binary scene labels
  std::vector<double> y_d;   // one-hot distortion label
};

struct MultitaskLoss {
  double l_q = 0.0;  // mean pair loss
  double l_s = 0.0;  // mean scene loss
  double l_d = 0.0;  // mean distortion loss
  double total = 0.0;
  std::size_t pairs = 0;
  bool quality_skipped = false;  // fewer than two samples
};

struct MultitaskGrad {
  std::vector<double> d_q_hat;
  std::vector<std::vector<double>> d_scene;
  std::vector<std::vector<double>> d_distortion;
};

// Weighted fidelity losses over all unordered pairs and all samples of a batch.
// Fills grad (w.r.t. the predictions) when provided.
MultitaskLoss multitask_loss(std::span<const TaskPrediction> preds, std::span<const TaskTargets> truth,
                             const TaskWeights& weights, MultitaskGrad* grad = nullptr);

}  // namespace defnet
