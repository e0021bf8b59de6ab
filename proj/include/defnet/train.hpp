#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "defnet/fusion.hpp"
#include "defnet/multitask.hpp"
#include "defnet/scorer.hpp"
#include "defnet/synth.hpp"

namespace defnet {

struct TrainConfig {
  double lr = 1e-2;
  int epochs = 200;
  int batch_size = 16;
  double train_fraction = 0.8;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool enable_scene_task = true;
  bool enable_distortion_task = true;
  std::uint64_t seed = 1;

  void validate() const;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochRecord {
  int epoch = 0;
  LossReport loss;  // batch means; lambda holds the weights used during the epoch
  double kappa = 0.0;
  double val_srcc = 0.0;
  double val_plcc = 0.0;
};

struct TrainResult {
  TinyScorer scorer;
  std::vector<EpochRecord> history;
};

// First floor(fraction * n) samples train, the rest are held out.
std::pair<std::span<const Sample>, std::span<const Sample>> split_dataset(std::span<const Sample> samples,
                                                                          double train_fraction);

JointShape shape_for(const SynthConfig& cfg);

// Overall loss of a batch under the scorer. Adds parameter gradients into grad when provided.
// crops may be empty (first n_fuse crops) or hold one selection per sample.
LossReport batch_objective(const TinyScorer& scorer, std::span<const Sample> batch,
                           std::span<const std::vector<std::size_t>> crops, const TaskWeights& weights,
                           const FusionConfig& cfg, TinyScorer* grad);

// Adam on the overall loss with per-epoch task reweighting. Throws DivergenceError on a
// non-finite loss.
TrainResult train(std::span<const Sample> train_set, std::span<const Sample> val_set, JointShape shape,
                  const TrainConfig& tcfg, const FusionConfig& fcfg);

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

// SRCC and PLCC of the expected quality against MOS.
std::pair<double, double> quality_correlations(const TinyScorer& scorer, std::span<const Sample> samples);

struct GradcheckGroup {
  std::string name;
  std::size_t count = 0;
  double max_rel_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckGroup> groups;
  double max_rel_error = 0.0;
};

// |a - b| / max(|a|, |b|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-6);

// Analytic evidential-loss gradients against central differences on `trials` random draws.
GradcheckReport gradcheck_evidential(int trials, std::uint64_t seed, double step = 1e-5);

// Every scorer parameter against central differences of the overall loss.
// corrupt adds a deliberate error to the analytic gradient.
GradcheckReport gradcheck_end_to_end(const TinyScorer& scorer, std::span<const Sample> batch,
                                     const TaskWeights& weights, const FusionConfig& cfg,
                                     double step = 1e-6, bool corrupt = false);

}  // namespace defnet
