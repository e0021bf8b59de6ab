#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "defnet/fusion.hpp"
#include "defnet/joint_head.hpp"
#include "defnet/synth.hpp"

namespace defnet {

// Shared affine map from view features to C*S*D logits, a temperature kappa learned in
// log-space, and the per-task evidence projection.
struct TinyScorer {
  static constexpr double kInitialKappa = 0.07;

  JointShape shape;
  int feature_dim = 0;
  std::vector<double> weight;  // (C*S*D) x feature_dim, row-major
  std::vector<double> bias;    // C*S*D
  double log_kappa = 0.0;
  EvidenceProjection proj;

  double kappa() const;

  // All-zero weights (uniform joints); projections routed so delta_q tracks the expectation.
  static TinyScorer zeros(JointShape shape, int feature_dim);
  // Small seeded Gaussian weights on top of zeros().
  static TinyScorer random(JointShape shape, int feature_dim, std::uint64_t seed);
  // Same layout as `like`, every entry zero (gradient accumulator).
  static TinyScorer zeros_like(const TinyScorer& like);
};

// Visits every parameter group as (name, rows, cols, values).
void for_each_group(TinyScorer& s,
                    const std::function<void(const std::string&, int, int, std::span<double>)>& fn);
std::size_t parameter_count(const TinyScorer& s);
std::vector<double> flatten(const TinyScorer& s);
void unflatten(TinyScorer& s, std::span<const double> values);

struct ScorerForward {
  ViewSet views;
  std::vector<std::vector<double>> local_logits;
  std::vector<double> global_logits;
};

std::vector<double> view_logits(const TinyScorer& s, std::span<const double> features);
ScorerForward scorer_forward(const TinyScorer& s, const Sample& sample);

// Accumulates parameter gradients for one sample given dL/d(marginals) of each view.
void scorer_backward(const TinyScorer& s, const Sample& sample, const ScorerForward& fwd,
                     const SampleGrad& grad, TinyScorer& grad_out);

TaskTargets sample_targets(const Sample& sample, JointShape shape);

// Model file: per group a line "name rows cols" then a line of row-major values.
void save_model(std::ostream& out, const TinyScorer& s);
void save_model(const std::filesystem::path& path, const TinyScorer& s);
TinyScorer load_model(std::istream& in);
TinyScorer load_model(const std::filesystem::path& path);

}  // namespace defnet
