#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "defnet/evidential_loss.hpp"
#include "defnet/joint_head.hpp"
#include "defnet/multitask.hpp"
#include "defnet/nig.hpp"

namespace defnet {

struct FusionConfig {
  double lambda1 = 0.1;  // cross sub-region weight
  double lambda2 = 0.1;  // local-global weight
  double tau = 0.05;
  int n_fuse = 4;
  bool use_cross_region = true;
  bool use_local_global = true;

  void validate() const;
};

// Scalar regression target of the evidential loss for task t: the MOS for quality,
// and unit confidence on the true class for scene and distortion.
double evidential_target(const TaskTargets& targets, Task t);

// Indices of the local crops entering fusion: a uniformly random subset of size
// min(n_fuse, n_locals) when rng is given, otherwise the first ones.
std::vector<std::size_t> choose_fusion_crops(std::size_t n_locals, int n_fuse, std::mt19937_64* rng);

NigParams view_params(const JointScore& view, Task t, const EvidenceProjection& proj);

NigParams cross_region_params(const ViewSet& views, Task t, const EvidenceProjection& proj,
                              std::span<const std::size_t> crops);
NigParams cross_region_params(const ViewSet& views, Task t, const EvidenceProjection& proj,
                              int n_fuse);

// Each selected local fused with the global view, then averaged componentwise.
NigParams local_global_params(const ViewSet& views, Task t, const EvidenceProjection& proj,
                              std::span<const std::size_t> crops);
NigParams local_global_params(const ViewSet& views, Task t, const EvidenceProjection& proj,
                              int n_fuse);

// Gradient of a loss w.r.t. the per-view marginals of one sample.
struct ViewGrad {
  std::vector<double> d_quality;
  std::vector<double> d_scene;
  std::vector<double> d_distortion;

  static ViewGrad zeros(JointShape shape);
};

struct SampleGrad {
  std::vector<ViewGrad> locals;
  ViewGrad global_view;
};

struct BatchGrad {
  std::vector<SampleGrad> samples;
  EvidenceProjection d_proj;
};

struct Batch {
  std::span<const ViewSet> views;
  std::span<const TaskTargets> targets;
  // Per-sample crop selection for fusion; empty means the first n_fuse crops.
  std::span<const std::vector<std::size_t>> crops;
};

// Mean over the batch of the three per-task evidential losses on cross sub-region fusion.
double cross_region_loss(const Batch& batch, const EvidenceProjection& proj, const FusionConfig& cfg,
                         const std::array<bool, 3>& tasks = {true, true, true});
double local_global_loss(const Batch& batch, const EvidenceProjection& proj, const FusionConfig& cfg,
                         const std::array<bool, 3>& tasks = {true, true, true});

// Multitask inputs from a view set: marginals averaged over every local crop.
TaskPrediction task_prediction(const ViewSet& views);

struct LossReport {
  double l_q = 0.0;
  double l_s = 0.0;
  double l_d = 0.0;
  double multitask = 0.0;     // L^M
  double cross_region = 0.0;  // L^U
  double local_global = 0.0;  // L^F
  double total = 0.0;
  std::array<double, 3> lambda{};
  bool quality_skipped = false;
};

// L = L^M + lambda1 L^U + lambda2 L^F. Fills grad when provided.
LossReport overall_loss(const Batch& batch, const EvidenceProjection& proj, const TaskWeights& weights,
                        const FusionConfig& cfg, BatchGrad* grad = nullptr);

}  // namespace defnet
