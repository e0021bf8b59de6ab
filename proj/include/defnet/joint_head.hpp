#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "defnet/nig.hpp"

namespace defnet {

inline constexpr int kQualityLevels = 5;

enum class Task { Quality = 0, Scene = 1, Distortion = 2 };
inline constexpr std::array<Task, 3> kAllTasks{Task::Quality, Task::Scene, Task::Distortion};
const char* task_name(Task t);

struct JointShape {
  int quality = kQualityLevels;
  int scenes = 9;
  int distortions = 11;

  std::size_t size() const {
    return static_cast<std::size_t>(quality) * static_cast<std::size_t>(scenes) *
           static_cast<std::size_t>(distortions);
  }
  std::size_t index(int c, int s, int d) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(scenes) +
            static_cast<std::size_t>(s)) * static_cast<std::size_t>(distortions) +
           static_cast<std::size_t>(d);
  }
  bool operator==(const JointShape&) const = default;
};

// Joint probabilities p(c, s, d) for one view, stored row-major over (c, s, d).
struct JointScore {
  JointShape shape;
  std::vector<double> probs;

  double at(int c, int s, int d) const { return probs[shape.index(c, s, d)]; }
};

// Local crops plus one downsampled global view of the same sample.
struct ViewSet {
  std::vector<JointScore> locals;
  JointScore global_view;
};

// Temperature softmax over every (c, s, d) cell. Throws InvalidInput if kappa <= 0
// or the logit count does not match the shape.
JointScore joint_softmax(std::span<const double> logits, JointShape shape, double kappa);

struct SoftmaxGrad {
  std::vector<double> d_logits;
  double d_kappa = 0.0;
};
SoftmaxGrad joint_softmax_backward(const JointScore& out, std::span<const double> logits,
                                   double kappa, std::span<const double> grad_probs);

std::vector<double> quality_marginal(const JointScore& view);
// Mean over views of the per-view quality marginal. Throws InvalidInput on empty input.
std::vector<double> quality_marginal(std::span<const JointScore> views);
std::vector<double> scene_marginal(const JointScore& view);
std::vector<double> distortion_marginal(const JointScore& view);

// Sum of c * pc[c] over levels 1..5. Throws InvalidInput when pc is not normalized.
double quality_expectation(std::span<const double> pc);

// Scatters marginal gradients back onto the joint cells. Empty spans contribute nothing.
std::vector<double> marginal_backward(JointShape shape, std::span<const double> grad_quality,
                                      std::span<const double> grad_scene,
                                      std::span<const double> grad_distortion);

// Per-task affine map from a view's marginal to four raw NIG parameters.
// Input width is C + 1 for quality (marginal plus its expectation), S for scene, D for distortion.
struct TaskProjection {
  int in_dim = 0;
  std::vector<double> weight;  // in_dim x 4, row-major
  std::array<double, 4> bias{};
};

struct EvidenceProjection {
  std::array<TaskProjection, 3> tasks;

  static EvidenceProjection zeros(JointShape shape);
  TaskProjection& operator[](Task t) { return tasks[static_cast<int>(t)]; }
  const TaskProjection& operator[](Task t) const { return tasks[static_cast<int>(t)]; }
};

int projection_input_dim(JointShape shape, Task t);

// The input row fed to the projection for task t.
std::vector<double> task_features(const JointScore& view, Task t);

RawEvidence task_evidence(const JointScore& view, Task t, const EvidenceProjection& proj);

// Accumulates dL/dW, dL/db into grad_proj and returns dL/d(marginal) for the task's axis
// (the expectation channel is folded back onto the quality marginal).
std::vector<double> task_evidence_backward(const JointScore& view, Task t,
                                           const EvidenceProjection& proj,
                                           const RawEvidence& grad_raw,
                                           EvidenceProjection& grad_proj);

}  // namespace defnet
