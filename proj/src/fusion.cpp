#include "defnet/fusion.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "defnet/errors.hpp"

namespace defnet {

void FusionConfig::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw InvalidInput("fusion: lambdas must be >= 0");
  if (!(tau >= 0.0)) throw InvalidInput("fusion: tau must be >= 0");
  if (n_fuse < 2) throw InvalidInput("fusion: n_fuse must be >= 2");
}

double evidential_target(const TaskTargets& targets, Task t) {
  return t == Task::Quality ? targets.y_q : 1.0;
}

std::vector<std::size_t> choose_fusion_crops(std::size_t n_locals, int n_fuse, std::mt19937_64* rng) {
  if (n_locals == 0) throw InvalidInput("fusion: sample has no local views");
  std::vector<std::size_t> idx(n_locals);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t k = std::min(n_locals, static_cast<std::size_t>(std::max(n_fuse, 1)));
  if (rng) {
    // Partial Fisher-Yates with an explicit draw so the sequence is portable.
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t span = n_locals - i;
      const std::size_t j = i + static_cast<std::size_t>((*rng)() % span);
      std::swap(idx[i], idx[j]);
    }
  }
  idx.resize(k);
  return idx;
}

ViewGrad ViewGrad::zeros(JointShape shape) {
  return {std::vector<double>(static_cast<std::size_t>(shape.quality), 0.0),
          std::vector<double>(static_cast<std::size_t>(shape.scenes), 0.0),
          std::vector<double>(static_cast<std::size_t>(shape.distortions), 0.0)};
}

namespace {

std::vector<double>& axis(ViewGrad& g, Task t) {
  switch (t) {
    case Task::Quality: return g.d_quality;
    case Task::Scene: return g.d_scene;
    case Task::Distortion: return g.d_distortion;
  }
  return g.d_quality;
}

void add_into(std::vector<double>& dst, const std::vector<double>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

std::vector<std::size_t> default_crops(const ViewSet& views, std::span<const std::size_t> crops,
                                       int n_fuse) {
  if (!crops.empty()) return {crops.begin(), crops.end()};
  return choose_fusion_crops(views.locals.size(), n_fuse, nullptr);
}

// Backpropagates dL/d(params) of one view through constrain and the task projection.
void backprop_view(const JointScore& view, Task t, const EvidenceProjection& proj,
                   const RawEvidence& raw, const NigParams& g_params, ViewGrad& view_grad,
                   EvidenceProjection& grad_proj) {
  const RawEvidence g_raw = constrain_backward(raw, g_params);
  add_into(axis(view_grad, t), task_evidence_backward(view, t, proj, g_raw, grad_proj));
}

double cross_region_term(const ViewSet& views, Task t, const EvidenceProjection& proj,
                         std::span<const std::size_t> crops, double y, double tau, double scale,
                         SampleGrad* sg, EvidenceProjection* gproj) {
  std::vector<RawEvidence> raws;
  std::vector<NigParams> params;
  for (std::size_t i : crops) {
    raws.push_back(task_evidence(views.locals.at(i), t, proj));
    params.push_back(constrain(raws.back()));
  }
  const NigParams fused = nig_fuse_n(params);
  const double loss = evidential_loss(fused, y, tau).total;
  if (sg) {
    NigParams g = to_params(evidential_grad(fused, y, tau));
    g = {g.delta * scale, g.v * scale, g.alpha * scale, g.beta * scale};
    const auto per_input = nig_fuse_n_backward(params, g);
    for (std::size_t k = 0; k < crops.size(); ++k) {
      backprop_view(views.locals[crops[k]], t, proj, raws[k], per_input[k], sg->locals[crops[k]],
                    *gproj);
    }
  }
  return loss;
}

double local_global_term(const ViewSet& views, Task t, const EvidenceProjection& proj,
                         std::span<const std::size_t> crops, double y, double tau, double scale,
                         SampleGrad* sg, EvidenceProjection* gproj) {
  const RawEvidence global_raw = task_evidence(views.global_view, t, proj);
  const NigParams global = constrain(global_raw);
  std::vector<RawEvidence> raws;
  std::vector<NigParams> locals;
  std::vector<NigParams> fused;
  for (std::size_t i : crops) {
    raws.push_back(task_evidence(views.locals.at(i), t, proj));
    locals.push_back(constrain(raws.back()));
    fused.push_back(nig_fuse(locals.back(), global));
  }
  const NigParams avg = nig_average(fused);
  const double loss = evidential_loss(avg, y, tau).total;
  if (sg) {
    const double share = scale / static_cast<double>(crops.size());
    NigParams g = to_params(evidential_grad(avg, y, tau));
    g = {g.delta * share, g.v * share, g.alpha * share, g.beta * share};
    NigParams g_global{0.0, 0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < crops.size(); ++k) {
      auto [g_local, g_glob] = nig_fuse_backward(locals[k], global, g);
      backprop_view(views.locals[crops[k]], t, proj, raws[k], g_local, sg->locals[crops[k]], *gproj);
      g_global.delta += g_glob.delta;
      g_global.v += g_glob.v;
      g_global.alpha += g_glob.alpha;
      g_global.beta += g_glob.beta;
    }
    backprop_view(views.global_view, t, proj, global_raw, g_global, sg->global_view, *gproj);
  }
  return loss;
}

using TermFn = double (*)(const ViewSet&, Task, const EvidenceProjection&, std::span<const std::size_t>,
                          double, double, double, SampleGrad*, EvidenceProjection*);

double batch_fusion_loss(TermFn term, const Batch& batch, const EvidenceProjection& proj,
                         const FusionConfig& cfg, const std::array<bool, 3>& tasks, double weight,
                         BatchGrad* grad) {
  const std::size_t n = batch.views.size();
  if (n == 0 || batch.targets.size() != n) throw InvalidInput("fusion: empty or misaligned batch");
  const double scale = weight / static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    const auto crops = default_crops(batch.views[b], b < batch.crops.size()
                                                         ? std::span<const std::size_t>(batch.crops[b])
                                                         : std::span<const std::size_t>{},
                                     cfg.n_fuse);
    for (Task t : kAllTasks) {
      if (!tasks[static_cast<int>(t)]) continue;
      const double y = evidential_target(batch.targets[b], t);
      sum += term(batch.views[b], t, proj, crops, y, cfg.tau, scale,
                  grad ? &grad->samples[b] : nullptr, grad ? &grad->d_proj : nullptr);
    }
  }
  return sum / static_cast<double>(n);
}

}  // namespace

NigParams view_params(const JointScore& view, Task t, const EvidenceProjection& proj) {
  return constrain(task_evidence(view, t, proj));
}

NigParams cross_region_params(const ViewSet& views, Task t, const EvidenceProjection& proj,
                              std::span<const std::size_t> crops) {
  if (crops.empty()) throw InvalidInput("cross_region_params: no crops selected");
  std::vector<NigParams> params;
  for (std::size_t i : crops) params.push_back(view_params(views.locals.at(i), t, proj));
  return nig_fuse_n(params);
}

NigParams cross_region_params(const ViewSet& views, Task t, const EvidenceProjection& proj,
                              int n_fuse) {
  return cross_region_params(views, t, proj, choose_fusion_crops(views.locals.size(), n_fuse, nullptr));
}

NigParams local_global_params(const ViewSet& views, Task t, const EvidenceProjection& proj,
                              std::span<const std::size_t> crops) {
  if (crops.empty()) throw InvalidInput("local_global_params: no crops selected");
  if (views.global_view.probs.empty()) throw InvalidInput("local_global_params: missing global view");
  const NigParams global = view_params(views.global_view, t, proj);
  std::vector<NigParams> fused;
  for (std::size_t i : crops) fused.push_back(nig_fuse(view_params(views.locals.at(i), t, proj), global));
  return nig_average(fused);
}

NigParams local_global_params(const ViewSet& views, Task t, const EvidenceProjection& proj,
                              int n_fuse) {
  return local_global_params(views, t, proj, choose_fusion_crops(views.locals.size(), n_fuse, nullptr));
}

double cross_region_loss(const Batch& batch, const EvidenceProjection& proj, const FusionConfig& cfg,
                         const std::array<bool, 3>& tasks) {
  return batch_fusion_loss(&cross_region_term, batch, proj, cfg, tasks, 1.0, nullptr);
}

double local_global_loss(const Batch& batch, const EvidenceProjection& proj, const FusionConfig& cfg,
                         const std::array<bool, 3>& tasks) {
  for (const auto& v : batch.views) {
    if (v.global_view.probs.empty()) throw InvalidInput("local_global_loss: missing global view");
  }
  return batch_fusion_loss(&local_global_term, batch, proj, cfg, tasks, 1.0, nullptr);
}

TaskPrediction task_prediction(const ViewSet& views) {
  if (views.locals.empty()) throw InvalidInput("task_prediction: no local views");
  TaskPrediction pred;
  pred.q_hat = quality_expectation(quality_marginal(std::span<const JointScore>(views.locals)));
  const auto& shape = views.locals.front().shape;
  pred.scene.assign(static_cast<std::size_t>(shape.scenes), 0.0);
  pred.distortion.assign(static_cast<std::size_t>(shape.distortions), 0.0);
  const double inv = 1.0 / static_cast<double>(views.locals.size());
  for (const auto& v : views.locals) {
    const auto ps = scene_marginal(v);
    const auto pd = distortion_marginal(v);
    for (std::size_t s = 0; s < ps.size(); ++s) pred.scene[s] += ps[s] * inv;
    for (std::size_t d = 0; d < pd.size(); ++d) pred.distortion[d] += pd[d] * inv;
  }
  return pred;
}

LossReport overall_loss(const Batch& batch, const EvidenceProjection& proj, const TaskWeights& weights,
                        const FusionConfig& cfg, BatchGrad* grad) {
  cfg.validate();
  const std::size_t n = batch.views.size();
  if (n == 0 || batch.targets.size() != n) throw InvalidInput("overall_loss: empty or misaligned batch");

  if (grad) {
    grad->samples.assign(n, {});
    grad->d_proj = EvidenceProjection::zeros(batch.views.front().global_view.shape);
    for (std::size_t b = 0; b < n; ++b) {
      const auto& shape = batch.views[b].global_view.shape;
      grad->samples[b].locals.assign(batch.views[b].locals.size(), ViewGrad::zeros(shape));
      grad->samples[b].global_view = ViewGrad::zeros(shape);
    }
  }

  std::vector<TaskPrediction> preds;
  preds.reserve(n);
  for (const auto& v : batch.views) preds.push_back(task_prediction(v));
  MultitaskGrad mgrad;
  const MultitaskLoss mt = multitask_loss(preds, batch.targets, weights, grad ? &mgrad : nullptr);

  LossReport report;
  report.l_q = mt.l_q;
  report.l_s = mt.l_s;
  report.l_d = mt.l_d;
  report.multitask = mt.total;
  report.lambda = weights.lambda;
  report.quality_skipped = mt.quality_skipped;

  if (grad) {
    for (std::size_t b = 0; b < n; ++b) {
      auto& locals = grad->samples[b].locals;
      const double inv = 1.0 / static_cast<double>(locals.size());
      for (auto& lg : locals) {
        for (std::size_t c = 0; c < lg.d_quality.size(); ++c) {
          lg.d_quality[c] += mgrad.d_q_hat[b] * static_cast<double>(c + 1) * inv;
        }
        for (std::size_t s = 0; s < lg.d_scene.size(); ++s) lg.d_scene[s] += mgrad.d_scene[b][s] * inv;
        for (std::size_t d = 0; d < lg.d_distortion.size(); ++d) {
          lg.d_distortion[d] += mgrad.d_distortion[b][d] * inv;
        }
      }
    }
  }

  if (cfg.use_cross_region) {
    report.cross_region =
        batch_fusion_loss(&cross_region_term, batch, proj, cfg, weights.enabled, cfg.lambda1, grad);
  }
  if (cfg.use_local_global) {
    report.local_global =
        batch_fusion_loss(&local_global_term, batch, proj, cfg, weights.enabled, cfg.lambda2, grad);
  }
  report.total = report.multitask + cfg.lambda1 * report.cross_region + cfg.lambda2 * report.local_global;
  return report;
}

}  // namespace defnet
