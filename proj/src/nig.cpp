#include "defnet/nig.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "defnet/errors.hpp"

namespace defnet {

double softplus(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

bool is_valid(const NigParams& p) {
  return std::isfinite(p.delta) && std::isfinite(p.v) && std::isfinite(p.alpha) &&
         std::isfinite(p.beta) && p.v > 0.0 && p.alpha > 1.0 && p.beta > 0.0;
}

void validate(const NigParams& p) {
  if (!is_valid(p)) {
    throw InvalidInput("invalid NIG parameters (" + std::to_string(p.delta) + ", " +
                       std::to_string(p.v) + ", " + std::to_string(p.alpha) + ", " +
                       std::to_string(p.beta) + ")");
  }
}

NigParams constrain(const RawEvidence& raw) {
  for (double x : raw) {
    if (!std::isfinite(x)) throw InvalidInput("constrain: non-finite raw evidence");
  }
  NigParams p;
  p.delta = raw[0];
  p.v = std::max(softplus(raw[1]), kParamFloor);
  p.alpha = std::max(1.0 + softplus(raw[2]), 1.0 + kParamFloor);
  p.beta = std::max(softplus(raw[3]), kParamFloor);
  return p;
}

RawEvidence constrain_backward(const RawEvidence& raw, const NigParams& g) {
  // Floored channels are locally constant.
  const auto act = [](double x, double floor) { return softplus(x) > floor ? sigmoid(x) : 0.0; };
  return {g.delta, g.v * act(raw[1], kParamFloor), g.alpha * act(raw[2], kParamFloor),
          g.beta * act(raw[3], kParamFloor)};
}

double total_evidence(const NigParams& p) { return 2.0 * p.v + p.alpha; }

double mean_prediction(const NigParams& p) { return p.delta; }

double aleatoric(const NigParams& p) {
  if (!(p.alpha > 1.0)) throw DomainError("aleatoric: alpha must exceed 1");
  return p.beta / (p.alpha - 1.0);
}

double epistemic(const NigParams& p) {
  if (!(p.alpha > 1.0)) throw DomainError("epistemic: alpha must exceed 1");
  return p.beta / (p.v * (p.alpha - 1.0));
}

NigParams nig_fuse(const NigParams& a, const NigParams& b) {
  NigParams out;
  out.v = a.v + b.v;
  // equal locations short-circuit so self-fusion keeps delta bit-exact
  out.delta = a.delta == b.delta ? a.delta : (a.v * a.delta + b.v * b.delta) / out.v;
  out.alpha = a.alpha + b.alpha + 0.5;
  const double gap = a.delta - b.delta;
  out.beta = a.beta + b.beta + 0.5 * a.v * b.v * gap * gap / out.v;
  return out;
}

std::pair<NigParams, NigParams> nig_fuse_backward(const NigParams& a, const NigParams& b,
                                                  const NigParams& g) {
  // The beta correction equals 0.5 v_a v_b (delta_a - delta_b)^2 / (v_a + v_b).
  const double total = a.v + b.v;
  const double gap = a.delta - b.delta;
  const double t2 = total * total;

  NigParams ga;
  NigParams gb;
  ga.delta = g.delta * a.v / total + g.beta * a.v * b.v * gap / total;
  gb.delta = g.delta * b.v / total - g.beta * a.v * b.v * gap / total;
  ga.v = g.delta * b.v * gap / t2 + g.v + g.beta * 0.5 * gap * gap * b.v * b.v / t2;
  gb.v = -g.delta * a.v * gap / t2 + g.v + g.beta * 0.5 * gap * gap * a.v * a.v / t2;
  ga.alpha = g.alpha;
  gb.alpha = g.alpha;
  ga.beta = g.beta;
  gb.beta = g.beta;
  return {ga, gb};
}

NigParams nig_fuse_n(std::span<const NigParams> params) {
  if (params.empty()) throw InvalidInput("nig_fuse_n: empty parameter list");
  NigParams acc = params.front();
  for (std::size_t i = 1; i < params.size(); ++i) acc = nig_fuse(acc, params[i]);
  return acc;
}

std::vector<NigParams> nig_fuse_n_backward(std::span<const NigParams> params,
                                           const NigParams& grad_out) {
  if (params.empty()) throw InvalidInput("nig_fuse_n_backward: empty parameter list");
  const std::size_t n = params.size();
  std::vector<NigParams> prefix(n);
  prefix[0] = params[0];
  for (std::size_t i = 1; i < n; ++i) prefix[i] = nig_fuse(prefix[i - 1], params[i]);

  std::vector<NigParams> grads(n);
  NigParams g = grad_out;
  for (std::size_t i = n - 1; i > 0; --i) {
    auto [g_acc, g_item] = nig_fuse_backward(prefix[i - 1], params[i], g);
    grads[i] = g_item;
    g = g_acc;
  }
  grads[0] = g;
  return grads;
}

NigParams nig_average(std::span<const NigParams> params) {
  if (params.empty()) throw InvalidInput("nig_average: empty parameter list");
  NigParams sum{0.0, 0.0, 0.0, 0.0};
  for (const auto& p : params) {
    sum.delta += p.delta;
    sum.v += p.v;
    sum.alpha += p.alpha;
    sum.beta += p.beta;
  }
  const double n = static_cast<double>(params.size());
  return {sum.delta / n, sum.v / n, sum.alpha / n, sum.beta / n};
}

Interval predictive_interval(const NigParams& p, double coverage) {
  if (!(coverage > 0.0 && coverage < 1.0)) {
    throw InvalidInput("predictive_interval: coverage must lie in (0, 1)");
  }
  validate(p);
  const boost::math::students_t dist(2.0 * p.alpha);
  const double t = boost::math::quantile(dist, 0.5 + 0.5 * coverage);
  const double scale = std::sqrt(p.beta * (1.0 + p.v) / (p.v * p.alpha));
  return {p.delta - t * scale, p.delta + t * scale};
}

}  // namespace defnet
