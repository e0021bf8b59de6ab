#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

namespace defnet {

// Normal-inverse-gamma parameters: mu ~ N(delta, sigma^2 / v), sigma^2 ~ IG(alpha, beta).
struct NigParams {
  double delta = 0.0;  // location, MOS units
  double v = 1.0;      // virtual observation count
  double alpha = 2.0;  // inverse-gamma shape
  double beta = 1.0;   // inverse-gamma scale

  bool operator==(const NigParams&) const = default;
};

// Unconstrained 4-vector emitted by an evidence projection.
using RawEvidence = std::array<double, 4>;

inline constexpr double kParamFloor = 1e-8;

double softplus(double x);
// d softplus / dx
double sigmoid(double x);

// Throws InvalidInput unless v > 0, alpha > 1, beta > 0 and delta finite.
void validate(const NigParams& p);
bool is_valid(const NigParams& p);

// delta = raw[0]; v = softplus(raw[1]); alpha = 1 + softplus(raw[2]); beta = softplus(raw[3]),
// each floored so that v, beta >= 1e-8 and alpha >= 1 + 1e-8.
NigParams constrain(const RawEvidence& raw);

// Vector-Jacobian product of constrain: maps dL/d(params) to dL/d(raw).
RawEvidence constrain_backward(const RawEvidence& raw, const NigParams& grad_params);

// phi = 2v + alpha.
double total_evidence(const NigParams& p);
double mean_prediction(const NigParams& p);
// E[sigma^2] = beta / (alpha - 1).
double aleatoric(const NigParams& p);
// Var[mu] = beta / (v (alpha - 1)).
double epistemic(const NigParams& p);

// Binary NIG summation: precision-weighted location, summed evidence, and a
// beta correction for the spread between the two locations.
NigParams nig_fuse(const NigParams& a, const NigParams& b);

// Gradients of a scalar loss w.r.t. both operands of nig_fuse given dL/d(fused).
std::pair<NigParams, NigParams> nig_fuse_backward(const NigParams& a, const NigParams& b,
                                                  const NigParams& grad_out);

// Left fold of nig_fuse. Throws InvalidInput on an empty list.
NigParams nig_fuse_n(std::span<const NigParams> params);
// Per-input gradients of the left fold.
std::vector<NigParams> nig_fuse_n_backward(std::span<const NigParams> params,
                                           const NigParams& grad_out);

// Componentwise arithmetic mean. Throws InvalidInput on an empty list.
NigParams nig_average(std::span<const NigParams> params);

struct Interval {
  double lo;
  double hi;
  double width() const { return hi - lo; }
};

// Central interval of the Student-t predictive with 2*alpha degrees of freedom,
// location delta and scale sqrt(beta (1 + v) / (v alpha)).
Interval predictive_interval(const NigParams& p, double coverage);

}  // namespace defnet
