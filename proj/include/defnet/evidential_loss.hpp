#pragma once

#include "defnet/nig.hpp"

namespace defnet {

struct EvidentialLossValue {
  double nll = 0.0;
  double reg = 0.0;
  double total = 0.0;  // nll + tau * reg
  double tau = 0.0;
};

struct EvidentialGrad {
  double d_delta = 0.0;
  double d_v = 0.0;
  double d_alpha = 0.0;
  double d_beta = 0.0;
};

// Negative log marginal likelihood of y under the NIG's Student-t evidence,
// with Omega = 2 beta (1 + v).
double nll_loss(const NigParams& p, double y);

// |y - delta| * (2v + alpha).
double reg_loss(const NigParams& p, double y);

// Throws InvalidInput when tau < 0.
EvidentialLossValue evidential_loss(const NigParams& p, double y, double tau);

// Analytic gradient of evidential_loss(p, y, tau).total. Uses subgradient 0 at y == delta.
EvidentialGrad evidential_grad(const NigParams& p, double y, double tau);

inline NigParams to_params(const EvidentialGrad& g) { return {g.d_delta, g.d_v, g.d_alpha, g.d_beta}; }

}  // namespace defnet
