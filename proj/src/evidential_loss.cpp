#include "defnet/evidential_loss.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/digamma.hpp>

#include "defnet/errors.hpp"

namespace defnet {

double nll_loss(const NigParams& p, double y) {
  const double omega = 2.0 * p.beta * (1.0 + p.v);
  const double err = y - p.delta;
  return 0.5 * std::log(std::numbers::pi / p.v) + std::lgamma(p.alpha) -
         std::lgamma(p.alpha + 0.5) - p.alpha * std::log(omega) +
         (p.alpha + 0.5) * std::log(err * err * p.v + omega);
}

double reg_loss(const NigParams& p, double y) { return std::abs(y - p.delta) * total_evidence(p); }

EvidentialLossValue evidential_loss(const NigParams& p, double y, double tau) {
  if (!(tau >= 0.0)) throw InvalidInput("evidential_loss: tau must be non-negative");
  EvidentialLossValue out;
  out.nll = nll_loss(p, y);
  out.reg = reg_loss(p, y);
  out.tau = tau;
  out.total = out.nll + tau * out.reg;
  return out;
}

EvidentialGrad evidential_grad(const NigParams& p, double y, double tau) {
  const double omega = 2.0 * p.beta * (1.0 + p.v);
  const double err = y - p.delta;
  const double abs_err = std::abs(err);
  const double sign = err > 0.0 ? 1.0 : (err < 0.0 ? -1.0 : 0.0);
  const double spread = err * err * p.v + omega;
  const double a_half = p.alpha + 0.5;

  EvidentialGrad g;
  g.d_delta = -a_half * 2.0 * p.v * err / spread - tau * sign * total_evidence(p);
  g.d_v = -0.5 / p.v - p.alpha * 2.0 * p.beta / omega +
          a_half * (err * err + 2.0 * p.beta) / spread + 2.0 * tau * abs_err;
  g.d_alpha = boost::math::digamma(p.alpha) - boost::math::digamma(a_half) - std::log(omega) +
              std::log(spread) + tau * abs_err;
  g.d_beta = -p.alpha / p.beta + a_half * 2.0 * (1.0 + p.v) / spread;
  return g;
}

}  // namespace defnet
