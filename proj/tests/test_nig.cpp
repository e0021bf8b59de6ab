#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "defnet/errors.hpp"
#include "defnet/nig.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace defnet;

namespace {

NigParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> loc(-3.0, 3.0);
  std::uniform_real_distribution<double> pos(0.05, 5.0);
  std::uniform_real_distribution<double> shape(1.01, 6.0);
  return {loc(rng), pos(rng), shape(rng), pos(rng)};
}

bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

TEST_CASE("constrain maps zeros to ln 2 offsets") {
  const NigParams p = constrain({0.0, 0.0, 0.0, 0.0});
  CHECK(p.delta == 0.0);
  CHECK(p.v == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(p.alpha == doctest::Approx(1.0 + std::log(2.0)).epsilon(1e-15));
  CHECK(p.beta == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("constrain matches extended-precision softplus") {
  const NigParams p = constrain({1.5, -2.0, 0.3, -0.7});
  CHECK(p.delta == 1.5);
  CHECK(p.v == doctest::Approx(static_cast<double>(oracle::softplus(-2.0L))).epsilon(1e-14));
  CHECK(p.alpha == doctest::Approx(static_cast<double>(1.0L + oracle::softplus(0.3L))).epsilon(1e-14));
  CHECK(p.beta == doctest::Approx(static_cast<double>(oracle::softplus(-0.7L))).epsilon(1e-14));
  // frozen: mpmath, 40 digits
  CHECK(p.v == doctest::Approx(0.12692801104297250).epsilon(1e-14));
  CHECK(p.alpha == doctest::Approx(1.8543552444685271).epsilon(1e-14));
  CHECK(p.beta == doctest::Approx(0.40318604888545791).epsilon(1e-14));
}

TEST_CASE("constrain softplus asymptote and floors") {
  const NigParams big = constrain({5.0, 30.5, 40.0, 800.0});
  CHECK(big.v == doctest::Approx(30.5).epsilon(1e-12));
  CHECK(big.alpha == doctest::Approx(41.0).epsilon(1e-12));
  CHECK(big.beta == doctest::Approx(800.0));
  CHECK(std::isfinite(big.beta));

  const NigParams tiny = constrain({0.0, -800.0, -800.0, -800.0});
  CHECK(tiny.v == kParamFloor);
  CHECK(tiny.beta == kParamFloor);
  CHECK(tiny.alpha == 1.0 + kParamFloor);
  CHECK(is_valid(tiny));
}

TEST_CASE("constrain rejects non-finite input") {
  CHECK_THROWS_AS(constrain({0.0, NAN, 0.0, 0.0}), InvalidInput);
  CHECK_THROWS_AS(constrain({INFINITY, 0.0, 0.0, 0.0}), InvalidInput);
}

TEST_CASE("constrain output always valid on random finite input") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> wide(-60.0, 60.0);
  for (int i = 0; i < 2000; ++i) {
    CHECK(is_valid(constrain({wide(rng), wide(rng), wide(rng), wide(rng)})));
  }
}

TEST_CASE("constrain_backward matches central differences") {
  const RawEvidence raw{0.4, -1.2, 0.7, 2.0};
  const NigParams g{0.3, -0.8, 1.1, 0.5};
  const RawEvidence analytic = constrain_backward(raw, g);
  for (int k = 0; k < 4; ++k) {
    const auto f = [&](double x) {
      RawEvidence r = raw;
      r[k] = x;
      const NigParams p = constrain(r);
      return g.delta * p.delta + g.v * p.v + g.alpha * p.alpha + g.beta * p.beta;
    };
    CHECK(analytic[k] == doctest::Approx(oracle::central_difference(f, raw[k], 1e-6)).epsilon(1e-8));
  }
}

TEST_CASE("total evidence and mean") {
  CHECK(total_evidence({0, 1, 2, 1}) == 4.0);
  CHECK(total_evidence({3, 2.5, 3.0, 0.7}) == 8.0);
  CHECK(total_evidence({0, 1e-12, 1.5, 1}) == doctest::Approx(1.5));
  CHECK(mean_prediction({3.2, 1, 2, 1}) == 3.2);
}

TEST_CASE("aleatoric and epistemic closed forms") {
  CHECK(aleatoric({0, 1, 2, 1}) == 1.0);
  CHECK(epistemic({0, 1, 2, 1}) == 1.0);
  CHECK(epistemic({0, 4, 2, 1}) == 0.25);
  CHECK(aleatoric({0, 1, 1.0 + 1e-12, 1}) > 1e11);
  CHECK(epistemic({0, 1, 1.0 + 1e-12, 1}) > 1e11);
  CHECK_THROWS_AS(aleatoric({0, 1, 1.0, 1}), DomainError);
  CHECK_THROWS_AS(epistemic({0, 1, 0.5, 1}), DomainError);
}

TEST_CASE("binary fusion closed form") {
  const NigParams f = nig_fuse({0, 1, 2, 1}, {2, 1, 2, 1});
  CHECK(f == NigParams{1.0, 2.0, 4.5, 3.0});
  CHECK(mean_prediction(f) == 1.0);

  const NigParams p{0.7, 1.3, 2.2, 0.4};
  const NigParams self = nig_fuse(p, p);
  CHECK(self == NigParams{p.delta, 2 * p.v, 2 * p.alpha + 0.5, 2 * p.beta});
}

TEST_CASE("fusion agrees with the unsimplified oracle") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const NigParams a = random_params(rng);
    const NigParams b = random_params(rng);
    const NigParams f = nig_fuse(a, b);
    const oracle::Nig o = oracle::fuse({a.delta, a.v, a.alpha, a.beta}, {b.delta, b.v, b.alpha, b.beta});
    CHECK(rel_close(f.delta, static_cast<double>(o.delta), 1e-12));
    CHECK(rel_close(f.beta, static_cast<double>(o.beta), 1e-12));
    CHECK(is_valid(f));
  }
}

TEST_CASE("fusion is commutative") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 1000; ++i) {
    const NigParams a = random_params(rng);
    const NigParams b = random_params(rng);
    const NigParams ab = nig_fuse(a, b);
    const NigParams ba = nig_fuse(b, a);
    CHECK(rel_close(ab.delta, ba.delta, 1e-12));
    CHECK(rel_close(ab.v, ba.v, 1e-12));
    CHECK(rel_close(ab.alpha, ba.alpha, 1e-12));
    CHECK(rel_close(ab.beta, ba.beta, 1e-12));
  }
}

TEST_CASE("n-way fusion is order independent") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    std::array<NigParams, 4> ps{};
    for (auto& p : ps) p = random_params(rng);
    const NigParams ref = nig_fuse_n(ps);
    std::array<int, 4> perm{0, 1, 2, 3};
    do {
      std::array<NigParams, 4> shuffled{};
      for (int k = 0; k < 4; ++k) shuffled[k] = ps[perm[k]];
      const NigParams got = nig_fuse_n(shuffled);
      CHECK(rel_close(got.delta, ref.delta, 1e-9));
      CHECK(rel_close(got.v, ref.v, 1e-9));
      CHECK(rel_close(got.alpha, ref.alpha, 1e-9));
      CHECK(rel_close(got.beta, ref.beta, 1e-9));
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

TEST_CASE("nig_fuse_n edge cases") {
  const NigParams p{0, 1, 2, 1};
  CHECK(nig_fuse_n(std::vector<NigParams>{p}) == p);
  CHECK(nig_fuse_n(std::vector<NigParams>(4, p)) == NigParams{0, 4, 9.5, 4});
  CHECK_THROWS_AS(nig_fuse_n(std::vector<NigParams>{}), InvalidInput);
}

TEST_CASE("fusion accumulates evidence and contracts epistemic uncertainty") {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 500; ++i) {
    const NigParams a = random_params(rng);
    const NigParams b = random_params(rng);
    CHECK(total_evidence(nig_fuse(a, b)) > std::max(total_evidence(a), total_evidence(b)));
  }
  const NigParams p{0.3, 0.8, 1.7, 0.6};
  double previous = epistemic(p);
  for (int k = 2; k <= 8; ++k) {
    const double e = epistemic(nig_fuse_n(std::vector<NigParams>(static_cast<std::size_t>(k), p)));
    CHECK(e < previous);
    previous = e;
  }
}

TEST_CASE("fusion gradients match central differences") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<NigParams> ps(3);
    for (auto& p : ps) p = random_params(rng);
    const NigParams g{0.7, -0.3, 0.2, 1.1};
    const auto objective = [&](const std::vector<NigParams>& xs) {
      const NigParams f = nig_fuse_n(xs);
      return g.delta * f.delta + g.v * f.v + g.alpha * f.alpha + g.beta * f.beta;
    };
    const auto grads = nig_fuse_n_backward(ps, g);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      double NigParams::*fields[4] = {&NigParams::delta, &NigParams::v, &NigParams::alpha, &NigParams::beta};
      for (auto field : fields) {
        const auto f = [&](double x) {
          auto xs = ps;
          xs[i].*field = x;
          return objective(xs);
        };
        CHECK(grads[i].*field == doctest::Approx(oracle::central_difference(f, ps[i].*field, 1e-6)).epsilon(1e-7));
      }
    }
  }
}

TEST_CASE("componentwise averaging") {
  const NigParams p{0.5, 2, 3, 1.5};
  CHECK(nig_average(std::vector<NigParams>{p, p}) == p);
  CHECK(nig_average(std::vector<NigParams>{{0, 1, 2, 1}, {2, 3, 4, 3}}) == NigParams{1, 2, 3, 2});
  CHECK_THROWS_AS(nig_average(std::vector<NigParams>{}), InvalidInput);

  std::mt19937_64 rng(37);
  std::vector<NigParams> ps(4);
  for (auto& x : ps) x = random_params(rng);
  const NigParams m = nig_average(ps);
  double sum = 0.0;
  for (const auto& x : ps) sum += x.beta;
  CHECK(m.beta == doctest::Approx(sum / 4).epsilon(1e-12));
  CHECK(is_valid(m));
}

TEST_CASE("predictive interval") {
  const Interval ci = predictive_interval({0, 1, 2, 1}, 0.95);
  CHECK(ci.hi > ci.lo);
  CHECK(ci.lo == doctest::Approx(-ci.hi).epsilon(1e-14));
  CHECK(predictive_interval({0, 4, 2, 1}, 0.95).width() < ci.width());
  CHECK(predictive_interval({0, 1, 2, 1}, 1e-9).width() < 1e-8);
  // t quantile with 4 dof at 0.975 is 2.7764451; scale sqrt(1*2/2) = 1
  CHECK(ci.hi == doctest::Approx(2.7764451051977934).epsilon(1e-10));
  CHECK_THROWS_AS(predictive_interval({0, 1, 2, 1}, 0.0), InvalidInput);
  CHECK_THROWS_AS(predictive_interval({0, 1, 2, 1}, 1.0), InvalidInput);
}
