#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "defnet/errors.hpp"
#include "defnet/joint_head.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace defnet;

namespace {

const JointShape kShape{5, 3, 4};

std::vector<double> random_logits(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> z(n);
  for (double& x : z) x = g(rng);
  return z;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("joint softmax basics") {
  const std::vector<double> flat(kShape.size(), 0.7);
  const JointScore u = joint_softmax(flat, kShape, 0.07);
  for (double p : u.probs) CHECK(p == doctest::Approx(1.0 / kShape.size()));

  std::mt19937_64 rng(1);
  auto z = random_logits(rng, kShape.size());
  const JointScore a = joint_softmax(z, kShape, 0.3);
  for (double& x : z) x += 12.5;
  const JointScore b = joint_softmax(z, kShape, 0.3);
  for (std::size_t i = 0; i < a.probs.size(); ++i) CHECK(a.probs[i] == doctest::Approx(b.probs[i]).epsilon(1e-12));
  CHECK(sum(a.probs) == doctest::Approx(1.0).epsilon(1e-12));
  for (double p : a.probs) CHECK(p > 0.0);

  std::vector<double> spike(kShape.size(), 0.0);
  spike[7] = 20.0;
  CHECK(joint_softmax(spike, kShape, 0.07).probs[7] > 1.0 - 1e-9);

  CHECK_THROWS_AS(joint_softmax(flat, kShape, 0.0), InvalidInput);
  CHECK_THROWS_AS(joint_softmax(flat, kShape, -1.0), InvalidInput);
  CHECK_THROWS_AS(joint_softmax(std::vector<double>(3, 0.0), kShape, 1.0), InvalidInput);
}

TEST_CASE("softmax backward matches central differences") {
  std::mt19937_64 rng(2);
  const auto z = random_logits(rng, kShape.size());
  const auto w = random_logits(rng, kShape.size());
  const double kappa = 0.4;
  const auto objective = [&](const std::vector<double>& logits, double k) {
    const auto p = joint_softmax(logits, kShape, k).probs;
    return std::inner_product(p.begin(), p.end(), w.begin(), 0.0);
  };
  const JointScore out = joint_softmax(z, kShape, kappa);
  const SoftmaxGrad g = joint_softmax_backward(out, z, kappa, w);
  for (std::size_t i = 0; i < z.size(); i += 5) {
    const auto f = [&](double x) {
      auto zz = z;
      zz[i] = x;
      return objective(zz, kappa);
    };
    CHECK(g.d_logits[i] == doctest::Approx(oracle::central_difference(f, z[i], 1e-6)).epsilon(1e-6));
  }
  const auto fk = [&](double k) { return objective(z, k); };
  CHECK(g.d_kappa == doctest::Approx(oracle::central_difference(fk, kappa, 1e-6)).epsilon(1e-6));
}

TEST_CASE("marginals agree with the triple-loop oracle") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const JointScore v = joint_softmax(random_logits(rng, kShape.size(), 2.0), kShape, 1.0);
    const auto pc = quality_marginal(v);
    const auto ps = scene_marginal(v);
    const auto pd = distortion_marginal(v);
    const auto oc = oracle::marginal(v.probs, 5, 3, 4, 0);
    const auto os = oracle::marginal(v.probs, 5, 3, 4, 1);
    const auto od = oracle::marginal(v.probs, 5, 3, 4, 2);
    for (std::size_t i = 0; i < pc.size(); ++i) CHECK(pc[i] == doctest::Approx(oc[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < ps.size(); ++i) CHECK(ps[i] == doctest::Approx(os[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < pd.size(); ++i) CHECK(pd[i] == doctest::Approx(od[i]).epsilon(1e-12));
    CHECK(std::abs(sum(pc) - 1.0) < 1e-6);
    CHECK(std::abs(sum(ps) - 1.0) < 1e-6);
    CHECK(std::abs(sum(pd) - 1.0) < 1e-6);
    const double e = quality_expectation(pc);
    CHECK(e >= 1.0);
    CHECK(e <= 5.0);
  }
}

TEST_CASE("multi-view quality marginal averages views") {
  const JointScore uniform = joint_softmax(std::vector<double>(kShape.size(), 0.0), kShape, 1.0);
  const auto pc = quality_marginal(std::vector<JointScore>{uniform});
  for (double x : pc) CHECK(x == doctest::Approx(0.2));

  JointScore low{kShape, std::vector<double>(kShape.size(), 0.0)};
  JointScore high = low;
  low.probs[kShape.index(0, 1, 2)] = 1.0;
  high.probs[kShape.index(4, 0, 0)] = 1.0;
  const auto mix = quality_marginal(std::vector<JointScore>{low, high});
  CHECK(mix == std::vector<double>{0.5, 0, 0, 0, 0.5});
  CHECK_THROWS_AS(quality_marginal(std::vector<JointScore>{}), InvalidInput);
}

TEST_CASE("quality expectation") {
  CHECK(quality_expectation(std::vector<double>(5, 0.2)) == 3.0);
  CHECK(quality_expectation(std::vector<double>{0, 0, 0, 0, 1}) == 5.0);
  CHECK(quality_expectation(std::vector<double>{0.1, 0.2, 0.3, 0.2, 0.2}) == doctest::Approx(3.2).epsilon(1e-14));
  CHECK_THROWS_AS(quality_expectation(std::vector<double>{0.1, 0.1, 0.1, 0.1, 0.1}), InvalidInput);
}

TEST_CASE("task evidence projection") {
  const JointScore uniform = joint_softmax(std::vector<double>(kShape.size(), 0.0), kShape, 1.0);
  EvidenceProjection proj = EvidenceProjection::zeros(kShape);
  proj[Task::Scene].bias = {0.1, -0.2, 0.3, 0.4};
  CHECK(task_evidence(uniform, Task::Scene, proj) == RawEvidence{0.1, -0.2, 0.3, 0.4});

  proj[Task::Quality].weight[5 * 4 + 0] = 1.0;  // expectation -> delta
  CHECK(task_evidence(uniform, Task::Quality, proj)[0] == doctest::Approx(3.0));

  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  for (double& w : proj[Task::Distortion].weight) w = g(rng);
  const auto pd = distortion_marginal(uniform);
  const RawEvidence raw = task_evidence(uniform, Task::Distortion, proj);
  for (int k = 0; k < 4; ++k) {
    double expect = proj[Task::Distortion].bias[k];
    for (int i = 0; i < 4; ++i) expect += pd[i] * proj[Task::Distortion].weight[i * 4 + k];
    CHECK(raw[k] == doctest::Approx(expect).epsilon(1e-14));
  }

  EvidenceProjection wrong = proj;
  wrong[Task::Scene].in_dim = 7;
  CHECK_THROWS_AS(task_evidence(uniform, Task::Scene, wrong), InvalidInput);
}

TEST_CASE("task evidence backward through marginals") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  EvidenceProjection proj = EvidenceProjection::zeros(kShape);
  for (Task t : kAllTasks)
    for (double& w : proj[t].weight) w = g(rng);
  const auto z = random_logits(rng, kShape.size());
  const RawEvidence g_raw{0.3, -0.7, 0.2, 0.9};

  for (Task t : kAllTasks) {
    const JointScore view = joint_softmax(z, kShape, 1.0);
    EvidenceProjection gp = EvidenceProjection::zeros(kShape);
    const auto g_marg = task_evidence_backward(view, t, proj, g_raw, gp);
    const std::vector<double> none;
    const auto g_probs = marginal_backward(kShape, t == Task::Quality ? g_marg : none,
                                           t == Task::Scene ? g_marg : none, t == Task::Distortion ? g_marg : none);
    const SoftmaxGrad sg = joint_softmax_backward(view, z, 1.0, g_probs);
    for (std::size_t i = 0; i < z.size(); i += 7) {
      const auto f = [&](double x) {
        auto zz = z;
        zz[i] = x;
        const RawEvidence r = task_evidence(joint_softmax(zz, kShape, 1.0), t, proj);
        return g_raw[0] * r[0] + g_raw[1] * r[1] + g_raw[2] * r[2] + g_raw[3] * r[3];
      };
      CHECK(sg.d_logits[i] == doctest::Approx(oracle::central_difference(f, z[i], 1e-6)).epsilon(1e-6));
    }
  }
}
