#pragma once

#include <span>
#include <string>
#include <vector>

#include "defnet/fusion.hpp"
#include "defnet/scorer.hpp"
#include "defnet/synth.hpp"

namespace defnet {

// Pearson correlation of average ranks. Returns NaN when either input is constant;
// throws InvalidInput on length mismatch or fewer than two points.
double srcc(std::span<const double> pred, std::span<const double> truth);
double plcc(std::span<const double> pred, std::span<const double> truth);

// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);

// Correlation between sorted scores and standard normal quantiles at (i - 3/8) / (n + 1/4).
// Throws InvalidInput for n < 20 or a constant sample.
double normality_diag(std::span<const double> scores);

struct MetricsReport {
  double srcc = 0.0;
  double plcc = 0.0;
  double acc_scene = 0.0;
  double acc_distortion = 0.0;
  double mean_ci_width = 0.0;         // 95% interval of the local-global fused quality NIG
  double mean_ci_width_single = 0.0;  // same, from individual crops without fusion
  std::size_t n = 0;
};

struct Prediction {
  double q_hat = 0.0;
  int scene = 0;
  int distortion = 0;
  double ci_width = 0.0;
  double ci_width_single = 0.0;
};

Prediction predict(const TinyScorer& scorer, const Sample& sample, const FusionConfig& cfg);

MetricsReport evaluate(const TinyScorer& scorer, std::span<const Sample> samples,
                       const FusionConfig& cfg);

// key=value lines in a fixed order.
std::string format_metrics(const MetricsReport& m);

}  // namespace defnet
