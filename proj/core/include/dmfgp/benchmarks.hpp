// Copyright 2026 The dmfgp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "dmfgp/mfgp.hpp"

namespace dmfgp {

enum class BenchmarkKind { kStep, kForresterJump, kPriorSample };
enum class Fidelity { kLow, kHigh };

/// "step", "forrester" or "sample".
std::string_view to_string(BenchmarkKind kind);
BenchmarkKind benchmark_kind_from_string(std::string_view name);

/// Breakpoints {lo, a, b, hi}: 50 candidates are drawn on [lo,a], 100 on
/// [a,b] and 50 on [b,hi].
std::array<double, 4> candidate_partition(BenchmarkKind kind);

struct BenchmarkSpec {
  BenchmarkKind kind = BenchmarkKind::kStep;
  std::uint64_t seed = 0;
  int n1 = 45;
  int n2 = 5;
  double noise_sd = 0.0;
  double rho_true = 1.0;

  /// Sizes and noise used by the published experiments for `kind`.
  static BenchmarkSpec defaults(BenchmarkKind kind, std::uint64_t seed = 0);
};

inline constexpr int kCandidateCount = 200;
inline constexpr int kTestGridSize = 200;

Vector candidate_points(BenchmarkKind kind, std::uint64_t seed);

/// Step benchmark on [0, 2]. High: -1 / 2, low: 0 / 1, switching after x = 1.
double step_truth(double x, Fidelity fidelity);

/// Forrester function with a jump on [0, 1]; x <= 0.5 is the lower branch.
double forrester_truth(double x, Fidelity fidelity);

/// Piecewise-linear feature map used to generate the prior-sample benchmark:
/// (x, x) for x <= 0.5 and (x, 2x) above.
Eigen::Vector2d true_h_sample(double x);

/// Parameters of the prior the sample benchmark is drawn from: unit SE-ARD
/// kernels on the two true features and the given rho. The feature map is
/// the identity on those features.
ModelParams prior_sample_params(double rho_true);

struct BenchmarkData {
  Dataset train;
  /// Evenly spaced grid over the benchmark interval with noise-free
  /// high-fidelity truth.
  Matrix test_x;
  Vector test_y;
};

BenchmarkData generate(const BenchmarkSpec& spec);

struct Metrics {
  double rmse = 0.0;
  /// Fraction of truth values inside mean +/- 2 std.
  double coverage = 0.0;
  /// Mean negative log predictive density; variances are floored at 1e-12.
  double mnlpd = 0.0;
};

Metrics metrics(const PosteriorPrediction& pred, const Vector& truth);

}  // namespace dmfgp
