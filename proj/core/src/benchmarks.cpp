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

#include "dmfgp/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace dmfgp {

namespace {

constexpr double kVarianceFloor = 1e-12;

void check_range(double x, double lo, double hi, const char* where) {
  if (!(x >= lo && x <= hi)) {
    throw std::out_of_range(std::string(where) + ": x = " + std::to_string(x) +
                            " outside [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
  }
}

// Independent streams per purpose so that changing one does not shift the
// others.
std::mt19937_64 stream(std::uint64_t seed, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), purpose};
  return std::mt19937_64(seq);
}

Matrix as_column(const Vector& v) { return Matrix(v); }

}  // namespace

std::string_view to_string(BenchmarkKind kind) {
  switch (kind) {
    case BenchmarkKind::kStep:
      return "step";
    case BenchmarkKind::kForresterJump:
      return "forrester";
    case BenchmarkKind::kPriorSample:
      return "sample";
  }
  return "step";
}

BenchmarkKind benchmark_kind_from_string(std::string_view name) {
  if (name == "step") return BenchmarkKind::kStep;
  if (name == "forrester") return BenchmarkKind::kForresterJump;
  if (name == "sample") return BenchmarkKind::kPriorSample;
  throw std::invalid_argument("unknown benchmark kind '" + std::string(name) +
                              "'");
}

std::array<double, 4> candidate_partition(BenchmarkKind kind) {
  if (kind == BenchmarkKind::kStep) return {0.0, 0.8, 1.2, 2.0};
  return {0.0, 0.4, 0.6, 1.0};
}

BenchmarkSpec BenchmarkSpec::defaults(BenchmarkKind kind, std::uint64_t seed) {
  BenchmarkSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  switch (kind) {
    case BenchmarkKind::kStep:
      spec.n1 = 45;
      spec.n2 = 5;
      spec.noise_sd = 0.01;
      break;
    case BenchmarkKind::kForresterJump:
      spec.n1 = 50;
      spec.n2 = 5;
      break;
    case BenchmarkKind::kPriorSample:
      spec.n1 = 50;
      spec.n2 = 15;
      spec.rho_true = 1.0;
      break;
  }
  return spec;
}

Vector candidate_points(BenchmarkKind kind, std::uint64_t seed) {
  const auto edges = candidate_partition(kind);
  constexpr std::array<int, 3> counts{50, 100, 50};
  auto rng = stream(seed, 0);
  Vector x(kCandidateCount);
  Eigen::Index k = 0;
  for (std::size_t part = 0; part < counts.size(); ++part) {
    std::uniform_real_distribution<double> uniform(edges[part], edges[part + 1]);
    for (int i = 0; i < counts[part]; ++i) x(k++) = uniform(rng);
  }
  return x;
}

double step_truth(double x, Fidelity fidelity) {
  check_range(x, 0.0, 2.0, "step_truth");
  const bool left = x <= 1.0;
  if (fidelity == Fidelity::kHigh) return left ? -1.0 : 2.0;
  return left ? 0.0 : 1.0;
}

double forrester_truth(double x, Fidelity fidelity) {
  check_range(x, 0.0, 1.0, "forrester_truth");
  const bool left = x <= 0.5;
  const double base = 0.5 * (6.0 * x - 2.0) * (6.0 * x - 2.0) *
                          std::sin(12.0 * x - 4.0) +
                      10.0 * (x - 0.5) - 5.0;
  const double low = left ? base : base + 3.0;
  if (fidelity == Fidelity::kLow) return low;
  const double high = 2.0 * low - 20.0 * x + 20.0;
  return left ? high : high + 4.0;
}

Eigen::Vector2d true_h_sample(double x) {
  check_range(x, 0.0, 1.0, "true_h_sample");
  return x <= 0.5 ? Eigen::Vector2d(x, x) : Eigen::Vector2d(x, 2.0 * x);
}

ModelParams prior_sample_params(double rho_true) {
  ModelParams p;
  p.rho = rho_true;
  p.k1 = KernelParams::unit(2);
  p.k2 = KernelParams::unit(2);
  p.fmap = identity_map(2);
  p.log_noise1 = std::log(kNoiseFloor);
  p.log_noise2 = std::log(kNoiseFloor);
  return p;
}

BenchmarkData generate(const BenchmarkSpec& spec) {
  if (spec.n1 < 0 || spec.n2 < 0 || spec.n1 + spec.n2 > kCandidateCount) {
    throw std::invalid_argument("n1 + n2 must not exceed " +
                                std::to_string(kCandidateCount));
  }
  if (spec.noise_sd < 0.0) {
    throw std::invalid_argument("noise_sd must be non-negative");
  }
  const Vector candidates = candidate_points(spec.kind, spec.seed);
  const auto edges = candidate_partition(spec.kind);

  std::vector<Eigen::Index> order(kCandidateCount);
  std::iota(order.begin(), order.end(), 0);
  auto pick_rng = stream(spec.seed, 1);
  std::shuffle(order.begin(), order.end(), pick_rng);

  BenchmarkData out;
  out.train.x1.resize(spec.n1, 1);
  out.train.x2.resize(spec.n2, 1);
  for (int i = 0; i < spec.n1; ++i) {
    out.train.x1(i, 0) = candidates(order[static_cast<std::size_t>(i)]);
  }
  for (int i = 0; i < spec.n2; ++i) {
    out.train.x2(i, 0) =
        candidates(order[static_cast<std::size_t>(spec.n1 + i)]);
  }
  const Vector grid = Vector::LinSpaced(kTestGridSize, edges[0], edges[3]);
  out.test_x = as_column(grid);
  out.test_y.resize(kTestGridSize);

  switch (spec.kind) {
    case BenchmarkKind::kStep:
    case BenchmarkKind::kForresterJump: {
      const auto truth = spec.kind == BenchmarkKind::kStep ? step_truth
                                                           : forrester_truth;
      auto noise_rng = stream(spec.seed, 2);
      std::normal_distribution<double> normal(0.0, 1.0);
      const auto noisy = [&](double v) {
        return spec.noise_sd > 0.0 ? v + spec.noise_sd * normal(noise_rng) : v;
      };
      out.train.f1.resize(spec.n1);
      out.train.f2.resize(spec.n2);
      for (int i = 0; i < spec.n1; ++i) {
        out.train.f1(i) = noisy(truth(out.train.x1(i, 0), Fidelity::kLow));
      }
      for (int i = 0; i < spec.n2; ++i) {
        out.train.f2(i) = noisy(truth(out.train.x2(i, 0), Fidelity::kHigh));
      }
      for (int i = 0; i < kTestGridSize; ++i) {
        out.test_y(i) = truth(grid(i), Fidelity::kHigh);
      }
      break;
    }
    case BenchmarkKind::kPriorSample: {
      // One joint draw over the candidates and the test grid, so that the
      // grid truth is the same function the training data come from.
      Matrix H(kCandidateCount + kTestGridSize, 2);
      for (int i = 0; i < kCandidateCount; ++i) {
        H.row(i) = true_h_sample(candidates(i)).transpose();
      }
      for (int i = 0; i < kTestGridSize; ++i) {
        H.row(kCandidateCount + i) = true_h_sample(grid(i)).transpose();
      }
      const std::uint64_t draw_seed = stream(spec.seed, 3)();
      const auto [f1, f2] =
          sample_prior_features(prior_sample_params(spec.rho_true), H, draw_seed);
      out.train.f1.resize(spec.n1);
      out.train.f2.resize(spec.n2);
      for (int i = 0; i < spec.n1; ++i) {
        out.train.f1(i) = f1(order[static_cast<std::size_t>(i)]);
      }
      for (int i = 0; i < spec.n2; ++i) {
        out.train.f2(i) = f2(order[static_cast<std::size_t>(spec.n1 + i)]);
      }
      out.test_y = f2.tail(kTestGridSize);
      break;
    }
  }
  return out;
}

Metrics metrics(const PosteriorPrediction& pred, const Vector& truth) {
  if (pred.mean.size() != truth.size() || pred.variance.size() != truth.size()) {
    throw std::invalid_argument("metrics: prediction has " +
                                std::to_string(pred.mean.size()) +
                                " points, truth has " +
                                std::to_string(truth.size()));
  }
  Metrics m;
  if (truth.size() == 0) return m;
  const Eigen::ArrayXd err = (truth - pred.mean).array();
  const Eigen::ArrayXd var = pred.variance.array().max(kVarianceFloor);
  m.rmse = std::sqrt(err.square().mean());
  m.coverage = (err.abs() <= 2.0 * pred.variance.array().max(0.0).sqrt())
                   .cast<double>()
                   .mean();
  m.mnlpd = (0.5 * (2.0 * std::numbers::pi * var).log() +
             err.square() / (2.0 * var))
                .mean();
  return m;
}

}  // namespace dmfgp
