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

#include <cstdint>
#include <vector>

#include "dmfgp/mfgp.hpp"

namespace dmfgp {

struct TrainConfig {
  int restarts = 10;
  int max_iterations = 500;
  /// Convergence threshold on the max-norm of the free-parameter gradient.
  double gradient_tolerance = 1e-6;
  std::uint64_t seed = 0;
  /// AR(1) mode: the feature map is the frozen identity.
  bool freeze_feature_map = false;
  /// Keep both noise variances at `initial_noise_variance`.
  bool freeze_noise = false;
  double initial_noise_variance = 1e-4;
  /// Relative jitter passed to assemble().
  double jitter = kDefaultJitter;
  /// Standardize targets before training (see Standardizer).
  bool standardize = true;
  /// Apply scale_to_data() to every starting point in train().
  bool data_scaled_init = true;
  /// Worker threads for independent restarts.
  int threads = 1;
};

/// Throws std::invalid_argument for non-positive counts or tolerances.
void validate(const TrainConfig& config);

struct RestartResult {
  std::uint64_t seed = 0;
  int restart_index = 0;
  double initial_nll = 0.0;
  double final_nll = 0.0;
  int iterations = 0;
  bool converged = false;
  bool failed = false;
  /// Accepted objective values, starting with the initial one.
  std::vector<double> trace;
  ModelParams params;
};

struct TrainReport {
  ModelParams best_params;
  double best_nll = 0.0;
  int best_restart = 0;
  Standardizer standardizer;
  std::vector<RestartResult> per_restart;
};

/// Starting point of restart `restart_index`: weights ~ N(0, 1/input_width),
/// zero biases, unit kernels, rho = 1, noise = initial_noise_variance.
ModelParams init_params(const TrainConfig& config, const Architecture& arch,
                        int restart_index);

/// Data-aware rescaling of a starting point: the first layer is shifted and
/// scaled so its pre-activations are centred on the inputs with unit spread,
/// and both kernels get lengthscales equal to the per-dimension standard
/// deviation of the resulting features. The identity map is left untouched
/// apart from the lengthscales.
void scale_to_data(ModelParams& params, const Dataset& data);

/// Minimizes nll from `initial` over the parameters not frozen by `config`.
/// Never throws on numerical trouble; a failed start is flagged instead.
RestartResult optimize(const Dataset& data, const ModelParams& initial,
                       const TrainConfig& config);

/// Multi-restart maximum-likelihood training. With config.standardize the
/// nll values refer to the standardized targets. Throws TrainingFailedError
/// when every restart fails.
TrainReport train(const Dataset& data, const Architecture& arch,
                  const TrainConfig& config);

/// train() followed by binding the best parameters to the data.
FittedModel fit(const Dataset& data, const Architecture& arch,
                const TrainConfig& config, TrainReport* report = nullptr);

struct GradientCheckReport {
  Vector analytic;
  Vector numeric;
  Vector relative_error;
  double max_relative_error = 0.0;
};

/// Central finite differences of nll against nll_gradient. The differenced
/// nll is evaluated in extended precision. Coordinates that differ by at
/// most `abs_floor` count as matching.
GradientCheckReport gradient_check(const ModelParams& params,
                                   const Dataset& data, double step = 1e-6,
                                   double abs_floor = 1e-7,
                                   double jitter = kDefaultJitter);

/// gradient_check at init_params(restart 0) for `arch` on `data`.
GradientCheckReport gradient_check(const Dataset& data, const Architecture& arch,
                                   std::uint64_t seed);

}  // namespace dmfgp
