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

#include <string>
#include <string_view>
#include <vector>

#include "dmfgp/kernel.hpp"

namespace dmfgp {

enum class Transfer { kSigmoid, kIdentity };

std::string_view to_string(Transfer t);
Transfer transfer_from_string(std::string_view name);

struct LayerSpec {
  Eigen::Index input_width = 1;
  Eigen::Index output_width = 1;
  Transfer transfer = Transfer::kIdentity;
};

using Architecture = std::vector<LayerSpec>;

/// Weights (output_width x input_width) and bias of one layer.
struct LayerParams {
  Matrix weights;
  Vector bias;
};

using FeatureMapParams = std::vector<LayerParams>;

/// A feature map h(x) = (h^L o ... o h^1)(x) with h^l(z) = s(W z + b).
/// A frozen map is excluded from training; the identity map is frozen.
struct FeatureMap {
  Architecture arch;
  FeatureMapParams params;
  bool frozen = false;

  Eigen::Index input_dim() const { return arch.front().input_width; }
  Eigen::Index output_dim() const { return arch.back().output_width; }
};

/// Builds a hidden-sigmoid architecture from a width list such as "3-2":
/// every width but the last gets a sigmoid layer, the last layer is affine.
Architecture parse_architecture(std::string_view widths, Eigen::Index input_dim);
std::string format_architecture(const Architecture& arch);

/// Throws std::invalid_argument unless layers chain and params match them.
void validate(const Architecture& arch, const FeatureMapParams& params);

/// Zero-initialised parameters for `arch`.
FeatureMapParams zero_params(const Architecture& arch);

/// Row i of the result is h(X.row(i)).
Matrix forward(const Architecture& arch, const FeatureMapParams& params,
               const Matrix& X);

/// Vector-Jacobian product: sum_i sum_k adjoint(i,k) * dh_k(X_i)/dtheta.
FeatureMapParams backward(const Architecture& arch,
                          const FeatureMapParams& params, const Matrix& X,
                          const Matrix& adjoint);

/// h(x) = x in `dim` dimensions, flagged frozen.
FeatureMap identity_map(Eigen::Index dim);

Eigen::Index parameter_count(const FeatureMapParams& params);

/// Row-major weights followed by bias, layer by layer.
Vector flatten(const FeatureMapParams& params);
FeatureMapParams unflatten(const Architecture& arch,
                           const Eigen::Ref<const Vector>& flat);

}  // namespace dmfgp
