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

#include "dmfgp/feature_map.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace dmfgp {

namespace {

// Branches keep exp() from overflowing for large |z|.
double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void apply_transfer(Transfer t, Matrix& Z) {
  if (t == Transfer::kSigmoid) {
    Z = Z.unaryExpr([](double z) { return sigmoid(z); });
  }
}

Matrix affine(const LayerParams& layer, const Matrix& input) {
  Matrix Z = input * layer.weights.transpose();
  Z.rowwise() += layer.bias.transpose();
  return Z;
}

}  // namespace

std::string_view to_string(Transfer t) {
  switch (t) {
    case Transfer::kSigmoid:
      return "sigmoid";
    case Transfer::kIdentity:
      return "identity";
  }
  return "identity";
}

Transfer transfer_from_string(std::string_view name) {
  if (name == "sigmoid") return Transfer::kSigmoid;
  if (name == "identity") return Transfer::kIdentity;
  throw std::invalid_argument("unknown transfer function '" +
                              std::string(name) + "'");
}

Architecture parse_architecture(std::string_view widths,
                                Eigen::Index input_dim) {
  if (input_dim < 1) {
    throw std::invalid_argument("input dimension must be positive");
  }
  std::vector<Eigen::Index> sizes;
  std::size_t pos = 0;
  while (pos <= widths.size()) {
    const std::size_t dash = std::min(widths.find('-', pos), widths.size());
    const std::string_view token = widths.substr(pos, dash - pos);
    long value = 0;
    const auto [end, ec] =
        std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() ||
        end != token.data() + token.size() || value < 1) {
      throw std::invalid_argument("malformed architecture '" +
                                  std::string(widths) + "'");
    }
    sizes.push_back(value);
    pos = dash + 1;
  }

  Architecture arch;
  Eigen::Index in = input_dim;
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    const bool last = l + 1 == sizes.size();
    arch.push_back({in, sizes[l], last ? Transfer::kIdentity : Transfer::kSigmoid});
    in = sizes[l];
  }
  return arch;
}

std::string format_architecture(const Architecture& arch) {
  std::string out;
  for (const auto& layer : arch) {
    if (!out.empty()) out += '-';
    out += std::to_string(layer.output_width);
  }
  return out;
}

void validate(const Architecture& arch, const FeatureMapParams& params) {
  if (arch.empty()) {
    throw std::invalid_argument("feature map needs at least one layer");
  }
  if (arch.size() != params.size()) {
    throw std::invalid_argument("feature map has " +
                                std::to_string(params.size()) +
                                " parameter blocks for " +
                                std::to_string(arch.size()) + " layers");
  }
  for (std::size_t l = 0; l < arch.size(); ++l) {
    const LayerSpec& spec = arch[l];
    if (spec.input_width < 1 || spec.output_width < 1) {
      throw std::invalid_argument("layer widths must be positive");
    }
    if (l > 0 && spec.input_width != arch[l - 1].output_width) {
      throw std::invalid_argument("layer " + std::to_string(l) +
                                  " input width does not chain");
    }
    const LayerParams& p = params[l];
    if (p.weights.rows() != spec.output_width ||
        p.weights.cols() != spec.input_width ||
        p.bias.size() != spec.output_width) {
      throw std::invalid_argument("layer " + std::to_string(l) +
                                  " parameter shape mismatch");
    }
    if (!p.weights.allFinite() || !p.bias.allFinite()) {
      throw std::invalid_argument("layer " + std::to_string(l) +
                                  " has non-finite parameters");
    }
  }
}

FeatureMapParams zero_params(const Architecture& arch) {
  FeatureMapParams params;
  params.reserve(arch.size());
  for (const auto& spec : arch) {
    params.push_back({Matrix::Zero(spec.output_width, spec.input_width),
                      Vector::Zero(spec.output_width)});
  }
  return params;
}

Matrix forward(const Architecture& arch, const FeatureMapParams& params,
               const Matrix& X) {
  validate(arch, params);
  if (X.cols() != arch.front().input_width) {
    throw std::invalid_argument(
        "forward: input has " + std::to_string(X.cols()) +
        " columns, feature map expects " +
        std::to_string(arch.front().input_width));
  }
  Matrix A = X;
  for (std::size_t l = 0; l < arch.size(); ++l) {
    Matrix Z = affine(params[l], A);
    apply_transfer(arch[l].transfer, Z);
    A = std::move(Z);
  }
  return A;
}

FeatureMapParams backward(const Architecture& arch,
                          const FeatureMapParams& params, const Matrix& X,
                          const Matrix& adjoint) {
  validate(arch, params);
  if (X.cols() != arch.front().input_width) {
    throw std::invalid_argument("backward: input width mismatch");
  }
  if (adjoint.rows() != X.rows() ||
      adjoint.cols() != arch.back().output_width) {
    throw std::invalid_argument("backward: adjoint shape mismatch");
  }

  // activations[l] is the input of layer l; activations.back() is h(X).
  std::vector<Matrix> activations;
  activations.reserve(arch.size() + 1);
  activations.push_back(X);
  for (std::size_t l = 0; l < arch.size(); ++l) {
    Matrix Z = affine(params[l], activations.back());
    apply_transfer(arch[l].transfer, Z);
    activations.push_back(std::move(Z));
  }

  FeatureMapParams grad = zero_params(arch);
  Matrix delta = adjoint;
  for (std::size_t l = arch.size(); l-- > 0;) {
    if (arch[l].transfer == Transfer::kSigmoid) {
      const Matrix& out = activations[l + 1];
      delta.array() *= out.array() * (1.0 - out.array());
    }
    grad[l].weights = delta.transpose() * activations[l];
    grad[l].bias = delta.colwise().sum().transpose();
    if (l > 0) {
      delta = delta * params[l].weights;
    }
  }
  return grad;
}

FeatureMap identity_map(Eigen::Index dim) {
  if (dim < 1) {
    throw std::invalid_argument("identity_map: dimension must be positive");
  }
  FeatureMap map;
  map.arch = {{dim, dim, Transfer::kIdentity}};
  map.params = {{Matrix::Identity(dim, dim), Vector::Zero(dim)}};
  map.frozen = true;
  return map;
}

Eigen::Index parameter_count(const FeatureMapParams& params) {
  Eigen::Index count = 0;
  for (const auto& p : params) count += p.weights.size() + p.bias.size();
  return count;
}

Vector flatten(const FeatureMapParams& params) {
  Vector flat(parameter_count(params));
  Eigen::Index k = 0;
  for (const auto& p : params) {
    for (Eigen::Index r = 0; r < p.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.weights.cols(); ++c) {
        flat(k++) = p.weights(r, c);
      }
    }
    for (Eigen::Index r = 0; r < p.bias.size(); ++r) flat(k++) = p.bias(r);
  }
  return flat;
}

FeatureMapParams unflatten(const Architecture& arch,
                           const Eigen::Ref<const Vector>& flat) {
  FeatureMapParams params = zero_params(arch);
  if (flat.size() != parameter_count(params)) {
    throw std::invalid_argument("unflatten: expected " +
                                std::to_string(parameter_count(params)) +
                                " values, got " + std::to_string(flat.size()));
  }
  Eigen::Index k = 0;
  for (auto& p : params) {
    for (Eigen::Index r = 0; r < p.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.weights.cols(); ++c) {
        p.weights(r, c) = flat(k++);
      }
    }
    for (Eigen::Index r = 0; r < p.bias.size(); ++r) p.bias(r) = flat(k++);
  }
  return params;
}

}  // namespace dmfgp
