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

#include "dmfgp/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dmfgp {

namespace {

void check_dims(const KernelParams& params, Eigen::Index u_cols,
                Eigen::Index v_cols, const char* where) {
  if (u_cols != params.dim() || v_cols != params.dim()) {
    throw std::invalid_argument(
        std::string(where) + ": expected feature dimension " +
        std::to_string(params.dim()) + ", got " + std::to_string(u_cols) +
        " and " + std::to_string(v_cols));
  }
}

}  // namespace

KernelParams KernelParams::unit(Eigen::Index dim) {
  return KernelParams(0.0, Vector::Zero(dim));
}

double KernelParams::signal_variance() const {
  return std::exp(log_signal_variance);
}

Vector KernelParams::lengthscales() const {
  return log_lengthscales.array().exp().matrix();
}

double se_ard_eval(const KernelParams& params,
                   const Eigen::Ref<const Vector>& u,
                   const Eigen::Ref<const Vector>& v) {
  check_dims(params, u.size(), v.size(), "se_ard_eval");
  const Vector inv_ell = (-params.log_lengthscales.array()).exp().matrix();
  const double r2 =
      ((u - v).array() * inv_ell.array()).square().sum();
  return params.signal_variance() * std::exp(-0.5 * r2);
}

Matrix gram(const KernelParams& params, const Matrix& U, const Matrix& V) {
  check_dims(params, U.cols(), V.cols(), "gram");
  const Eigen::Index n = U.rows();
  const Eigen::Index m = V.rows();
  const Eigen::Index D = params.dim();
  const Eigen::ArrayXd inv_ell = (-params.log_lengthscales.array()).exp();
  const double sf2 = params.signal_variance();

  Matrix K(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double r2 = 0.0;
      for (Eigen::Index d = 0; d < D; ++d) {
        const double t = (U(i, d) - V(j, d)) * inv_ell(d);
        r2 += t * t;
      }
      K(i, j) = sf2 * std::exp(-0.5 * r2);
    }
  }
  return K;
}

std::vector<Matrix> gram_grad_hyper(const KernelParams& params, const Matrix& U,
                                    const Matrix& V) {
  check_dims(params, U.cols(), V.cols(), "gram_grad_hyper");
  const Matrix K = gram(params, U, V);
  const Eigen::Index D = params.dim();
  const Eigen::ArrayXd inv_ell = (-params.log_lengthscales.array()).exp();

  std::vector<Matrix> grads;
  grads.reserve(static_cast<std::size_t>(1 + D));
  grads.push_back(K);
  for (Eigen::Index d = 0; d < D; ++d) {
    Matrix G(K.rows(), K.cols());
    for (Eigen::Index j = 0; j < K.cols(); ++j) {
      for (Eigen::Index i = 0; i < K.rows(); ++i) {
        const double t = (U(i, d) - V(j, d)) * inv_ell(d);
        G(i, j) = K(i, j) * t * t;
      }
    }
    grads.push_back(std::move(G));
  }
  return grads;
}

std::vector<Matrix> gram_grad_inputs(const KernelParams& params,
                                     const Matrix& U, const Matrix& V) {
  check_dims(params, U.cols(), V.cols(), "gram_grad_inputs");
  const Matrix K = gram(params, U, V);
  const Eigen::Index D = params.dim();
  const Eigen::ArrayXd inv_ell2 =
      (-2.0 * params.log_lengthscales.array()).exp();

  std::vector<Matrix> grads;
  grads.reserve(static_cast<std::size_t>(D));
  for (Eigen::Index d = 0; d < D; ++d) {
    Matrix G(K.rows(), K.cols());
    for (Eigen::Index j = 0; j < K.cols(); ++j) {
      for (Eigen::Index i = 0; i < K.rows(); ++i) {
        G(i, j) = K(i, j) * (V(j, d) - U(i, d)) * inv_ell2(d);
      }
    }
    grads.push_back(std::move(G));
  }
  return grads;
}

}  // namespace dmfgp
