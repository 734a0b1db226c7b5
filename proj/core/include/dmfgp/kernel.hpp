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

#include <vector>

#include <Eigen/Core>

namespace dmfgp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Hyperparameters of a squared-exponential ARD kernel, stored in log space so
/// that the signal variance and every lengthscale stay positive.
struct KernelParams {
  double log_signal_variance = 0.0;
  Vector log_lengthscales;

  KernelParams() = default;
  KernelParams(double log_sf2, Vector log_ell)
      : log_signal_variance(log_sf2), log_lengthscales(std::move(log_ell)) {}

  /// Unit signal variance and unit lengthscales in `dim` dimensions.
  static KernelParams unit(Eigen::Index dim);

  Eigen::Index dim() const { return log_lengthscales.size(); }
  double signal_variance() const;
  Vector lengthscales() const;

  /// Number of scalar hyperparameters (1 + D).
  Eigen::Index size() const { return 1 + dim(); }
};

/// k(u, v) = sf2 * exp(-0.5 * sum_d ((u_d - v_d) / l_d)^2).
double se_ard_eval(const KernelParams& params,
                   const Eigen::Ref<const Vector>& u,
                   const Eigen::Ref<const Vector>& v);

/// Gram matrix between the rows of `U` (n x D) and `V` (m x D).
Matrix gram(const KernelParams& params, const Matrix& U, const Matrix& V);

/// Derivatives of `gram(params, U, V)` with respect to each scalar
/// hyperparameter, ordered as [log_signal_variance, log_lengthscales...].
std::vector<Matrix> gram_grad_hyper(const KernelParams& params, const Matrix& U,
                                    const Matrix& V);

/// Derivatives of `gram(params, U, V)` with respect to the first argument.
/// Element d of the result holds the n x m matrix dK(i,j)/dU(i,d).
/// The derivative with respect to V(j,d) is the negation.
std::vector<Matrix> gram_grad_inputs(const KernelParams& params,
                                     const Matrix& U, const Matrix& V);

}  // namespace dmfgp
