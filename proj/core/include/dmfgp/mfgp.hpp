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
#include <optional>
#include <string>
#include <utility>

#include "dmfgp/errors.hpp"
#include "dmfgp/feature_map.hpp"
#include "dmfgp/kernel.hpp"

namespace dmfgp {

/// Smallest noise variance the model will use.
inline constexpr double kNoiseFloor = 1e-8;
/// Default relative jitter: added jitter is this times mean(diag K).
inline constexpr double kDefaultJitter = 1e-8;
/// Largest relative jitter tried before giving up on a factorization.
inline constexpr double kMaxJitter = 1e-2;

/// Observations at two fidelity levels. Fidelity 2 is the accurate one.
struct Dataset {
  Matrix x1;
  Vector f1;
  Matrix x2;
  Vector f2;

  Eigen::Index n1() const { return x1.rows(); }
  Eigen::Index n2() const { return x2.rows(); }
  Eigen::Index size() const { return n1() + n2(); }
  Eigen::Index input_dim() const { return x1.cols(); }

  /// [x1; x2]
  Matrix inputs() const;
  /// [f1; f2]
  Vector targets() const;
};

/// Throws std::invalid_argument on shape mismatches or non-finite entries.
void validate(const Dataset& data);

/// Returns a message when the high-fidelity set is not the smaller one.
std::optional<std::string> scarcity_warning(const Dataset& data);

/// All trainable quantities: coupling rho, the two kernels, the feature map
/// and one log noise variance per fidelity.
struct ModelParams {
  double rho = 1.0;
  KernelParams k1;
  KernelParams k2;
  FeatureMap fmap;
  double log_noise1 = 0.0;
  double log_noise2 = 0.0;

  /// exp(log_noise), floored at kNoiseFloor.
  double noise1() const;
  double noise2() const;
};

/// Throws std::invalid_argument when kernel and feature-map dimensions
/// disagree.
void validate(const ModelParams& params);

/// Flat parameter vector: rho, k1, k2, log_noise1, log_noise2, feature map.
Vector to_vector(const ModelParams& params);
/// Inverse of to_vector; `shape` supplies the architecture and frozen flag.
ModelParams from_vector(const ModelParams& shape,
                        const Eigen::Ref<const Vector>& flat);
/// Index of the first feature-map entry in the flat vector.
Eigen::Index feature_map_offset(const ModelParams& params);

/// Training covariance and its factorization.
struct GramBundle {
  Matrix K;       ///< joint covariance including noise, excluding jitter
  Matrix chol;    ///< lower factor of K + jitter * I
  Vector alpha;   ///< (K + jitter * I)^{-1} f
  Matrix H1;      ///< features of x1
  Matrix H2;      ///< features of x2
  double jitter = 0.0;           ///< absolute jitter used
  double relative_jitter = 0.0;  ///< jitter / mean(diag K)
};

/// Latent high-fidelity posterior at each query point.
struct PosteriorPrediction {
  Vector mean;
  Vector variance;
};

/// Builds the joint covariance
///   [[k1(H1,H1) + s1 I, rho k1(H1,H2)], [rho k1(H2,H1), rho^2 k1(H2,H2) + k2(H2,H2) + s2 I]]
/// and factors it. `jitter` is relative to mean(diag K); on failure it is
/// raised tenfold up to kMaxJitter before NotPositiveDefiniteError.
GramBundle assemble(const ModelParams& params, const Dataset& data,
                    double jitter = kDefaultJitter);

/// Negative log marginal likelihood of the stacked targets.
double nll(const ModelParams& params, const Dataset& data,
           double jitter = kDefaultJitter);

/// Gradient of nll laid out like ModelParams. Each field holds the
/// derivative with respect to the matching parameter; the feature-map
/// gradient is zero when the map is frozen. Accounts for the jitter scaling
/// with mean(diag K).
ModelParams nll_gradient(const ModelParams& params, const Dataset& data,
                         double jitter = kDefaultJitter);

/// nll and its gradient from one factorization.
std::pair<double, ModelParams> nll_and_gradient(const ModelParams& params,
                                                const Dataset& data,
                                                double jitter = kDefaultJitter);

PosteriorPrediction predict(const ModelParams& params, const Dataset& data,
                            const Matrix& Xstar,
                            double jitter = kDefaultJitter);

/// Prediction reusing a factorization produced by assemble().
PosteriorPrediction predict(const ModelParams& params, const GramBundle& bundle,
                            const Matrix& Xstar);

/// One draw of (f1, f2) at the rows of X from the joint prior.
std::pair<Vector, Vector> sample_prior(const ModelParams& params,
                                       const Matrix& X, std::uint64_t seed,
                                       double jitter = kDefaultJitter);

/// As sample_prior, but with the features given directly instead of
/// computed by the feature map.
std::pair<Vector, Vector> sample_prior_features(const ModelParams& params,
                                                const Matrix& H,
                                                std::uint64_t seed,
                                                double jitter = kDefaultJitter);

/// The 2n x 2n prior covariance of (f1(X), f2(X)) without noise.
Matrix joint_prior_covariance(const ModelParams& params, const Matrix& H);

/// Affine target transform y -> (y - mean) / scale shared by both
/// fidelities.
struct Standardizer {
  double mean = 0.0;
  double scale = 1.0;

  /// Combined mean and population standard deviation of f1 and f2.
  static Standardizer fit(const Dataset& data);

  Dataset apply(const Dataset& data) const;
  /// Maps a standardized posterior back to data units.
  PosteriorPrediction restore(PosteriorPrediction pred) const;
};

/// A trained model bound to its (raw) training data. Immutable after
/// construction; predictions may be issued concurrently.
class FittedModel {
 public:
  FittedModel(ModelParams params, Dataset data, Standardizer standardizer,
              double jitter = kDefaultJitter);

  const ModelParams& params() const { return params_; }
  const Dataset& data() const { return data_; }
  const Standardizer& standardizer() const { return standardizer_; }
  const GramBundle& bundle() const { return bundle_; }
  double jitter() const { return jitter_; }

  /// nll of the standardized training data.
  double nll() const;

  /// Posterior of f2 in data units.
  PosteriorPrediction predict(const Matrix& Xstar) const;

  /// Learned features h(x) for each query row.
  Matrix features(const Matrix& Xstar) const;

 private:
  ModelParams params_;
  Dataset data_;
  Standardizer standardizer_;
  double jitter_;
  GramBundle bundle_;
};

}  // namespace dmfgp
