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

#include "dmfgp/mfgp.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>

namespace dmfgp {

namespace {

struct Factorization {
  Matrix chol;
  double jitter = 0.0;
  double relative_jitter = 0.0;
};

// Cholesky of K + rel * mean(diag K) * I, escalating rel tenfold on failure.
Factorization factor_with_jitter(const Matrix& K, double relative_jitter) {
  if (relative_jitter < 0.0 || !std::isfinite(relative_jitter)) {
    throw std::invalid_argument("jitter must be finite and non-negative");
  }
  if (!K.allFinite()) {
    throw NumericalError("covariance matrix has non-finite entries");
  }
  const double scale = K.diagonal().mean();
  double rel = relative_jitter;
  double tried = 0.0;
  while (true) {
    tried = rel * scale;
    Matrix shifted = K;
    shifted.diagonal().array() += tried;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() == Eigen::Success) {
      Matrix L = llt.matrixL();
      if (L.allFinite() && (L.diagonal().array() > 0.0).all()) {
        return {std::move(L), tried, rel};
      }
    }
    if (rel >= kMaxJitter) break;
    rel = rel == 0.0 ? kDefaultJitter : std::min(rel * 10.0, kMaxJitter);
  }
  std::ostringstream msg;
  msg << "covariance is not positive definite (last jitter " << tried << ")";
  throw NotPositiveDefiniteError(msg.str(), tried);
}

Matrix inverse_from_chol(const Matrix& L) {
  Matrix Linv = L.triangularView<Eigen::Lower>().solve(
      Matrix::Identity(L.rows(), L.cols()));
  return Linv.transpose() * Linv;
}

Vector solve_from_chol(const Matrix& L, const Vector& b) {
  Vector y = L.triangularView<Eigen::Lower>().solve(b);
  return L.transpose().triangularView<Eigen::Upper>().solve(y);
}

double noise_from_log(double log_noise) {
  return std::max(std::exp(log_noise), kNoiseFloor);
}

// d noise / d log_noise; zero where the floor is active.
double noise_slope(double log_noise) {
  const double v = std::exp(log_noise);
  return v > kNoiseFloor ? v : 0.0;
}

void check_compatible(const ModelParams& params, const Dataset& data) {
  validate(params);
  validate(data);
  if (data.input_dim() != params.fmap.input_dim()) {
    throw std::invalid_argument(
        "dataset has " + std::to_string(data.input_dim()) +
        " input columns, feature map expects " +
        std::to_string(params.fmap.input_dim()));
  }
}

double sum_product(const Eigen::Ref<const Matrix>& A,
                   const Eigen::Ref<const Matrix>& B) {
  return A.cwiseProduct(B).sum();
}

}  // namespace

Matrix Dataset::inputs() const {
  Matrix X(size(), input_dim());
  X << x1, x2;
  return X;
}

Vector Dataset::targets() const {
  Vector f(size());
  f << f1, f2;
  return f;
}

void validate(const Dataset& data) {
  if (data.x1.rows() != data.f1.size() || data.x2.rows() != data.f2.size()) {
    throw std::invalid_argument("dataset inputs and targets differ in length");
  }
  if (data.n2() > 0 && data.n1() > 0 && data.x1.cols() != data.x2.cols()) {
    throw std::invalid_argument("x1 and x2 have different column counts");
  }
  if (data.size() == 0) {
    throw std::invalid_argument("dataset is empty");
  }
  if (!data.x1.allFinite() || !data.x2.allFinite() || !data.f1.allFinite() ||
      !data.f2.allFinite()) {
    throw std::invalid_argument("dataset has non-finite entries");
  }
}

std::optional<std::string> scarcity_warning(const Dataset& data) {
  if (data.n2() >= data.n1()) {
    return "high-fidelity set (" + std::to_string(data.n2()) +
           " points) is not smaller than the low-fidelity set (" +
           std::to_string(data.n1()) + " points)";
  }
  return std::nullopt;
}

double ModelParams::noise1() const { return noise_from_log(log_noise1); }
double ModelParams::noise2() const { return noise_from_log(log_noise2); }

void validate(const ModelParams& params) {
  validate(params.fmap.arch, params.fmap.params);
  const Eigen::Index D = params.fmap.output_dim();
  if (params.k1.dim() != D || params.k2.dim() != D) {
    throw std::invalid_argument(
        "kernel dimensions must equal the feature-map output width " +
        std::to_string(D));
  }
}

Eigen::Index feature_map_offset(const ModelParams& params) {
  return 1 + params.k1.size() + params.k2.size() + 2;
}

Vector to_vector(const ModelParams& params) {
  const Vector fmap = flatten(params.fmap.params);
  Vector flat(feature_map_offset(params) + fmap.size());
  Eigen::Index k = 0;
  flat(k++) = params.rho;
  flat(k++) = params.k1.log_signal_variance;
  flat.segment(k, params.k1.dim()) = params.k1.log_lengthscales;
  k += params.k1.dim();
  flat(k++) = params.k2.log_signal_variance;
  flat.segment(k, params.k2.dim()) = params.k2.log_lengthscales;
  k += params.k2.dim();
  flat(k++) = params.log_noise1;
  flat(k++) = params.log_noise2;
  flat.tail(fmap.size()) = fmap;
  return flat;
}

ModelParams from_vector(const ModelParams& shape,
                        const Eigen::Ref<const Vector>& flat) {
  const Eigen::Index offset = feature_map_offset(shape);
  const Eigen::Index fmap_size = parameter_count(shape.fmap.params);
  if (flat.size() != offset + fmap_size) {
    throw std::invalid_argument("parameter vector has wrong length");
  }
  ModelParams out = shape;
  Eigen::Index k = 0;
  out.rho = flat(k++);
  out.k1.log_signal_variance = flat(k++);
  out.k1.log_lengthscales = flat.segment(k, shape.k1.dim());
  k += shape.k1.dim();
  out.k2.log_signal_variance = flat(k++);
  out.k2.log_lengthscales = flat.segment(k, shape.k2.dim());
  k += shape.k2.dim();
  out.log_noise1 = flat(k++);
  out.log_noise2 = flat(k++);
  out.fmap.params = unflatten(shape.fmap.arch, flat.tail(fmap_size));
  return out;
}

GramBundle assemble(const ModelParams& params, const Dataset& data,
                    double jitter) {
  check_compatible(params, data);
  const Eigen::Index n1 = data.n1();
  const Eigen::Index n2 = data.n2();
  const double rho = params.rho;

  GramBundle b;
  b.H1 = forward(params.fmap.arch, params.fmap.params, data.x1);
  b.H2 = forward(params.fmap.arch, params.fmap.params, data.x2);

  b.K.resize(n1 + n2, n1 + n2);
  b.K.topLeftCorner(n1, n1) = gram(params.k1, b.H1, b.H1);
  const Matrix k1_12 = gram(params.k1, b.H1, b.H2);
  b.K.topRightCorner(n1, n2) = rho * k1_12;
  b.K.bottomLeftCorner(n2, n1) = rho * k1_12.transpose();
  b.K.bottomRightCorner(n2, n2) = rho * rho * gram(params.k1, b.H2, b.H2) +
                                  gram(params.k2, b.H2, b.H2);
  b.K.diagonal().head(n1).array() += params.noise1();
  b.K.diagonal().tail(n2).array() += params.noise2();

  Factorization fac = factor_with_jitter(b.K, jitter);
  b.chol = std::move(fac.chol);
  b.jitter = fac.jitter;
  b.relative_jitter = fac.relative_jitter;
  b.alpha = solve_from_chol(b.chol, data.targets());
  return b;
}

namespace {

double nll_from_bundle(const GramBundle& b, const Dataset& data) {
  const Eigen::Index N = data.size();
  const double quad = 0.5 * data.targets().dot(b.alpha);
  const double half_logdet = b.chol.diagonal().array().log().sum();
  return quad + half_logdet +
         0.5 * static_cast<double>(N) * std::log(2.0 * std::numbers::pi);
}

}  // namespace

double nll(const ModelParams& params, const Dataset& data, double jitter) {
  const GramBundle b = assemble(params, data, jitter);
  return nll_from_bundle(b, data);
}

std::pair<double, ModelParams> nll_and_gradient(const ModelParams& params,
                                                const Dataset& data,
                                                double jitter) {
  const GramBundle b = assemble(params, data, jitter);
  const double value = nll_from_bundle(b, data);

  const Eigen::Index n1 = data.n1();
  const Eigen::Index n2 = data.n2();
  const Eigen::Index N = n1 + n2;
  const double rho = params.rho;

  // dL/dK for the jittered matrix, then folded through
  // jitter = rel * trace(K) / N so the gradient is that of the computed nll.
  Matrix W = 0.5 * (inverse_from_chol(b.chol) - b.alpha * b.alpha.transpose());
  W.diagonal().array() +=
      b.relative_jitter * W.trace() / static_cast<double>(N);

  Matrix H(N, b.H1.cols());
  H << b.H1, b.H2;

  // K = C .* k1(H,H) + [0 0; 0 k2(H2,H2)] + noise, with C = [1 rho; rho rho^2].
  Matrix A1 = W;
  A1.topRightCorner(n1, n2) *= rho;
  A1.bottomLeftCorner(n2, n1) *= rho;
  A1.bottomRightCorner(n2, n2) *= rho * rho;
  const auto W22 = W.bottomRightCorner(n2, n2);

  const Matrix K1 = gram(params.k1, H, H);

  ModelParams grad = params;
  grad.rho = 2.0 * sum_product(W.topRightCorner(n1, n2),
                               K1.topRightCorner(n1, n2)) +
             2.0 * rho * sum_product(W22, K1.bottomRightCorner(n2, n2));

  const std::vector<Matrix> dK1 = gram_grad_hyper(params.k1, H, H);
  grad.k1.log_signal_variance = sum_product(A1, dK1[0]);
  for (Eigen::Index d = 0; d < params.k1.dim(); ++d) {
    grad.k1.log_lengthscales(d) =
        sum_product(A1, dK1[static_cast<std::size_t>(d + 1)]);
  }

  const std::vector<Matrix> dK2 = gram_grad_hyper(params.k2, b.H2, b.H2);
  grad.k2.log_signal_variance = sum_product(W22, dK2[0]);
  for (Eigen::Index d = 0; d < params.k2.dim(); ++d) {
    grad.k2.log_lengthscales(d) =
        sum_product(W22, dK2[static_cast<std::size_t>(d + 1)]);
  }

  grad.log_noise1 =
      noise_slope(params.log_noise1) * W.diagonal().head(n1).sum();
  grad.log_noise2 =
      noise_slope(params.log_noise2) * W.diagonal().tail(n2).sum();

  if (params.fmap.frozen) {
    grad.fmap.params = zero_params(params.fmap.arch);
    return {value, std::move(grad)};
  }

  // Feature adjoint dL/dH; each kernel enters through both arguments, and
  // the weight matrices are symmetric, hence the factor 2.
  Matrix adjoint = Matrix::Zero(N, H.cols());
  const std::vector<Matrix> dK1_dH = gram_grad_inputs(params.k1, H, H);
  for (Eigen::Index d = 0; d < H.cols(); ++d) {
    adjoint.col(d) = 2.0 * A1.cwiseProduct(dK1_dH[static_cast<std::size_t>(d)])
                               .rowwise()
                               .sum();
  }
  const std::vector<Matrix> dK2_dH = gram_grad_inputs(params.k2, b.H2, b.H2);
  for (Eigen::Index d = 0; d < H.cols(); ++d) {
    adjoint.col(d).tail(n2) +=
        2.0 * W22.cwiseProduct(dK2_dH[static_cast<std::size_t>(d)])
                  .rowwise()
                  .sum();
  }
  grad.fmap.params = backward(params.fmap.arch, params.fmap.params,
                              data.inputs(), adjoint);
  return {value, std::move(grad)};
}

ModelParams nll_gradient(const ModelParams& params, const Dataset& data,
                         double jitter) {
  return nll_and_gradient(params, data, jitter).second;
}

PosteriorPrediction predict(const ModelParams& params, const GramBundle& bundle,
                            const Matrix& Xstar) {
  validate(params);
  if (Xstar.cols() != params.fmap.input_dim()) {
    throw std::invalid_argument(
        "queries have " + std::to_string(Xstar.cols()) +
        " columns, model expects " + std::to_string(params.fmap.input_dim()));
  }
  const double rho = params.rho;
  const Matrix Hs = forward(params.fmap.arch, params.fmap.params, Xstar);
  const Eigen::Index n1 = bundle.H1.rows();
  const Eigen::Index n2 = bundle.H2.rows();

  Matrix Ks(Xstar.rows(), n1 + n2);
  Ks.leftCols(n1) = rho * gram(params.k1, Hs, bundle.H1);
  Ks.rightCols(n2) = rho * rho * gram(params.k1, Hs, bundle.H2) +
                     gram(params.k2, Hs, bundle.H2);

  PosteriorPrediction out;
  out.mean = Ks * bundle.alpha;
  const Matrix V =
      bundle.chol.triangularView<Eigen::Lower>().solve(Ks.transpose());
  const double prior =
      rho * rho * params.k1.signal_variance() + params.k2.signal_variance();
  out.variance =
      (prior - V.colwise().squaredNorm().transpose().array()).max(0.0).matrix();
  return out;
}

PosteriorPrediction predict(const ModelParams& params, const Dataset& data,
                            const Matrix& Xstar, double jitter) {
  return predict(params, assemble(params, data, jitter), Xstar);
}

Matrix joint_prior_covariance(const ModelParams& params, const Matrix& H) {
  const Eigen::Index n = H.rows();
  const Matrix K1 = gram(params.k1, H, H);
  const double rho = params.rho;
  Matrix K(2 * n, 2 * n);
  K.topLeftCorner(n, n) = K1;
  K.topRightCorner(n, n) = rho * K1;
  K.bottomLeftCorner(n, n) = rho * K1;
  K.bottomRightCorner(n, n) = rho * rho * K1 + gram(params.k2, H, H);
  return K;
}

std::pair<Vector, Vector> sample_prior_features(const ModelParams& params,
                                                const Matrix& H,
                                                std::uint64_t seed,
                                                double jitter) {
  if (H.rows() == 0) {
    throw std::invalid_argument("sample_prior needs at least one point");
  }
  const Matrix K = joint_prior_covariance(params, H);
  const Factorization fac = factor_with_jitter(K, jitter);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(K.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  const Vector s = fac.chol.triangularView<Eigen::Lower>() * z;
  const Eigen::Index n = H.rows();
  return {s.head(n), s.tail(n)};
}

std::pair<Vector, Vector> sample_prior(const ModelParams& params,
                                       const Matrix& X, std::uint64_t seed,
                                       double jitter) {
  validate(params);
  return sample_prior_features(
      params, forward(params.fmap.arch, params.fmap.params, X), seed, jitter);
}

Standardizer Standardizer::fit(const Dataset& data) {
  const Vector f = data.targets();
  Standardizer s;
  if (f.size() == 0) return s;
  s.mean = f.mean();
  const double var = (f.array() - s.mean).square().mean();
  s.scale = var > 0.0 ? std::sqrt(var) : 1.0;
  return s;
}

Dataset Standardizer::apply(const Dataset& data) const {
  Dataset out = data;
  out.f1 = ((data.f1.array() - mean) / scale).matrix();
  out.f2 = ((data.f2.array() - mean) / scale).matrix();
  return out;
}

PosteriorPrediction Standardizer::restore(PosteriorPrediction pred) const {
  pred.mean = (pred.mean.array() * scale + mean).matrix();
  pred.variance *= scale * scale;
  return pred;
}

FittedModel::FittedModel(ModelParams params, Dataset data,
                         Standardizer standardizer, double jitter)
    : params_(std::move(params)),
      data_(std::move(data)),
      standardizer_(standardizer),
      jitter_(jitter),
      bundle_(assemble(params_, standardizer_.apply(data_), jitter_)) {}

double FittedModel::nll() const {
  return dmfgp::nll(params_, standardizer_.apply(data_), jitter_);
}

PosteriorPrediction FittedModel::predict(const Matrix& Xstar) const {
  return standardizer_.restore(dmfgp::predict(params_, bundle_, Xstar));
}

Matrix FittedModel::features(const Matrix& Xstar) const {
  return forward(params_.fmap.arch, params_.fmap.params, Xstar);
}

}  // namespace dmfgp
