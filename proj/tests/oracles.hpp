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

// Independent reference implementations used only by the tests. Nothing here
// calls into the library's covariance assembly, factorization or gradients.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "dmfgp/mfgp.hpp"

namespace dmfgp::testing {

using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

/// Scalar SE-ARD evaluation written straight from the formula.
template <typename T>
T se_ard(const KernelParams& p, const T* u, const T* v) {
  T r2 = 0;
  for (Eigen::Index d = 0; d < p.dim(); ++d) {
    const T ell = std::exp(static_cast<T>(p.log_lengthscales(d)));
    const T t = (u[d] - v[d]) / ell;
    r2 += t * t;
  }
  return std::exp(static_cast<T>(p.log_signal_variance)) * std::exp(-r2 / 2);
}

/// Row-by-row network evaluation in extended precision.
inline LongMatrix forward_long(const FeatureMap& fmap, const Matrix& X) {
  LongMatrix out(X.rows(), fmap.output_dim());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    LongVector z = X.row(i).transpose().cast<long double>();
    for (std::size_t l = 0; l < fmap.arch.size(); ++l) {
      LongVector a = fmap.params[l].weights.cast<long double>() * z +
                     fmap.params[l].bias.cast<long double>();
      if (fmap.arch[l].transfer == Transfer::kSigmoid) {
        for (Eigen::Index k = 0; k < a.size(); ++k) a(k) = 1.0L / (1.0L + std::exp(-a(k)));
      }
      z = a;
    }
    out.row(i) = z.transpose();
  }
  return out;
}

/// Entrywise block covariance of the stacked training targets, built from
/// k11 = k1, k12 = k21 = rho k1, k22 = rho^2 k1 + k2, plus floored noise.
inline LongMatrix dense_covariance(const ModelParams& p, const Dataset& data) {
  const LongMatrix H1 = forward_long(p.fmap, data.x1);
  const LongMatrix H2 = forward_long(p.fmap, data.x2);
  const Eigen::Index n1 = data.n1();
  const Eigen::Index n2 = data.n2();
  const long double rho = p.rho;
  LongMatrix K(n1 + n2, n1 + n2);
  for (Eigen::Index i = 0; i < n1 + n2; ++i) {
    for (Eigen::Index j = 0; j < n1 + n2; ++j) {
      const bool hi_i = i >= n1;
      const bool hi_j = j >= n1;
      LongVector hi = hi_i ? LongVector(H2.row(i - n1).transpose())
                           : LongVector(H1.row(i).transpose());
      LongVector hj = hi_j ? LongVector(H2.row(j - n1).transpose())
                           : LongVector(H1.row(j).transpose());
      const long double k1 = se_ard<long double>(p.k1, hi.data(), hj.data());
      long double v = 0;
      if (!hi_i && !hi_j) {
        v = k1;
      } else if (hi_i != hi_j) {
        v = rho * k1;
      } else {
        v = rho * rho * k1 + se_ard<long double>(p.k2, hi.data(), hj.data());
      }
      K(i, j) = v;
    }
  }
  const long double s1 = std::max<long double>(std::exp((long double)p.log_noise1), kNoiseFloor);
  const long double s2 = std::max<long double>(std::exp((long double)p.log_noise2), kNoiseFloor);
  for (Eigen::Index i = 0; i < n1; ++i) K(i, i) += s1;
  for (Eigen::Index i = n1; i < n1 + n2; ++i) K(i, i) += s2;
  return K;
}

/// nll via an explicit LU inverse and determinant in long double. The
/// relative jitter is applied as rel * mean(diag K).
inline long double dense_nll(const ModelParams& p, const Dataset& data,
                             double relative_jitter) {
  LongMatrix K = dense_covariance(p, data);
  const long double jitter = relative_jitter * K.diagonal().mean();
  K.diagonal().array() += jitter;
  const Eigen::FullPivLU<LongMatrix> lu(K);
  const LongMatrix Kinv = lu.inverse();
  const LongVector f = data.targets().cast<long double>();
  const long double N = static_cast<long double>(f.size());
  const long double pi = 3.141592653589793238462643383279502884L;
  return 0.5L * f.dot(Kinv * f) + 0.5L * std::log(std::abs(lu.determinant())) +
         0.5L * N * std::log(2.0L * pi);
}

/// Central differences of the long-double nll over the flat parameter vector.
inline Vector fd_gradient(const ModelParams& p, const Dataset& data,
                          double relative_jitter, double step) {
  const Vector x = to_vector(p);
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x;
    Vector xm = x;
    xp(i) += step;
    xm(i) -= step;
    const long double fp = dense_nll(from_vector(p, xp), data, relative_jitter);
    const long double fm = dense_nll(from_vector(p, xm), data, relative_jitter);
    // The perturbation actually applied, after rounding x +/- step.
    g(i) = static_cast<double>((fp - fm) / static_cast<long double>(xp(i) - xm(i)));
  }
  return g;
}

/// Kennedy-O'Hagan AR(1) co-kriging written from its generative form
/// f2 = rho f1 + delta2 with independent GPs on the raw inputs.
struct KohAr1 {
  double rho;
  KernelParams k1;
  KernelParams k2;
  double noise1;
  double noise2;
  double jitter = 0.0;  ///< absolute diagonal addition

  double cov_f1_f1(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) const {
    return se_ard<double>(k1, a.data(), b.data());
  }
  double cov_f1_f2(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) const {
    return rho * se_ard<double>(k1, a.data(), b.data());
  }
  double cov_f2_f2(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) const {
    return rho * rho * se_ard<double>(k1, a.data(), b.data()) +
           se_ard<double>(k2, a.data(), b.data());
  }

  Matrix covariance(const Dataset& d) const {
    const Eigen::Index n1 = d.n1();
    const Eigen::Index n = d.size();
    Matrix K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::RowVectorXd a = i < n1 ? d.x1.row(i) : d.x2.row(i - n1);
        const Eigen::RowVectorXd b = j < n1 ? d.x1.row(j) : d.x2.row(j - n1);
        if (i < n1 && j < n1) {
          K(i, j) = cov_f1_f1(a, b);
        } else if (i >= n1 && j >= n1) {
          K(i, j) = cov_f2_f2(a, b);
        } else {
          K(i, j) = cov_f1_f2(a, b);
        }
      }
      K(i, i) += (i < n1 ? noise1 : noise2) + jitter;
    }
    return K;
  }

  double nll(const Dataset& d) const {
    const Matrix K = covariance(d);
    const Eigen::PartialPivLU<Matrix> lu(K);
    const Vector f = d.targets();
    return 0.5 * f.dot(lu.solve(f)) + 0.5 * std::log(lu.determinant()) +
           0.5 * static_cast<double>(f.size()) * std::log(2.0 * M_PI);
  }

  PosteriorPrediction predict(const Dataset& d, const Matrix& Xs) const {
    const Matrix K = covariance(d);
    const Eigen::PartialPivLU<Matrix> lu(K);
    const Vector f = d.targets();
    const Vector w = lu.solve(f);
    PosteriorPrediction out;
    out.mean.resize(Xs.rows());
    out.variance.resize(Xs.rows());
    for (Eigen::Index q = 0; q < Xs.rows(); ++q) {
      const Eigen::RowVectorXd xs = Xs.row(q);
      Vector ks(d.size());
      for (Eigen::Index i = 0; i < d.n1(); ++i) ks(i) = cov_f1_f2(d.x1.row(i), xs);
      for (Eigen::Index i = 0; i < d.n2(); ++i) ks(d.n1() + i) = cov_f2_f2(d.x2.row(i), xs);
      out.mean(q) = ks.dot(w);
      out.variance(q) = cov_f2_f2(xs, xs) - ks.dot(lu.solve(ks));
    }
    return out;
  }
};

/// Random dataset on [0, 2]^dim with standard-normal targets.
inline Dataset random_dataset(std::mt19937_64& rng, Eigen::Index n1,
                              Eigen::Index n2, Eigen::Index dim = 1) {
  std::uniform_real_distribution<double> ux(0.0, 2.0);
  std::normal_distribution<double> nf(0.0, 1.0);
  Dataset d;
  d.x1 = Matrix::NullaryExpr(n1, dim, [&] { return ux(rng); });
  d.x2 = Matrix::NullaryExpr(n2, dim, [&] { return ux(rng); });
  d.f1 = Vector::NullaryExpr(n1, [&] { return nf(rng); });
  d.f2 = Vector::NullaryExpr(n2, [&] { return nf(rng); });
  return d;
}

/// Random parameters for `fmap`'s architecture: kernels with log
/// hyperparameters in [-1, 1], rho in [-2, 2], noise in [1e-3, 1e-1], and
/// N(0, 1.5^2) weights / N(0, 1) biases when the map is trainable.
inline ModelParams random_params(std::mt19937_64& rng, FeatureMap fmap) {
  std::uniform_real_distribution<double> u11(-1.0, 1.0);
  std::uniform_real_distribution<double> urho(-2.0, 2.0);
  std::uniform_real_distribution<double> unoise(std::log(1e-3), std::log(1e-1));
  std::normal_distribution<double> nw(0.0, 1.5);
  std::normal_distribution<double> nb(0.0, 1.0);
  ModelParams p;
  const Eigen::Index D = fmap.output_dim();
  if (!fmap.frozen) {
    for (auto& layer : fmap.params) {
      layer.weights = Matrix::NullaryExpr(layer.weights.rows(), layer.weights.cols(),
                                          [&] { return nw(rng); });
      layer.bias = Vector::NullaryExpr(layer.bias.size(), [&] { return nb(rng); });
    }
  }
  p.fmap = std::move(fmap);
  p.rho = urho(rng);
  p.k1 = KernelParams(u11(rng), Vector::NullaryExpr(D, [&] { return u11(rng); }));
  p.k2 = KernelParams(u11(rng), Vector::NullaryExpr(D, [&] { return u11(rng); }));
  p.log_noise1 = unoise(rng);
  p.log_noise2 = unoise(rng);
  return p;
}

/// Relative error with an absolute floor: differences below `floor` pass.
inline double relative_error(double a, double b, double floor = 1e-7) {
  const double diff = std::abs(a - b);
  if (diff <= floor) return 0.0;
  return diff / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace dmfgp::testing
