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

#include "dmfgp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <thread>

#include <Eigen/Cholesky>

namespace dmfgp {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 40;
constexpr double kMaxStep = 2.0;

using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

LongMatrix features_long(const FeatureMap& fmap, const Matrix& X) {
  LongMatrix A = X.cast<long double>();
  for (std::size_t l = 0; l < fmap.arch.size(); ++l) {
    const LayerParams& layer = fmap.params[l];
    LongMatrix Z = A * layer.weights.cast<long double>().transpose();
    Z.rowwise() += layer.bias.cast<long double>().transpose();
    if (fmap.arch[l].transfer == Transfer::kSigmoid) {
      Z = Z.unaryExpr([](long double z) { return 1.0L / (1.0L + std::exp(-z)); });
    }
    A = std::move(Z);
  }
  return A;
}

LongMatrix gram_long(const KernelParams& k, const LongMatrix& U, const LongMatrix& V) {
  const LongVector inv_ell =
      (-k.log_lengthscales.cast<long double>().array()).exp().matrix();
  const long double sf2 = std::exp(static_cast<long double>(k.log_signal_variance));
  LongMatrix G(U.rows(), V.rows());
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    for (Eigen::Index j = 0; j < V.rows(); ++j) {
      const long double r2 =
          ((U.row(i) - V.row(j)).transpose().cwiseProduct(inv_ell)).squaredNorm();
      G(i, j) = sf2 * std::exp(-0.5L * r2);
    }
  }
  return G;
}

// nll in extended precision with a fixed relative jitter. Finite differences
// of the double-precision nll lose most of their digits to roundoff once K
// is moderately ill-conditioned.
long double nll_long(const ModelParams& p, const Dataset& data,
                     double relative_jitter) {
  const LongMatrix H1 = features_long(p.fmap, data.x1);
  const LongMatrix H2 = features_long(p.fmap, data.x2);
  const Eigen::Index n1 = data.n1();
  const Eigen::Index n = data.size();
  const long double rho = p.rho;
  LongMatrix K(n, n);
  const LongMatrix K12 = rho * gram_long(p.k1, H1, H2);
  K.topLeftCorner(n1, n1) = gram_long(p.k1, H1, H1);
  K.topRightCorner(n1, n - n1) = K12;
  K.bottomLeftCorner(n - n1, n1) = K12.transpose();
  K.bottomRightCorner(n - n1, n - n1) =
      rho * rho * gram_long(p.k1, H2, H2) + gram_long(p.k2, H2, H2);
  K.diagonal().head(n1).array() += static_cast<long double>(p.noise1());
  K.diagonal().tail(n - n1).array() += static_cast<long double>(p.noise2());
  K.diagonal().array() += relative_jitter * K.diagonal().mean();
  const Eigen::LLT<LongMatrix> llt(K);
  if (llt.info() != Eigen::Success) {
    return std::numeric_limits<long double>::quiet_NaN();
  }
  const LongVector f = data.targets().cast<long double>();
  const LongVector alpha = llt.solve(f);
  const long double logdet =
      2.0L * llt.matrixLLT().diagonal().array().log().sum();
  return 0.5L * f.dot(alpha) + 0.5L * logdet +
         0.5L * static_cast<long double>(n) *
             std::log(2.0L * 3.141592653589793238462643383279502884L);
}

// Indices of the flat parameter vector that the optimizer may move.
std::vector<Eigen::Index> free_indices(const ModelParams& params,
                                       const TrainConfig& config) {
  const Eigen::Index offset = feature_map_offset(params);
  const Eigen::Index total = offset + parameter_count(params.fmap.params);
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < total; ++i) {
    const bool noise = i == offset - 2 || i == offset - 1;
    const bool fmap = i >= offset;
    if (noise && config.freeze_noise) continue;
    if (fmap && (config.freeze_feature_map || params.fmap.frozen)) continue;
    idx.push_back(i);
  }
  return idx;
}

class Objective {
 public:
  Objective(const Dataset& data, const ModelParams& shape, double jitter,
            std::vector<Eigen::Index> free)
      : data_(data), shape_(shape), jitter_(jitter), free_(std::move(free)),
        full_(to_vector(shape)) {}

  Vector initial() const { return gather(full_); }

  ModelParams params_at(const Vector& x) const {
    return from_vector(shape_, scatter(x));
  }

  // +inf for points where the covariance cannot be factored.
  double value(const Vector& x) const {
    try {
      const double v = nll(params_at(x), data_, jitter_);
      return std::isfinite(v) ? v : kInf;
    } catch (const NumericalError&) {
      return kInf;
    }
  }

  bool value_and_gradient(const Vector& x, double& f, Vector& g) const {
    try {
      auto [v, grad] = nll_and_gradient(params_at(x), data_, jitter_);
      f = v;
      g = gather(to_vector(grad));
      return std::isfinite(f) && g.allFinite();
    } catch (const NumericalError&) {
      return false;
    }
  }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  Vector gather(const Vector& full) const {
    Vector x(static_cast<Eigen::Index>(free_.size()));
    for (std::size_t k = 0; k < free_.size(); ++k) {
      x(static_cast<Eigen::Index>(k)) = full(free_[k]);
    }
    return x;
  }

  Vector scatter(const Vector& x) const {
    Vector full = full_;
    for (std::size_t k = 0; k < free_.size(); ++k) {
      full(free_[k]) = x(static_cast<Eigen::Index>(k));
    }
    return full;
  }

  const Dataset& data_;
  const ModelParams& shape_;
  double jitter_;
  std::vector<Eigen::Index> free_;
  Vector full_;
};

}  // namespace

void validate(const TrainConfig& config) {
  if (config.restarts < 1) {
    throw std::invalid_argument("restarts must be at least 1");
  }
  if (config.max_iterations < 0) {
    throw std::invalid_argument("max_iterations must be non-negative");
  }
  if (!(config.gradient_tolerance > 0.0)) {
    throw std::invalid_argument("gradient_tolerance must be positive");
  }
  if (!(config.initial_noise_variance > 0.0)) {
    throw std::invalid_argument("initial_noise_variance must be positive");
  }
  if (config.jitter < 0.0) {
    throw std::invalid_argument("jitter must be non-negative");
  }
  if (config.threads < 1) {
    throw std::invalid_argument("threads must be at least 1");
  }
}

ModelParams init_params(const TrainConfig& config, const Architecture& arch,
                        int restart_index) {
  validate(config);
  if (arch.empty()) {
    throw std::invalid_argument("architecture has no layers");
  }
  ModelParams p;
  if (config.freeze_feature_map) {
    p.fmap = identity_map(arch.front().input_width);
  } else {
    p.fmap.arch = arch;
    p.fmap.params = zero_params(arch);
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(restart_index)};
    std::mt19937_64 rng(seq);
    for (std::size_t l = 0; l < arch.size(); ++l) {
      std::normal_distribution<double> normal(
          0.0, std::sqrt(1.0 / static_cast<double>(arch[l].input_width)));
      Matrix& W = p.fmap.params[l].weights;
      for (Eigen::Index r = 0; r < W.rows(); ++r) {
        for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = normal(rng);
      }
    }
  }
  const Eigen::Index D = p.fmap.output_dim();
  p.rho = 1.0;
  p.k1 = KernelParams::unit(D);
  p.k2 = KernelParams::unit(D);
  p.log_noise1 = std::log(config.initial_noise_variance);
  p.log_noise2 = std::log(config.initial_noise_variance);
  return p;
}

void scale_to_data(ModelParams& params, const Dataset& data) {
  const Matrix X = data.inputs();
  if (!params.fmap.frozen) {
    // Centre and scale the first-layer pre-activations on the inputs.
    const Eigen::RowVectorXd mean = X.colwise().mean();
    const Eigen::ArrayXd sd =
        (X.rowwise() - mean).array().square().colwise().mean().sqrt().transpose();
    LayerParams& first = params.fmap.params.front();
    for (Eigen::Index c = 0; c < first.weights.cols(); ++c) {
      if (sd(c) > 0.0) first.weights.col(c) /= sd(c);
    }
    first.bias = -first.weights * mean.transpose();
  }
  const Matrix H = forward(params.fmap.arch, params.fmap.params, X);
  const Eigen::RowVectorXd hmean = H.colwise().mean();
  const Eigen::ArrayXd hsd =
      (H.rowwise() - hmean).array().square().colwise().mean().sqrt().transpose();
  const Vector log_ell = hsd.max(1e-6).log().matrix();
  params.k1.log_lengthscales = log_ell;
  params.k2.log_lengthscales = log_ell;
}

RestartResult optimize(const Dataset& data, const ModelParams& initial,
                       const TrainConfig& config) {
  validate(config);
  RestartResult result;
  result.seed = config.seed;
  result.params = initial;

  const Objective objective(data, initial, config.jitter,
                            free_indices(initial, config));
  Vector x = objective.initial();
  double f = 0.0;
  Vector g;
  if (!objective.value_and_gradient(x, f, g)) {
    result.failed = true;
    result.initial_nll = result.final_nll =
        std::numeric_limits<double>::infinity();
    return result;
  }
  result.initial_nll = f;
  result.trace.push_back(f);

  const Eigen::Index n = x.size();
  Matrix Hinv = Matrix::Identity(n, n);
  bool fresh = true;

  int iter = 0;
  while (true) {
    if (n == 0 || g.lpNorm<Eigen::Infinity>() < config.gradient_tolerance) {
      result.converged = true;
      break;
    }
    if (iter >= config.max_iterations) break;

    Vector p = -Hinv * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      Hinv.setIdentity();
      fresh = true;
      p = -g;
      slope = g.dot(p);
    }
    const double pmax = p.lpNorm<Eigen::Infinity>();
    if (pmax > kMaxStep) {
      p *= kMaxStep / pmax;
      slope *= kMaxStep / pmax;
    }

    // Backtracking: only steps with sufficient decrease are accepted.
    double t = 1.0;
    bool accepted = false;
    Vector x_new;
    double f_new = 0.0;
    for (int k = 0; k < kMaxBacktracks; ++k) {
      x_new = x + t * p;
      f_new = objective.value(x_new);
      if (std::isfinite(f_new) && f_new <= f + kArmijo * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    Vector g_new;
    if (accepted) {
      double f_check = 0.0;
      accepted = objective.value_and_gradient(x_new, f_check, g_new) &&
                 f_check <= f;
      f_new = f_check;
    }
    if (!accepted) {
      if (fresh) break;
      Hinv.setIdentity();
      fresh = true;
      continue;
    }

    const Vector s = x_new - x;
    const Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) {
        Hinv *= sy / y.squaredNorm();
      }
      const double r = 1.0 / sy;
      const Vector Hy = Hinv * y;
      Hinv += (r * r * (sy + y.dot(Hy))) * (s * s.transpose()) -
              r * (Hy * s.transpose() + s * Hy.transpose());
      fresh = false;
    }

    x = std::move(x_new);
    f = f_new;
    g = std::move(g_new);
    result.trace.push_back(f);
    ++iter;
  }

  result.iterations = iter;
  result.final_nll = f;
  result.params = objective.params_at(x);
  return result;
}

TrainReport train(const Dataset& data, const Architecture& arch,
                  const TrainConfig& config) {
  validate(config);
  validate(data);
  if (arch.empty() || arch.front().input_width != data.input_dim()) {
    throw std::invalid_argument(
        "architecture input width does not match the dataset dimension");
  }

  TrainReport report;
  report.standardizer =
      config.standardize ? Standardizer::fit(data) : Standardizer{};
  const Dataset scaled = report.standardizer.apply(data);

  report.per_restart.resize(static_cast<std::size_t>(config.restarts));
  auto run = [&](int r) {
    ModelParams init = init_params(config, arch, r);
    if (config.data_scaled_init) scale_to_data(init, scaled);
    RestartResult res = optimize(scaled, init, config);
    res.restart_index = r;
    report.per_restart[static_cast<std::size_t>(r)] = std::move(res);
  };

  if (config.threads > 1) {
    std::vector<std::thread> workers;
    const int nthreads = std::min(config.threads, config.restarts);
    for (int w = 0; w < nthreads; ++w) {
      workers.emplace_back([&, w] {
        for (int r = w; r < config.restarts; r += nthreads) run(r);
      });
    }
    for (auto& t : workers) t.join();
  } else {
    for (int r = 0; r < config.restarts; ++r) run(r);
  }

  int best = -1;
  for (int r = 0; r < config.restarts; ++r) {
    const RestartResult& res = report.per_restart[static_cast<std::size_t>(r)];
    if (res.failed) continue;
    if (best < 0 ||
        res.final_nll <
            report.per_restart[static_cast<std::size_t>(best)].final_nll) {
      best = r;
    }
  }
  if (best < 0) {
    throw TrainingFailedError(
        "all " + std::to_string(config.restarts) +
        " restarts failed to factor the initial covariance");
  }
  const RestartResult& winner = report.per_restart[static_cast<std::size_t>(best)];
  report.best_restart = best;
  report.best_params = winner.params;
  report.best_nll = winner.final_nll;
  return report;
}

FittedModel fit(const Dataset& data, const Architecture& arch,
                const TrainConfig& config, TrainReport* report) {
  TrainReport local = train(data, arch, config);
  FittedModel model(local.best_params, data, local.standardizer, config.jitter);
  if (report != nullptr) *report = std::move(local);
  return model;
}

GradientCheckReport gradient_check(const ModelParams& params,
                                   const Dataset& data, double step,
                                   double abs_floor, double jitter) {
  GradientCheckReport rep;
  const Vector x = to_vector(params);
  rep.analytic = to_vector(nll_gradient(params, data, jitter));
  // Differences are taken at the jitter level the analytic pass settled on.
  const double rel = assemble(params, data, jitter).relative_jitter;
  rep.numeric.resize(x.size());
  rep.relative_error.resize(x.size());
  const Eigen::Index offset = feature_map_offset(params);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i >= offset && params.fmap.frozen) {
      rep.numeric(i) = 0.0;
      rep.relative_error(i) = 0.0;
      continue;
    }
    Vector xp = x;
    Vector xm = x;
    xp(i) += step;
    xm(i) -= step;
    const long double fp = nll_long(from_vector(params, xp), data, rel);
    const long double fm = nll_long(from_vector(params, xm), data, rel);
    rep.numeric(i) =
        static_cast<double>((fp - fm) / static_cast<long double>(xp(i) - xm(i)));
    const double a = rep.analytic(i);
    const double b = rep.numeric(i);
    const double diff = std::abs(a - b);
    const double denom = std::max(std::abs(a), std::abs(b));
    rep.relative_error(i) =
        diff <= abs_floor ? 0.0 : diff / std::max(denom, abs_floor);
  }
  rep.max_relative_error =
      x.size() > 0 ? rep.relative_error.maxCoeff() : 0.0;
  return rep;
}

GradientCheckReport gradient_check(const Dataset& data, const Architecture& arch,
                                   std::uint64_t seed) {
  TrainConfig config;
  config.seed = seed;
  return gradient_check(init_params(config, arch, 0), data);
}

}  // namespace dmfgp
