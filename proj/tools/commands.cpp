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

#include "commands.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dmfgp/io.hpp"

namespace dmfgp::cli {

namespace fs = std::filesystem;

namespace {

void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) {
    throw IoError(std::string(what) + " '" + path.string() + "' does not exist");
  }
}

std::ofstream open_for_writing(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory '" + path.parent_path().string() +
                    "': " + ec.message());
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

FittedModel load_fitted(const fs::path& path) {
  require_file(path, "model file");
  ModelFile file = read_model(path);
  return FittedModel(std::move(file.params), std::move(file.data),
                     file.standardizer, file.jitter);
}

std::string restart_table(const TrainReport& report) {
  std::ostringstream s;
  s << "restart  initial_nll            final_nll              iterations  converged\n";
  for (const auto& r : report.per_restart) {
    s << std::setw(7) << r.restart_index << "  ";
    if (r.failed) {
      s << "failed (initial covariance not positive definite)\n";
      continue;
    }
    s << std::left << std::setw(22) << format_double(r.initial_nll) << " "
      << std::setw(22) << format_double(r.final_nll) << " " << std::right
      << std::setw(10) << r.iterations << "  " << (r.converged ? "yes" : "no")
      << '\n';
  }
  return s.str();
}

}  // namespace

fs::path default_test_path(const fs::path& data_path) {
  fs::path test = data_path;
  test.replace_filename(data_path.stem().string() + "_test" +
                        data_path.extension().string());
  return test;
}

void cmd_generate(const GenerateOptions& opts, std::ostream& log) {
  const BenchmarkData bench = generate(opts.spec);
  write_dataset(opts.out, bench.train);

  Dataset test;
  test.x1 = Matrix(0, bench.test_x.cols());
  test.f1 = Vector(0);
  test.x2 = bench.test_x;
  test.f2 = bench.test_y;
  const fs::path test_out =
      opts.test_out.empty() ? default_test_path(opts.out) : opts.test_out;
  write_dataset(test_out, test);

  log << "wrote " << opts.out.string() << ": " << bench.train.n1()
      << " low-fidelity + " << bench.train.n2() << " high-fidelity rows\n"
      << "wrote " << test_out.string() << ": " << test.n2()
      << " test rows\n";
}

void cmd_train(const TrainOptions& opts, std::ostream& log) {
  require_file(opts.data, "dataset");
  const Dataset data = read_dataset(opts.data);
  if (auto warning = scarcity_warning(data)) log << "warning: " << *warning << '\n';

  TrainConfig config = opts.config;
  if (opts.baseline == "ar1") {
    config.freeze_feature_map = true;
  } else if (opts.baseline != "none") {
    throw std::invalid_argument("unknown baseline '" + opts.baseline + "'");
  }
  const Architecture arch = parse_architecture(opts.arch, data.input_dim());

  TrainReport report;
  const FittedModel model = fit(data, arch, config, &report);

  ModelFile file{model.params(), model.standardizer(), model.jitter(),
                 model.data(), training_metadata(report, config, opts.baseline)};
  write_model(opts.out, file);

  std::ostringstream text;
  text << "model: "
       << (model.params().fmap.frozen ? std::string("identity (AR(1) co-kriging)")
                                      : "feature map " + opts.arch)
       << '\n'
       << "data: " << data.n1() << " low-fidelity, " << data.n2()
       << " high-fidelity points\n"
       << restart_table(report) << "best restart: " << report.best_restart
       << "\nbest nll: " << format_double(report.best_nll) << '\n';

  const fs::path report_path =
      opts.report.empty() ? fs::path(opts.out.string() + ".report.txt")
                          : opts.report;
  std::ofstream out = open_for_writing(report_path);
  out << text.str();
  finish(out, report_path);

  log << text.str() << "wrote " << opts.out.string() << '\n';
}

void cmd_predict(const PredictOptions& opts, std::ostream& log) {
  const FittedModel model = load_fitted(opts.model);
  const Eigen::Index D = model.data().input_dim();

  Matrix X;
  if (opts.grid > 0) {
    if (D != 1) {
      throw std::invalid_argument("--grid needs a one-dimensional model, got " +
                                  std::to_string(D) + " inputs");
    }
    const Matrix all = model.data().inputs();
    X = Vector::LinSpaced(opts.grid, all.minCoeff(), all.maxCoeff());
  } else {
    require_file(opts.queries, "query file");
    X = read_queries(opts.queries);
    if (X.cols() != D) {
      throw std::invalid_argument("queries have " + std::to_string(X.cols()) +
                                  " input columns, model expects " +
                                  std::to_string(D));
    }
  }

  const PosteriorPrediction pred = model.predict(X);
  const Matrix H = model.features(X);

  std::ofstream out = open_for_writing(opts.out);
  for (Eigen::Index d = 0; d < D; ++d) out << 'x' << d << ',';
  out << "mean,std";
  for (Eigen::Index d = 0; d < H.cols(); ++d) out << ",h" << d;
  out << '\n';
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index d = 0; d < D; ++d) out << format_double(X(i, d)) << ',';
    out << format_double(pred.mean(i)) << ','
        << format_double(std::sqrt(pred.variance(i)));
    for (Eigen::Index d = 0; d < H.cols(); ++d) {
      out << ',' << format_double(H(i, d));
    }
    out << '\n';
  }
  finish(out, opts.out);
  log << "wrote " << X.rows() << " predictions to " << opts.out.string() << '\n';
}

void cmd_evaluate(const EvaluateOptions& opts, std::ostream& log) {
  const FittedModel model = load_fitted(opts.model);
  require_file(opts.test, "test file");
  const Dataset test = read_dataset(opts.test);
  if (test.n2() == 0) {
    throw IoError("test file '" + opts.test.string() +
                  "' has no high-fidelity rows");
  }
  if (test.input_dim() != model.data().input_dim()) {
    throw std::invalid_argument("test inputs have " +
                                std::to_string(test.input_dim()) +
                                " columns, model expects " +
                                std::to_string(model.data().input_dim()));
  }
  const Metrics m = metrics(model.predict(test.x2), test.f2);
  const nlohmann::json doc = {{"rmse", m.rmse},
                              {"coverage", m.coverage},
                              {"mnlpd", m.mnlpd},
                              {"n", test.n2()}};
  std::ofstream out = open_for_writing(opts.out);
  out << doc.dump(2) << '\n';
  finish(out, opts.out);
  log << "rmse " << format_double(m.rmse) << ", coverage "
      << format_double(m.coverage) << ", mnlpd " << format_double(m.mnlpd)
      << '\n';
}

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Deep multi-fidelity Gaussian process regression"};
  app.require_subcommand(1);

  GenerateOptions gen;
  std::string kind = "step";
  std::uint64_t gen_seed = 0;
  std::optional<int> n1, n2;
  std::optional<double> noise_sd, rho_true;
  auto* generate_cmd = app.add_subcommand("generate", "Generate a benchmark dataset");
  generate_cmd->add_option("--kind", kind, "step | forrester | sample")
      ->check(CLI::IsMember({"step", "forrester", "sample"}));
  generate_cmd->add_option("--seed", gen_seed, "Random seed");
  generate_cmd->add_option("--out", gen.out, "Dataset CSV")->required();
  generate_cmd->add_option("--test-out", gen.test_out,
                           "Test grid CSV (default: <out>_test.csv)");
  generate_cmd->add_option("--n1", n1, "Low-fidelity sample size");
  generate_cmd->add_option("--n2", n2, "High-fidelity sample size");
  generate_cmd->add_option("--noise-sd", noise_sd, "Observation noise (step)");
  generate_cmd->add_option("--rho", rho_true, "Coupling of the prior draw (sample)");

  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Fit a model by maximum likelihood");
  train_cmd->add_option("--data", train_opts.data, "Dataset CSV")->required();
  train_cmd->add_option("--arch", train_opts.arch, "Hidden-sigmoid widths, e.g. 3-2");
  train_cmd->add_option("--restarts", train_opts.config.restarts, "Random restarts");
  train_cmd->add_option("--seed", train_opts.config.seed, "Random seed");
  train_cmd->add_option("--baseline", train_opts.baseline, "none | ar1")
      ->check(CLI::IsMember({"none", "ar1"}));
  train_cmd->add_option("--max-iter", train_opts.config.max_iterations,
                        "Optimizer iterations per restart");
  train_cmd->add_option("--tol", train_opts.config.gradient_tolerance,
                        "Gradient max-norm tolerance");
  train_cmd->add_option("--noise", train_opts.config.initial_noise_variance,
                        "Initial noise variance (standardized units)");
  train_cmd->add_flag("--freeze-noise", train_opts.config.freeze_noise,
                      "Keep the noise variances at their initial value");
  train_cmd->add_option("--threads", train_opts.config.threads,
                        "Concurrent restarts");
  train_cmd->add_option("--report", train_opts.report,
                        "Report file (default: <out>.report.txt)");
  train_cmd->add_option("--out", train_opts.out, "Model JSON")->required();

  PredictOptions pred;
  auto* predict_cmd = app.add_subcommand("predict", "Posterior of the high-fidelity output");
  predict_cmd->add_option("--model", pred.model, "Model JSON")->required();
  auto* queries = predict_cmd->add_option("--queries", pred.queries, "Query CSV");
  auto* grid = predict_cmd->add_option("--grid", pred.grid,
                                       "Evenly spaced queries over the data range")
                   ->check(CLI::PositiveNumber);
  queries->excludes(grid);
  predict_cmd->add_option("--out", pred.out, "Predictions CSV")->required();

  EvaluateOptions eval;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a model on a test set");
  evaluate_cmd->add_option("--model", eval.model, "Model JSON")->required();
  evaluate_cmd->add_option("--test", eval.test, "Test CSV")->required();
  evaluate_cmd->add_option("--out", eval.out, "Metrics JSON")->required();

  try {
    app.parse(argc, argv);
    if (predict_cmd->parsed() && queries->count() == 0 && grid->count() == 0) {
      throw CLI::RequiredError("predict needs --queries or --grid");
    }
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (generate_cmd->parsed()) {
      gen.spec = BenchmarkSpec::defaults(benchmark_kind_from_string(kind), gen_seed);
      if (n1) gen.spec.n1 = *n1;
      if (n2) gen.spec.n2 = *n2;
      if (noise_sd) gen.spec.noise_sd = *noise_sd;
      if (rho_true) gen.spec.rho_true = *rho_true;
      cmd_generate(gen, out);
    } else if (train_cmd->parsed()) {
      cmd_train(train_opts, out);
    } else if (predict_cmd->parsed()) {
      cmd_predict(pred, out);
    } else if (evaluate_cmd->parsed()) {
      cmd_evaluate(eval, out);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kOk;
}

}  // namespace dmfgp::cli
