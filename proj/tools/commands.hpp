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
#include <filesystem>
#include <iosfwd>
#include <string>

#include "dmfgp/benchmarks.hpp"
#include "dmfgp/trainer.hpp"

namespace dmfgp::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kIoError = 2,
  kNumericalError = 3,
};

/// Test file written next to a generated dataset: data.csv -> data_test.csv.
std::filesystem::path default_test_path(const std::filesystem::path& data_path);

struct GenerateOptions {
  BenchmarkSpec spec;
  std::filesystem::path out;
  /// Defaults to default_test_path(out).
  std::filesystem::path test_out;
};

struct TrainOptions {
  std::filesystem::path data;
  std::string arch = "3-2";
  /// "none" trains the deep model, "ar1" the identity-map baseline.
  std::string baseline = "none";
  TrainConfig config;
  std::filesystem::path out;
  /// Human-readable report; empty means <out>.report.txt.
  std::filesystem::path report;
};

struct PredictOptions {
  std::filesystem::path model;
  std::filesystem::path queries;
  /// Evenly spaced queries over the training input range when > 0.
  int grid = 0;
  std::filesystem::path out;
};

struct EvaluateOptions {
  std::filesystem::path model;
  std::filesystem::path test;
  std::filesystem::path out;
};

// Each command reports progress on `log` and throws IoError, NumericalError
// or std::invalid_argument on failure; exit_code_for() maps those.
void cmd_generate(const GenerateOptions& opts, std::ostream& log);
void cmd_train(const TrainOptions& opts, std::ostream& log);
void cmd_predict(const PredictOptions& opts, std::ostream& log);
void cmd_evaluate(const EvaluateOptions& opts, std::ostream& log);

/// Full command-line entry point; used by main() and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dmfgp::cli
