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

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "dmfgp/mfgp.hpp"
#include "dmfgp/trainer.hpp"

namespace dmfgp {

/// Unreadable or malformed input file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dataset CSV: header `fidelity,x0,...,x{D-1},y`, one row per observation,
/// fidelity 1 (low) or 2 (high), values printed with 17 significant digits.
void write_dataset(std::ostream& out, const Dataset& data);
void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(std::istream& in, const std::string& source = "<stream>");
Dataset read_dataset(const std::filesystem::path& path);

/// Query CSV: every column named x<d> is an input; other columns are
/// ignored, so dataset files are valid query files.
Matrix read_queries(const std::filesystem::path& path);

/// Shortest text that parses back to the same double (17 significant digits).
std::string format_double(double v);

/// Everything needed to rebuild a FittedModel plus training metadata.
struct ModelFile {
  ModelParams params;
  Standardizer standardizer;
  double jitter = kDefaultJitter;
  Dataset data;
  nlohmann::json training = nlohmann::json::object();
};

nlohmann::json to_json(const ModelFile& model);
ModelFile model_from_json(const nlohmann::json& doc);

void write_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile read_model(const std::filesystem::path& path);

/// Training metadata block for the model file.
nlohmann::json training_metadata(const TrainReport& report,
                                 const TrainConfig& config,
                                 const std::string& baseline);

}  // namespace dmfgp
