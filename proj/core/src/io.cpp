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

#include "dmfgp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace dmfgp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    out.push_back(line.substr(pos, next == std::string_view::npos
                                        ? std::string_view::npos
                                        : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line,
                             const std::string& what) {
  throw IoError(source + ":" + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view token, const std::string& source,
                    std::size_t line) {
  token = trim(token);
  double v = 0.0;
  const auto [end, ec] =
      std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ec != std::errc() ||
      end != token.data() + token.size() || !std::isfinite(v)) {
    parse_fail(source, line, "invalid number '" + std::string(token) + "'");
  }
  return v;
}

// Column index of x<d> for each d, or -1 when the header lacks it.
std::vector<std::size_t> input_columns(const std::vector<std::string_view>& header,
                                       const std::string& source) {
  std::vector<std::pair<long, std::size_t>> found;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string_view name = trim(header[c]);
    if (name.size() < 2 || name.front() != 'x') continue;
    long d = 0;
    const auto [end, ec] =
        std::from_chars(name.data() + 1, name.data() + name.size(), d);
    if (ec != std::errc() || end != name.data() + name.size()) continue;
    found.emplace_back(d, c);
  }
  std::sort(found.begin(), found.end());
  std::vector<std::size_t> cols;
  for (std::size_t k = 0; k < found.size(); ++k) {
    if (found[k].first != static_cast<long>(k)) {
      parse_fail(source, 1, "input columns must be x0..x{D-1}");
    }
    cols.push_back(found[k].second);
  }
  if (cols.empty()) parse_fail(source, 1, "header has no x0 column");
  return cols;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory '" +
                    path.parent_path().string() + "': " + ec.message());
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows, Eigen::Index cols) {
  Matrix M(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != static_cast<std::size_t>(cols)) {
      throw IoError("ragged matrix in model file");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      M(static_cast<Eigen::Index>(r), c) =
          rows[r][static_cast<std::size_t>(c)].get<double>();
    }
  }
  return M;
}

json vector_to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(),
                                  static_cast<Eigen::Index>(values.size()));
}

json kernel_to_json(const KernelParams& k) {
  return {{"log_signal_variance", k.log_signal_variance},
          {"log_lengthscales", vector_to_json(k.log_lengthscales)}};
}

KernelParams kernel_from_json(const json& j) {
  return KernelParams(j.at("log_signal_variance").get<double>(),
                      vector_from_json(j.at("log_lengthscales")));
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

void write_dataset(std::ostream& out, const Dataset& data) {
  validate(data);
  const Eigen::Index D = data.input_dim();
  out << "fidelity";
  for (Eigen::Index d = 0; d < D; ++d) out << ",x" << d;
  out << ",y\n";
  const auto rows = [&](const Matrix& X, const Vector& f, int fidelity) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      out << fidelity;
      for (Eigen::Index d = 0; d < D; ++d) out << ',' << format_double(X(i, d));
      out << ',' << format_double(f(i)) << '\n';
    }
  };
  rows(data.x1, data.f1, 1);
  rows(data.x2, data.f2, 2);
}

void write_dataset(const fs::path& path, const Dataset& data) {
  std::ofstream out = open_output(path);
  write_dataset(out, data);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Dataset read_dataset(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) parse_fail(source, 1, "missing header");
  const auto header = split(line, ',');
  if (header.size() < 3 || trim(header.front()) != "fidelity" ||
      trim(header.back()) != "y") {
    parse_fail(source, 1, "expected header 'fidelity,x0,...,y'");
  }
  const auto cols = input_columns(header, source);
  const std::size_t D = cols.size();
  if (D + 2 != header.size()) {
    parse_fail(source, 1, "unexpected columns in dataset header");
  }

  std::vector<double> x1, f1, x2, f2;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != header.size()) {
      parse_fail(source, lineno,
                 "expected " + std::to_string(header.size()) + " fields, got " +
                     std::to_string(fields.size()));
    }
    const std::string_view fid = trim(fields.front());
    std::vector<double>* xs = nullptr;
    std::vector<double>* fs_ = nullptr;
    if (fid == "1") {
      xs = &x1;
      fs_ = &f1;
    } else if (fid == "2") {
      xs = &x2;
      fs_ = &f2;
    } else {
      parse_fail(source, lineno, "fidelity must be 1 or 2");
    }
    for (std::size_t d = 0; d < D; ++d) {
      xs->push_back(parse_double(fields[cols[d]], source, lineno));
    }
    fs_->push_back(parse_double(fields.back(), source, lineno));
  }

  const auto to_matrix = [D](const std::vector<double>& flat) {
    const Eigen::Index n = static_cast<Eigen::Index>(flat.size() / D);
    return Matrix(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                 Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), n, static_cast<Eigen::Index>(D)));
  };
  Dataset data;
  data.x1 = to_matrix(x1);
  data.x2 = to_matrix(x2);
  data.f1 = Eigen::Map<const Vector>(f1.data(), static_cast<Eigen::Index>(f1.size()));
  data.f2 = Eigen::Map<const Vector>(f2.data(), static_cast<Eigen::Index>(f2.size()));
  if (data.size() == 0) parse_fail(source, lineno, "no data rows");
  return data;
}

Dataset read_dataset(const fs::path& path) {
  std::ifstream in = open_input(path);
  return read_dataset(in, path.string());
}

Matrix read_queries(const fs::path& path) {
  std::ifstream in = open_input(path);
  const std::string source = path.string();
  std::string line;
  if (!std::getline(in, line)) parse_fail(source, 1, "missing header");
  const auto header = split(line, ',');
  const auto cols = input_columns(header, source);

  std::vector<double> flat;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != header.size()) {
      parse_fail(source, lineno,
                 "expected " + std::to_string(header.size()) + " fields, got " +
                     std::to_string(fields.size()));
    }
    for (std::size_t c : cols) flat.push_back(parse_double(fields[c], source, lineno));
  }
  const Eigen::Index D = static_cast<Eigen::Index>(cols.size());
  const Eigen::Index n = static_cast<Eigen::Index>(flat.size()) / D;
  return Matrix(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                               Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), n, D));
}

json to_json(const ModelFile& model) {
  const ModelParams& p = model.params;
  json arch = json::array();
  for (const auto& layer : p.fmap.arch) {
    arch.push_back({{"input_width", layer.input_width},
                    {"output_width", layer.output_width},
                    {"transfer", std::string(to_string(layer.transfer))}});
  }
  json layers = json::array();
  for (const auto& layer : p.fmap.params) {
    json weights = json::array();
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        weights.push_back(layer.weights(r, c));
      }
    }
    layers.push_back({{"weights", weights}, {"bias", vector_to_json(layer.bias)}});
  }
  const Eigen::Index D = model.data.input_dim();
  return {
      {"format", "dmfgp-model"},
      {"version", 1},
      {"input_dim", D},
      {"arch", arch},
      {"arch_name", p.fmap.frozen ? "identity" : format_architecture(p.fmap.arch)},
      {"feature_map_frozen", p.fmap.frozen},
      {"feature_map", layers},
      {"rho", p.rho},
      {"kernel_low", kernel_to_json(p.k1)},
      {"kernel_discrepancy", kernel_to_json(p.k2)},
      {"log_noise_low", p.log_noise1},
      {"log_noise_high", p.log_noise2},
      {"target_mean", model.standardizer.mean},
      {"target_scale", model.standardizer.scale},
      {"jitter", model.jitter},
      {"training", model.training},
      {"data",
       {{"x1", matrix_to_json(model.data.x1)},
        {"f1", vector_to_json(model.data.f1)},
        {"x2", matrix_to_json(model.data.x2)},
        {"f2", vector_to_json(model.data.f2)}}},
  };
}

ModelFile model_from_json(const json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "dmfgp-model") {
      throw IoError("not a dmfgp model file");
    }
    ModelFile model;
    ModelParams& p = model.params;
    for (const auto& layer : doc.at("arch")) {
      p.fmap.arch.push_back(
          {layer.at("input_width").get<Eigen::Index>(),
           layer.at("output_width").get<Eigen::Index>(),
           transfer_from_string(layer.at("transfer").get<std::string>())});
    }
    p.fmap.params = zero_params(p.fmap.arch);
    const json& layers = doc.at("feature_map");
    if (layers.size() != p.fmap.arch.size()) {
      throw IoError("feature_map does not match arch");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      Matrix& W = p.fmap.params[l].weights;
      const auto weights = layers[l].at("weights").get<std::vector<double>>();
      if (weights.size() != static_cast<std::size_t>(W.size())) {
        throw IoError("layer " + std::to_string(l) + " weight count mismatch");
      }
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < W.rows(); ++r) {
        for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = weights[k++];
      }
      p.fmap.params[l].bias = vector_from_json(layers[l].at("bias"));
    }
    p.fmap.frozen = doc.at("feature_map_frozen").get<bool>();
    p.rho = doc.at("rho").get<double>();
    p.k1 = kernel_from_json(doc.at("kernel_low"));
    p.k2 = kernel_from_json(doc.at("kernel_discrepancy"));
    p.log_noise1 = doc.at("log_noise_low").get<double>();
    p.log_noise2 = doc.at("log_noise_high").get<double>();
    validate(p);

    model.standardizer.mean = doc.at("target_mean").get<double>();
    model.standardizer.scale = doc.at("target_scale").get<double>();
    model.jitter = doc.at("jitter").get<double>();
    model.training = doc.value("training", json::object());

    const Eigen::Index D = doc.at("input_dim").get<Eigen::Index>();
    const json& data = doc.at("data");
    model.data.x1 = matrix_from_json(data.at("x1"), D);
    model.data.f1 = vector_from_json(data.at("f1"));
    model.data.x2 = matrix_from_json(data.at("x2"), D);
    model.data.f2 = vector_from_json(data.at("f2"));
    validate(model.data);
    return model;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("inconsistent model file: ") + e.what());
  }
}

void write_model(const fs::path& path, const ModelFile& model) {
  std::ofstream out = open_output(path);
  out << to_json(model).dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

ModelFile read_model(const fs::path& path) {
  std::ifstream in = open_input(path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

json training_metadata(const TrainReport& report, const TrainConfig& config,
                       const std::string& baseline) {
  json restarts = json::array();
  for (const auto& r : report.per_restart) {
    restarts.push_back({{"restart", r.restart_index},
                        {"initial_nll", r.failed ? json(nullptr) : json(r.initial_nll)},
                        {"final_nll", r.failed ? json(nullptr) : json(r.final_nll)},
                        {"iterations", r.iterations},
                        {"converged", r.converged},
                        {"failed", r.failed}});
  }
  return {{"seed", config.seed},
          {"restarts", config.restarts},
          {"max_iterations", config.max_iterations},
          {"gradient_tolerance", config.gradient_tolerance},
          {"freeze_noise", config.freeze_noise},
          {"baseline", baseline},
          {"best_restart", report.best_restart},
          {"best_nll", report.best_nll},
          {"per_restart", restarts}};
}

}  // namespace dmfgp
