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

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "dmfgp/io.hpp"

namespace dmfgp::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dmfgp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "dmfgp");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return run(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }

  static int count_lines(const std::string& p) {
    const std::string s = slurp(p);
    return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

const std::vector<std::string> kQuickTrain = {"--restarts", "2", "--max-iter", "40"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

TEST(DefaultTestPath, AppendsSuffix) {
  EXPECT_EQ(default_test_path("runs/step.csv"), fs::path("runs/step_test.csv"));
}

TEST_F(CliTest, GenerateStepWritesExpectedRows) {
  ASSERT_EQ(invoke({"generate", "--kind", "step", "--seed", "3", "--out", path("d.csv")}), kOk);
  EXPECT_EQ(count_lines(path("d.csv")), 51);
  EXPECT_EQ(count_lines(path("d_test.csv")), 201);
  const Dataset d = read_dataset(fs::path(path("d.csv")));
  EXPECT_EQ(d.n1(), 45);
  EXPECT_EQ(d.n2(), 5);
  const BenchmarkData ref = generate(BenchmarkSpec::defaults(BenchmarkKind::kStep, 3));
  EXPECT_TRUE((d.targets().array() == ref.train.targets().array()).all());
}

TEST_F(CliTest, GenerateIsByteReproducible) {
  ASSERT_EQ(invoke({"generate", "--kind", "sample", "--seed", "5", "--out", path("a.csv")}), kOk);
  ASSERT_EQ(invoke({"generate", "--kind", "sample", "--seed", "5", "--out", path("b.csv")}), kOk);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_EQ(slurp(path("a_test.csv")), slurp(path("b_test.csv")));
}

TEST_F(CliTest, PipelineComposesAndReloadsModel) {
  ASSERT_EQ(invoke({"generate", "--kind", "forrester", "--seed", "1", "--out", path("f.csv")}),
            kOk);
  ASSERT_EQ(invoke(with({"train", "--data", path("f.csv"), "--seed", "2", "--out", path("m.json")},
                        kQuickTrain)),
            kOk)
      << err_.str();
  EXPECT_TRUE(fs::exists(path("m.json.report.txt")));
  EXPECT_NE(slurp(path("m.json.report.txt")).find("best nll"), std::string::npos);

  const ModelFile mf = read_model(fs::path(path("m.json")));
  const double best = mf.training.at("best_nll").get<double>();
  const FittedModel model(mf.params, mf.data, mf.standardizer, mf.jitter);
  EXPECT_LT(std::abs(model.nll() - best) / std::abs(best), 1e-10);

  ASSERT_EQ(invoke({"predict", "--model", path("m.json"), "--grid", "200", "--out",
                    path("p.csv")}),
            kOk);
  EXPECT_EQ(count_lines(path("p.csv")), 201);
  const std::string pred = slurp(path("p.csv"));
  EXPECT_EQ(pred.substr(0, pred.find('\n')), "x0,mean,std,h0,h1");

  ASSERT_EQ(invoke({"evaluate", "--model", path("m.json"), "--test", path("f_test.csv"),
                    "--out", path("e.json")}),
            kOk);
  const auto metrics = nlohmann::json::parse(slurp(path("e.json")));
  EXPECT_TRUE(metrics.contains("rmse"));
  EXPECT_TRUE(metrics.contains("coverage"));
  EXPECT_TRUE(metrics.contains("mnlpd"));
  EXPECT_EQ(metrics.at("n"), 200);
}

TEST_F(CliTest, StdColumnNonNegative) {
  ASSERT_EQ(invoke({"generate", "--kind", "step", "--out", path("s.csv")}), kOk);
  ASSERT_EQ(invoke(with({"train", "--data", path("s.csv"), "--out", path("m.json")}, kQuickTrain)),
            kOk);
  ASSERT_EQ(invoke({"predict", "--model", path("m.json"), "--queries", path("s_test.csv"),
                    "--out", path("p.csv")}),
            kOk);
  std::ifstream in(path("p.csv"));
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string x, mean, sd;
    std::getline(ss, x, ',');
    std::getline(ss, mean, ',');
    std::getline(ss, sd, ',');
    EXPECT_GE(std::stod(sd), 0.0);
    ++rows;
  }
  EXPECT_EQ(rows, 200);
}

TEST_F(CliTest, Ar1BaselineRecordsIdentity) {
  ASSERT_EQ(invoke({"generate", "--kind", "step", "--out", path("s.csv")}), kOk);
  ASSERT_EQ(invoke(with({"train", "--data", path("s.csv"), "--baseline", "ar1", "--out",
                         path("ar1.json")},
                        kQuickTrain)),
            kOk);
  const auto doc = nlohmann::json::parse(slurp(path("ar1.json")));
  EXPECT_EQ(doc.at("arch_name"), "identity");
  EXPECT_EQ(doc.at("training").at("baseline"), "ar1");
}

TEST_F(CliTest, TrainingIsByteReproducible) {
  ASSERT_EQ(invoke({"generate", "--kind", "step", "--seed", "4", "--out", path("s.csv")}), kOk);
  for (const char* name : {"a.json", "b.json"}) {
    ASSERT_EQ(invoke(with({"train", "--data", path("s.csv"), "--seed", "9", "--out", path(name)},
                          kQuickTrain)),
              kOk);
  }
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  EXPECT_EQ(slurp(path("a.json.report.txt")), slurp(path("b.json.report.txt")));
}

TEST_F(CliTest, PerfectPredictionFixtureScoresZero) {
  // A noise-free model queried at its own high-fidelity points.
  ASSERT_EQ(invoke({"generate", "--kind", "sample", "--seed", "2", "--out", path("s.csv")}), kOk);
  ASSERT_EQ(invoke(with({"train", "--data", path("s.csv"), "--noise", "1e-8", "--freeze-noise",
                         "--out", path("m.json")},
                        kQuickTrain)),
            kOk);
  const Dataset d = read_dataset(fs::path(path("s.csv")));
  Dataset fixture;
  fixture.x1 = Matrix(0, 1);
  fixture.f1 = Vector(0);
  fixture.x2 = d.x2;
  fixture.f2 = d.f2;
  write_dataset(fs::path(path("fixture.csv")), fixture);
  ASSERT_EQ(invoke({"evaluate", "--model", path("m.json"), "--test", path("fixture.csv"),
                    "--out", path("e.json")}),
            kOk);
  const auto metrics = nlohmann::json::parse(slurp(path("e.json")));
  EXPECT_LT(metrics.at("rmse").get<double>(), 1e-3);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(invoke({}), kUsage);
  EXPECT_EQ(invoke({"bogus"}), kUsage);
  EXPECT_EQ(invoke({"generate", "--kind", "branin", "--out", path("x.csv")}), kUsage);
  EXPECT_EQ(invoke({"train", "--data", path("missing.csv"), "--out", path("m.json")}), kIoError);
  EXPECT_FALSE(err_.str().empty());
  EXPECT_EQ(invoke({"evaluate", "--model", path("missing.json"), "--test", path("t.csv"),
                    "--out", path("e.json")}),
            kIoError);

  std::ofstream(path("bad.csv")) << "fidelity,x0,y\n1,0.1,0.2\n2,oops,1\n";
  EXPECT_EQ(invoke({"train", "--data", path("bad.csv"), "--out", path("m.json")}), kIoError);
  EXPECT_NE(err_.str().find(":3"), std::string::npos) << err_.str();

  ASSERT_EQ(invoke({"generate", "--kind", "step", "--out", path("s.csv")}), kOk);
  EXPECT_EQ(invoke({"predict", "--model", path("s.csv"), "--grid", "5", "--out", path("p.csv")}),
            kIoError);
}

TEST_F(CliTest, PredictNeedsQueriesOrGrid) {
  EXPECT_EQ(invoke({"predict", "--model", path("m.json"), "--out", path("p.csv")}), kUsage);
}

TEST_F(CliTest, QueryWidthMismatchIsUsageError) {
  ASSERT_EQ(invoke({"generate", "--kind", "step", "--out", path("s.csv")}), kOk);
  ASSERT_EQ(invoke(with({"train", "--data", path("s.csv"), "--out", path("m.json")}, kQuickTrain)),
            kOk);
  std::ofstream(path("q.csv")) << "x0,x1\n0.1,0.2\n";
  EXPECT_EQ(invoke({"predict", "--model", path("m.json"), "--queries", path("q.csv"), "--out",
                    path("p.csv")}),
            kUsage);
}

}  // namespace
}  // namespace dmfgp::cli
