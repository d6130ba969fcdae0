// Copyright 2026 The melvin-surrogate Authors
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


#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;

const std::string kBinary = MELVIN_CLI_PATH;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("melvin_cli_" + std::to_string(::getpid()) + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the binary with the given arguments inside the scratch directory.
  int run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = "cd '" + dir_.string() + "' && " + env + " '" + kBinary + "' " + args +
                            " > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string slurp(const std::string& rel) const {
    std::ifstream is(dir_ / rel, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
  }

  bool exists(const std::string& rel) const { return fs::exists(dir_ / rel); }

  void generate(const std::string& out, int count = 300) const {
    ASSERT_EQ(run("generate --count " + std::to_string(count) + " --seed 5 --out " + out), 0);
  }

  void train(const std::string& task, const std::string& out, const std::string& extra = "") const {
    ASSERT_EQ(run("train --data g/dataset.jsonl --task " + task +
                  " --hidden 6 --embed 3 --batch 16 --max-updates 30 --eval-every 10 --seed 2 --out " + out +
                  " " + extra),
              0);
  }

  fs::path dir_;
};

TEST_F(CliTest, GenerateWritesDatasetStatsAndSnapshot) {
  generate("g");
  EXPECT_TRUE(exists("g/dataset.jsonl"));
  EXPECT_EQ(slurp("g/stats.csv").rfind("fold_rank,positives,negatives\n", 0), 0u);
  const auto cfg = nlohmann::json::parse(slurp("g/config.json"));
  EXPECT_EQ(cfg["command"], "generate");
  EXPECT_EQ(cfg["count"], 300);
  EXPECT_EQ(cfg["seed"], 5);
  std::istringstream lines(slurp("g/dataset.jsonl"));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("setup") && j.contains("y_e") && j.contains("srv") && j.contains("fold_rank") &&
                j.contains("split") && j.contains("fold"));
    ++n;
  }
  EXPECT_EQ(n, 300);
}

TEST_F(CliTest, GenerateIsByteIdenticalAcrossRunsAndThreadCounts) {
  ASSERT_EQ(run("generate --count 400 --seed 9 --out a", "MELVIN_SURROGATE_THREADS=1"), 0);
  ASSERT_EQ(run("generate --count 400 --seed 9 --out b", "MELVIN_SURROGATE_THREADS=3"), 0);
  EXPECT_EQ(slurp("a/dataset.jsonl"), slurp("b/dataset.jsonl"));
  EXPECT_EQ(slurp("a/stats.csv"), slurp("b/stats.csv"));
  ASSERT_EQ(run("generate --count 400 --seed 10 --out c"), 0);
  EXPECT_NE(slurp("a/dataset.jsonl"), slurp("c/dataset.jsonl"));
}

TEST_F(CliTest, TrainAndEvaluateAreByteIdenticalAcrossRuns) {
  generate("g");
  train("ent", "e1");
  train("ent", "e2");
  train("srv", "s1");
  EXPECT_EQ(slurp("e1/model.bin"), slurp("e2/model.bin"));
  EXPECT_EQ(slurp("e1/history.csv"), slurp("e2/history.csv"));
  EXPECT_EQ(slurp("e1/history.csv").rfind("update,train_loss,val_loss\n", 0), 0u);
  ASSERT_EQ(run("evaluate --data g/dataset.jsonl --ent-model e1/model.bin --srv-model s1/model.bin --out v1"), 0);
  ASSERT_EQ(run("evaluate --data g/dataset.jsonl --ent-model e2/model.bin --srv-model s1/model.bin --out v2"), 0);
  EXPECT_EQ(slurp("v1/metrics.csv"), slurp("v2/metrics.csv"));
  EXPECT_EQ(slurp("v1/metrics.csv").rfind("fold,tau,r,tp,tn,fp,fn,tpr,tnr,ppv,rediscovery,ci_", 0), 0u);
  EXPECT_TRUE(exists("v1/summary.txt"));
  EXPECT_EQ(nlohmann::json::parse(slurp("v1/config.json"))["mode"], "test");
}

TEST_F(CliTest, SnapshotReproducesTheRun) {
  generate("g");
  train("ent", "e1");
  ASSERT_EQ(run("train --config e1/config.json --out e2"), 0);
  EXPECT_EQ(slurp("e1/model.bin"), slurp("e2/model.bin"));
  ASSERT_EQ(run("train --config e1/config.json --out e3 --seed 3"), 0);
  EXPECT_NE(slurp("e1/model.bin"), slurp("e3/model.bin"));
  EXPECT_EQ(nlohmann::json::parse(slurp("e3/config.json"))["seed"], 3);
}

TEST_F(CliTest, SweepCoversTheFullGrid) {
  generate("g");
  train("ent", "e");
  train("srv", "s");
  ASSERT_EQ(run("sweep --data g/dataset.jsonl --ent-model e/model.bin --srv-model s/model.bin --out w"), 0);
  std::istringstream lines(slurp("w/sweep.csv"));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) ++n;
  EXPECT_EQ(n, 1 + 101 * 66);
  EXPECT_NE(slurp("w/average_precision.csv").find("mAP,"), std::string::npos);
  ASSERT_EQ(run("evaluate --mode sweep --data g/dataset.jsonl --ent-model e/model.bin --srv-model s/model.bin "
                "--out w2"),
            0);
  EXPECT_EQ(slurp("w/sweep.csv"), slurp("w2/sweep.csv"));
}

TEST_F(CliTest, SplitMovesRanksAndDropsAboveMax) {
  generate("g", 1500);
  ASSERT_EQ(run("split --data g/dataset.jsonl --extrapolation-rank 5 --max-rank 6 --out s"), 0);
  std::istringstream lines(slurp("s/dataset.jsonl"));
  std::string line;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    const int rank = j["fold_rank"];
    EXPECT_LE(rank, 6);
    EXPECT_EQ(j["split"] == "extrapolation", rank >= 5);
    EXPECT_EQ(j["fold"].is_null(), j["split"] != "train");
  }
}

TEST_F(CliTest, DivergenceHasItsOwnExitCode) {
  generate("g");
  EXPECT_EQ(run("train --data g/dataset.jsonl --task ent --hidden 4 --embed 2 --batch 8 --max-updates 5 "
                "--eval-every 1 --lr inf --out d"),
            3);
  EXPECT_TRUE(exists("d/config.json"));
  EXPECT_TRUE(exists("d/history.csv"));
}

TEST_F(CliTest, VocabularyMismatchIsRejected) {
  generate("g");
  train("ent", "e");
  train("srv", "s");
  std::string bytes = slurp("s/model.bin");
  bytes[28] = static_cast<char>(bytes[28] ^ 0x5a);  // first byte of the vocabulary hash
  std::ofstream(dir_ / "s/model.bin", std::ios::binary) << bytes;
  EXPECT_EQ(run("evaluate --data g/dataset.jsonl --ent-model e/model.bin --srv-model s/model.bin --out v"), 4);
}

TEST_F(CliTest, WrongHeadAndBadFlagsAreConfigurationErrors) {
  generate("g");
  train("srv", "s");
  EXPECT_EQ(run("evaluate --data g/dataset.jsonl --ent-model s/model.bin --srv-model s/model.bin --out v"), 2);
  EXPECT_EQ(run("train --data g/dataset.jsonl --task bogus --out t"), 2);
  EXPECT_EQ(run("generate --count 10 --out x --no-such-flag"), 2);
  EXPECT_EQ(run("evaluate --data g/dataset.jsonl --out v"), 2);
  EXPECT_EQ(run("evaluate --data g/dataset.jsonl --match-mode nearest --out v"), 2);
}

TEST_F(CliTest, DumpStatePrintsTheLabel) {
  ASSERT_EQ(run("dump-state --setup 'BS(a,c) BS(b,c) DP(a) BS(a,d) BS(a,c)' --max-oam 1"), 0);
  const std::string out = slurp("stdout.txt");
  EXPECT_NE(out.find("srv: (2,2,2)"), std::string::npos);
  EXPECT_NE(out.find("fold_rank: 2"), std::string::npos);
  ASSERT_EQ(run("dump-state --setup 'BS(a,b)'"), 0);
  EXPECT_NE(slurp("stdout.txt").find("state: invalid"), std::string::npos);
  EXPECT_NE(slurp("stdout.txt").find("srv: null"), std::string::npos);
  EXPECT_EQ(run("dump-state --setup 'PRISM(a)'"), 1);
}

}  // namespace
