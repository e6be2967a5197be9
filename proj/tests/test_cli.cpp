// Copyright 2026 The vidalign Authors
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

// Drives the built command-line tool end to end.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("vidalign_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  RunResult run(const std::string& args) {
    const fs::path o = root_ / "stdout.txt", e = root_ / "stderr.txt";
    const std::string cmd = std::string("\"") + VIDALIGN_CLI_PATH + "\" " + args + " >\"" + o.string() + "\" 2>\"" +
                            e.string() + "\"";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
  }

  std::string p(const std::string& sub) const { return "\"" + (root_ / sub).string() + "\""; }

  /// Small model and data so each command finishes in seconds.
  static constexpr const char* kTiny =
      " --set synth.num_sequences=2 --set synth.num_frames=6 --set model.backbone_widths=[4,8,8,8]"
      " --set model.fusion_width=8 --set model.head_width=8 --set optim.epochs=2 --set optim.batch_size=4";

  fs::path root_;
};

TEST_F(Cli, FullWorkflow) {
  ASSERT_EQ(run("generate --out " + p("data") + kTiny).code, 0);
  EXPECT_TRUE(fs::exists(root_ / "data" / "seq000" / "annotations.jsonl"));
  EXPECT_TRUE(fs::exists(root_ / "data" / "seq001" / "frames" / "000005.png"));

  const std::string data = " --set data.root=" + p("data") + kTiny;
  auto r = run("analyze --out " + p("analysis") + data);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(root_ / "analysis" / "motion_iou.csv")[0], "sequence,track,frame,motion_iou");
  EXPECT_EQ(lines(root_ / "analysis" / "speed_histogram.csv").size(), 4u);
  EXPECT_TRUE(fs::exists(root_ / "analysis" / "speed_histogram.png"));

  r = run("train --out " + p("train") + data);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto loss = lines(root_ / "train" / "loss.csv");
  EXPECT_EQ(loss[0], "epoch,step,detection,contrastive,total");
  EXPECT_EQ(loss.size(), 1u + 2 * 3);  // 10 pairs in batches of 4, two epochs
  EXPECT_TRUE(fs::exists(root_ / "train" / "checkpoint.bin"));
  const auto cfg = nlohmann::json::parse(slurp(root_ / "train" / "config.json"));
  EXPECT_EQ(cfg["contrastive"]["weight"], 0.3);
  EXPECT_EQ(cfg["model"]["fusion_width"], 8);

  const std::string ck = " --set model.checkpoint=" + p("train/checkpoint.bin");
  r = run("infer --out " + p("pred") + data + ck);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(root_ / "pred" / "seq000.jsonl").size(), 6u);

  const std::string dets = " --set data.detections=" + p("pred");
  r = run("eval --out " + p("eval") + data + dets + ck);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto metrics = lines(root_ / "eval" / "metrics.csv");
  ASSERT_EQ(metrics.size(), 4u);
  EXPECT_EQ(metrics[0], "split,criterion,threshold,TP,FP,FN,precision,recall,f1");
  EXPECT_EQ(metrics[3].rfind("all,center_in_box,", 0), 0u);
  EXPECT_EQ(lines(root_ / "eval" / "fps.csv").size(), 2u);
  EXPECT_NE(r.out.find("f1="), std::string::npos);

  r = run("visualize --out " + p("vis") + data + dets);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(root_ / "vis" / "seq001" / "000005.png"));
}

TEST_F(Cli, ZeroContrastWeightGivesZeroColumn) {
  ASSERT_EQ(run("generate --out " + p("data") + kTiny).code, 0);
  const auto r = run("train --out " + p("train") + " --set data.root=" + p("data") + kTiny + " --set contrastive.weight=0");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(root_ / "train" / "loss.csv");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::vector<std::string> cols;
    std::stringstream ss(rows[i]);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    ASSERT_EQ(cols.size(), 5u);
    EXPECT_EQ(std::stod(cols[3]), 0.0);
    EXPECT_EQ(cols[2], cols[4]);
  }
}

TEST_F(Cli, StaticDatasetIsAllSlow) {
  ASSERT_EQ(run("generate --out " + p("data") + kTiny + " --set synth.velocity_max=0 --set synth.jitter=0").code, 0);
  const auto r = run("analyze --out " + p("a") + " --set data.root=" + p("data"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto hist = lines(root_ / "a" / "speed_histogram.csv");
  EXPECT_EQ(hist[1].rfind("slow,1,", 0), 0u) << hist[1];
  EXPECT_EQ(hist[3].rfind("fast,0,", 0), 0u) << hist[3];
}

TEST_F(Cli, SeedFlagIsRecordedAndReproducible) {
  ASSERT_EQ(run("generate --out " + p("a") + kTiny + " --seed 9").code, 0);
  ASSERT_EQ(run("generate --out " + p("b") + kTiny + " --seed 9").code, 0);
  EXPECT_EQ(slurp(root_ / "a" / "seq001" / "annotations.jsonl"), slurp(root_ / "b" / "seq001" / "annotations.jsonl"));
  EXPECT_EQ(nlohmann::json::parse(slurp(root_ / "a" / "config.json"))["seed"], 9);
}

TEST_F(Cli, ErrorsMapToExitCodes) {
  auto r = run("train --out " + p("x") + " --set optim.learning_rate=1");
  EXPECT_EQ(r.code, 2);
  const auto err = nlohmann::json::parse(r.err);
  EXPECT_EQ(err["error"], "config");
  EXPECT_NE(err["message"].get<std::string>().find("optim.learning_rate"), std::string::npos);

  EXPECT_EQ(run("train").code, 2);                                  // --out missing
  EXPECT_EQ(run("bogus --out " + p("x")).code, 2);                  // unknown subcommand
  EXPECT_EQ(run("train --out " + p("x") + " --set input.height=50").code, 2);
  EXPECT_EQ(run("analyze --out " + p("x") + " --set data.root=" + p("missing")).code, 3);

  ASSERT_EQ(run("generate --out " + p("data") + kTiny).code, 0);
  const std::string data = " --set data.root=" + p("data");
  EXPECT_EQ(run("infer --out " + p("x") + data + " --set model.checkpoint=" + p("none.bin")).code, 4);
  ASSERT_EQ(run("train --out " + p("t") + data + kTiny).code, 0);
  r = run("infer --out " + p("x") + data + kTiny + " --set model.fusion_width=16 --set model.checkpoint=" +
          p("t/checkpoint.bin"));
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "checkpoint");
  EXPECT_EQ(run("eval --out " + p("x") + data + " --set data.detections=" + p("nowhere")).code, 3);
}

TEST_F(Cli, HelpListsExitCodes) {
  const auto r = run("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("Exit codes"), std::string::npos);
  EXPECT_NE(r.out.find("visualize"), std::string::npos);
}

}  // namespace
