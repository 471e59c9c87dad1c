// Copyright 2026 The gmtl Authors
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

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "gmtl/cli.hpp"
#include "gmtl/data.hpp"
#include "gmtl/io.hpp"
#include "test_util.hpp"

namespace gmtl {
namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gmtl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(GMTL_BINARY) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

const char* kTinyCorpus =
    "corpus.phonemes=4\ncorpus.mcc_dims=3\ncorpus.utterances=20\ncorpus.min_frames=20\ncorpus.max_frames=30\n"
    "corpus.min_phone_frames=3\ncorpus.max_phone_frames=6\n";

const char* kTinyTrain =
    "train.mode=gan\ntrain.steps=6\ntrain.batch_size=4\ntrain.valid_every=3\ntrain.log_wall_time=false\n"
    "model.noise_dim=2\nmodel.dense_layers=1\nmodel.dense_width=8\nmodel.recurrent_layers=1\n"
    "model.recurrent_hidden=4\nmodel.window=5\nmodel.conv1_channels=2\nmodel.conv2_channels=2\nmodel.fc_width=4\n";

TEST_CASE("usage errors exit with 1") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"gendata"}).code == kExitUsage);
  CHECK(cli({"gendata", "--out", "x", "--bogus"}).code == kExitUsage);
  CHECK(cli({"synth", "--ckpt", "a", "--data", "b", "--out", "c", "--split", "dev"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
  const test::TempDir dir("cli_usage");
  write_text_file(dir / "t.cfg", kTinyTrain);
  const Run r = cli({"train", "--config", (dir / "t.cfg").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("required") != std::string::npos);
  CHECK(run_binary("") == kExitUsage);
  CHECK(run_binary("nosuchcommand") == kExitUsage);
}

TEST_CASE("runtime errors exit with 2") {
  const test::TempDir dir("cli_runtime");
  const Run missing = cli({"eval", "--ref", "/nonexistent.gspd", "--hyp", "/nonexistent.gspd", "--report", "r"});
  CHECK(missing.code == kExitRuntime);
  CHECK(missing.err.rfind("error: ", 0) == 0);
  write_text_file(dir / "bad.cfg", "corpus.phonemes=0\n");
  CHECK(cli({"gendata", "--config", (dir / "bad.cfg").string(), "--out", (dir / "c.gspd").string()}).code ==
        kExitRuntime);
  write_text_file(dir / "unknown.cfg", "train.colour=blue\n");
  CHECK(cli({"train", "--config", (dir / "unknown.cfg").string(), "--data", "x", "--out", "y"}).code == kExitRuntime);
  CHECK(run_binary("eval --ref /nonexistent --hyp /nonexistent --report /tmp/x") == kExitRuntime);
}

TEST_CASE("gendata is deterministic and writes the oracle table") {
  const test::TempDir dir("cli_gendata");
  write_text_file(dir / "c.cfg", kTinyCorpus);
  const std::string cfg = (dir / "c.cfg").string();
  REQUIRE(cli({"gendata", "--config", cfg, "--out", (dir / "a.gspd").string(), "--seed", "3"}).code == kExitOk);
  REQUIRE(cli({"gendata", "--config", cfg, "--out", (dir / "b.gspd").string(), "--seed", "3"}).code == kExitOk);
  REQUIRE(cli({"gendata", "--config", cfg, "--out", (dir / "c.gspd").string(), "--seed", "4"}).code == kExitOk);
  CHECK(read_file(dir / "a.gspd") == read_file(dir / "b.gspd"));
  CHECK(read_file(dir / "a.gspd") != read_file(dir / "c.gspd"));
  const Dataset ds = read_dataset(dir / "a.gspd");
  CHECK(ds.config.seed == 3);
  CHECK(ds.utterances.size() == 20);
  const std::string oracle = read_text_file(dir / "a.gspd.gv_oracle.csv");
  CHECK(oracle.rfind("dim,gv_natural,gv_condmean\n", 0) == 0);
  CHECK(std::count(oracle.begin(), oracle.end(), '\n') == 4);
}

TEST_CASE("eval of a dataset against itself reports zero error") {
  const test::TempDir dir("cli_self");
  write_text_file(dir / "c.cfg", kTinyCorpus);
  const std::string data = (dir / "d.gspd").string(), report = (dir / "r.txt").string();
  REQUIRE(cli({"gendata", "--config", (dir / "c.cfg").string(), "--out", data}).code == kExitOk);
  REQUIRE(cli({"eval", "--ref", data, "--hyp", data, "--report", report}).code == kExitOk);
  const KeyValues kv = parse_key_values(read_text_file(report));
  CHECK(parse_double("", kv.at("mcd_db")) == 0.0);
  CHECK(parse_double("", kv.at("f0_rmse_hz")) == 0.0);
  CHECK(parse_double("", kv.at("vuv_error_pct")) == 0.0);
  CHECK(parse_double("", kv.at("gv_distance_mean")) == 0.0);
  CHECK(std::filesystem::exists(report + ".gv.csv"));
  const Run gv = cli({"gv", "--ref", data, "--hyp", data});
  CHECK(gv.code == kExitOk);
  CHECK(gv.out.rfind("dim,gv_ref,gv_hyp,distance\n", 0) == 0);
}

TEST_CASE("train, synth and eval pipeline with resume") {
  const test::TempDir dir("cli_pipeline");
  write_text_file(dir / "c.cfg", kTinyCorpus);
  write_text_file(dir / "t.cfg", kTinyTrain);
  const std::string data = (dir / "d.gspd").string(), out = (dir / "run").string();
  REQUIRE(cli({"gendata", "--config", (dir / "c.cfg").string(), "--out", data}).code == kExitOk);
  REQUIRE(cli({"train", "--config", (dir / "t.cfg").string(), "--data", data, "--out", out}).code == kExitOk);
  const std::string ckpt = out + "/checkpoint.gmtl";
  const auto saved = read_file(ckpt);
  const auto log = read_text_file(out + "/log.csv");
  CHECK(std::count(log.begin(), log.end(), '\n') == 7);

  const Run again = cli({"train", "--config", (dir / "t.cfg").string(), "--data", data, "--out", out, "--resume"});
  CHECK(again.code == kExitOk);
  CHECK(read_file(ckpt) == saved);
  CHECK(read_text_file(out + "/log.csv") == log);

  const std::string hyp = (dir / "hyp.gspd").string(), hyp2 = (dir / "hyp2.gspd").string();
  REQUIRE(cli({"synth", "--ckpt", ckpt, "--data", data, "--split", "test", "--seed", "7", "--out", hyp}).code == kExitOk);
  REQUIRE(cli({"synth", "--ckpt", ckpt, "--data", data, "--split", "test", "--seed", "7", "--out", hyp2}).code == kExitOk);
  CHECK(read_file(hyp) == read_file(hyp2));
  const Dataset h = read_dataset(hyp);
  CHECK(h.extra.at("variant") == "acoustic-only");
  CHECK(h.utterances.size() == 2);

  const std::string r1 = (dir / "r1.txt").string(), r2 = (dir / "r2.txt").string();
  REQUIRE(cli({"eval", "--ref", data, "--hyp", hyp, "--report", r1}).code == kExitOk);
  REQUIRE(cli({"eval", "--ref", data, "--hyp", hyp, "--report", r2}).code == kExitOk);
  CHECK(read_text_file(r1) == read_text_file(r2));
  CHECK(parse_double("", parse_key_values(read_text_file(r1)).at("mcd_db")) > 0.0);

  // A hypothesis for the test split does not align with the train split.
  const std::string train_hyp = (dir / "train_hyp.gspd").string();
  REQUIRE(cli({"synth", "--ckpt", ckpt, "--data", data, "--split", "train", "--out", train_hyp}).code == kExitOk);
  Dataset bad = read_dataset(train_hyp);
  bad.extra["source.split"] = "test";
  write_dataset(bad, dir / "bad.gspd");
  CHECK(cli({"eval", "--ref", data, "--hyp", (dir / "bad.gspd").string(), "--report", r1}).code == kExitRuntime);
}

TEST_CASE("default smoke run through the binary finishes within ten minutes") {
  const test::TempDir dir("cli_smoke");
  const std::string d = dir.path().string();
  const auto t0 = std::chrono::steady_clock::now();
  REQUIRE(run_binary("gendata --out " + d + "/corpus.gspd") == kExitOk);
  REQUIRE(run_binary("train --data " + d + "/corpus.gspd --out " + d + "/run") == kExitOk);
  REQUIRE(run_binary("synth --ckpt " + d + "/run/checkpoint.gmtl --data " + d + "/corpus.gspd --split test --seed 1 --out " +
                     d + "/hyp.gspd") == kExitOk);
  REQUIRE(run_binary("eval --ref " + d + "/corpus.gspd --hyp " + d + "/hyp.gspd --report " + d + "/report.txt") ==
          kExitOk);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("default gendata/train/synth/eval took " << seconds << " s");
  CHECK(seconds < 600.0);
  const KeyValues kv = parse_key_values(read_text_file(dir / "report.txt"));
  CHECK(std::isfinite(parse_double("", kv.at("mcd_db"))));
}

}  // namespace
}  // namespace gmtl
