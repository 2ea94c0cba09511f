// Copyright 2026 storymine authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//
// Drives the installed binary end to end: exit codes, pipeline outputs,
// and bitwise reproducibility of reruns.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#ifndef STORYMINE_CLI_PATH
#error "STORYMINE_CLI_PATH must point at the built binary"
#endif
#ifndef STORYMINE_SOURCE_DIR
#error "STORYMINE_SOURCE_DIR must point at the repository root"
#endif

namespace {

const std::string kCli = STORYMINE_CLI_PATH;
const std::string kData = std::string(STORYMINE_SOURCE_DIR) + "/data/sample";

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  f << content;
}

std::string fresh_dir(const std::string& name) {
  const std::string dir = std::string(::testing::TempDir()) + "cli_" + name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Runs the CLI through the shell so redirections and env prefixes work.
RunResult run_cli(const std::string& args, const std::string& tag) {
  const std::string dir = std::string(::testing::TempDir());
  const std::string out_path = dir + "cli_stdout_" + tag;
  const std::string err_path = dir + "cli_stderr_" + tag;
  const std::string cmd =
      kCli + " " + args + " > " + out_path + " 2> " + err_path;
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

// Writes a run config pointing at the sample corpus with outputs under dir.
std::string write_config(const std::string& dir) {
  std::ostringstream cfg;
  cfg << "{\n"
      << "  \"model\": {\"variant\": \"j-acnn\", \"half_width\": 3,\n"
      << "    \"pos_dim\": 6, \"word_dim\": 10,\n"
      << "    \"filters\": {\"1\": 6, \"2\": 6, \"3\": 6},\n"
      << "    \"attn_size\": 6, \"dropout_cnn\": 0.3},\n"
      << "  \"train\": {\"batch_size\": 4, \"epochs\": 6, \"seed\": 11},\n"
      << "  \"paths\": {\"corpus\": \"" << kData << "/corpus.jsonl\",\n"
      << "    \"splits\": \"" << kData << "/splits.txt\",\n"
      << "    \"checkpoint\": \"" << dir << "/model.ckpt\",\n"
      << "    \"out_dir\": \"" << dir << "\"}\n"
      << "}\n";
  const std::string path = dir + "/run.json";
  spit(path, cfg.str());
  return path;
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli("", "nocmd").exit_code, 2);
  EXPECT_EQ(run_cli("train --no-such-flag", "badflag").exit_code, 2);

  const std::string dir = fresh_dir("badcfg");
  spit(dir + "/bad.json", "{\"model\": {\"variant\": \"warp\"}}");
  const RunResult r =
      run_cli("train --config " + dir + "/bad.json", "badvariant");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("warp"), std::string::npos);

  spit(dir + "/unknown.json", "{\"mode\": {}}");
  EXPECT_EQ(run_cli("train --config " + dir + "/unknown.json", "unknownkey")
                .exit_code,
            2);
}

TEST(Cli, MissingInputsExitThree) {
  const std::string dir = fresh_dir("missing");
  spit(dir + "/cfg.json",
       "{\"paths\": {\"corpus\": \"" + dir + "/absent.jsonl\", \"splits\": \"" +
           dir + "/absent.txt\"}}");
  const RunResult r = run_cli("train --config " + dir + "/cfg.json", "nocorp");
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.err.find("absent.jsonl"), std::string::npos);

  EXPECT_EQ(
      run_cli("predict --checkpoint " + dir + "/none.ckpt < /dev/null",
              "nockpt")
          .exit_code,
      3);
}

TEST(Cli, HelpExitsZero) {
  const RunResult r = run_cli("--help", "help");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("train"), std::string::npos);
  EXPECT_NE(r.out.find("gradcheck"), std::string::npos);
}

TEST(Cli, KappaMatchesHandValues) {
  const std::string dir = fresh_dir("kappa");
  spit(dir + "/a.txt", "a\nb\na\nb\n");
  spit(dir + "/b.txt", "a\nb\nb\nb\n");
  RunResult r = run_cli("kappa " + dir + "/a.txt " + dir + "/b.txt", "kappa1");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("kappa 0.5000"), std::string::npos) << r.out;

  r = run_cli("kappa " + dir + "/a.txt " + dir + "/a.txt", "kappa2");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("kappa 1.0000"), std::string::npos) << r.out;

  spit(dir + "/short.txt", "a\n");
  EXPECT_EQ(
      run_cli("kappa " + dir + "/a.txt " + dir + "/short.txt", "kappa3")
          .exit_code,
      3);
}

TEST(Cli, PreprocessNormalizesStdin) {
  const std::string dir = fresh_dir("pre");
  spit(dir + "/raw.txt", "A Guy PASSED, comments!!");
  const RunResult r = run_cli("preprocess --in " + dir + "/raw.txt", "pre");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("\"a guy passed comments!!\""), std::string::npos)
      << r.out;
}

TEST(Cli, DataDirEnvironmentSuppliesDefaults) {
  const std::string dir = fresh_dir("datadir");
  std::filesystem::copy_file(kData + "/corpus.jsonl", dir + "/corpus.jsonl");
  std::filesystem::copy_file(kData + "/splits.txt", dir + "/splits.txt");
  spit(dir + "/empty.json", "{}");
  const std::string prefix = "STORYMINE_DATA_DIR=" + dir + " " + kCli;
  const std::string out_path = dir + "/pre.out";
  const int status = std::system(
      (prefix + " preprocess --config " + dir + "/empty.json > " + out_path +
       " 2>/dev/null")
          .c_str());
  EXPECT_EQ(WEXITSTATUS(status), 0);
  EXPECT_NE(slurp(out_path).find("\"stories\": 26"), std::string::npos);
}

TEST(Cli, TrainEvalPredictAnalyzePipeline) {
  const std::string dir = fresh_dir("pipe");
  const std::string cfg = write_config(dir);
  const std::string corpus_before = slurp(kData + "/corpus.jsonl");

  RunResult tr = run_cli("train --config " + cfg, "train1");
  ASSERT_EQ(tr.exit_code, 0) << tr.err;
  const std::string ckpt = slurp(dir + "/model.ckpt");
  const std::string log = slurp(dir + "/metrics.jsonl");
  ASSERT_FALSE(ckpt.empty());
  int epochs = 0;
  for (char c : log) epochs += c == '\n' ? 1 : 0;
  EXPECT_EQ(epochs, 6);

  // Bitwise-identical rerun with the same config and seed.
  RunResult tr2 = run_cli("train --config " + cfg, "train2");
  ASSERT_EQ(tr2.exit_code, 0) << tr2.err;
  EXPECT_EQ(slurp(dir + "/model.ckpt"), ckpt);
  EXPECT_EQ(slurp(dir + "/metrics.jsonl"), log);
  EXPECT_EQ(tr2.out, tr.out);

  RunResult ev = run_cli("eval --config " + cfg + " --split dev", "eval");
  ASSERT_EQ(ev.exit_code, 0) << ev.err;
  EXPECT_NE(ev.out.find("extraction"), std::string::npos);
  EXPECT_FALSE(slurp(dir + "/eval_dev.txt").empty());
  EXPECT_FALSE(slurp(dir + "/eval_dev.json").empty());

  // Variant guard: the checkpoint holds j-acnn, not cnn.
  EXPECT_EQ(run_cli("eval --config " + cfg + " --variant cnn", "evbad")
                .exit_code,
            2);

  spit(dir + "/story.txt",
       "This morning at Dhobi Ghat a guy kept passing going towards the "
       "ladies and groped me.");
  RunResult pr = run_cli("predict --checkpoint " + dir +
                             "/model.ckpt --in " + dir + "/story.txt --out " +
                             dir,
                         "predict");
  ASSERT_EQ(pr.exit_code, 0) << pr.err;
  EXPECT_NE(pr.out.find("labels:"), std::string::npos);
  EXPECT_NE(pr.out.find("attention"), std::string::npos);
  EXPECT_FALSE(slurp(dir + "/predict.json").empty());

  spit(dir + "/blank.txt", "   \n");
  EXPECT_EQ(run_cli("predict --checkpoint " + dir + "/model.ckpt --in " +
                        dir + "/blank.txt",
                    "prempty")
                .exit_code,
            3);

  RunResult an = run_cli(
      "analyze --config " + cfg + " --out " + dir + "/analysis", "an1");
  ASSERT_EQ(an.exit_code, 0) << an.err;
  const std::string manifest = slurp(dir + "/analysis/manifest.json");
  const std::string records = slurp(dir + "/analysis/records.jsonl");
  EXPECT_NE(manifest.find("\"source\": \"gold\""), std::string::npos);
  EXPECT_NE(records.find("chi_square"), std::string::npos);
  run_cli("analyze --config " + cfg + " --out " + dir + "/analysis", "an2");
  EXPECT_EQ(slurp(dir + "/analysis/manifest.json"), manifest);
  EXPECT_EQ(slurp(dir + "/analysis/records.jsonl"), records);

  RunResult anp = run_cli("analyze --config " + cfg + " --checkpoint " + dir +
                              "/model.ckpt --out " + dir + "/analysis_pred",
                          "anp");
  ASSERT_EQ(anp.exit_code, 0) << anp.err;
  EXPECT_NE(slurp(dir + "/analysis_pred/manifest.json")
                .find("\"source\": \"predicted\""),
            std::string::npos);

  // No command touched the corpus.
  EXPECT_EQ(slurp(kData + "/corpus.jsonl"), corpus_before);
}

TEST(Cli, GradcheckSingleVariantPasses) {
  const RunResult r = run_cli("gradcheck --variant cnn --seed 3", "gc");
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("ok"), std::string::npos) << r.out;
}

}  // namespace
