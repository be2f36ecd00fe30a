// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mmpolymer/checkpoint.hpp"
#include "mmpolymer/cli.hpp"
#include "mmpolymer/config.hpp"
#include "mmpolymer/error.hpp"
#include "mmpolymer/synthetic.hpp"

namespace mmp {
namespace {

namespace fs = std::filesystem;

struct CmdResult {
  int code;
  std::string out, err;
};

CmdResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Errc code_of(auto &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return Errc::kConfigError;
}

// Small model settings shared by the end-to-end commands.
const std::vector<std::string> kTiny{
    "--set", "seq_dim=8",       "--set", "seq_layers=1",    "--set", "seq_heads=2",
    "--set", "seq_ff_dim=16",   "--set", "atom_dim=8",      "--set", "pair_dim=2",
    "--set", "struct_layers=1", "--set", "struct_ff_dim=8", "--set", "contrast_dim=4",
    "--set", "batch_size=4",    "--set", "steps=3",         "--set", "epochs=2"};

class CliFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mmp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ASSERT_EQ(run({"synth", "--count", "24", "--seed", "3", "--out", path("corpus.txt")}).code, 0);
    ASSERT_EQ(run({"synth", "--count", "12", "--seed", "4", "--property", "heavy_atoms", "--out",
                   path("data.csv")})
                  .code,
              0);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string &name) const { return (dir_ / name).string(); }

  CmdResult pretrain(const std::string &out, std::vector<std::string> extra = {}) {
    std::vector<std::string> a{"pretrain", "--quiet", "--corpus", path("corpus.txt"), "--out", out};
    a.insert(a.end(), kTiny.begin(), kTiny.end());
    a.insert(a.end(), extra.begin(), extra.end());
    return run(a);
  }

  fs::path dir_;
};

TEST(Cli, StarSubAndTokenize) {
  auto r = run({"star-sub", "--strategy", "substitute", "*CC(*)F"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "CCC(C)F\n");
  r = run({"star-sub", "--strategy", "remove", "*CC(*)F"});
  EXPECT_EQ(r.out, "CCF\n");
  r = run({"tokenize", "*CC(*)F"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "[CLS] * C C ( * ) F [SEP]\n");
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({"bogus"}).code, kExitUsage);
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"star-sub", "--strategy", "sideways", "*CC*"}).code, kExitUsage);
  EXPECT_EQ(run({"star-sub", "--strategy", "keep", "*C(C"}).code, kExitData);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
  EXPECT_EQ(run({"finetune", "--data", "/nonexistent.csv", "--checkpoint", "/nonexistent.ckpt"}).code,
            kExitData);
}

TEST(Cli, RealProcessExitStatus) {
  const std::string base = std::string(MMP_CLI_PATH);
  int status = std::system((base + " star-sub --strategy keep '*CC*' > /dev/null").c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
  status = std::system((base + " nope > /dev/null 2>&1").c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 1);
}

TEST(Config, ParseAndPrecedence) {
  RunConfig c = parse_config(R"({"seq_dim": 32, "strategy": "remove", "lr": 0.002, "tasks": "mlm"})");
  EXPECT_EQ(c.model.seq.dim, 32u);
  EXPECT_EQ(c.strategy, psmiles::StarStrategy::kRemove);
  EXPECT_EQ(c.pretrain.adam.lr, 0.002);
  EXPECT_FALSE(c.tasks.denoise);
  apply_setting(c, "seq_dim", "16");
  EXPECT_EQ(c.model.seq.dim, 16u);
  const RunConfig back = parse_config(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_EQ(code_of([] { parse_config(R"({"nope": 1})"); }), Errc::kConfigError);
  EXPECT_EQ(code_of([] { parse_config(R"({"seq_dim": "x"})"); }), Errc::kConfigError);
  EXPECT_EQ(code_of([] { parse_config(R"([1, 2])"); }), Errc::kConfigError);
  EXPECT_EQ(code_of([] { parse_config(R"({"seq_dim": {"a": 1}})"); }), Errc::kConfigError);
  RunConfig s;
  s.seed = 77;
  s.sync_seed();
  EXPECT_EQ(s.pretrain.seed, 77u);
  EXPECT_EQ(s.finetune.seed, 77u);
  s.pretrain.masking.mask_fraction = 0.95;
  s.pretrain.masking.random_fraction = 0.1;
  EXPECT_EQ(code_of([&] { s.validate(); }), Errc::kConfigError);
}

TEST_F(CliFiles, PretrainFinetuneEmbedEvaluate) {
  const auto ck = path("model.ckpt");
  auto r = pretrain(ck, {"--trace", path("trace.csv"), "--seed", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(path("trace.csv")).find("step,l_1d,l_3d,l_contrast,total"), std::string::npos);

  std::vector<std::string> ft{"finetune", "--quiet", "--data", path("data.csv"), "--checkpoint", ck,
                              "--folds", "3", "--out", path("report.json"), "--save-model",
                              path("tuned.ckpt")};
  r = run(ft);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("mean +- std (both)"), std::string::npos);
  EXPECT_NE(slurp(path("report.json")).find("\"rmse\""), std::string::npos);

  r = run({"evaluate", "--quiet", "--data", path("data.csv"), "--checkpoint", path("tuned.ckpt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("records 12 modality both", 0), 0u) << r.out;

  r = run({"embed", "--quiet", "--data", path("data.csv"), "--checkpoint", ck, "--modality", "1d",
           "--out", path("emb.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(slurp(path("emb.csv")));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 9) << line;  // psmiles, value, 8 dims
    ++rows;
  }
  EXPECT_EQ(rows, 13u);
}

TEST_F(CliFiles, SameSeedSameBytes) {
  ASSERT_EQ(pretrain(path("a.ckpt"), {"--seed", "9", "--trace", path("a.csv")}).code, 0);
  ASSERT_EQ(pretrain(path("b.ckpt"), {"--seed", "9", "--trace", path("b.csv")}).code, 0);
  EXPECT_EQ(slurp(path("a.ckpt")), slurp(path("b.ckpt")));
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  ASSERT_EQ(pretrain(path("c.ckpt"), {"--seed", "10"}).code, 0);
  EXPECT_NE(slurp(path("a.ckpt")), slurp(path("c.ckpt")));
}

TEST_F(CliFiles, TooFewRecordsForFolds) {
  ASSERT_EQ(pretrain(path("m.ckpt")).code, 0);
  std::ofstream(path("two.csv")) << "psmiles,value\n*CC*,1\n*CCO*,2\n";
  const auto r = run({"finetune", "--quiet", "--data", path("two.csv"), "--checkpoint", path("m.ckpt")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("TooFewRecords"), std::string::npos) << r.err;
}

TEST_F(CliFiles, CheckpointErrors) {
  ASSERT_EQ(pretrain(path("m.ckpt")).code, 0);
  const std::string bytes = slurp(path("m.ckpt"));
  std::ofstream(path("cut.ckpt"), std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  EXPECT_EQ(code_of([&] { load_checkpoint(path("cut.ckpt")); }), Errc::kCorruptPayload);
  std::ofstream(path("junk.ckpt"), std::ios::binary) << "not a checkpoint at all";
  EXPECT_EQ(code_of([&] { load_checkpoint(path("junk.ckpt")); }), Errc::kCorruptPayload);

  auto r = run({"finetune", "--quiet", "--data", path("data.csv"), "--checkpoint", path("cut.ckpt")});
  EXPECT_EQ(r.code, kExitData);
  r = run({"finetune", "--quiet", "--data", path("data.csv"), "--checkpoint", path("m.ckpt"), "--set",
           "seq_dim=16", "--set", "seq_heads=2"});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("VersionMismatch"), std::string::npos) << r.err;
}

TEST_F(CliFiles, CheckpointRoundTripIsBitwise) {
  ASSERT_EQ(pretrain(path("m.ckpt")).code, 0);
  const auto ck = load_checkpoint(path("m.ckpt"));
  std::stringstream io;
  save_checkpoint(io, ck);
  const auto back = load_checkpoint(io);
  EXPECT_TRUE(back.params == ck.params);
  EXPECT_EQ(back.vocab.tokens(), ck.vocab.tokens());
  EXPECT_EQ(config_to_json(back.config), config_to_json(ck.config));
  std::stringstream again;
  save_checkpoint(again, back);
  EXPECT_EQ(again.str(), slurp(path("m.ckpt")));

  // A different version number in the manifest is refused.
  std::string bytes = slurp(path("m.ckpt"));
  const auto at = bytes.find("\"version\":1");
  ASSERT_NE(at, std::string::npos);
  bytes[at + 10] = '7';
  std::istringstream bumped(bytes);
  EXPECT_EQ(code_of([&] { load_checkpoint(bumped); }), Errc::kVersionMismatch);
}

}  // namespace
}  // namespace mmp
