#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "cli_app.hpp"
#include "test_util.hpp"

using ndrl::testing::TempDir;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "ndrl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = ndrl::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int process_exit(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, HelpListsEveryKeyWithDefault) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  for (const auto& k : ndrl::config_keys()) EXPECT_NE(r.out.find(k.key), std::string::npos) << k.key;
  EXPECT_NE(r.out.find("0.004"), std::string::npos);
}

TEST(Cli, OverridesBeatFileValues) {
  TempDir dir("cli_cfg");
  std::ofstream(dir.file("run.cfg")) << "model.dim=16\ntrain.lr=0.5\n";
  const auto r = run({"train", "-c", dir.file("run.cfg"), "--model.dim=32", "--print-config"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("model.dim=32\n"), std::string::npos);
  EXPECT_NE(r.out.find("train.lr=0.5\n"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  TempDir dir("cli_codes");
  std::ofstream(dir.file("bad.cfg")) << "model.dims=5\n";
  const auto unknown = run({"train", "-c", dir.file("bad.cfg")});
  EXPECT_EQ(unknown.code, 3);
  EXPECT_NE(unknown.err.find("model.dims"), std::string::npos);
  EXPECT_EQ(run({"orc-scan", "--data.triples=" + dir.file("missing.tsv")}).code, 2);
  EXPECT_EQ(run({"train", "-c", dir.file("missing.cfg")}).code, 2);
  EXPECT_EQ(run({"orc-scan"}).code, 3);  // data.triples unset
  EXPECT_EQ(run({"train", "--model.rho=2"}).code, 3);
  EXPECT_EQ(run({"frobnicate"}).code, 3);
  EXPECT_EQ(run({"train", "stray"}).code, 3);
}

TEST(Cli, DivergenceExitCode) {
  TempDir dir("cli_div");
  const std::string g = "--data.triples=" + dir.file("g.tsv");
  ASSERT_EQ(run({"generate", g, "--gen.entities=20"}).code, 0);
  const auto r = run({"train", g, "--model.dim=4", "--pretrain.epochs=1", "--train.epochs=2000", "--train.lr=10",
                      "--train.l2=1", "--out.checkpoint=" + dir.file("m.ckpt")});
  EXPECT_EQ(r.code, 4) << r.err;
}

TEST(Cli, GenerateTrainEvalPipeline) {
  TempDir dir("cli_pipe");
  const std::string g = "--data.triples=" + dir.file("g.tsv");
  const std::string d = "--data.descriptions=" + dir.file("d.vec");
  const std::string c = "--out.checkpoint=" + dir.file("m.ckpt");
  const auto gen = run({"generate", g, d, "--gen.entities=60"});
  ASSERT_EQ(gen.code, 0) << gen.err;
  EXPECT_NE(gen.out.find("described_entities=36"), std::string::npos);

  const auto tr = run({"train", g, d, c, "--model.dim=8", "--pretrain.epochs=20", "--train.epochs=3"});
  ASSERT_EQ(tr.code, 0) << tr.err;
  const std::string log = slurp(dir.file("m.ckpt.log"));
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 4);
  for (const char* ext : {".train.tsv", ".valid.tsv", ".test.tsv", ".manifest"}) {
    EXPECT_FALSE(slurp(dir.file(std::string("m.ckpt") + ext)).empty()) << ext;
  }

  const auto ev = run({"eval", g, d, c, "--out.report=" + dir.file("report.txt")});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_NE(ev.out.find("filter.hits10="), std::string::npos);
  EXPECT_EQ(slurp(dir.file("report.txt")), ev.out);
  EXPECT_EQ(run({"eval", g, d, c}).out, ev.out);

  const auto rich = run({"richness", g});
  ASSERT_EQ(rich.code, 0);
  EXPECT_EQ(std::count(rich.out.begin(), rich.out.end(), '\n'), 61);
}

TEST(Cli, PretrainCheckpointFeedsTrainAndEval) {
  TempDir dir("cli_pre");
  const std::string g = "--data.triples=" + dir.file("g.tsv");
  ASSERT_EQ(run({"generate", g, "--gen.entities=30"}).code, 0);
  const auto pre = run({"pretrain", g, "--model.dim=6", "--pretrain.epochs=5", "--out.checkpoint=" + dir.file("e.ckpt")});
  ASSERT_EQ(pre.code, 0) << pre.err;
  const auto ev = run({"eval", g, "--out.checkpoint=" + dir.file("e.ckpt")});
  EXPECT_EQ(ev.code, 0) << ev.err;
  const auto tr = run({"train", g, "--model.dim=6", "--train.epochs=1", "--pretrain.embeddings=" + dir.file("e.ckpt"),
                       "--out.checkpoint=" + dir.file("m.ckpt")});
  EXPECT_EQ(tr.code, 0) << tr.err;
  const auto wrong = run({"train", g, "--model.dim=5", "--train.epochs=1",
                          "--pretrain.embeddings=" + dir.file("e.ckpt"), "--out.checkpoint=" + dir.file("x.ckpt")});
  EXPECT_NE(wrong.code, 0);
}

TEST(Cli, UntrainedToyScoresNearMidRank) {
  TempDir dir("cli_toy");
  std::ofstream(dir.file("toy.tsv")) << "a\tr\tb\nb\tr\tc\nc\tr\ta\n";
  const std::string g = "--data.triples=" + dir.file("toy.tsv");
  const std::string c = "--out.checkpoint=" + dir.file("m.ckpt");
  ASSERT_EQ(run({"train", g, c, "--model.dim=4", "--pretrain.epochs=0", "--train.epochs=0", "--split.ratios=1:0:1"})
                .code,
            0);
  const auto ev = run({"eval", g, c, "--split.ratios=1:0:1"});
  ASSERT_EQ(ev.code, 0) << ev.err;
  const std::smatch m = [&] {
    std::smatch mm;
    std::regex_search(ev.out, mm, std::regex("raw\\.mr=([0-9.eE+-]+)"));
    return mm;
  }();
  ASSERT_FALSE(m.empty());
  const double mr = std::stod(m[1].str());
  EXPECT_GE(mr, 1.0);
  EXPECT_LE(mr, 3.0);
  EXPECT_NEAR(mr, 2.0, 1.0);
}

TEST(Cli, AblateEmitsFourByEight) {
  TempDir dir("cli_abl");
  const std::string g = "--data.triples=" + dir.file("g.tsv");
  const std::string d = "--data.descriptions=" + dir.file("d.vec");
  ASSERT_EQ(run({"generate", g, d, "--gen.entities=40", "--gen.desc_dim=4"}).code, 0);
  const auto r = run({"ablate", g, d, "--model.dim=4", "--pretrain.epochs=5", "--train.epochs=2", "--gen.desc_dim=4"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string name;
    fields >> name;
    names.push_back(name);
    int numbers = 0;
    double v;
    while (fields >> v) ++numbers;
    EXPECT_EQ(numbers, 8) << line;
  }
  EXPECT_EQ(names, (std::vector<std::string>{"NDRL", "NDRL-r", "NDRL-a", "NDRL-s"}));
}

TEST(Cli, BinaryReportsExitCodes) {
  const std::string bin = NDRL_CLI_PATH;
  EXPECT_EQ(process_exit(bin + " orc-scan --data.triples=/nonexistent.tsv 2>/dev/null"), 2);
  EXPECT_EQ(process_exit(bin + " train --model.dims=3 2>/dev/null"), 3);
  EXPECT_EQ(process_exit(bin + " --help >/dev/null"), 0);
}
