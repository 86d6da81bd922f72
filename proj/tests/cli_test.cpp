#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "macrobox/cli.hpp"

using namespace macrobox;
using cli::RunConfig;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

int exit_status_of(const std::string& args) {
  const std::string cmd = std::string(MACROBOX_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("macrobox_cli_test_" + name);
}

}  // namespace

TEST(ParseArgs, Examples) {
  const RunConfig a = cli::parse_args({"--box", "pr", "--n", "4", "gisin"});
  EXPECT_EQ(a.command, "gisin");
  EXPECT_EQ(a.n, 4);
  EXPECT_EQ(a.box.kind, cli::BoxSpec::Kind::PR);
  const RunConfig b = cli::parse_args({"--box", "isotropic:3/4", "--n", "3", "--format", "json", "moments", "--i", "1", "--k", "4"});
  EXPECT_EQ(b.box.kind, cli::BoxSpec::Kind::Isotropic);
  EXPECT_EQ(b.box.visibility, Rational(3, 4));
  EXPECT_EQ(b.i, 1);
  EXPECT_EQ(b.order, 4);
  const RunConfig c = cli::parse_args({"--n", "2", "--box", "det:+1,-1,-1,+1", "jpd", "--kind", "general", "--k", "1"});
  EXPECT_EQ(c.box.deterministic[1], Outcome::Minus);
  EXPECT_EQ(c.jpd_kind, "general");
}

TEST(ParseArgs, UsageErrors) {
  for (const std::vector<std::string>& args : std::vector<std::vector<std::string>>{
           {"--box", "pr", "--n", "4"},
           {"--box", "pr", "gisin"},
           {"--box", "nope", "--n", "2", "box"},
           {"--box", "isotropic:3/2", "--n", "2", "box"},
           {"--box", "isotropic:x", "--n", "2", "box"},
           {"--box", "det:+1,+1", "--n", "2", "box"},
           {"--box", "file:/nonexistent/box.json", "--n", "2", "box"},
           {"--box", "pr", "--n", "0", "box"},
           {"--box", "pr", "--n", "2", "--format", "csv", "gisin"},
           {"--box", "pr", "--n", "2", "--format", "xml", "box"},
           {"--box", "pr", "--n", "2", "rohrlich"},
           {"--box", "pr", "--n", "4", "jpd", "--k", "2"},
       }) {
    const Result r = run_cli(args);
    EXPECT_EQ(r.code, cli::kUsage) << r.err;
    EXPECT_FALSE(r.err.empty());
  }
}

TEST(ParseArgs, HelpExitsZero) {
  const Result r = run_cli({"--help"});
  EXPECT_EQ(r.code, cli::kOk);
  EXPECT_NE(r.out.find("gisin"), std::string::npos);
}

TEST(Execute, JpdText) {
  const Result r = run_cli({"--box", "pr", "--n", "2", "jpd"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, 19), "(+,+;+,+) 1/8\n(+,+;");
  EXPECT_NE(r.out.find("valid=true"), std::string::npos);
}

TEST(Execute, ClosedFormAtN1) {
  const Result r = run_cli({"--box", "pr", "--n", "1", "jpd", "--closed-form"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("-1/16"), std::string::npos);
  EXPECT_NE(r.out.find("valid=false"), std::string::npos);
}

TEST(Execute, GisinText) {
  const Result r = run_cli({"--box", "pr", "--n", "4", "gisin"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("4/1 0/1 4/1 4/1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("eigenvalues -1.656854249492 -1.656854249492 9.656854249492 9.656854249492"),
            std::string::npos)
      << r.out;
}

TEST(Execute, MomentsJson) {
  const Result r = run_cli({"--box", "isotropic:1/2", "--n", "4", "--format", "json", "moments", "--k", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = io::Json::parse(r.out);
  EXPECT_EQ(j["second_moment_ab"]["value"], "22/1");
  EXPECT_EQ(j["moment"], "218/1");
  EXPECT_EQ(j["second_moment_ab"]["path"], "microscopic=effective=bruteforce");
}

TEST(Execute, RohrlichAndDistributionCsv) {
  Result r = run_cli({"--box", "pr", "--n", "5", "rohrlich", "--alice-setting", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "<(B0+B1)^2>_A0 = 20/1\n");
  r = run_cli({"--box", "isotropic:0", "--n", "2", "--format", "csv", "distribution"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, 6), "X,Y,p\n");
  EXPECT_NE(r.out.find("\n0,0,1/4\n"), std::string::npos);
}

TEST(Execute, DomainErrorsExitOne) {
  Result r = run_cli({"--box", "pr", "--n", "1", "jpd", "--kind", "fluctuations"});
  EXPECT_EQ(r.code, cli::kFailure);
  EXPECT_NE(r.err.find("error [domain]"), std::string::npos) << r.err;
  r = run_cli({"--box", "isotropic:1/2", "--n", "3", "rohrlich", "--alice-setting", "0"});
  EXPECT_EQ(r.code, cli::kFailure);
  r = run_cli({"--box", "pr", "--n", "13", "distribution"});
  EXPECT_EQ(r.code, cli::kFailure);
  EXPECT_NE(r.err.find("desk bound"), std::string::npos) << r.err;
}

TEST(Verify, PrPassesAndN1Fails) {
  Result r = run_cli({"--box", "pr", "--n", "4", "verify"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("all checks passed"), std::string::npos);
  r = run_cli({"--box", "pr", "--n", "1", "verify"});
  EXPECT_EQ(r.code, cli::kFailure);
  EXPECT_NE(r.out.find("[FAIL] JPD validity (averages)"), std::string::npos) << r.out;
}

TEST(Verify, SignallingFileFails) {
  const auto path = temp_file("signalling.json");
  {
    std::ofstream f(path);
    f << R"({"s_a":2,"s_b":2,"table":[
      [0,0,1,1,"1/4"],[0,0,1,-1,"1/4"],[0,0,-1,1,"1/4"],[0,0,-1,-1,"1/4"],
      [0,1,1,1,"1/2"],[0,1,1,-1,"1/4"],[0,1,-1,-1,"1/4"],
      [1,0,1,1,"1/4"],[1,0,1,-1,"1/4"],[1,0,-1,1,"1/4"],[1,0,-1,-1,"1/4"],
      [1,1,1,1,"1/4"],[1,1,1,-1,"1/4"],[1,1,-1,1,"1/4"],[1,1,-1,-1,"1/4"]]})";
  }
  const Result r = run_cli({"--box", "file:" + path.string(), "--n", "2", "verify"});
  EXPECT_EQ(r.code, cli::kFailure);
  EXPECT_NE(r.out.find("[FAIL] no-signalling"), std::string::npos) << r.out;
  std::filesystem::remove(path);
}

TEST(Output, DeterministicAndOutFile) {
  const std::vector<std::string> args{"--box", "isotropic:3/4", "--n", "4", "--format", "json", "jpd", "--kind", "fluctuations"};
  const Result a = run_cli(args);
  const Result b = run_cli(args);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  const auto path = temp_file("out.json");
  std::vector<std::string> with_out = args;
  with_out.insert(with_out.begin(), {"--out", path.string()});
  const Result c = run_cli(with_out);
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_TRUE(c.out.empty());
  std::ifstream f(path, std::ios::binary);
  std::stringstream content;
  content << f.rdbuf();
  EXPECT_EQ(content.str(), a.out);
  std::filesystem::remove(path);
}

TEST(Binary, ExitCodes) {
  EXPECT_EQ(exit_status_of("--box pr --n 4 verify"), 0);
  EXPECT_EQ(exit_status_of("--box pr --n 1 verify"), 1);
  EXPECT_EQ(exit_status_of("--box pr gisin"), 2);
  EXPECT_EQ(exit_status_of("--help"), 0);
}
