#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
};

const std::string& cli() {
  static const std::string path = [] {
    const char* p = std::getenv("CATGATES_CLI");
    return std::string(p ? p : "catgates");
  }();
  return path;
}

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + cli() + "' " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  std::string out;
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("catgates_cli_" + std::to_string(::getpid()) + "_" +
                                         ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path write_config(const std::string& name, const json& j) {
    const fs::path p = root_ / name;
    std::ofstream(p) << j.dump(2);
    return p;
  }

  fs::path write_curves() {
    json curves = json::array();
    curves.push_back({{"scheme", "dbc"}, {"T", {0.4, 1.0, 4.0}}, {"p_z_na", {1e-3, 1e-5, 1e-7}},
                      {"p_x_na", {1e-9, 1e-10, 1e-11}}});
    const fs::path p = root_ / "curves.json";
    std::ofstream(p) << json{{"curves", curves}}.dump();
    return p;
  }

  fs::path root_;
};

}  // namespace

TEST_F(Cli, Version) {
  const Result r = run("--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("0.1.0"), std::string::npos);
}

TEST_F(Cli, SpectrumRunAndReport) {
  const fs::path out = root_ / "spec";
  const Result r = run("run -c " + write_config("c.json", {{"experiment", "spectrum"}}).string() + " -o " + out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const json s = json::parse(slurp(out / "spectrum.json"));
  EXPECT_NEAR(s.at("Delta1").get<double>(), -29.8423, 1e-3);
  EXPECT_NEAR(s.at("Delta2").get<double>(), -54.3255, 1e-3);
  const json m = json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m.at("experiment"), "spectrum");
  EXPECT_EQ(m.at("time_units").at("kerr"), "1/K");
  EXPECT_EQ(m.at("config_hash").get<std::string>().size(), 16u);

  const Result rep = run("report " + out.string());
  EXPECT_EQ(rep.code, 0);
  EXPECT_NE(rep.out.find("29.84"), std::string::npos) << rep.out;
}

TEST_F(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(run("run -c " + write_config("a.json", {{"experiment", "spectrum"}, {"bogus", 1}}).string()).code, 2);
  const json empty_k1 = {{"experiment", "gate"}, {"physics", {{"kappa1", json::array()}, {"T", {1.0}}}}};
  EXPECT_EQ(run("run -c " + write_config("b.json", empty_k1).string()).code, 2);
  const json even_d = {{"experiment", "qec-mc"},
                       {"physics", {{"kappa1", {1e-4}}, {"T", {1.0}}}},
                       {"numerics", {{"distances", {4}}}}};
  EXPECT_EQ(run("run -c " + write_config("c.json", even_d).string()).code, 2);
  EXPECT_EQ(run("run -c " + (root_ / "missing.json").string()).code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
}

TEST_F(Cli, NumericalFailureExitsThree) {
  const json c = {{"experiment", "spectrum"}, {"numerics", {{"fock_dim", 10}}}};
  const Result r = run("run -c " + write_config("c.json", c).string() + " -o " + (root_ / "o").string());
  EXPECT_EQ(r.code, 3) << r.out;
}

TEST_F(Cli, ReportEdgeCases) {
  const Result none = run("report " + (root_ / "nothing").string());
  EXPECT_EQ(none.code, 0);
  EXPECT_NE(none.out.find("no results"), std::string::npos);
  fs::create_directories(root_ / "loose");
  std::ofstream(root_ / "loose" / "gate.csv") << "a,b\n1,2\n";
  EXPECT_EQ(run("report " + (root_ / "loose").string()).code, 2);
}

TEST_F(Cli, QecMonteCarloIsDeterministic) {
  const json c = {{"experiment", "qec-mc"},
                  {"physics", {{"kappa1", {1e-3}}, {"schemes", {"dbc"}}}},
                  {"numerics", {{"distances", {3, 5}}, {"shots", 20000}, {"seed", 11}}},
                  {"inputs", {{"curves", write_curves().string()}}}};
  const fs::path cfg = write_config("c.json", c);
  ASSERT_EQ(run("run -c " + cfg.string() + " -o " + (root_ / "a").string()).code, 0);
  ASSERT_EQ(run("run -c " + cfg.string() + " --threads 3 -o " + (root_ / "b").string()).code, 0);
  const std::string a = slurp(root_ / "a" / "qec_mc.csv"), b = slurp(root_ / "b" / "qec_mc.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
  EXPECT_EQ(json::parse(slurp(root_ / "b" / "manifest.json")).at("threads"), 3);
  EXPECT_EQ(json::parse(slurp(root_ / "a" / "manifest.json")).at("seed"), 11);
}

TEST_F(Cli, OutputDirFromEnvironment) {
  const fs::path cfg = write_config("c.json", {{"experiment", "spectrum"}});
  const fs::path target = root_ / "from_env";
  const Result r = run("run -c " + cfg.string(), "CATGATES_OUTPUT_DIR='" + target.string() + "'");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(target / "manifest.json"));
}
