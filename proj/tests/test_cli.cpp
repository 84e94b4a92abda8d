#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "percgames_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(PERCGAMES_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string out(const std::string& name) {
  fs::create_directories(kDir);
  return (kDir / name).string();
}

}  // namespace

TEST(Cli, SolveGeometric) {
  const auto path = out("solve.json");
  ASSERT_EQ(run("solve --dist geometric:pi=0.5 --p 0.1 --q 0.1 --out " + path), 0);
  const auto j = nlohmann::json::parse(slurp(path));
  EXPECT_NEAR(j["w"].get<double>(), 0.375, 1e-8);
  EXPECT_NEAR(j["l"].get<double>(), 0.625, 1e-8);
  EXPECT_NEAR(j["draw"].get<double>(), 0.0, 1e-8);
  EXPECT_NEAR(j["site"]["win"].get<double>(), 0.4, 1e-8);
  EXPECT_EQ(j["config"]["dist"], "geometric:pi=0.5");
  EXPECT_TRUE(j.contains("version"));
}

TEST(Cli, SolveBoundaryFlag) {
  const auto path = out("boundary.json");
  ASSERT_EQ(run("solve --dist dirac:d=2 --p 0.25 --q 0 --out " + path), 0);
  EXPECT_TRUE(nlohmann::json::parse(slurp(path))["boundary_indeterminate"].get<bool>());
}

TEST(Cli, ConfigErrors) {
  EXPECT_EQ(run("solve --dist dirac:d=2 --p 0.6 --q 0.5"), 2);
  EXPECT_EQ(run("solve --dist nonsense --p 0.1 --q 0.1"), 2);
  EXPECT_EQ(run("solve --p 0.1 --q 0.1"), 2);
  EXPECT_EQ(run("solve --dist dirac:d=2 --p abc --q 0.1"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("phase-grid --dist dirac:d=2 --grid 0,1"), 2);
  EXPECT_EQ(run("pta --dist poisson:lambda=2 --p 0.1 --q 0.1"), 2);
}

TEST(Cli, ModuleErrorsExitThree) {
  EXPECT_EQ(run("duration --dist dirac:d=2 --p 0.01 --q 0.01"), 3);
  EXPECT_EQ(run("simulate --dist dirac:d=3 --p 0.1 --q 0.1 --depth 40 --replicates 1"), 3);
  EXPECT_EQ(run("pta --dist dirac:d=2 --p 0.1 --q 0.1 --depth 40 --replicates 1"), 3);
}

TEST(Cli, PhaseGridCsv) {
  const auto path = out("grid.csv");
  ASSERT_EQ(run("phase-grid --dist poisson:lambda=2.5 --grid '0,1,30x0,1,30' --out " + path), 0);
  const auto text = slurp(path);
  EXPECT_NE(text.find("# config: "), std::string::npos);
  EXPECT_NE(text.find("p,q,margin,draw_free_closed_form,draw_free_numeric,agreement\n"),
            std::string::npos);
  EXPECT_NE(text.find("# summary: agreement 100%"), std::string::npos);

  const auto geo = out("geo.csv");
  ASSERT_EQ(run("phase-grid --dist geometric:pi=0.3 --grid '0,0.9,10x0,0.9,10' --out " + geo), 0);
  std::istringstream lines(slurp(geo));
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'p') continue;
    ++rows;
    EXPECT_NE(line.find(",true,true,"), std::string::npos) << line;
  }
  EXPECT_GT(rows, 0);

  const auto one = out("one.csv");
  ASSERT_EQ(run("phase-grid --dist dirac:d=2 --grid '0.3,0.3,1x0.2,0.2,1' --out " + one), 0);
  std::istringstream single(slurp(one));
  rows = 0;
  while (std::getline(single, line)) rows += !line.empty() && line[0] != '#' && line[0] != 'p';
  EXPECT_EQ(rows, 1);
}

TEST(Cli, SimulateFieldsAndReproducible) {
  const auto a = out("sim_a.json"), b = out("sim_b.json");
  const std::string args =
      "simulate --dist dirac:d=2 --p 0.2 --q 0.2 --depth 1 --replicates 20000 --seed 5 --out ";
  ASSERT_EQ(run(args + a + " --workers 1"), 0);
  ASSERT_EQ(run(args + b + " --workers 3"), 0);
  EXPECT_EQ(slurp(a), slurp(b));
  const auto j = nlohmann::json::parse(slurp(a));
  for (const char* key : {"dist", "p", "q", "mode", "depth", "replicates", "w_hat", "l_hat", "d_hat",
                          "se_w", "se_l", "se_d", "w_n_exact", "l_n_exact", "seed"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_NEAR(j["w_hat"].get<double>(), 0.36, 4 * j["se_w"].get<double>());
}

TEST(Cli, PtaOutputs) {
  const auto path = out("pta.csv");
  ASSERT_EQ(run("pta --dist dirac:d=2 --p 0.4 --q 0.2 --depth 20 --replicates 100000 --seed 1 --out " +
                path),
            0);
  const auto text = slurp(path);
  EXPECT_NE(text.find("n,tv_hat,ci,verdict\n"), std::string::npos);
  EXPECT_NE(text.find("\n20,"), std::string::npos);
  const auto meta = nlohmann::json::parse(slurp(path + ".meta.json"));
  EXPECT_EQ(meta["verdict"], "ergodic-consistent");
  EXPECT_EQ(meta["d"], 2);
  EXPECT_TRUE(meta.contains("proxy_note"));
}

TEST(Cli, DurationBlocks) {
  const auto path = out("duration.json");
  ASSERT_EQ(run("duration --dist geometric:pi=0.5 --p 0.1 --q 0.1 --depth 30 --replicates 20000 "
                "--out " + path),
            0);
  const auto j = nlohmann::json::parse(slurp(path));
  EXPECT_TRUE(j["series"]["criterion_met"].get<bool>());
  EXPECT_LT(j["monte_carlo"]["unresolved_fraction"].get<double>(), 1e-3);
  EXPECT_TRUE(j["monte_carlo"]["within_4se"].get<bool>());
}

TEST(Cli, EnvWorkersDoNotChangeOutput) {
  const auto a = out("env_a.json"), b = out("env_b.json");
  const std::string args =
      " duration --dist poisson:lambda=1.1 --p 0.3 --q 0.2 --depth 12 --replicates 5000 --out ";
  ASSERT_EQ(run(args + a), 0);
  const std::string cmd = "PERCGAMES_WORKERS=3 " + std::string(PERCGAMES_CLI_PATH) + args + b +
                          " >/dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(slurp(a), slurp(b));
}
