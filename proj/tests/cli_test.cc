#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "rss/cli.hpp"
#include "rss/config.hpp"

namespace rss {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rss_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  void WriteJson(const std::string& name, const Json& j) const { std::ofstream(Path(name)) << j.dump(2); }

  static std::string Slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  int Cli(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return RunCli(args, out_, err_);
  }

  Json OutJson() const { return Json::parse(out_.str()); }

  static Json Config(const std::string& topology, const std::string& alg, int iters, int n = 5) {
    Json objs = Json::array();
    const std::vector<std::vector<double>> f{{0, 0, 1}, {0, 0, 0, 0, 1}, {0, 0, 1, 0, 1}, {0, 0, 1, 0, 0.5},
                                             {0, 0, 0.5, 0, 1}};
    for (int j = 0; j < n; ++j) objs.push_back({{"type", "polynomial"}, {"coefficients", f[j % 5]}});
    return {{"algorithm", alg},
            {"topology", {{"family", topology}, {"n", n}}},
            {"objectives", objs},
            {"feasible", {{"lower", {-30}}, {"upper", {30}}}},
            {"max_iter", iters},
            {"seed", 1},
            {"delta", 1.0},
            {"delta_coeff", 0.05},
            {"d_max", 6},
            {"init", {{"evenly_spaced", {-1, 1}}}}};
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, RunWritesThreeArtifactsAndSummary) {
  WriteJson("run.json", Config("cycle", "rss-nb", 200));
  ASSERT_EQ(Cli({"run", "--config", Path("run.json"), "--out-dir", Path("out")}), kExitOk) << err_.str();
  for (const char* f : {"trace.json", "metrics.csv", "figure.csv"}) EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
  const Json s = OutJson();
  EXPECT_EQ(s["algorithm"], "rss-nb");
  EXPECT_EQ(s["rounds"], 200);
  EXPECT_NEAR(s["f_star"].get<double>(), 0.0, 1e-12);
  EXPECT_EQ(s["digest"].get<std::string>().size(), 16u);
  std::istringstream metrics(Slurp(Path("out/metrics.csv")));
  std::string line;
  int rows = 0;
  while (std::getline(metrics, line)) rows += line.rfind('#', 0) != 0;
  EXPECT_EQ(rows, 1 + 201);
}

TEST_F(CliTest, MalformedConfigExitsTwoWithoutOutputs) {
  Json bad = Config("cycle", "rss-nb", 10);
  bad["stepsize"] = 3;
  WriteJson("bad.json", bad);
  EXPECT_EQ(Cli({"run", "--config", Path("bad.json"), "--out-dir", Path("out")}), kExitUsage);
  EXPECT_FALSE(fs::exists(dir_ / "out" / "trace.json"));
  EXPECT_NE(err_.str().find("stepsize"), std::string::npos);
  EXPECT_EQ(Cli({"run", "--config", Path("missing.json")}), kExitUsage);
  EXPECT_EQ(Cli({"frobnicate"}), kExitUsage);
  EXPECT_EQ(Cli({"run"}), kExitUsage);
  EXPECT_EQ(Cli({"--help"}), kExitOk);
  EXPECT_EQ(Cli({"--version"}), kExitOk);
}

TEST_F(CliTest, ZeroDeltaRunMatchesDgdDigest) {
  Json nb = Config("cycle", "rss-nb", 300);
  nb["delta"] = 0.0;
  WriteJson("nb.json", nb);
  WriteJson("dgd.json", Config("cycle", "dgd", 300));
  ASSERT_EQ(Cli({"run", "--config", Path("nb.json"), "--out-dir", Path("nb")}), kExitOk);
  const std::string a = OutJson()["digest"];
  ASSERT_EQ(Cli({"run", "--config", Path("dgd.json"), "--out-dir", Path("dgd")}), kExitOk);
  EXPECT_EQ(OutJson()["digest"], a);
}

TEST_F(CliTest, RepeatedRunsDifferOnlyInTimestampLines) {
  WriteJson("run.json", Config("cycle", "rss-lb", 100));
  ASSERT_EQ(Cli({"run", "--config", Path("run.json"), "--out-dir", Path("a"), "--record-every", "10"}), kExitOk);
  ASSERT_EQ(Cli({"run", "--config", Path("run.json"), "--out-dir", Path("b"), "--record-every", "10"}), kExitOk);
  for (const char* f : {"trace.json", "metrics.csv", "figure.csv"}) {
    std::istringstream a(Slurp(Path(std::string("a/") + f)));
    std::istringstream b(Slurp(Path(std::string("b/") + f)));
    std::string la, lb;
    while (std::getline(a, la)) {
      ASSERT_TRUE(std::getline(b, lb));
      if (la.find("generated_at") == std::string::npos) EXPECT_EQ(la, lb) << f;
    }
    EXPECT_FALSE(std::getline(b, lb));
  }
}

TEST_F(CliTest, SweepWritesOneBlockPerCell) {
  Json sw{{"base", Config("cycle", "rss-nb", 50)},
          {"grid", Json::parse(R"({"algorithm": ["dgd", "rss-nb"], "delta": [1, 15], "seed": [1, 2, 3]})")},
          {"outputs", {{"metrics", "grid.csv"}}}};
  WriteJson("sweep.json", sw);
  ASSERT_EQ(Cli({"sweep", "--config", Path("sweep.json"), "--out-dir", Path("out"), "--jobs", "2"}), kExitOk)
      << err_.str();
  std::istringstream csv(Slurp(Path("out/grid.csv")));
  std::string line;
  std::map<std::string, int> per_cell;
  bool header = false;
  while (std::getline(csv, line)) {
    if (line.rfind('#', 0) == 0) continue;
    if (!header) {
      header = true;
      EXPECT_EQ(line.rfind("k,algorithm,delta,seed,", 0), 0u);
      continue;
    }
    std::stringstream ss(line);
    std::string k, alg, delta;
    std::getline(ss, k, ',');
    std::getline(ss, alg, ',');
    std::getline(ss, delta, ',');
    ++per_cell[alg + "/" + delta + "/" + k];
  }
  EXPECT_EQ(per_cell.size(), (1u + 2u) * 51u);
  for (const auto& [key, count] : per_cell) EXPECT_EQ(count, 3) << key;
  EXPECT_EQ(OutJson()["cells"], 9);
}

TEST_F(CliTest, EmptySweepWritesHeaderOnly) {
  WriteJson("sweep.json", Json{{"base", Config("cycle", "rss-nb", 10)}, {"grid", {{"seed", Json::array()}}}});
  ASSERT_EQ(Cli({"sweep", "--config", Path("sweep.json"), "--out-dir", Path("out")}), kExitOk);
  std::istringstream csv(Slurp(Path("out/sweep.csv")));
  std::string line;
  int data = 0;
  while (std::getline(csv, line)) data += line.rfind('#', 0) != 0;
  EXPECT_EQ(data, 1);
}

TEST_F(CliTest, AuditPassesOnCleanTraceAndFailsOnCorruption) {
  WriteJson("run.json", Config("cycle", "dgd", 10000));
  ASSERT_EQ(Cli({"run", "--config", Path("run.json"), "--out-dir", Path("out")}), kExitOk);
  const std::string trace = Path("out/trace.json");
  ASSERT_EQ(Cli({"audit", "--trace", trace}), kExitOk) << out_.str();
  EXPECT_TRUE(OutJson()["pass"].get<bool>());

  // Perturbed runs keep a disagreement of order alpha_K * delta.
  Json nb = Config("cycle", "rss-nb", 10000);
  WriteJson("nb.json", nb);
  ASSERT_EQ(Cli({"run", "--config", Path("nb.json"), "--out-dir", Path("nb")}), kExitOk);
  EXPECT_EQ(Cli({"audit", "--trace", Path("nb/trace.json"), "--checks", "consensus"}), kExitFailure);
  nb["consensus_threshold"] = 1e-2;
  WriteJson("nb.json", nb);
  ASSERT_EQ(Cli({"run", "--config", Path("nb.json"), "--out-dir", Path("nb")}), kExitOk);
  EXPECT_EQ(Cli({"audit", "--trace", Path("nb/trace.json")}), kExitOk) << out_.str();

  Json j = Json::parse(Slurp(trace));
  j["states"][7] = 45.0;
  WriteJson("corrupt.json", j);
  EXPECT_EQ(Cli({"audit", "--trace", Path("corrupt.json"), "--checks", "invariants"}), kExitFailure);
  EXPECT_FALSE(OutJson()["pass"].get<bool>());

  ASSERT_EQ(Cli({"audit", "--trace", trace, "--checks", "invariants,disagreement_bound", "--text"}), kExitOk);
  const std::string table = out_.str();
  EXPECT_NE(table.find("invariants          PASS"), std::string::npos) << table;
  EXPECT_NE(table.find("disagreement_bound  PASS"), std::string::npos) << table;
  EXPECT_EQ(table.substr(table.size() - 5), "PASS\n");

  EXPECT_EQ(Cli({"audit", "--trace", trace, "--checks", "invariants,bogus"}), kExitUsage);
  EXPECT_EQ(Cli({"audit", "--trace", Path("nope.json")}), kExitUsage);

  Json inv_k = Config("cycle", "dgd", 100);
  inv_k["schedule"] = {{"kind", "inv_k"}, {"a", 1.0}};
  WriteJson("invk.json", inv_k);
  ASSERT_EQ(Cli({"run", "--config", Path("invk.json"), "--out-dir", Path("invk")}), kExitOk);
  EXPECT_EQ(Cli({"audit", "--trace", Path("invk/trace.json"), "--checks", "gap_envelope"}), kExitUsage);
  EXPECT_EQ(Cli({"audit", "--trace", Path("invk/trace.json"), "--checks", "invariants,disagreement_bound,recursion_bound"}), kExitOk);
}

TEST_F(CliTest, PrivacyOutcomesFollowConnectivity) {
  WriteJson("k5.json", Config("complete", "fs", 200));
  ASSERT_EQ(Cli({"run", "--config", Path("k5.json"), "--out-dir", Path("k5")}), kExitOk);
  ASSERT_EQ(Cli({"privacy", "--trace", Path("k5/trace.json"), "--coalition", "3,4"}), kExitOk) << out_.str();
  EXPECT_TRUE(OutJson()["pass"].get<bool>());

  WriteJson("alt.json", Json::parse(R"({"alternatives": {"1": {"type": "polynomial", "coefficients": [0, 3, 0, 0, 0, 0, 1]}}})"));
  EXPECT_EQ(Cli({"privacy", "--trace", Path("k5/trace.json"), "--coalition", "3,4", "--targets", "1", "--alt",
                 Path("alt.json")}),
            kExitOk)
      << out_.str();
  EXPECT_EQ(Cli({"privacy", "--trace", Path("k5/trace.json"), "--coalition", "3,4", "--targets", "2", "--alt",
                 Path("alt.json")}),
            kExitUsage);

  WriteJson("c5.json", Config("cycle", "fs", 200));
  ASSERT_EQ(Cli({"run", "--config", Path("c5.json"), "--out-dir", Path("c5")}), kExitOk);
  EXPECT_EQ(Cli({"privacy", "--trace", Path("c5/trace.json"), "--coalition", "1,3"}), kExitFailure);
  const Json cut = OutJson();
  EXPECT_FALSE(cut["pass"].get<bool>());
  ASSERT_TRUE(cut.contains("necessity_demo"));
  EXPECT_TRUE(cut["necessity_demo"]["pass"].get<bool>());

  EXPECT_EQ(Cli({"privacy", "--trace", Path("c5/trace.json"), "--coalition", "0,1,2,3,4"}), kExitUsage);

  WriteJson("dgd.json", Config("cycle", "dgd", 20));
  ASSERT_EQ(Cli({"run", "--config", Path("dgd.json"), "--out-dir", Path("dgd")}), kExitOk);
  EXPECT_EQ(Cli({"privacy", "--trace", Path("dgd/trace.json"), "--coalition", "1"}), kExitUsage);
}

TEST_F(CliTest, BoundsReportsContractionAndConnectivity) {
  WriteJson("run.json", Config("cycle", "rss-nb", 10));
  ASSERT_EQ(Cli({"bounds", "--config", Path("run.json")}), kExitOk);
  const Json b = OutJson();
  EXPECT_NEAR(b["bounds"]["beta"].get<double>(), 1.0 - (1.0 / 3.0) / 100.0, 1e-15);
  EXPECT_EQ(b["vertex_connectivity"], 2);
  EXPECT_EQ(b["min_degree"], 2);
  EXPECT_TRUE(b["schedule_convergent"].get<bool>());
  EXPECT_EQ(b["agents"].size(), 5u);
}

}  // namespace
}  // namespace rss
