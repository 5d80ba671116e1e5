#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("pdtmc_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = scratch() / name;
  std::ofstream(path) << text;
  return path.string();
}

Run run(const std::string& args, const std::string& stdin_path = "") {
  const std::string err = (scratch() / "stderr.txt").string();
  std::string cmd = std::string(PDTMC_CLI) + " " + args + " 2>" + err;
  if (!stdin_path.empty()) cmd += " <" + stdin_path;
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = support::read_text(err);
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

const std::string kModel = support::data_path("models/rad_snag.pm");
const std::string kBase = "--const MAX_TIME=2,MAX_TIME_TRAJECTORY=2,C_S2=10,C_S8=5,R_S7=10,BASE_REWARD_S3=20";
const std::string kTwoParamFixed = kBase + ",P4=0.88,P5=0.7,P6=0.05,P7=0.8,P8=0.05,P9=0.1,p10=0.8";

}  // namespace

TEST(Cli, ValidateSummary) {
  const auto r = run("validate " + kModel + " " + kBase + " --out -");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_GE(j.at("states").get<int>(), 10);
  EXPECT_EQ(j.at("parameters").size(), 9u);
  EXPECT_NE(r.err.find("P1"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("validate /nonexistent/model.pm").code, 2);
  EXPECT_EQ(run("validate " + kModel + " --const P2").code, 2);
  const auto bad = write_temp("bad.pm", "dtmc\nmodule m\n  s : [0..1] init 0;\n  [] s=0 -> (s'=1)\nendmodule\n");
  const auto r = run("validate " + bad);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 5"), std::string::npos) << r.err;
  EXPECT_TRUE(r.out.empty());
}

TEST(Cli, SymbolicGolden) {
  const auto r = run("symbolic " + kModel + " " + support::data_path("properties/snag_escalation.pctl") + " " +
                     kTwoParamFixed + " --param P2=0:0.9,P3=0:0.12 --expr-only --out -");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, support::read_text(support::data_path("tests/golden/escalation_two_param.txt")));
}

TEST(Cli, SymbolicEnvelopeToFile) {
  const auto path = (scratch() / "mitigation.jsonl").string();
  const auto r = run("symbolic " + kModel + " " + support::data_path("properties/snag_mitigation.pctl") + " " + kBase +
                     ",P3=0.1,P6=0.05,P9=0.1,p10=0.8 --param P2=0:1,P4=0:0.9,P5=0:1,P7=0:1,P8=0:1 --out " + path);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  const auto j = nlohmann::json::parse(support::read_text(path));
  EXPECT_TRUE(j.contains("expression"));
}

TEST(Cli, CheckExitCodes) {
  const auto props = write_temp("h1.pctl", "P<=0.1 [ F s=8 ]\n");
  // Detection always succeeds and the gripper never stalls: no route to s=8.
  const std::string safe = kBase + ",P2=1,P9=0,P3=1,P4=0,P5=0.7,P6=0.05,P7=0.8,P8=0.05,p10=0.8";
  auto r = run("check " + kModel + " " + props + " " + safe + " --out -");
  EXPECT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("value").get<double>(), 0.0);
  EXPECT_TRUE(j.at("satisfied").get<bool>());

  const std::string risky = kBase + ",P2=0,P9=0.1,P3=0.05,P4=0.88,P5=0.7,P6=0.05,P7=0.8,P8=0.05,p10=0.8";
  r = run("check " + kModel + " " + props + " " + risky + " --out -");
  EXPECT_EQ(r.code, 3);
  j = nlohmann::json::parse(r.out);
  EXPECT_FALSE(j.at("satisfied").get<bool>());

  EXPECT_EQ(run("check " + kModel + " " + props + " " + kBase).code, 2);

  const std::string overfull = kBase + ",P2=0.95,P9=0.1,P3=0.05,P4=0.88,P5=0.7,P6=0.05,P7=0.8,P8=0.05,p10=0.8";
  r = run("check " + kModel + " " + props + " " + overfull);
  EXPECT_EQ(r.code, 4) << r.err;
  EXPECT_TRUE(r.out.empty());
}

TEST(Cli, SweepCsv) {
  const std::string base = "sweep " + kModel + " " + kTwoParamFixed + " --param P2=0:0.9,P3=0:0.12 --target s=2 --resolution 10";
  const auto one = run(base + " --threads 1 --out -");
  const auto three = run(base + " --threads 3 --out -");
  ASSERT_EQ(one.code, 0) << one.err;
  EXPECT_EQ(one.out, three.out);
  const auto rows = lines(one.out);
  ASSERT_EQ(rows.size(), 101u);
  EXPECT_EQ(rows[0], "P2,P3,value");
  for (std::size_t i = 1; i <= 10; ++i) EXPECT_EQ(rows[i].substr(0, 2), "0,") << rows[i];
  for (std::size_t i = 1; i <= 10; ++i) EXPECT_EQ(rows[i].substr(rows[i].rfind(',') + 1), "0.99") << rows[i];

  const auto path = (scratch() / "sweep.csv").string();
  ASSERT_EQ(run(base + " --out " + path).code, 0);
  EXPECT_EQ(support::read_text(path), one.out);
}

TEST(Cli, SweepProxyReward) {
  const auto r = run("sweep " + kModel + " " + kBase + ",P2=0.9,P4=0.7,P5=0.65,P3=0.1,P6=0.05,P9=0.1,p10=0.8" +
                     " --param P7=0:1,P8=0:1 --quantity proxyReward --resolution 11 --out -");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 122u);
  double best = -1, worst = 1e9;
  std::string at_best, at_worst;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double v = std::stod(rows[i].substr(rows[i].rfind(',') + 1));
    const std::string cell = rows[i].substr(0, rows[i].rfind(','));
    if (v > best) best = v, at_best = cell;
    if (v < worst) worst = v, at_worst = cell;
  }
  EXPECT_GT(best, 6.0);
  EXPECT_LT(worst, 5.0);
  EXPECT_EQ(at_best, "1,0");
  EXPECT_EQ(at_worst, "0,1");
}

TEST(Cli, SweepRejectsOneAxis) {
  EXPECT_EQ(run("sweep " + kModel + " " + kTwoParamFixed + " --param P2=0:0.9 --target s=2").code, 2);
}

TEST(Cli, MonitorOneShotAndStream) {
  const std::string base = "monitor " + kModel + " " + kTwoParamFixed + " --prior P2=0.06,P3=0.05";
  auto r = run(base + " --out -");
  EXPECT_EQ(r.code, 3) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j.contains("decision"));
  EXPECT_EQ(j.at("decision").at("action"), "Abort");

  const auto events = write_temp("events.jsonl",
                                 "{\"time\": 1, \"param\": \"P2\", \"outcome\": 1}\n"
                                 "\n"
                                 "{\"time\": 2, \"transition\": [0, 1]}\n"
                                 "{\"time\": 3, \"transition\": [2, 8]}\n");
  r = run(base + " --events - --out -", events);
  EXPECT_EQ(lines(r.out).size(), 3u) << r.err;

  const auto bad = write_temp("bad_events.jsonl", "{\"time\": 1, \"param\": \"P7\", \"outcome\": 1}\n");
  EXPECT_EQ(run(base + " --events " + bad).code, 2);
  const auto junk = write_temp("junk_events.jsonl", "not json\n");
  EXPECT_EQ(run(base + " --events " + junk).code, 2);
}

TEST(Cli, MonitorEscalationOnlyPolicy) {
  const auto r = run("monitor " + kModel + " " + kTwoParamFixed +
                     " --prior P2=0.06,P3=0.05 --policy escalation-only --out -");
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("decision").at("action"), "CompliantMode");
}

TEST(Cli, MonitorCacheRoundTrip) {
  const std::string base = "monitor " + kModel + " " + kTwoParamFixed + " --prior P2=0.5,P3=0.05 --out -";
  const auto cache = (scratch() / "cache.json").string();
  const auto a = run(base + " --export-cache " + cache);
  const auto b = run(base + " --cache " + cache);
  EXPECT_EQ(a.code, b.code);
  auto ja = nlohmann::json::parse(a.out), jb = nlohmann::json::parse(b.out);
  EXPECT_EQ(ja.at("results"), jb.at("results"));
  // A cache built under different constants is refused.
  const auto other = run("monitor " + kModel + " " + kBase + ",P4=0.8,P5=0.7,P6=0.05,P7=0.8,P8=0.05,P9=0.1,p10=0.8" +
                         " --prior P2=0.5,P3=0.05 --cache " + cache);
  EXPECT_EQ(other.code, 2);
}

TEST(Cli, SimulateDeterministic) {
  const std::string base = "simulate " + kModel + " " + kTwoParamFixed + " --truth P2=0.3,P3=0.05 --episodes 25";
  const auto a = run(base + " --seed 4 --out -");
  const auto b = run(base + " --seed 4 --out -");
  const auto c = run(base + " --seed 5 --out -");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  const auto rows = lines(a.out);
  ASSERT_EQ(rows.size(), 26u);
  const auto meta = nlohmann::json::parse(rows[0]).at("meta");
  EXPECT_EQ(meta.at("seed"), 4);
  EXPECT_FALSE(meta.at("rng").get<std::string>().empty());
  const auto ep = nlohmann::json::parse(rows[1]);
  EXPECT_EQ(ep.at("states").front(), 0);
  EXPECT_EQ(ep.at("states").back(), 9);
}

TEST(Cli, SimulateClosedLoopSummary) {
  const auto summary = (scratch() / "summary.csv").string();
  const auto r = run("simulate " + kModel + " " + kTwoParamFixed +
                     " --truth P2=0.06,P3=0.05 --episodes 10 --seed 3 --closed-loop --policy escalation-only"
                     " --intervene CompliantMode:P2=1.5 --summary " + summary + " --out -");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(support::read_text(summary));
  ASSERT_EQ(rows.size(), 11u);
  EXPECT_EQ(rows[0], "episode,outcome,reward,cost,decisions");
  EXPECT_NE(rows[1].find("CompliantMode"), std::string::npos);
  EXPECT_EQ(run("simulate " + kModel + " " + kTwoParamFixed + " --truth P2=0.06,P3=0.05 --closed-loop"
                " --intervene Dance:P2=2").code,
            2);
}
