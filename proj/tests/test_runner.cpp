#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mpplan/runner.hpp"
#include "mpplan/scenario.hpp"

using namespace mpplan;
namespace fs = std::filesystem;

namespace {

json minimal_config(const std::string& out_dir) {
  json j;
  j["world"] = {{"bounds", {0.0, 0.0, 100.0, 100.0}},
                {"landmark_count", 90},
                {"seed", 12}};
  j["sensor"] = {{"max_range", 14.0}, {"sigma_range", 0.1}, {"sigma_bearing_deg", 1.0}};
  j["motion"] = {{"sigma_xy", 0.1}, {"sigma_theta_deg", 0.6}};
  j["prior"] = {{"seed", 13},
                {"trajectory",
                 {{"kind", "line"}, {"from", {15.0, 30.0}}, {"to", {65.0, 40.0}}, {"poses", 8}}}};
  j["planning"] = {{"seed", 14},
                   {"path_count", 6},
                   {"prm_samples", 130},
                   {"goal", {30.0, 70.0}},
                   {"backend", "ramdl"}};
  j["output_dir"] = out_dir;
  return j;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("mpplan_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.push_back("");
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

TEST_CASE("run_scenario writes schema-valid result files") {
  const fs::path dir = fresh_dir("run");
  const ScenarioConfig cfg = parse_scenario(minimal_config(dir.string()));
  const RunReport report = run_scenario(cfg);

  REQUIRE(fs::exists(dir / "records.csv"));
  REQUIRE(fs::exists(dir / "plot_bounds.csv"));
  REQUIRE(fs::exists(dir / "report.json"));

  const auto rows = parse_csv(slurp(dir / "records.csv"));
  REQUIRE(rows.size() == 1 + report.records.size());
  REQUIRE(rows[0] ==
          std::vector<std::string>{"path_id", "lb", "ub", "exact", "pruned", "rows",
                                   "components", "tree_level", "state_reward"});

  // Full-precision round trip of every numeric field.
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    const auto& cells = rows[i + 1];
    REQUIRE(std::stoi(cells[0]) == report.records[i].path_id);
    REQUIRE(std::stod(cells[1]) == report.records[i].interval.lb);
    REQUIRE(std::stod(cells[2]) == report.records[i].interval.ub);
    REQUIRE(std::stod(cells[3]) == *report.records[i].exact);
  }

  const json jr = json::parse(slurp(dir / "report.json"));
  REQUIRE(jr.at("schema") == "mpplan-report-v1");
  REQUIRE(jr.at("selection").at("chosen_path_id") == report.selection.chosen_path_id);
  REQUIRE(jr.at("config").at("world").at("seed") == 12);
  REQUIRE(jr.at("timings").contains("one_time_s"));
}

TEST_CASE("identical configs produce byte-identical records") {
  const fs::path da = fresh_dir("det_a");
  const fs::path db = fresh_dir("det_b");
  json j = minimal_config(da.string());
  run_scenario(parse_scenario(j));
  j["output_dir"] = db.string();
  run_scenario(parse_scenario(j));
  REQUIRE(slurp(da / "records.csv") == slurp(db / "records.csv"));
  REQUIRE(slurp(da / "plot_bounds.csv") == slurp(db / "plot_bounds.csv"));
}

TEST_CASE("seed overrides change the scenario") {
  const fs::path da = fresh_dir("seed_a");
  const fs::path db = fresh_dir("seed_b");
  const ScenarioConfig cfg = parse_scenario(minimal_config(da.string()));
  run_scenario(cfg);
  RunOptions opts;
  opts.output_dir = db.string();
  opts.seed_override = 777;
  run_scenario(cfg, opts);
  REQUIRE(slurp(da / "records.csv") != slurp(db / "records.csv"));
}

TEST_CASE("per-path phase timings account for the evaluation total") {
  const fs::path dir = fresh_dir("acct");
  json j = minimal_config(dir.string());
  j["planning"]["path_count"] = 24;
  const RunReport report = run_scenario(parse_scenario(j));
  double phases = 0.0;
  for (const EvaluationRecord& r : report.records)
    phases += r.timings.assoc_s + r.timings.jacobian_s + r.timings.bounds_s +
              r.timings.exact_s;
  REQUIRE(phases <= report.evaluate_total_s * 1.10 + 0.01);
  REQUIRE(phases >= report.evaluate_total_s * 0.20 - 0.01);
}

TEST_CASE("replanning episodes land in episode.json") {
  const fs::path dir = fresh_dir("episode");
  json j = minimal_config(dir.string());
  j["replan_steps"] = 3;
  j["planning"]["path_count"] = 8;
  run_scenario(parse_scenario(j));
  REQUIRE(fs::exists(dir / "episode.json"));
  const json ep = json::parse(slurp(dir / "episode.json"));
  REQUIRE(ep.at("schema") == "mpplan-episode-v1");
  REQUIRE(ep.at("sessions").size() >= 1);
  REQUIRE(ep.at("sessions").size() <= 3);
}

TEST_CASE("config validation reports precise field errors") {
  json j = minimal_config("out");
  j["planning"].erase("seed");
  REQUIRE_THROWS_WITH(parse_scenario(j), Catch::Matchers::ContainsSubstring("planning.seed"));

  j = minimal_config("out");
  j["planning"]["backend"] = "magic";
  REQUIRE_THROWS_AS(parse_scenario(j), ConfigError);

  j = minimal_config("out");
  j["world"]["bounds"] = {0.0, 0.0, 100.0};
  REQUIRE_THROWS_AS(parse_scenario(j), ConfigError);

  j = minimal_config("out");
  j["prior"]["trajectory"]["kind"] = "spiral";
  REQUIRE_THROWS_AS(parse_scenario(j), ConfigError);
}

TEST_CASE("convergence sweep rows behave per the theory") {
  json j = minimal_config("unused");
  j["planning"]["path_count"] = 12;
  const ScenarioConfig cfg = parse_scenario(j);
  const auto rows = convergence_sweep_rows(cfg);
  REQUIRE(rows.size() >= 3);
  const double exact = rows[0][3];
  double prev_ub = 1e300;
  for (const auto& r : rows) {
    REQUIRE(r[1] <= exact + 1e-9);  // lb sandwich
    REQUIRE(r[2] >= exact - 1e-9);  // ub sandwich
    REQUIRE(r[2] <= prev_ub + 1e-9);  // ub monotone as Z^s grows
    prev_ub = r[2];
  }
  REQUIRE_THAT(rows.back()[1], Catch::Matchers::WithinAbs(exact, 1e-9));
  REQUIRE_THAT(rows.back()[2], Catch::Matchers::WithinAbs(exact, 1e-9));
}

TEST_CASE("depth sweep intervals widen with depth") {
  json j = minimal_config("unused");
  j["planning"]["path_count"] = 12;
  const ScenarioConfig cfg = parse_scenario(j);
  const auto rows = depth_sweep_rows(cfg);
  REQUIRE(rows.size() >= 2);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i][1] <= rows[i - 1][1] + 1e-9);  // lb non-increasing in depth
    REQUIRE(rows[i][2] >= rows[i - 1][2] - 1e-9);  // ub non-decreasing in depth
    const double w_prev = rows[i - 1][2] - rows[i - 1][1];
    const double w_cur = rows[i][2] - rows[i][1];
    REQUIRE(w_cur >= w_prev - 1e-9);
  }
}

TEST_CASE("sweep files are written with their schemas") {
  const fs::path dir = fresh_dir("sweep");
  json j = minimal_config(dir.string());
  j["planning"]["path_count"] = 10;
  j["sweep"] = {{"speedup", {{"m", {16, 32}}, {"inner", 4}}}};
  const ScenarioConfig cfg = parse_scenario(j);

  run_sweep("convergence", cfg);
  run_sweep("depth", cfg);
  run_sweep("speedup", cfg);
  REQUIRE(fs::exists(dir / "sweep_convergence.csv"));
  REQUIRE(fs::exists(dir / "sweep_depth.csv"));
  REQUIRE(fs::exists(dir / "sweep_speedup.csv"));
  const auto rows = parse_csv(slurp(dir / "sweep_speedup.csv"));
  REQUIRE(rows.size() == 3);  // header + 2 sizes
  REQUIRE(std::stod(rows[1][3]) > 0.0);

  REQUIRE_THROWS_AS(run_sweep("nonsense", cfg), ConfigError);
}

TEST_CASE("the command-line interface maps errors to exit codes") {
#ifndef MPPLAN_CLI_BIN
  SKIP("CLI binary path not provided");
#else
  const fs::path dir = fresh_dir("cli");
  const fs::path cfg_path = dir / "config.json";
  {
    std::ofstream out(cfg_path);
    out << minimal_config((dir / "out").string()).dump(2);
  }
  const std::string bin = MPPLAN_CLI_BIN;
  auto run = [](const std::string& cmd) {
    const int raw = std::system(cmd.c_str());
    return WEXITSTATUS(raw);
  };
  REQUIRE(run(bin + " validate " + cfg_path.string() + " > /dev/null") == 0);
  REQUIRE(run(bin + " run " + cfg_path.string() + " > /dev/null") == 0);
  REQUIRE(fs::exists(dir / "out" / "records.csv"));
  REQUIRE(run(bin + " validate /nonexistent.json 2> /dev/null") == 2);
  REQUIRE(run(bin + " sweep bogus " + cfg_path.string() + " 2> /dev/null") == 2);
  REQUIRE(run(bin + " 2> /dev/null") == 2);

  // Exit 2 on a config whose fields fail validation.
  const fs::path bad_path = dir / "bad.json";
  {
    json bad = minimal_config((dir / "out2").string());
    bad["planning"].erase("goal");
    std::ofstream out(bad_path);
    out << bad.dump(2);
  }
  REQUIRE(run(bin + " run " + bad_path.string() + " 2> /dev/null") == 2);
#endif
}
