#include <doctest.h>

#include "cocyclelab/config.hpp"
#include "cocyclelab/report.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cocyclelab;
namespace fs = std::filesystem;

#ifndef COCYCLE_LAB_BINARY
#define COCYCLE_LAB_BINARY "cocycle-lab"
#endif
#ifndef COCYCLE_LAB_CONFIG_DIR
#define COCYCLE_LAB_CONFIG_DIR "configs"
#endif

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(COCYCLE_LAB_BINARY) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string config_path(const std::string& name) {
  return (fs::path(COCYCLE_LAB_CONFIG_DIR) / name).string();
}

Json base_config() {
  Json j;
  j["system"] = {{"kind", "torus_automorphism"},
                 {"matrix", Json::array({Json::array({2, 1}), Json::array({1, 1})})}};
  j["cocycle"] = {
      {"variant", "coboundary"},
      {"dimension", 2},
      {"alpha", 1.0},
      {"transfer",
       {{"kind", "rotation_field"},
        {"terms", Json::array({{{"freq", Json::array({1, 0})},
                                {"amplitude", 0.3},
                                {"phase", 0.0}}})}}}};
  return j;
}

}  // namespace

TEST_CASE("strict config parsing") {
  Json good = base_config();
  CHECK_NOTHROW((void)parse_config(good));

  Json bad = base_config();
  bad["system"]["matrrix"] = 3;
  bool threw = false;
  try {
    (void)parse_config(bad);
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::kConfigError &&
            std::string(e.what()).find("system.matrrix") != std::string::npos;
  }
  CHECK(threw);

  Json bad2 = base_config();
  bad2["livsic"] = {{"n_points", 100}, {"betaa", 0.1}};
  threw = false;
  try {
    (void)parse_config(bad2);
  } catch (const Error& e) {
    threw = std::string(e.what()).find("livsic.betaa") != std::string::npos;
  }
  CHECK(threw);

  Json bad3 = base_config();
  bad3["cocycle"]["variant"] = "mystery";
  CHECK_THROWS_AS((void)parse_config(bad3), Error);
}

TEST_CASE("config builders produce working objects") {
  ExperimentConfig cfg = parse_config(base_config());
  auto sys = make_system(cfg);
  CHECK(sys->is_torus());
  CocycleMap a = make_cocycle(cfg, sys);
  CHECK(a.dimension() == 2);
  CHECK(a.ground_truth() != nullptr);
  CHECK(cfg.effective_epsilon(*sys) ==
        doctest::Approx(0.05 * sys->closing_rate()));
}

TEST_CASE("cli exit codes") {
  // 2 on configuration problems
  CHECK(run_cli("obstructions --config /nonexistent.json --out /tmp/cl_none") == 2);
  {
    std::ofstream bad("/tmp/cl_bad.json");
    bad << "{\"system\": {\"kind\": \"torus_automorphism\", \"matrix\": "
           "[[2,1],[1,1]], \"oops\": 1}, \"cocycle\": {\"variant\": "
           "\"constant\", \"matrix\": [[1,0],[0,1]]}}";
  }
  CHECK(run_cli("obstructions --config /tmp/cl_bad.json --out /tmp/cl_none") == 2);

  // 0 when all checks pass
  {
    Json j = base_config();
    j["livsic"] = {{"n_max", 5}, {"n_points", 600}, {"seed", 4}, {"beta", 0.03}};
    std::ofstream out("/tmp/cl_small.json");
    out << j.dump(2);
  }
  CHECK(run_cli("obstructions --config /tmp/cl_small.json --out /tmp/cl_obs") == 0);

  // 1 when a check fails (diag cocycle fails the obstruction tolerance)
  {
    Json j = base_config();
    j["cocycle"] = {{"variant", "constant"},
                    {"matrix", Json::array({Json::array({2.0, 0.0}),
                                            Json::array({0.0, 0.5})})}};
    j["livsic"] = {{"n_max", 2}};
    std::ofstream out("/tmp/cl_diag.json");
    out << j.dump(2);
  }
  CHECK(run_cli("obstructions --config /tmp/cl_diag.json --out /tmp/cl_diag_out") == 1);
}

TEST_CASE("cli outputs are byte-deterministic") {
  {
    Json j = base_config();
    j["livsic"] = {{"n_max", 4}, {"n_points", 500}, {"seed", 9}, {"beta", 0.05}};
    j["output"] = {{"directory", "unused"}, {"formats", Json::array({"csv", "json"})}};
    std::ofstream out("/tmp/cl_det.json");
    out << j.dump(2);
  }
  REQUIRE(run_cli("transfer --config /tmp/cl_det.json --out /tmp/cl_det_a") == 0);
  REQUIRE(run_cli("transfer --config /tmp/cl_det.json --out /tmp/cl_det_b") == 0);
  CHECK(slurp("/tmp/cl_det_a/report.json") == slurp("/tmp/cl_det_b/report.json"));
  CHECK(slurp("/tmp/cl_det_a/transfer.csv") == slurp("/tmp/cl_det_b/transfer.csv"));
  CHECK(!slurp("/tmp/cl_det_a/transfer.csv").empty());
  // timings live apart so the comparison above stays meaningful
  CHECK(fs::exists("/tmp/cl_det_a/timings.json"));

  // seed override changes the sampled anchor and thus the report
  REQUIRE(run_cli("transfer --config /tmp/cl_det.json --out /tmp/cl_det_c --seed 77") == 0);
  CHECK(slurp("/tmp/cl_det_a/report.json") != slurp("/tmp/cl_det_c/report.json"));
}

TEST_CASE("reports are independent of the worker count") {
  {
    Json j = base_config();
    j["livsic"] = {{"n_max", 6},       {"n_points", 1200},
                   {"seed", 3},        {"beta", 0.03},
                   {"spectrum_iters", 2000}, {"exponent_iters", 2000},
                   {"spectrum_samples", 2}};
    j["lyapnorm"] = {{"truncation", 100}};
    j["holonomy"] = {{"pair_budget", 2000}};
    std::ofstream out("/tmp/cl_thr.json");
    out << j.dump(2);
  }
  REQUIRE(run_cli("verify --config /tmp/cl_thr.json --out /tmp/cl_thr1 --threads 1") == 0);
  REQUIRE(run_cli("verify --config /tmp/cl_thr.json --out /tmp/cl_thr4 --threads 4") == 0);
  CHECK(slurp("/tmp/cl_thr1/report.json") == slurp("/tmp/cl_thr4/report.json"));
  CHECK(slurp("/tmp/cl_thr1/verify.csv") == slurp("/tmp/cl_thr4/verify.csv"));
}

TEST_CASE("golden obstruction values through the cli") {
  // constant rotation by 0.3: every fixed-point defect is 2 sin(0.15)
  {
    Json j = base_config();
    j["cocycle"] = {{"variant", "constant"},
                    {"matrix", Json::array({Json::array({0.955336489125606, -0.29552020666133955}),
                                            Json::array({0.29552020666133955, 0.955336489125606})})}};
    j["livsic"] = {{"n_max", 1}};
    std::ofstream out("/tmp/cl_rot.json");
    out << j.dump(2);
  }
  CHECK(run_cli("obstructions --config /tmp/cl_rot.json --out /tmp/cl_rot_out") == 1);
  std::string csv = slurp("/tmp/cl_rot_out/obstructions.csv");
  CHECK(csv.find("period,p0,p1,defect") == 0);
  CHECK(csv.find("0.29887626494719843") != std::string::npos);  // 2 sin(0.15)
}

TEST_CASE("shipped configs parse") {
  for (const char* name :
       {"catmap_coboundary.json", "negative_diag.json", "catmap_half_holder.json",
        "shift_cylinder.json"}) {
    ExperimentConfig cfg = load_config(config_path(name));
    auto sys = make_system(cfg);
    CocycleMap a = make_cocycle(cfg, sys);
    CHECK(a.dimension() == 2);
  }
}
