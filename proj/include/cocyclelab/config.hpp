#pragma once

#include "cocyclelab/cocycle.hpp"

#include <json.hpp>

#include <memory>
#include <set>
#include <string>

namespace cocyclelab {

using Json = nlohmann::ordered_json;

struct SystemConfig {
  std::string kind;  // "torus_automorphism" | "full_shift"
  Matrix matrix;     // torus
  int alphabet = 2;  // shift
  double leaf_radius = 0.05;
  double bracket_radius = 0;  // 0: per-kind default
  int sample_window = 4096;
  int enum_budget = 14;
};

struct TransferConfig {
  std::string kind;  // "rotation_field" | "rotation_lacunary" | "cylinder"
  std::vector<GroundTruthTransfer::TrigTerm> terms;
  int levels = 24;
  double amplitude = 0.35;
  int base = 2;
  uint64_t phase_seed = 7;
  int depth = 0;
  int alphabet = 2;
  std::vector<std::pair<std::string, Matrix>> table;
};

struct CocycleConfig {
  std::string variant;  // constant | coboundary | locally_constant | torus_smooth
  int dimension = 2;
  double alpha = 1.0;
  double condition_bound = 1e8;
  Matrix matrix;  // constant
  TransferConfig transfer;
  int depth = 0;
  int alphabet = 2;
  std::vector<std::pair<std::string, Matrix>> table;  // locally_constant
  Matrix constant_term;
  std::vector<CocycleMap::SmoothTerm> terms;  // torus_smooth
};

struct LyapnormConfig {
  double epsilon = 0;  // 0: default 0.05 * alpha * eta
  int truncation = 200;
  double block_bound_n = 20.0;
};

struct LivsicConfig {
  int64_t n_max = 10;
  int64_t n_points = 10000;
  double beta = 0.01;
  uint64_t seed = 20260801;
  double defect_tolerance = 1e-8;
  double residual_tolerance = 1e-6;
  int64_t spectrum_iters = 20000;
  int64_t spectrum_samples = 4;
  int64_t exponent_iters = 100000;
  int64_t shadow_max_period = 24;
  int64_t extend_depth = 8;
  int64_t max_return_pairs = 400000;
  bool override_zero_check = false;
};

struct HolonomyConfig {
  int block_n = 5;
  double theta = 0.1;
  int k_max = 10;
  double tol = 1e-10;
  int64_t budget = 10000;
  int64_t pair_budget = 20000;
  double delta = 0;      // 0: bracket radius
  double slope_min = 0;  // 0,0: default band [0.8 alpha, 1.3 alpha]
  double slope_max = 0;
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats = {"csv", "json"};
};

struct ExperimentConfig {
  SystemConfig system;
  CocycleConfig cocycle;
  LyapnormConfig lyapnorm;
  LivsicConfig livsic;
  HolonomyConfig holonomy;
  OutputConfig output;
  std::set<std::string> expect_fail;
  Json echo;  // the parsed file, echoed into reports

  /// The epsilon actually used: the configured one, or the smallness default
  /// 0.05 * alpha * eta when left at zero.
  double effective_epsilon(const BaseSystem& sys) const;
  double effective_delta(const BaseSystem& sys) const;
  std::pair<double, double> slope_band() const;
};

/// Strict parse: unknown keys abort with the offending path.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);

std::shared_ptr<const BaseSystem> make_system(const ExperimentConfig& cfg);
CocycleMap make_cocycle(const ExperimentConfig& cfg,
                        std::shared_ptr<const BaseSystem> sys);

}  // namespace cocyclelab
