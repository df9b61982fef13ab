#pragma once

#include "cocyclelab/holonomy.hpp"
#include "cocyclelab/report.hpp"

namespace cocyclelab::verify {

/// The config-driven invariant matrix behind `cocycle-lab verify`: every
/// check the acceptance suite runs, instantiated on the configured system
/// and cocycle (pinned reference checks are config-independent). Checks that
/// need structure the config does not provide are reported skipped with a
/// reason.
std::vector<CheckResult> run_config_suite(const ExperimentConfig& cfg,
                                          int threads);

/// The acceptance gate: the eight criteria on their canonical testbeds at
/// full size, tolerances pinned in code. One composite result per criterion.
std::vector<CheckResult> acceptance_suite(int threads);

}  // namespace cocyclelab::verify
