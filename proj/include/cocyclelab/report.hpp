#pragma once

#include "cocyclelab/config.hpp"

#include <map>
#include <string>
#include <vector>

namespace cocyclelab {

struct CheckResult {
  std::string id;
  enum class State { kPass, kFail, kSkipped } state = State::kSkipped;
  bool expected_fail = false;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::string detail;

  static CheckResult pass(std::string id, double value, std::string detail = "") {
    return {std::move(id), State::kPass, false, value, std::move(detail)};
  }
  static CheckResult fail(std::string id, double value, std::string detail = "") {
    return {std::move(id), State::kFail, false, value, std::move(detail)};
  }
  static CheckResult make(std::string id, bool ok, double value,
                          std::string detail = "") {
    return ok ? pass(std::move(id), value, std::move(detail))
              : fail(std::move(id), value, std::move(detail));
  }
  static CheckResult skip(std::string id, std::string reason) {
    return {std::move(id), State::kSkipped, false,
            std::numeric_limits<double>::quiet_NaN(), std::move(reason)};
  }
};

struct CsvTable {
  std::string name;  // file stem
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct RunReport {
  std::string command;
  Json config_echo;
  Json summary;  // per-command free-form results
  std::vector<CheckResult> checks;
  std::vector<CsvTable> tables;
  std::map<std::string, double> timings_seconds;

  bool all_checks_pass() const {
    for (const auto& c : checks)
      if (c.state == CheckResult::State::kFail) return false;
    return true;
  }
};

/// Shortest round-trip decimal formatting; '.' decimal point, no grouping.
std::string format_double(double v);

/// Marks expected failures from the config's expect_fail list.
void apply_expectations(std::vector<CheckResult>& checks,
                        const std::set<std::string>& expect_fail);

/// Writes <dir>/report.json, <dir>/<table>.csv per table, and
/// <dir>/timings.json (timings isolated so the rest is byte-deterministic).
void write_report(const RunReport& report, const std::string& dir,
                  const std::vector<std::string>& formats);

Json checks_to_json(const std::vector<CheckResult>& checks);

}  // namespace cocyclelab
