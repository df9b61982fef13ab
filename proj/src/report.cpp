#include "cocyclelab/report.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>

namespace cocyclelab {

std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

void apply_expectations(std::vector<CheckResult>& checks,
                        const std::set<std::string>& expect_fail) {
  for (auto& c : checks)
    if (expect_fail.count(c.id)) c.expected_fail = true;
}

Json checks_to_json(const std::vector<CheckResult>& checks) {
  Json arr = Json::array();
  for (const auto& c : checks) {
    Json item;
    item["id"] = c.id;
    switch (c.state) {
      case CheckResult::State::kPass: item["state"] = "pass"; break;
      case CheckResult::State::kFail:
        item["state"] = c.expected_fail ? "expected-fail" : "fail";
        break;
      case CheckResult::State::kSkipped: item["state"] = "skipped"; break;
    }
    if (!std::isnan(c.value)) item["value"] = c.value;
    if (!c.detail.empty()) item["detail"] = c.detail;
    arr.push_back(std::move(item));
  }
  return arr;
}

void write_report(const RunReport& report, const std::string& dir,
                  const std::vector<std::string>& formats) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  bool want_json = false, want_csv = false;
  for (const auto& f : formats) {
    if (f == "json") want_json = true;
    if (f == "csv") want_csv = true;
  }

  if (want_json) {
    Json j;
    j["artifact"] = "cocycle-lab";
    j["version"] = "0.1.0";
    j["command"] = report.command;
    j["config"] = report.config_echo;
    j["summary"] = report.summary;
    j["checks"] = checks_to_json(report.checks);
    std::ofstream out(fs::path(dir) / "report.json", std::ios::binary);
    out << j.dump(2) << "\n";
  }

  if (want_csv) {
    for (const auto& table : report.tables) {
      std::ofstream out(fs::path(dir) / (table.name + ".csv"), std::ios::binary);
      for (size_t i = 0; i < table.header.size(); ++i) {
        if (i) out << ",";
        out << table.header[i];
      }
      out << "\n";
      for (const auto& row : table.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
          if (i) out << ",";
          out << row[i];
        }
        out << "\n";
      }
    }
  }

  {
    Json t;
    for (const auto& [k, v] : report.timings_seconds) t[k] = v;
    std::ofstream out(fs::path(dir) / "timings.json", std::ios::binary);
    out << t.dump(2) << "\n";
  }
}

}  // namespace cocyclelab
