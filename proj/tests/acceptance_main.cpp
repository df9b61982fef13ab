// Acceptance gate: runs the eight shipped criteria on their canonical
// testbeds at full size and prints one pass/fail line per criterion.
// Exit code 0 only when every criterion passes.

#include "cocyclelab/verify.hpp"

#include <cstring>
#include <iostream>

int main(int argc, char** argv) {
  int threads = 1;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc)
      threads = std::atoi(argv[i + 1]);
  }
  std::vector<cocyclelab::CheckResult> results =
      cocyclelab::verify::acceptance_suite(threads);
  int failures = 0;
  for (const auto& r : results) {
    bool ok = r.state == cocyclelab::CheckResult::State::kPass;
    if (!ok) ++failures;
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << r.id << " — " << r.detail << "\n";
  }
  std::cout << (failures == 0 ? "ACCEPTANCE: all criteria pass"
                              : "ACCEPTANCE: " + std::to_string(failures) +
                                    " criterion(s) failing")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
