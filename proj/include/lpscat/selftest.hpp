#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lpscat {

struct PropertyResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SelftestOptions {
  std::uint64_t seed = 1;
  bool flip_sigma = false; // negative control: use the rejected mode sign
};

struct SelftestReport {
  int sigma = -1;
  int rhs_sign = -1;
  std::vector<PropertyResult> results;
  bool all_pass() const;
};

SelftestReport run_selftest(const SelftestOptions &opt);

} // namespace lpscat
