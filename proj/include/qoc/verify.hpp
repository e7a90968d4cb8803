#pragma once

// Acceptance suite shared by the `verify` subcommand and the acceptance
// test binary.

#include "qoc/io.hpp"

#include <functional>
#include <string>
#include <vector>

namespace qoc::verify {

struct CriterionInfo {
  int id = 0;
  std::string name;
  std::vector<std::string> tags;
};

const std::vector<CriterionInfo>& criteria();

/// Empty filter selects everything; otherwise a comma-separated list of
/// criterion ids, names or tags.
bool selected(const CriterionInfo& c, const std::string& filter);

struct CriterionResult {
  CriterionInfo info;
  bool passed = false;
  std::string summary;  ///< measured values against their thresholds
  io::Json measured;
  double seconds = 0.0;
};

struct Options {
  std::string fixtures_dir;  ///< empty: the bundled fixtures
  std::string filter;
  unsigned long long seed = 2024;
  int threads = 0;
};

std::string default_fixtures_dir();

/// Runs the selected criteria in id order; `on_result` sees each result as
/// soon as it is available.
std::vector<CriterionResult> run(const Options& opts,
                                 const std::function<void(const CriterionResult&)>& on_result = {});

std::string format_line(const CriterionResult& r);
io::Json to_json(const std::vector<CriterionResult>& results);

}  // namespace qoc::verify
