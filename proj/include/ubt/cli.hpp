#pragma once

#include <string>
#include <vector>

namespace ubt::cli {

/// Runs one subcommand. Exit codes: 0 success, 2 usage, 3 config,
/// 4 data format, 5 numerical failure.
int run(const std::vector<std::string>& args);

}  // namespace ubt::cli
