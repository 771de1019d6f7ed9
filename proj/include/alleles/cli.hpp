#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace alleles::cli {

inline constexpr const char* kVersion = "1.0.0";

/// Default output directory when --out is not given.
inline constexpr const char* kOutputDirEnv = "ALLELES_OUTPUT_DIR";

enum ExitCode : int {
  kSuccess = 0,
  kVerificationFailed = 1,
  kUsageError = 2,
  kResourceCap = 3,
};

/// Suites accepted by `verify`, in the order `all` runs them.
const std::vector<std::string>& suite_names();

/// Runs a full command line; args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace alleles::cli
