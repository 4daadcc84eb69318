#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace screencorr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

inline constexpr unsigned long long kDefaultSeed = 7;

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace screencorr::cli
