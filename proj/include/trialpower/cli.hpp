#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace trialpower {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDataError = 2;

/// Subcommands: simulate, power, resample, analyze, samplesize. Reports go to
/// `out` unless --output is given; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace trialpower
