#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tractfeat {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDegenerate = 1;  // only with --strict
inline constexpr int kExitUsage = 2;

/// Entry point of the `tractfeat` command line; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tractfeat
