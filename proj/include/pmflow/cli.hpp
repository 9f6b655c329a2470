#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pmflow {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitAnomalies = 4;

inline constexpr const char* kVersion = "0.1.0";

/// Runs the command line `args` (without the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lower-case hex SHA-256.
std::string sha256_hex(const std::string& bytes);

} // namespace pmflow
