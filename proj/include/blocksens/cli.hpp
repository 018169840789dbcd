// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace blocksens::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitProtocol = 2;

/// Entry point of the `blocksens` executable. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Path of the running executable, used to spawn the built-in mock oracle.
std::string self_executable();

}  // namespace blocksens::cli
