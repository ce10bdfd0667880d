#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "etsfs/core/error.hpp"

namespace etsfs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitData = 4;

int exit_code(ErrorCode code);

/// Entry point behind the etsfs executable; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace etsfs::cli
