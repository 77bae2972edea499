#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace revtrack::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Runs one `revtrack` invocation. `args` excludes the program name. Data
/// goes to files (or `out` for printing commands); diagnostics go to `err`.
int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace revtrack::cli
