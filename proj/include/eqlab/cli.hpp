#pragma once

#include <ostream>

namespace eqlab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitValidation = 2;

// Entry point of the `eqlab` tool. Data goes to `out` (or to files named by
// flags), diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace eqlab
