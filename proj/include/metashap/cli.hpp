#pragma once

#include <string>
#include <vector>

namespace metashap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

// Entry point of the `metashap` binary. Returns the process exit code.
int run(int argc, const char* const* argv);

// Same, with argv[0] supplied.
int run(const std::vector<std::string>& args);

} // namespace metashap::cli
