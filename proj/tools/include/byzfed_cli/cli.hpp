#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace byzfed::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the byzfed tool. args excludes the program name.
/// Progress goes to out, diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace byzfed::cli
