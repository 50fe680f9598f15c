#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace loyalda {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUnstable = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "LOYALDA_OUT_DIR";

/// Entry point of the `loyalda` binary. `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses `key = value` lines ('#' starts a comment) into `--key=value`
/// tokens. A value of true/false toggles a flag. Throws Error on bad lines.
std::vector<std::string> config_tokens(const std::string& text);

}  // namespace loyalda
