#ifndef MECHNLI_CLI_H_
#define MECHNLI_CLI_H_

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace mechnli {

inline constexpr char kToolVersion[] = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,      // bad flags, bad config values
  kExitInput = 2,      // unreadable or malformed input, unavailable service
  kExitInvariant = 3,  // internal invariant violated
};

// Runs the `mechnli` tool on `args` (program name excluded).
int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

// Output metadata. `created_at` is the only field that varies between
// identical runs.
nlohmann::json MakeManifest(const std::string &command, const nlohmann::json &config,
                            std::uint64_t seed, const nlohmann::json &counts);

// Hex FNV-1a of the compact config dump.
std::string ConfigHash(const nlohmann::json &config);

// Parses flat `key = value` lines; `#` starts a comment. Throws
// InvalidConfig on a line without `=`.
std::map<std::string, std::string> ParseFlatConfig(const std::string &text);

}  // namespace mechnli

#endif  // MECHNLI_CLI_H_
