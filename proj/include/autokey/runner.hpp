#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace autokey {

enum ExitCode : int {
    kExitOk = 0,
    kExitAuditFailed = 1,
    kExitParseError = 2,
    kExitInvariantBreach = 3,
};

struct RunOptions {
    std::filesystem::path out_dir = "run";
    std::optional<std::uint64_t> seed;
};

// Runs a scenario file and writes transcript.jsonl, audit.json, audit.txt and
// one keystore-<address>.txt per engine account into out_dir. The audit table
// goes to `out`, diagnostics to `err`.
int run_scenario(const std::string& path, const RunOptions& options, std::ostream& out,
                 std::ostream& err);

}  // namespace autokey
