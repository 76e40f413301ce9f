#include "autokey/runner.hpp"

#include <cctype>
#include <fstream>

#include "autokey/audit.hpp"
#include "autokey/scenario.hpp"

namespace autokey {

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << content;
}

std::string file_safe(const Address& a) {
    std::string out = a;
    for (auto& c : out) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '@' ||
                        c == '-' || c == '_';
        if (!ok) c = '_';
    }
    return out;
}

}  // namespace

int run_scenario(const std::string& path, const RunOptions& options, std::ostream& out,
                 std::ostream& err) {
    ScenarioSpec spec;
    try {
        spec = load_scenario(path);
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return kExitParseError;
    }
    if (options.seed) spec.seed = *options.seed;

    std::filesystem::create_directories(options.out_dir);
    DeterministicProvider crypto;
    std::vector<Event> partial;
    ScenarioRun run;
    try {
        run = play_scenario(spec, crypto, {}, &partial);
    } catch (const InvariantViolation& e) {
        write_file(options.out_dir / "transcript.jsonl", transcript_to_jsonl(partial));
        err << "invariant violation: " << e.what() << "\n";
        return kExitInvariantBreach;
    }
    const auto& transcript = run.sim->transcript();
    write_file(options.out_dir / "transcript.jsonl", transcript_to_jsonl(transcript));

    for (const auto& acct : run.sim->accounts()) {
        if (!acct.engine) continue;
        write_file(options.out_dir / ("keystore-" + file_safe(acct.primary) + ".txt"),
                   write_snapshot(acct.engine->keystore()));
    }

    Json meta;
    meta["scenario"] = spec.name;
    meta["seed"] = spec.seed;
    AuditReport report;
    try {
        report = evaluate_transcript(transcript, meta);
    } catch (const AuditError& e) {
        err << "audit error: " << e.what() << "\n";
        return kExitInvariantBreach;
    }
    write_file(options.out_dir / "audit.json", report_to_json(report).dump(2) + "\n");
    const auto table = report_table(report);
    write_file(options.out_dir / "audit.txt", table);
    out << "scenario " << spec.name << " (seed " << spec.seed << "): " << transcript.size()
        << " events\n\n"
        << table;
    return report.passed() ? kExitOk : kExitAuditFailed;
}

}  // namespace autokey
