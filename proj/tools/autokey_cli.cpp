#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "autokey/keystore.hpp"
#include "autokey/policy.hpp"
#include "autokey/runner.hpp"

namespace {

std::string format_instant(autokey::Instant t) {
    using namespace autokey;
    std::ostringstream os;
    os << t / kDay << "d" << (t % kDay) / kHour << "h" << (t % kHour) / kMinute << "m" << t % kMinute
       << "s";
    return os.str();
}

int print_keys(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "cannot open " << path << "\n";
        return autokey::kExitParseError;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    autokey::Keystore store;
    try {
        store = autokey::read_snapshot(ss.str());
    } catch (const autokey::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return autokey::kExitParseError;
    }
    std::cout << store.records().size() << " correspondent(s)\n";
    for (const auto& [addr, rec] : store.records()) {
        const auto& c = rec.current_cert;
        std::cout << "\n" << addr << "\n"
                  << "  current  " << c.fingerprint << "  " << format_instant(c.validity_start)
                  << " .. " << format_instant(c.validity_end) << "\n";
        if (rec.future_cert) {
            const auto& f = *rec.future_cert;
            std::cout << "  future   " << f.fingerprint << "  " << format_instant(f.validity_start)
                      << " .. " << format_instant(f.validity_end) << "\n";
        }
    }
    const auto secrets = store.pending_secrets();
    if (!secrets.empty()) std::cout << "\npending secrets (values withheld)\n";
    for (const auto& s : secrets) {
        std::cout << "  " << s.peer << "  " << autokey::to_string(s.direction) << "  expires "
                  << format_instant(s.expires_at) << "\n";
    }
    return autokey::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Automated key and trust management for email, in a simulated mail network."};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run a scenario and write transcript, audit and keystores");
    std::string scenario;
    autokey::RunOptions options;
    std::uint64_t seed = 0;
    run->add_option("scenario", scenario, "Scenario file (JSON)")->required();
    run->add_option("--out", options.out_dir, "Output directory")->capture_default_str();
    auto* seed_opt = run->add_option("--seed", seed, "Override the scenario seed");

    auto* quest = app.add_subcommand("questionnaire", "Print the policy produced by the installation questions");
    std::string a1, a2, a3;
    const auto yes_no = CLI::IsMember({"yes", "no"});
    quest->add_option("--q1", a1, std::string(autokey::kQuestionnaire[0]))->required()->check(yes_no);
    quest->add_option("--q2", a2, std::string(autokey::kQuestionnaire[1]))->required()->check(yes_no);
    quest->add_option("--q3", a3, std::string(autokey::kQuestionnaire[2]))->required()->check(yes_no);

    auto* keys = app.add_subcommand("keys", "Pretty-print a keystore snapshot");
    std::string snapshot;
    keys->add_option("snapshot", snapshot, "Keystore snapshot file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : autokey::kExitParseError;
    }

    if (*run) {
        if (*seed_opt) options.seed = seed;
        return autokey::run_scenario(scenario, options, std::cout, std::cerr);
    }
    if (*quest) {
        const auto policy = autokey::apply_questionnaire({a1 == "yes", a2 == "yes", a3 == "yes"});
        std::cout << autokey::describe_policy(policy);
        return autokey::kExitOk;
    }
    return print_keys(snapshot);
}
