#include <charconv>
#include <sstream>

#include "autokey/keystore.hpp"

namespace autokey {

namespace {

constexpr std::string_view kHeader = "autokey-keystore 1";

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const auto start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

void check_token(std::string_view s, std::string_view what) {
    if (s.empty() || s.find_first_of(" \t\r\n") != std::string_view::npos) {
        throw std::invalid_argument("snapshot " + std::string(what) + " must be a non-empty token");
    }
}

}  // namespace

std::string write_snapshot(const Keystore& store) {
    std::ostringstream out;
    out << kHeader << '\n';
    for (const auto& [addr, rec] : store.records()) {
        check_token(addr, "address");
        out << "record " << addr << ' ' << armor_body(rec.current_cert);
        if (rec.future_cert) {
            out << ' ' << armor_body(*rec.future_cert);
        }
        out << '\n';
    }
    for (const auto& s : store.pending_secrets()) {
        check_token(s.peer, "peer");
        check_token(s.secret, "secret");
        out << "secret " << s.peer << ' ' << to_string(s.direction) << ' ' << s.expires_at << ' '
            << s.secret << '\n';
    }
    return out.str();
}

Keystore read_snapshot(std::string_view text) {
    Keystore store;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const std::string where = "line " + std::to_string(line_no);

        if (line.empty() || line.front() == '#') continue;
        if (!saw_header) {
            if (line != kHeader) throw ParseError(where, "expected '" + std::string(kHeader) + "'");
            saw_header = true;
            continue;
        }

        const auto tok = split_ws(line);
        try {
            if (tok[0] == "record" && (tok.size() == 3 || tok.size() == 4)) {
                auto current = certificate_from_body(tok[2]);
                if (current.subject_address != tok[1]) {
                    throw ParseError("address", "certificate subject does not match record");
                }
                store.upsert_certificate(current, CertSlot::Current);
                if (tok.size() == 4) {
                    auto future = certificate_from_body(tok[3]);
                    if (future.subject_address != tok[1]) {
                        throw ParseError("address", "future certificate subject mismatch");
                    }
                    store.upsert_certificate(future, CertSlot::Future);
                }
            } else if (tok[0] == "secret" && tok.size() == 5) {
                PendingSecret s;
                s.peer = std::string(tok[1]);
                if (tok[2] == "initiator") {
                    s.direction = SecretDirection::Initiator;
                } else if (tok[2] == "responder") {
                    s.direction = SecretDirection::Responder;
                } else {
                    throw ParseError("direction", "expected initiator or responder");
                }
                const auto [p, ec] =
                    std::from_chars(tok[3].data(), tok[3].data() + tok[3].size(), s.expires_at);
                if (ec != std::errc{} || p != tok[3].data() + tok[3].size()) {
                    throw ParseError("expires_at", "not an integer");
                }
                s.secret = std::string(tok[4]);
                store.store_pending_secret(std::move(s));
            } else {
                throw ParseError("", "unrecognized entry");
            }
        } catch (const ParseError& e) {
            throw ParseError(where, e.what());
        } catch (const std::invalid_argument& e) {
            throw ParseError(where, e.what());
        }
    }
    if (!saw_header) {
        throw ParseError("header", "empty snapshot");
    }
    return store;
}

}  // namespace autokey
