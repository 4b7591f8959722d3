#include "botsim/telnet.hpp"

#include <algorithm>

#include "botsim/errors.hpp"

namespace botsim {

Bytes bytes_from_string(const std::string& s) {
    return Bytes(s.begin(), s.end());
}

std::string string_from_bytes(const Bytes& b) {
    return std::string(b.begin(), b.end());
}

std::optional<Bytes> bytes_from_hex(const std::string& hex) {
    if (hex.size() % 2 != 0) return {};
    const auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        const int hi = nibble(hex[i]);
        const int lo = nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) return {};
        out.push_back(static_cast<std::uint8_t>(hi * 16 + lo));
    }
    return out;
}

std::string hex_from_bytes(const Bytes& b) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(b.size() * 2);
    for (std::uint8_t v : b) {
        out.push_back(digits[v >> 4]);
        out.push_back(digits[v & 0xF]);
    }
    return out;
}

Bytes policy_response(const Bytes& pattern) {
    Bytes out;
    std::size_t i = 0;
    while (i < pattern.size()) {
        if (pattern[i] == telnet::Iac && i + 2 < pattern.size()) {
            const std::uint8_t verb = pattern[i + 1];
            const std::uint8_t opt = pattern[i + 2];
            if (verb == telnet::Do) {
                out.insert(out.end(), {telnet::Iac, telnet::Wont, opt});
            } else if (verb == telnet::Will) {
                out.insert(out.end(), {telnet::Iac, telnet::Dont, opt});
            }
            i += 3;
        } else {
            ++i;
        }
    }
    return out;
}

NegotiationScript default_negotiation_script() {
    NegotiationScript s;
    s.pre_steps = {
        {{telnet::Iac, telnet::Do, 24}, {}},   // terminal type
        {{telnet::Iac, telnet::Will, 1}, {}},  // echo
        {{telnet::Iac, telnet::Will, 3}, {}},  // suppress go-ahead
    };
    s.username_prompt = bytes_from_string("login: ");
    s.password_prompt = bytes_from_string("Password: ");
    s.success_banner = bytes_from_string("\r\n$ ");
    s.failure_banner = bytes_from_string("Login incorrect");
    return s;
}

const char* client_state_name(ClientState s) {
    switch (s) {
    case ClientState::TcpHandshake: return "tcp_handshake";
    case ClientState::Negotiating: return "negotiating";
    case ClientState::AwaitUserPrompt: return "await_user_prompt";
    case ClientState::SentUser: return "sent_user";
    case ClientState::AwaitPassPrompt: return "await_pass_prompt";
    case ClientState::SentPass: return "sent_pass";
    case ClientState::AwaitResult: return "await_result";
    case ClientState::LoggedIn: return "logged_in";
    case ClientState::Failed: return "failed";
    }
    return "?";
}

namespace {

Bytes step_response(const ScriptStep& step) {
    return step.respond.empty() ? policy_response(step.expect) : step.respond;
}

bool starts_with(const Bytes& buf, const Bytes& prefix) {
    return buf.size() >= prefix.size() && std::equal(prefix.begin(), prefix.end(), buf.begin());
}

} // namespace

TelnetClientFsm::TelnetClientFsm(const NegotiationScript& script, const CredentialList& creds,
                                 std::size_t cred_index, int prompt_byte_budget)
    : script_(&script), creds_(&creds), cred_index_(cred_index),
      budget_limit_(prompt_byte_budget), budget_left_(prompt_byte_budget) {}

void TelnetClientFsm::start_connection() {
    state_ = ClientState::TcpHandshake;
    pre_cursor_ = 0;
    inter_cursor_ = 0;
    buf_.clear();
    budget_left_ = budget_limit_;
}

void TelnetClientFsm::connection_up() {
    if (state_ != ClientState::TcpHandshake)
        throw SimError("connection_up() outside TcpHandshake");
    state_ = ClientState::Negotiating;
}

FsmOutput TelnetClientFsm::consume_iacs(const Bytes& inbound) {
    if (state_ != ClientState::Negotiating) throw SimError("consume_iacs() outside Negotiating");
    return consume(inbound);
}

FsmOutput TelnetClientFsm::consume_user_prompt(const Bytes& inbound) {
    if (state_ != ClientState::AwaitUserPrompt)
        throw SimError("consume_user_prompt() outside AwaitUserPrompt");
    return consume(inbound);
}

FsmOutput TelnetClientFsm::consume_pass_prompt(const Bytes& inbound) {
    if (state_ != ClientState::AwaitPassPrompt)
        throw SimError("consume_pass_prompt() outside AwaitPassPrompt");
    return consume(inbound);
}

/// Strict in-order script matching. Unscripted but well-formed IAC triples
/// get the refuse-all treatment without advancing the script; anything
/// else that diverges from the expected pattern is a desync, which is how
/// a server flavor the script was not written for shows up.
bool TelnetClientFsm::match_steps(const std::vector<ScriptStep>& steps, std::size_t& cursor,
                                  Bytes& out, bool& desync, bool& need_more) {
    while (cursor < steps.size()) {
        const ScriptStep& step = steps[cursor];
        if (starts_with(buf_, step.expect)) {
            buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(step.expect.size()));
            const Bytes resp = step_response(step);
            out.insert(out.end(), resp.begin(), resp.end());
            ++cursor;
            continue;
        }
        if (buf_.empty() || starts_with(step.expect, buf_)) {
            need_more = true;
            return false;
        }
        if (buf_[0] == telnet::Iac) {
            if (buf_.size() < 3) {
                need_more = true;
                return false;
            }
            const Bytes triple(buf_.begin(), buf_.begin() + 3);
            const Bytes resp = policy_response(triple);
            if (!resp.empty() || triple[1] == telnet::Wont || triple[1] == telnet::Dont) {
                // tolerated unscripted option chatter
                out.insert(out.end(), resp.begin(), resp.end());
                buf_.erase(buf_.begin(), buf_.begin() + 3);
                continue;
            }
        }
        desync = true;
        return false;
    }
    return true;
}

std::optional<std::size_t> TelnetClientFsm::find_marker(const Bytes& marker) {
    const auto it = std::search(buf_.begin(), buf_.end(), marker.begin(), marker.end());
    if (it == buf_.end()) return {};
    return static_cast<std::size_t>(it - buf_.begin());
}

FsmOutput TelnetClientFsm::consume(const Bytes& inbound) {
    FsmOutput out;
    if (state_ == ClientState::LoggedIn || state_ == ClientState::Failed ||
        state_ == ClientState::TcpHandshake)
        return out;
    buf_.insert(buf_.end(), inbound.begin(), inbound.end());

    const auto fail = [&](TelnetStatus status) -> FsmOutput& {
        state_ = ClientState::Failed;
        out.status = status;
        if (status == TelnetStatus::ProtocolDesync) ++desyncs_;
        return out;
    };

    // charge the budget for bytes scanned past in a wait state without
    // finding the marker; everything but a possible marker prefix goes
    const auto scan_charge = [&](std::size_t keep_tail) -> bool {
        const std::size_t keep = std::min(buf_.size(), keep_tail);
        const std::size_t discard = buf_.size() - keep;
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(discard));
        budget_left_ -= static_cast<int>(discard) + static_cast<int>(keep);
        // retained bytes are re-scanned next time, so refund them
        budget_left_ += static_cast<int>(keep);
        return budget_left_ > 0;
    };

    for (;;) {
        switch (state_) {
        case ClientState::Negotiating: {
            bool desync = false, need_more = false;
            if (!match_steps(script_->pre_steps, pre_cursor_, out.response, desync, need_more)) {
                if (desync) return fail(TelnetStatus::ProtocolDesync);
                return out;
            }
            state_ = ClientState::AwaitUserPrompt;
            budget_left_ = budget_limit_;
            continue;
        }
        case ClientState::AwaitUserPrompt: {
            const auto pos = find_marker(script_->username_prompt);
            if (!pos) {
                if (!scan_charge(script_->username_prompt.empty()
                                     ? 0
                                     : script_->username_prompt.size() - 1))
                    return fail(TelnetStatus::PromptTimeout);
                return out;
            }
            budget_left_ -= static_cast<int>(*pos);
            if (budget_left_ <= 0) return fail(TelnetStatus::PromptTimeout);
            buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(
                                                       *pos + script_->username_prompt.size()));
            const Bytes user = bytes_from_string(current_credential().username + "\r\n");
            out.response.insert(out.response.end(), user.begin(), user.end());
            ++usernames_sent_;
            state_ = ClientState::SentUser;
            continue;
        }
        case ClientState::SentUser:
            state_ = ClientState::AwaitPassPrompt;
            inter_cursor_ = 0;
            budget_left_ = budget_limit_;
            continue;
        case ClientState::AwaitPassPrompt: {
            bool desync = false, need_more = false;
            if (!match_steps(script_->interstitial_steps, inter_cursor_, out.response, desync,
                             need_more)) {
                if (desync) return fail(TelnetStatus::ProtocolDesync);
                return out;
            }
            const auto pos = find_marker(script_->password_prompt);
            if (!pos) {
                if (!scan_charge(script_->password_prompt.empty()
                                     ? 0
                                     : script_->password_prompt.size() - 1))
                    return fail(TelnetStatus::PromptTimeout);
                return out;
            }
            budget_left_ -= static_cast<int>(*pos);
            if (budget_left_ <= 0) return fail(TelnetStatus::PromptTimeout);
            buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(
                                                       *pos + script_->password_prompt.size()));
            const Bytes pass = bytes_from_string(current_credential().password + "\r\n");
            out.response.insert(out.response.end(), pass.begin(), pass.end());
            ++attempts_made_;
            state_ = ClientState::SentPass;
            continue;
        }
        case ClientState::SentPass:
            state_ = ClientState::AwaitResult;
            budget_left_ = budget_limit_;
            continue;
        case ClientState::AwaitResult: {
            const auto ok_pos = find_marker(script_->success_banner);
            const auto bad_pos = find_marker(script_->failure_banner);
            if (!ok_pos && !bad_pos) {
                const std::size_t tail =
                    std::max(script_->success_banner.size(), script_->failure_banner.size());
                if (!scan_charge(tail > 0 ? tail - 1 : 0))
                    return fail(TelnetStatus::PromptTimeout);
                return out;
            }
            if (ok_pos && (!bad_pos || *ok_pos <= *bad_pos)) {
                out.logged_in = true;
                state_ = ClientState::LoggedIn;
                return out;
            }
            buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(
                                                       *bad_pos + script_->failure_banner.size()));
            out.attempt_failed = true;
            ++cred_index_;
            if (creds_exhausted()) {
                state_ = ClientState::Failed;
                return out;
            }
            // same connection: server will prompt again
            state_ = ClientState::AwaitUserPrompt;
            budget_left_ = budget_limit_;
            continue;
        }
        default:
            return out;
        }
    }
}

TelnetServerFsm::TelnetServerFsm(const NegotiationScript& script,
                                 std::optional<Credentials> device_creds,
                                 int max_attempts_per_connection)
    : script_(&script), creds_(std::move(device_creds)), max_attempts_(max_attempts_per_connection) {}

Bytes TelnetServerFsm::pump() {
    Bytes out;
    for (;;) {
        if (state_ == SState::Pre) {
            if (pre_cursor_ >= script_->pre_steps.size()) {
                out.insert(out.end(), script_->username_prompt.begin(),
                           script_->username_prompt.end());
                state_ = SState::AwaitUser;
                return out;
            }
            const ScriptStep& step = script_->pre_steps[pre_cursor_];
            out.insert(out.end(), step.expect.begin(), step.expect.end());
            if (!step_response(step).empty()) return out; // wait for the client's answer
            ++pre_cursor_;
            continue;
        }
        if (state_ == SState::Interstitial) {
            if (inter_cursor_ >= script_->interstitial_steps.size()) {
                out.insert(out.end(), script_->password_prompt.begin(),
                           script_->password_prompt.end());
                state_ = SState::AwaitPass;
                return out;
            }
            const ScriptStep& step = script_->interstitial_steps[inter_cursor_];
            out.insert(out.end(), step.expect.begin(), step.expect.end());
            if (!step_response(step).empty()) return out;
            ++inter_cursor_;
            continue;
        }
        return out;
    }
}

Bytes TelnetServerFsm::on_open() {
    state_ = SState::Pre;
    pre_cursor_ = 0;
    return pump();
}

ServerOutput TelnetServerFsm::consume(const Bytes& inbound) {
    ServerOutput res;
    if (inbound.empty()) return res;
    switch (state_) {
    case SState::Pre: {
        // lenient: any reply advances the step; strict matching is the
        // client's job
        ++pre_cursor_;
        res.out = pump();
        return res;
    }
    case SState::Interstitial: {
        ++inter_cursor_;
        res.out = pump();
        return res;
    }
    case SState::AwaitUser:
    case SState::AwaitPass: {
        line_.insert(line_.end(), inbound.begin(), inbound.end());
        const Bytes crlf = {'\r', '\n'};
        const auto it = std::search(line_.begin(), line_.end(), crlf.begin(), crlf.end());
        if (it == line_.end()) return res;
        const std::string entry(line_.begin(), it);
        line_.erase(line_.begin(), it + 2);
        if (state_ == SState::AwaitUser) {
            username_ = entry;
            state_ = SState::Interstitial;
            inter_cursor_ = 0;
            res.out = pump();
            return res;
        }
        // password line: verdict
        if (creds_ && creds_->username == username_ && creds_->password == entry) {
            logged_in_ = true;
            state_ = SState::Open;
            res.out = script_->success_banner;
            res.login_success = true;
            return res;
        }
        ++attempts_seen_;
        res.out = script_->failure_banner;
        if (attempts_seen_ >= max_attempts_) {
            res.close_after = true;
            state_ = SState::Closed;
            return res;
        }
        Bytes prompt = script_->username_prompt;
        res.out.insert(res.out.end(), prompt.begin(), prompt.end());
        state_ = SState::AwaitUser;
        return res;
    }
    case SState::Open:
    case SState::Closed:
        return res;
    }
    return res;
}

LoginOutcome attempt_login(const NegotiationScript& client_script, const CredentialList& creds,
                           const NegotiationScript& server_script,
                           const std::optional<Credentials>& device_creds,
                           int max_attempts_per_connection, int prompt_byte_budget) {
    LoginOutcome out;
    if (creds.entries.empty()) return out;

    TelnetClientFsm client(client_script, creds, 0, prompt_byte_budget);
    const auto finalize = [&](LoginOutcome::Kind kind) {
        out.kind = kind;
        out.attempts = client.attempts_made();
        out.usernames_sent = client.usernames_sent();
        out.desyncs = client.desyncs();
        if (kind == LoginOutcome::Kind::Success) out.credentials = client.current_credential();
    };

    bool more_connections = true;
    while (more_connections) {
        more_connections = false;
        ++out.connections;
        client.start_connection();
        client.connection_up();
        TelnetServerFsm server(server_script, device_creds, max_attempts_per_connection);
        Bytes to_client = server.on_open();
        bool server_closed = false;
        for (;;) {
            const FsmOutput r = client.consume(to_client);
            to_client.clear();
            if (r.status == TelnetStatus::ProtocolDesync) {
                finalize(LoginOutcome::Kind::ExhaustedFailure);
                return out;
            }
            if (r.status == TelnetStatus::PromptTimeout) {
                out.prompt_timeout = true;
                finalize(LoginOutcome::Kind::ExhaustedFailure);
                return out;
            }
            if (r.logged_in) {
                finalize(LoginOutcome::Kind::Success);
                return out;
            }
            if (client.state() == ClientState::Failed) {
                finalize(LoginOutcome::Kind::ExhaustedFailure);
                return out;
            }
            if (server_closed) {
                // connection went away mid-wait; retry on a fresh one
                more_connections = !client.creds_exhausted();
                break;
            }
            if (r.response.empty()) {
                // client is waiting for bytes the server will never send:
                // mismatched scripts with no divergence marker
                finalize(LoginOutcome::Kind::Unreachable);
                return out;
            }
            const ServerOutput s = server.consume(r.response);
            to_client = s.out;
            server_closed = s.close_after;
            if (to_client.empty() && !server_closed) {
                finalize(LoginOutcome::Kind::Unreachable);
                return out;
            }
        }
    }
    finalize(LoginOutcome::Kind::ExhaustedFailure);
    return out;
}

} // namespace botsim
