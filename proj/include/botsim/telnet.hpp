#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "botsim/topology.hpp"

namespace botsim {

using Bytes = std::vector<std::uint8_t>;

namespace telnet {
constexpr std::uint8_t Iac = 255;
constexpr std::uint8_t Will = 251;
constexpr std::uint8_t Wont = 252;
constexpr std::uint8_t Do = 253;
constexpr std::uint8_t Dont = 254;
} // namespace telnet

Bytes bytes_from_string(const std::string& s);
std::string string_from_bytes(const Bytes& b);
std::optional<Bytes> bytes_from_hex(const std::string& hex);
std::string hex_from_bytes(const Bytes& b);

/// One expect/respond exchange. An empty respond means "derive the reply
/// from the refuse-all policy over the IAC triples in expect".
struct ScriptStep {
    Bytes expect;
    Bytes respond;
    bool operator==(const ScriptStep&) const = default;
};

/// Ordered byte-exchange script for one server flavor: option negotiation
/// before the username prompt, an optional interstitial exchange between
/// the prompts, and the prompt/banner markers themselves.
struct NegotiationScript {
    std::vector<ScriptStep> pre_steps;
    std::vector<ScriptStep> interstitial_steps;
    Bytes username_prompt;
    Bytes password_prompt;
    Bytes success_banner;
    Bytes failure_banner;
    bool operator==(const NegotiationScript&) const = default;
};

/// Three refuse-all IAC exchanges, "login: " / "Password: " prompts.
NegotiationScript default_negotiation_script();

/// Refuse-all reply for a byte pattern: DO -> WONT, WILL -> DONT, other
/// verbs and non-IAC bytes answered with nothing.
Bytes policy_response(const Bytes& pattern);

struct CredentialList {
    std::vector<Credentials> entries;
};

enum class ClientState : std::uint8_t {
    TcpHandshake,
    Negotiating,
    AwaitUserPrompt,
    SentUser,
    AwaitPassPrompt,
    SentPass,
    AwaitResult,
    LoggedIn,
    Failed,
};

const char* client_state_name(ClientState s);

enum class TelnetStatus : std::uint8_t { Ok, ProtocolDesync, PromptTimeout };

struct FsmOutput {
    Bytes response;
    TelnetStatus status = TelnetStatus::Ok;
    bool logged_in = false;
    bool attempt_failed = false; // a credential pair was rejected
};

/// Client half of the login exchange, advanced one inbound chunk at a
/// time. consume() dispatches on state; the phase-specific entry points
/// mirror how the scanner code is organized.
class TelnetClientFsm {
public:
    TelnetClientFsm(const NegotiationScript& script, const CredentialList& creds,
                    std::size_t cred_index = 0, int prompt_byte_budget = 512);

    /// Call when sending the (re)connect SYN; clears per-connection state.
    void start_connection();
    /// Call when the SYN+ACK came back; negotiation starts.
    void connection_up();

    FsmOutput consume(const Bytes& inbound);
    FsmOutput consume_iacs(const Bytes& inbound);        // pre: Negotiating
    FsmOutput consume_user_prompt(const Bytes& inbound); // pre: AwaitUserPrompt
    FsmOutput consume_pass_prompt(const Bytes& inbound); // pre: AwaitPassPrompt

    ClientState state() const { return state_; }
    std::size_t cred_index() const { return cred_index_; }
    bool creds_exhausted() const { return cred_index_ >= creds_->entries.size(); }
    const Credentials& current_credential() const { return creds_->entries.at(cred_index_); }
    int attempts_made() const { return attempts_made_; }
    int usernames_sent() const { return usernames_sent_; }
    int desyncs() const { return desyncs_; }

private:
    bool match_steps(const std::vector<ScriptStep>& steps, std::size_t& cursor, Bytes& out,
                     bool& desync, bool& need_more);
    std::optional<std::size_t> find_marker(const Bytes& marker);

    const NegotiationScript* script_;
    const CredentialList* creds_;
    ClientState state_ = ClientState::TcpHandshake;
    std::size_t cred_index_ = 0;
    std::size_t pre_cursor_ = 0;
    std::size_t inter_cursor_ = 0;
    Bytes buf_;
    int budget_limit_;
    int budget_left_;
    int attempts_made_ = 0;
    int usernames_sent_ = 0;
    int desyncs_ = 0;
};

struct ServerOutput {
    Bytes out;
    bool close_after = false;
    bool login_success = false;
};

/// Server half: plays the same script from the other side, prompts, checks
/// the device credentials, and closes the connection after too many failed
/// attempts. Lenient about the client's negotiation reply contents; strict
/// ordering is the client's concern.
class TelnetServerFsm {
public:
    TelnetServerFsm(const NegotiationScript& script, std::optional<Credentials> device_creds,
                    int max_attempts_per_connection = 3);

    /// Bytes the server emits as soon as the connection opens.
    Bytes on_open();
    ServerOutput consume(const Bytes& inbound);

    bool logged_in() const { return logged_in_; }
    int attempts_seen() const { return attempts_seen_; }

private:
    enum class SState : std::uint8_t { Pre, AwaitUser, Interstitial, AwaitPass, Open, Closed };

    Bytes pump(); // emit script bytes until client input is required

    const NegotiationScript* script_;
    std::optional<Credentials> creds_;
    int max_attempts_;
    SState state_ = SState::Pre;
    std::size_t pre_cursor_ = 0;
    std::size_t inter_cursor_ = 0;
    Bytes line_;
    std::string username_;
    int attempts_seen_ = 0;
    bool logged_in_ = false;
};

struct LoginOutcome {
    enum class Kind : std::uint8_t { Success, ExhaustedFailure, Unreachable } kind =
        Kind::ExhaustedFailure;
    std::optional<Credentials> credentials; // set on Success
    int attempts = 0;                       // credential pairs tried
    int connections = 0;
    int usernames_sent = 0;
    int desyncs = 0;
    bool prompt_timeout = false;
};

/// Synchronous login: runs the client FSM against a server FSM, iterating
/// the credential list in order and reconnecting when the server closes.
/// A negotiation desync aborts with zero further attempts.
LoginOutcome attempt_login(const NegotiationScript& client_script, const CredentialList& creds,
                           const NegotiationScript& server_script,
                           const std::optional<Credentials>& device_creds,
                           int max_attempts_per_connection = 3, int prompt_byte_budget = 512);

} // namespace botsim
