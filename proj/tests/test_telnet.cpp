#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <optional>
#include <string>
#include <vector>

#include "botsim/rng.hpp"
#include "botsim/telnet.hpp"
#include "support/telnet_oracle.hpp"

using namespace botsim;
using botsim_test::login_oracle;
using botsim_test::outcome_matches;

namespace {

Credentials cred(const std::string& u, const std::string& p) { return {u, p}; }

CredentialList list(std::initializer_list<Credentials> cs) {
    CredentialList l;
    l.entries = cs;
    return l;
}

} // namespace

TEST_CASE("hex helpers round-trip and reject malformed input") {
    const Bytes b = {0xFF, 0xFD, 0x18, 0x00, 0x41};
    CHECK(hex_from_bytes(b) == "fffd180041");
    CHECK(bytes_from_hex("fffd180041") == b);
    CHECK(bytes_from_hex("FFFD180041") == b);
    CHECK_FALSE(bytes_from_hex("fff").has_value());  // odd length
    CHECK_FALSE(bytes_from_hex("zz").has_value());   // not hex
    CHECK(bytes_from_hex("")->empty());
}

TEST_CASE("refuse-all policy answers DO with WONT and WILL with DONT") {
    using namespace telnet;
    CHECK(policy_response({Iac, Do, 0x18}) == Bytes{Iac, Wont, 0x18});
    CHECK(policy_response({Iac, Will, 0x01}) == Bytes{Iac, Dont, 0x01});
    CHECK(policy_response({Iac, Wont, 0x18}).empty());
    CHECK(policy_response({Iac, Dont, 0x01}).empty());
    CHECK(policy_response(bytes_from_string("login: ")).empty());
    // concatenated triples answer in order
    CHECK(policy_response({Iac, Do, 0x18, Iac, Will, 0x03}) ==
          Bytes{Iac, Wont, 0x18, Iac, Dont, 0x03});
}

TEST_CASE("stock negotiation script is frozen") {
    const NegotiationScript s = default_negotiation_script();
    REQUIRE(s.pre_steps.size() == 3);
    CHECK(hex_from_bytes(s.pre_steps[0].expect) == "fffd18");
    CHECK(hex_from_bytes(s.pre_steps[1].expect) == "fffb01");
    CHECK(hex_from_bytes(s.pre_steps[2].expect) == "fffb03");
    for (const ScriptStep& st : s.pre_steps) CHECK(st.respond.empty()); // policy-derived
    CHECK(policy_response(s.pre_steps[0].expect) == *bytes_from_hex("fffc18"));
    CHECK(policy_response(s.pre_steps[1].expect) == *bytes_from_hex("fffe01"));
    CHECK(policy_response(s.pre_steps[2].expect) == *bytes_from_hex("fffe03"));
    CHECK(s.interstitial_steps.empty());
    CHECK(string_from_bytes(s.username_prompt) == "login: ");
    CHECK(string_from_bytes(s.password_prompt) == "Password: ");
    CHECK(string_from_bytes(s.success_banner) == "\r\n$ ");
    CHECK(string_from_bytes(s.failure_banner) == "Login incorrect");
}

TEST_CASE("first credential wins on the first connection") {
    const NegotiationScript script = default_negotiation_script();
    const auto out = attempt_login(script, list({cred("root", "xc3511")}), script,
                                   cred("root", "xc3511"));
    CHECK(out.kind == LoginOutcome::Kind::Success);
    REQUIRE(out.credentials.has_value());
    CHECK(*out.credentials == cred("root", "xc3511"));
    CHECK(out.attempts == 1);
    CHECK(out.connections == 1);
    CHECK(out.usernames_sent == 1);
    CHECK(out.desyncs == 0);
}

TEST_CASE("five failing credentials take two connections") {
    const NegotiationScript script = default_negotiation_script();
    const CredentialList creds = list({cred("a", "1"), cred("b", "2"), cred("c", "3"),
                                       cred("d", "4"), cred("e", "5")});
    const auto out = attempt_login(script, creds, script, cred("root", "xc3511"));
    CHECK(out.kind == LoginOutcome::Kind::ExhaustedFailure);
    CHECK(out.attempts == 5);
    CHECK(out.connections == 2); // server closes after 3 failures
    CHECK(out.usernames_sent == 5);
}

TEST_CASE("match late in the list reconnects first") {
    const NegotiationScript script = default_negotiation_script();
    const CredentialList creds = list({cred("a", "1"), cred("b", "2"), cred("c", "3"),
                                       cred("root", "xc3511")});
    const auto out = attempt_login(script, creds, script, cred("root", "xc3511"));
    CHECK(out.kind == LoginOutcome::Kind::Success);
    CHECK(out.attempts == 4);
    CHECK(out.connections == 2);
}

TEST_CASE("target without telnet credentials never succeeds") {
    const NegotiationScript script = default_negotiation_script();
    const auto out =
        attempt_login(script, list({cred("root", "xc3511")}), script, std::nullopt);
    CHECK(out.kind == LoginOutcome::Kind::ExhaustedFailure);
    CHECK(out.attempts == 1);
}

TEST_CASE("empty credential list gives up without connecting") {
    const NegotiationScript script = default_negotiation_script();
    const auto out = attempt_login(script, CredentialList{}, script, cred("root", "x"));
    CHECK(out.kind == LoginOutcome::Kind::ExhaustedFailure);
    CHECK(out.attempts == 0);
    CHECK(out.connections == 0);
    CHECK(out.usernames_sent == 0);
}

TEST_CASE("exhaustive outcome sweep against the protocol oracle") {
    // every credential list of length <= 5 over a three-pair alphabet,
    // against each alphabet pair as the target plus an out-of-list pair
    // and a credential-less target
    const NegotiationScript script = default_negotiation_script();
    const std::vector<Credentials> alphabet = {cred("root", "xc3511"), cred("admin", "admin"),
                                               cred("user", "user")};
    const std::vector<std::optional<Credentials>> targets = {
        alphabet[0], alphabet[1], alphabet[2], cred("service", "0utside"), std::nullopt};

    std::vector<std::vector<int>> lists = {{}};
    for (int len = 1; len <= 5; ++len) {
        std::vector<int> idx(len, 0);
        for (;;) {
            lists.push_back(idx);
            int pos = len - 1;
            while (pos >= 0 && ++idx[pos] == static_cast<int>(alphabet.size())) {
                idx[pos] = 0;
                --pos;
            }
            if (pos < 0) break;
        }
    }
    CHECK(lists.size() == 1 + 3 + 9 + 27 + 81 + 243);

    int checked = 0;
    for (const auto& picks : lists) {
        CredentialList creds;
        for (int i : picks) creds.entries.push_back(alphabet[i]);
        for (const auto& target : targets) {
            const auto want = login_oracle(creds, target, 3);
            const auto got = attempt_login(script, creds, script, target);
            const bool ok = outcome_matches(want, got);
            if (!ok) {
                CAPTURE(picks.size());
                CAPTURE(got.attempts);
                CAPTURE(want.attempts);
            }
            REQUIRE(ok);
            ++checked;
        }
    }
    CHECK(checked == static_cast<int>(lists.size() * targets.size()));
}

TEST_CASE("oracle sweep holds for other per-connection limits") {
    const NegotiationScript script = default_negotiation_script();
    const std::vector<Credentials> alphabet = {cred("a", "1"), cred("b", "2")};
    for (int m : {1, 2, 4}) {
        for (int len = 0; len <= 5; ++len) {
            for (int mask = 0; mask < (1 << len); ++mask) {
                CredentialList creds;
                for (int i = 0; i < len; ++i) creds.entries.push_back(alphabet[(mask >> i) & 1]);
                const auto want = login_oracle(creds, alphabet[0], m);
                const auto got = attempt_login(script, creds, script, alphabet[0], m);
                REQUIRE(outcome_matches(want, got));
            }
        }
    }
}

TEST_CASE("unscripted pure IAC traffic is tolerated without advancing") {
    const NegotiationScript script = default_negotiation_script();
    const CredentialList creds = list({cred("root", "x")});
    TelnetClientFsm fsm(script, creds);
    fsm.start_connection();
    fsm.connection_up();

    // server leads with an option the script never mentions
    const FsmOutput r1 = fsm.consume({telnet::Iac, telnet::Will, 0x2A});
    CHECK(r1.status == TelnetStatus::Ok);
    CHECK(r1.response == Bytes{telnet::Iac, telnet::Dont, 0x2A});
    CHECK(fsm.state() == ClientState::Negotiating);
    CHECK(fsm.desyncs() == 0);

    // a verb with no policy answer is swallowed silently
    const FsmOutput r2 = fsm.consume({telnet::Iac, telnet::Wont, 0x2A});
    CHECK(r2.status == TelnetStatus::Ok);
    CHECK(r2.response.empty());
    CHECK(fsm.state() == ClientState::Negotiating);

    // the scripted sequence still runs to the username prompt afterwards
    CHECK(fsm.consume(script.pre_steps[0].expect).status == TelnetStatus::Ok);
    CHECK(fsm.consume(script.pre_steps[1].expect).status == TelnetStatus::Ok);
    CHECK(fsm.consume(script.pre_steps[2].expect).status == TelnetStatus::Ok);
    CHECK(fsm.state() == ClientState::AwaitUserPrompt);
}

TEST_CASE("incomplete IAC triples wait for more bytes") {
    const NegotiationScript script = default_negotiation_script();
    const CredentialList creds = list({cred("root", "x")});
    TelnetClientFsm fsm(script, creds);
    fsm.start_connection();
    fsm.connection_up();

    const FsmOutput r1 = fsm.consume({telnet::Iac, telnet::Do});
    CHECK(r1.status == TelnetStatus::Ok);
    CHECK(r1.response.empty());
    CHECK(fsm.state() == ClientState::Negotiating);

    const FsmOutput r2 = fsm.consume({0x18}); // completes IAC DO 0x18
    CHECK(r2.status == TelnetStatus::Ok);
    CHECK(r2.response == *bytes_from_hex("fffc18"));
}

TEST_CASE("non-IAC bytes where negotiation is expected desync the client") {
    const NegotiationScript script = default_negotiation_script();
    const CredentialList creds = list({cred("root", "x")});
    TelnetClientFsm fsm(script, creds);
    fsm.start_connection();
    fsm.connection_up();

    const FsmOutput r = fsm.consume(bytes_from_string("Welcome to legacyBox!"));
    CHECK(r.status == TelnetStatus::ProtocolDesync);
    CHECK(fsm.desyncs() == 1);
    CHECK(fsm.usernames_sent() == 0);
}

TEST_CASE("mismatched scripts reproduce the no-username-prompt failure") {
    const NegotiationScript client_script = default_negotiation_script();
    NegotiationScript server_script = default_negotiation_script();
    // the real-world failure shape: a chatty banner the client treats as noise
    server_script.pre_steps.insert(
        server_script.pre_steps.begin() + 1,
        ScriptStep{bytes_from_string("Welcome to legacyBox!\r\n"), {}});

    const CredentialList creds = list({cred("root", "xc3511"), cred("admin", "admin")});
    const auto out =
        attempt_login(client_script, creds, server_script, cred("root", "xc3511"));
    CHECK(out.kind == LoginOutcome::Kind::ExhaustedFailure);
    CHECK(out.desyncs == 1);
    CHECK(out.usernames_sent == 0);
    CHECK(out.attempts == 0);

    // deterministic: the same inputs fail identically every time
    const auto again =
        attempt_login(client_script, creds, server_script, cred("root", "xc3511"));
    CHECK(again.kind == out.kind);
    CHECK(again.desyncs == out.desyncs);
    CHECK(again.usernames_sent == 0);
}

TEST_CASE("extra negotiated option on the server side is shrugged off") {
    const NegotiationScript client_script = default_negotiation_script();
    NegotiationScript server_script = default_negotiation_script();
    // server opens with an option the client never scripted; the client is
    // still negotiating, so the refuse-all answer satisfies it
    server_script.pre_steps.insert(server_script.pre_steps.begin(),
                                   ScriptStep{{telnet::Iac, telnet::Will, 0x2A}, {}});

    const auto out = attempt_login(client_script, list({cred("root", "xc3511")}),
                                   server_script, cred("root", "xc3511"));
    CHECK(out.kind == LoginOutcome::Kind::Success);
    CHECK(out.desyncs == 0);
}

TEST_CASE("a trailing unscripted option stalls the login") {
    const NegotiationScript client_script = default_negotiation_script();
    NegotiationScript server_script = default_negotiation_script();
    // the client believes negotiation is over and waits for a prompt, so a
    // trailing option the server insists on answers nothing: a dead session
    server_script.pre_steps.push_back(ScriptStep{{telnet::Iac, telnet::Will, 0x2A}, {}});

    const auto out = attempt_login(client_script, list({cred("root", "xc3511")}),
                                   server_script, cred("root", "xc3511"));
    CHECK(out.kind == LoginOutcome::Kind::Unreachable);
    CHECK(out.usernames_sent == 0);
}

TEST_CASE("garbage where the prompt should be exhausts the byte budget") {
    const NegotiationScript client_script = default_negotiation_script();
    NegotiationScript server_script = default_negotiation_script();
    server_script.username_prompt = Bytes(600, 'X'); // never contains "login: "

    const auto out = attempt_login(client_script, list({cred("root", "xc3511")}),
                                   server_script, cred("root", "xc3511"), 3,
                                   /*prompt_byte_budget=*/128);
    CHECK(out.prompt_timeout);
    CHECK(out.kind == LoginOutcome::Kind::ExhaustedFailure);
    CHECK(out.usernames_sent == 0);
}

TEST_CASE("server counts attempts and closes after the limit") {
    const NegotiationScript script = default_negotiation_script();
    TelnetServerFsm server(script, cred("root", "xc3511"), 2);

    Bytes greeting = server.on_open();
    CHECK_FALSE(greeting.empty());

    // replay negotiation: answer each pre step with the policy reply
    ServerOutput out;
    out = server.consume(*bytes_from_hex("fffc18"));
    out = server.consume(*bytes_from_hex("fffe01"));
    out = server.consume(*bytes_from_hex("fffe03"));
    // by now the username prompt is out; run two failing attempts
    out = server.consume(bytes_from_string("admin\r\n"));
    out = server.consume(bytes_from_string("wrong\r\n"));
    CHECK_FALSE(out.login_success);
    CHECK_FALSE(out.close_after); // one failure left
    out = server.consume(bytes_from_string("admin\r\n"));
    out = server.consume(bytes_from_string("wrong2\r\n"));
    CHECK(out.close_after);
    CHECK(server.attempts_seen() == 2);
    CHECK_FALSE(server.logged_in());
}

TEST_CASE("randomized matching scripts agree with the oracle") {
    RngStream rng(314159, 0);
    const std::vector<Credentials> alphabet = {cred("root", "root"), cred("admin", "1234"),
                                               cred("guest", "guest")};
    for (int trial = 0; trial < 200; ++trial) {
        NegotiationScript script;
        const int steps = 1 + static_cast<int>(rng.uniform_below(3));
        for (int i = 0; i < steps; ++i) {
            const std::uint8_t verb = rng.uniform01() < 0.5 ? telnet::Do : telnet::Will;
            const std::uint8_t opt = static_cast<std::uint8_t>(rng.uniform_below(40));
            script.pre_steps.push_back(ScriptStep{{telnet::Iac, verb, opt}, {}});
        }
        script.username_prompt = bytes_from_string("user" + std::to_string(trial) + ": ");
        script.password_prompt = bytes_from_string("pass: ");
        script.success_banner = bytes_from_string("\r\nok> ");
        script.failure_banner = bytes_from_string("denied");

        CredentialList creds;
        const int len = static_cast<int>(rng.uniform_below(6));
        for (int i = 0; i < len; ++i)
            creds.entries.push_back(alphabet[rng.uniform_below(alphabet.size())]);
        const std::optional<Credentials> target =
            rng.uniform01() < 0.2 ? std::nullopt
                                  : std::optional<Credentials>(
                                        alphabet[rng.uniform_below(alphabet.size())]);
        const int m = 1 + static_cast<int>(rng.uniform_below(4));

        const auto want = login_oracle(creds, target, m);
        const auto got = attempt_login(script, creds, script, target, m);
        REQUIRE(outcome_matches(want, got));
    }
}
