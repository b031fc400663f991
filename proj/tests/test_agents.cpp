#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>

#include "privreport/agents.hpp"
#include "privreport/artifacts.hpp"
#include "support/fake_server.hpp"

using namespace privreport;
using testsupport::chat_response;
using testsupport::FakeChatServer;
using testsupport::ScriptedReply;

namespace {

ProjectBundle fixture_bundle() {
    return load_project(std::string(PRIVREPORT_FIXTURES_DIR) + "/uc1");
}

ProviderConfig live_config(const std::string& endpoint, int retries = 2) {
    ProviderConfig config;
    config.mode = ProviderMode::Live;
    config.endpoint = endpoint;
    config.model = "test-model";
    config.retries = retries;
    return config;
}

struct KeyGuard {
    KeyGuard(const char* name, const char* value) : name_(name) {
        ::setenv(name, value, 1);
    }
    ~KeyGuard() { ::unsetenv(name_); }
    const char* name_;
};

}  // namespace

TEST_CASE("build_prompt lays the request out deterministically") {
    PromptTemplate tmpl;
    tmpl.role = "You are a translator.";
    tmpl.instructions = "Rewrite the requirement.";
    tmpl.context_slots = {"requirement", "audience"};
    tmpl.constraints = "Answer in one sentence.";
    tmpl.scratchpad_steps = {"Read the text", "Find jargon"};
    tmpl.examples = {{"in", "out"}};

    AgentRequest request = build_prompt(
        tmpl, {{"requirement", "Encrypt data"}, {"audience", "managers"}}, ProviderConfig{});

    CHECK(request.system_text == "You are a translator.");
    const std::string& text = request.user_text;

    auto count = [&](const std::string& needle) {
        std::size_t hits = 0;
        for (std::size_t pos = text.find(needle); pos != std::string::npos;
             pos = text.find(needle, pos + 1)) {
            ++hits;
        }
        return hits;
    };
    CHECK(count("<requirement>") == 1);
    CHECK(count("</requirement>") == 1);
    CHECK(count("<audience>") == 1);
    CHECK(text.find("<requirement>\nEncrypt data\n</requirement>") != std::string::npos);
    // Slot order, then constraints, then scratchpad, then examples.
    CHECK(text.find("<requirement>") < text.find("<audience>"));
    CHECK(text.find("<audience>") < text.find("Answer in one sentence."));
    CHECK(text.find("1. Read the text") != std::string::npos);
    CHECK(text.find("2. Find jargon") != std::string::npos);
    CHECK(text.find("<scratchpad>[Your analysis here]</scratchpad>") != std::string::npos);
    CHECK(text.find("Input:\nin\nOutput:\nout") != std::string::npos);

    CHECK(build_prompt(tmpl, {{"requirement", "Encrypt data"}, {"audience", "managers"}},
                       ProviderConfig{})
              .user_text == text);

    try {
        build_prompt(tmpl, {{"requirement", "x"}}, ProviderConfig{});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingSlot);
        CHECK(e.subject() == "audience");
    }
}

TEST_CASE("shipped templates carry their pinned structure") {
    AgentRequest request =
        build_prompt(easyreq_template(), {{"use_case", "{}"}, {"requirements", "[]"}},
                     ProviderConfig{});
    CHECK(request.user_text.find("1. ") != std::string::npos);
    CHECK(request.user_text.find("4. ") != std::string::npos);
    CHECK(request.user_text.find("5. ") == std::string::npos);
    CHECK(request.user_text.find("<requirement_item>") != std::string::npos);
    CHECK(easyreq_template().context_slots ==
          std::vector<std::string>{"use_case", "requirements"});
    CHECK(stride_handler_template().context_slots ==
          std::vector<std::string>{"mermaid", "summary", "requirements", "stride_entry"});
    CHECK(dfd_summary_template().context_slots == std::vector<std::string>{"mermaid", "structure"});
}

TEST_CASE("strip_scratchpad") {
    SUBCASE("moves the block aside") {
        AgentOutput output = strip_scratchpad("<scratchpad>notes</scratchpad>Final.");
        CHECK(output.body == "Final.");
        CHECK(output.scratchpad == std::optional<std::string>("notes"));
    }

    SUBCASE("no tags is a no-op") {
        AgentOutput output = strip_scratchpad("Final only.");
        CHECK(output.body == "Final only.");
        CHECK_FALSE(output.scratchpad.has_value());
    }

    SUBCASE("multiple blocks all removed") {
        AgentOutput output =
            strip_scratchpad("<scratchpad>a</scratchpad>Keep<scratchpad>b</scratchpad> this.");
        CHECK(output.body == "Keep this.");
        CHECK(output.scratchpad == std::optional<std::string>("a\nb"));
    }

    SUBCASE("a block split across a marker heals the marker") {
        AgentOutput output = strip_scratchpad("<wh<scratchpad>junk</scratchpad>at>x</what>");
        CHECK(output.body == "<what>x</what>");
    }

    SUBCASE("unclosed block is an error") {
        try {
            strip_scratchpad("<scratchpad>oops");
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::UnclosedScratchpad);
        }
    }
}

TEST_CASE("extract_slot inverts build_prompt wrapping") {
    PromptTemplate tmpl;
    tmpl.instructions = "Do the thing.";
    tmpl.context_slots = {"payload"};
    std::string value = "line one\nline two";
    AgentRequest request = build_prompt(tmpl, {{"payload", value}}, ProviderConfig{});
    CHECK(extract_slot(request.user_text, "payload") == std::optional<std::string>(value));
    CHECK(extract_slot(request.user_text, "missing") == std::nullopt);
}

TEST_CASE("offline backends never touch the environment") {
    ::unsetenv("PRIVREPORT_API_KEY");
    Provider provider{ProviderConfig{}};
    ProjectBundle bundle = fixture_bundle();

    DfdSummary summary = run_dfd_summary(bundle.dfd, provider);
    CHECK(summary.mermaid == emit_mermaid(bundle.dfd));
    // The completion path trims the text it extracts, so the agent's summary
    // is the structure prose minus its final newline.
    std::string structure = summarize_dfd(bundle.dfd);
    while (!structure.empty() && structure.back() == '\n') structure.pop_back();
    CHECK(summary.summary == structure);

    SimplifiedRequirements simplified = run_easyreq(bundle, provider);
    CHECK(simplified.purpose == "This system is being built to improve product quality during "
                                "assembly.");
    CHECK(simplified.system_description.find(bundle.use_case.scenario) != std::string::npos);
    REQUIRE(simplified.items.size() == 3);
    CHECK(simplified.items[0].requirement_id == "r1");
    CHECK(simplified.items[0].plain_text ==
          "The system will: The system must detect an assembly error within 2 seconds of its "
          "occurrence.");
    CHECK(simplified.items[0].rationale ==
          "This supports the goal: improve product quality during assembly.");

    StrideContext context{summary.mermaid, summary.summary,
                          requirements_to_json(bundle.requirements)};
    ThreatExplanation explanation = run_stride_handler(bundle.stride[0], context, provider);
    CHECK(explanation.entry_id == "t1");
    CHECK(explanation.what.find("Risk: Video stream interception on the shop floor.") == 0);
    CHECK(explanation.why.find("Impact on monitored workers:") == 0);
    CHECK(explanation.how == "Planned protection: encryption of the video stream");
}

TEST_CASE("stride handler rejects unfilled entries") {
    Provider provider{ProviderConfig{}};
    ProjectBundle bundle = fixture_bundle();
    StrideContext context{"m", "s", "[]"};

    StrideEntry blank = bundle.stride[0];
    blank.impact = "  ";
    try {
        run_stride_handler(blank, context, provider);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PreconditionViolated);
        CHECK(e.subject() == "t1");
    }
}

TEST_CASE("shape violations retry once, then fail") {
    ProjectBundle bundle = fixture_bundle();
    Provider provider{ProviderConfig{}};
    int completions = 0;
    provider.set_request_observer([&](const std::string&, const AgentRequest&) { ++completions; });

    SUBCASE("missing how marker") {
        provider.set_completion_hook([](const std::string& agent, std::string raw) {
            if (agent == kAgentStrideHandler) {
                auto pos = raw.find("<how>");
                if (pos != std::string::npos) raw = raw.substr(0, pos);
            }
            return raw;
        });
        StrideContext context{"m", "s", "[]"};
        try {
            run_stride_handler(bundle.stride[0], context, provider);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MissingPart);
            CHECK(e.subject() == "how");
        }
        CHECK(completions == 2);  // exactly one retry
    }

    SUBCASE("item dropped from the requirement list") {
        provider.set_completion_hook([](const std::string& agent, std::string raw) {
            if (agent == kAgentEasyReq) {
                auto start = raw.find("<requirement_item>");
                auto end = raw.find("</requirement_item>", start);
                raw.erase(start, end + std::string("</requirement_item>").size() - start);
            }
            return raw;
        });
        try {
            run_easyreq(bundle, provider);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ItemCountMismatch);
        }
        CHECK(completions == 2);
    }

    SUBCASE("reordered items are normalized, not refused") {
        provider.set_completion_hook([](const std::string& agent, std::string raw) {
            if (agent == kAgentEasyReq) {
                auto start = raw.find("<requirement_item>");
                auto end = raw.find("</requirement_item>", start) +
                           std::string("</requirement_item>").size();
                std::string first = raw.substr(start, end - start);
                raw.erase(start, end - start);
                raw += "\n" + first;  // move the first item to the back
            }
            return raw;
        });
        SimplifiedRequirements simplified = run_easyreq(bundle, provider);
        REQUIRE(simplified.items.size() == 3);
        CHECK(simplified.items[0].requirement_id == "r1");
        CHECK(simplified.items[1].requirement_id == "r2");
        CHECK(completions == 1);
    }

    SUBCASE("empty completion") {
        provider.set_completion_hook([](const std::string&, std::string) { return std::string{}; });
        try {
            run_dfd_summary(bundle.dfd, provider);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::EmptyCompletion);
        }
    }
}

TEST_CASE("live mode requires configuration and a key") {
    ::unsetenv("PRIVREPORT_API_KEY");
    AgentRequest request;
    request.system_text = "s";
    request.user_text = "u";

    SUBCASE("missing endpoint") {
        ProviderConfig config;
        config.mode = ProviderMode::Live;
        try {
            Provider{config}.complete(kAgentDfdSummary, request);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InvalidConfig);
        }
    }

    SUBCASE("missing key fails before any request") {
        FakeChatServer server([](int, const std::string&) {
            return ScriptedReply{200, chat_response("hello")};
        });
        try {
            Provider{live_config(server.endpoint())}.complete(kAgentDfdSummary, request);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::AuthMissing);
        }
        CHECK(server.request_count() == 0);
    }
}

TEST_CASE("live wire format and retries") {
    KeyGuard key("PRIVREPORT_API_KEY", "sk-test-secret-123");
    AgentRequest request;
    request.system_text = "system words";
    request.user_text = "user words";
    request.temperature = 0.5;
    request.max_output_tokens = 99;

    SUBCASE("request body carries the chat-completion shape") {
        FakeChatServer server([](int, const std::string&) {
            return ScriptedReply{200, chat_response("reply text")};
        });
        std::string raw = Provider{live_config(server.endpoint())}.complete("any", request);
        CHECK(raw == "reply text");
        REQUIRE(server.request_count() == 1);
        auto body = nlohmann::json::parse(server.bodies()[0]);
        CHECK(body["model"] == "test-model");
        CHECK(body["temperature"] == 0.5);
        CHECK(body["max_tokens"] == 99);
        REQUIRE(body["messages"].size() == 2);
        CHECK(body["messages"][0]["role"] == "system");
        CHECK(body["messages"][0]["content"] == "system words");
        CHECK(body["messages"][1]["role"] == "user");
        CHECK(body["messages"][1]["content"] == "user words");
        CHECK(server.auth_headers()[0] == "Bearer sk-test-secret-123");
    }

    SUBCASE("two 500s then success within retries") {
        FakeChatServer server([](int index, const std::string&) {
            if (index < 2) return ScriptedReply{500, "overloaded"};
            return ScriptedReply{200, chat_response("third time")};
        });
        std::string raw = Provider{live_config(server.endpoint(), 2)}.complete("any", request);
        CHECK(raw == "third time");
        CHECK(server.request_count() == 3);
    }

    SUBCASE("persistent 500 exhausts retries") {
        FakeChatServer server(
            [](int, const std::string&) { return ScriptedReply{500, "down"}; });
        try {
            Provider{live_config(server.endpoint(), 1)}.complete("any", request);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::TransportError);
        }
        CHECK(server.request_count() == 2);  // first try + one retry
    }

    SUBCASE("4xx fails immediately without retry") {
        FakeChatServer server(
            [](int, const std::string&) { return ScriptedReply{404, "no such route"}; });
        try {
            Provider{live_config(server.endpoint(), 3)}.complete("any", request);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::TransportError);
        }
        CHECK(server.request_count() == 1);
    }

    SUBCASE("unreachable endpoint is a transport error") {
        try {
            // Reserved port with nothing listening.
            Provider{live_config("http://127.0.0.1:9/v1/chat/completions", 0)}.complete("any",
                                                                                        request);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::TransportError);
        }
    }

    SUBCASE("malformed response bodies") {
        FakeChatServer bad_json(
            [](int, const std::string&) { return ScriptedReply{200, "not json"}; });
        try {
            Provider{live_config(bad_json.endpoint())}.complete("any", request);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MalformedResponse);
        }

        FakeChatServer no_choices(
            [](int, const std::string&) { return ScriptedReply{200, R"({"choices":[]})"}; });
        try {
            Provider{live_config(no_choices.endpoint())}.complete("any", request);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MalformedResponse);
        }
    }

    SUBCASE("empty completion content") {
        FakeChatServer server(
            [](int, const std::string&) { return ScriptedReply{200, chat_response("  ")}; });
        try {
            Provider{live_config(server.endpoint())}.complete("any", request);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::EmptyCompletion);
        }
    }
}

TEST_CASE("stride handler requests carry the full context") {
    Provider provider{ProviderConfig{}};
    ProjectBundle bundle = fixture_bundle();
    std::vector<AgentRequest> seen;
    provider.set_request_observer([&](const std::string& agent, const AgentRequest& request) {
        if (agent == kAgentStrideHandler) seen.push_back(request);
    });

    StrideContext context{"mermaid text", "summary text",
                          requirements_to_json(bundle.requirements)};
    run_stride_handler(bundle.stride[2], context, provider);

    REQUIRE(seen.size() == 1);
    const std::string& text = seen[0].user_text;
    CHECK(extract_slot(text, "mermaid") == std::optional<std::string>("mermaid text"));
    CHECK(extract_slot(text, "summary") == std::optional<std::string>("summary text"));
    CHECK(extract_slot(text, "requirements").has_value());
    auto entry_slot = extract_slot(text, "stride_entry");
    REQUIRE(entry_slot.has_value());
    CHECK(entry_slot->find("\"t3\"") != std::string::npos);
    CHECK(entry_slot->find("\"t1\"") == std::string::npos);  // exactly one entry's fields
}
