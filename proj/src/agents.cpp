#include "privreport/agents.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "privreport/http_client.hpp"

namespace privreport {

using nlohmann::json;

namespace {

constexpr const char* kScratchpadOpen = "<scratchpad>";
constexpr const char* kScratchpadClose = "</scratchpad>";

std::string trim(const std::string& text) {
    std::size_t begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    std::size_t end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

bool is_blank(const std::string& text) {
    return std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); });
}

// Content of the first <name>...</name> block, searching from `from`.
std::optional<std::string> find_tag_block(const std::string& text, const std::string& name,
                                          std::size_t from = 0, std::size_t* end_pos = nullptr) {
    std::string open = "<" + name + ">";
    std::string close = "</" + name + ">";
    std::size_t start = text.find(open, from);
    if (start == std::string::npos) return std::nullopt;
    std::size_t content_start = start + open.size();
    std::size_t end = text.find(close, content_start);
    if (end == std::string::npos) return std::nullopt;
    if (end_pos != nullptr) *end_pos = end + close.size();
    return text.substr(content_start, end - content_start);
}

}  // namespace

AgentRequest build_prompt(const PromptTemplate& tmpl,
                          const std::map<std::string, std::string>& slot_values,
                          const ProviderConfig& config) {
    std::ostringstream user;
    user << tmpl.instructions;

    for (const auto& slot : tmpl.context_slots) {
        auto it = slot_values.find(slot);
        if (it == slot_values.end()) {
            throw Error(ErrorCode::MissingSlot, "no value for context slot \"" + slot + "\"", slot);
        }
        user << "\n\n<" << slot << ">\n" << it->second << "\n</" << slot << ">";
    }

    if (!tmpl.constraints.empty()) {
        user << "\n\n" << tmpl.constraints;
    }

    if (!tmpl.scratchpad_steps.empty()) {
        user << "\n\nBefore writing your final output, use the scratchpad to:";
        for (std::size_t i = 0; i < tmpl.scratchpad_steps.size(); ++i) {
            user << "\n" << (i + 1) << ". " << tmpl.scratchpad_steps[i];
        }
        user << "\n\n" << kScratchpadOpen << "[Your analysis here]" << kScratchpadClose;
    }

    if (!tmpl.examples.empty()) {
        user << "\n\nExamples:";
        for (const auto& [input, output] : tmpl.examples) {
            user << "\n\nInput:\n" << input << "\nOutput:\n" << output;
        }
    }

    AgentRequest request;
    request.system_text = tmpl.role;
    request.user_text = user.str();
    request.temperature = config.temperature;
    request.max_output_tokens = config.max_output_tokens;
    return request;
}

AgentOutput strip_scratchpad(const std::string& raw) {
    AgentOutput output;
    output.raw = raw;

    std::string body = raw;
    std::string scratchpad;
    while (true) {
        std::size_t start = body.find(kScratchpadOpen);
        if (start == std::string::npos) break;
        std::size_t content_start = start + std::string(kScratchpadOpen).size();
        std::size_t end = body.find(kScratchpadClose, content_start);
        if (end == std::string::npos) {
            throw Error(ErrorCode::UnclosedScratchpad,
                        "completion opens a scratchpad block that never closes");
        }
        if (!scratchpad.empty()) scratchpad += "\n";
        scratchpad += body.substr(content_start, end - content_start);
        body.erase(start, end + std::string(kScratchpadClose).size() - start);
    }

    if (!scratchpad.empty() || body.size() != raw.size()) {
        output.scratchpad = scratchpad;
    }
    output.body = trim(body);
    return output;
}

std::optional<std::string> extract_slot(const std::string& user_text, const std::string& slot) {
    // build_prompt frames slot content with newlines inside the tags.
    std::string open = "<" + slot + ">\n";
    std::string close = "\n</" + slot + ">";
    std::size_t start = user_text.find(open);
    if (start == std::string::npos) return std::nullopt;
    std::size_t content_start = start + open.size();
    std::size_t end = user_text.find(close, content_start);
    if (end == std::string::npos) return std::nullopt;
    return user_text.substr(content_start, end - content_start);
}

Provider::Provider(ProviderConfig config) : config_(std::move(config)) {}

std::string Provider::complete(const std::string& agent_name, const AgentRequest& request) const {
    if (request_observer_) request_observer_(agent_name, request);

    std::string raw = config_.mode == ProviderMode::Offline
                          ? complete_offline(agent_name, request)
                          : complete_live(request);
    if (completion_hook_) raw = completion_hook_(agent_name, std::move(raw));

    if (is_blank(raw)) {
        throw Error(ErrorCode::EmptyCompletion, "provider returned an empty completion");
    }
    return raw;
}

std::string Provider::complete_live(const AgentRequest& request) const {
    if (config_.endpoint.empty() || config_.model.empty()) {
        throw Error(ErrorCode::InvalidConfig, "live mode requires an endpoint and a model name");
    }
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw Error(ErrorCode::AuthMissing,
                    "environment variable " + config_.api_key_env + " is not set",
                    config_.api_key_env);
    }

    json body = {
        {"model", config_.model},
        {"messages",
         {{{"role", "system"}, {"content", request.system_text}},
          {{"role", "user"}, {"content", request.user_text}}}},
        {"temperature", request.temperature},
        {"max_tokens", request.max_output_tokens},
    };

    HttpResponse response;
    std::string last_failure;
    for (int attempt = 0;; ++attempt) {
        response = http_post_json(config_.endpoint, key, body.dump());
        if (response.transport_error.empty() && response.status < 500) break;
        last_failure = response.transport_error.empty()
                           ? "server returned status " + std::to_string(response.status)
                           : response.transport_error;
        if (attempt >= config_.retries) {
            throw Error(ErrorCode::TransportError,
                        "request failed after " + std::to_string(attempt + 1) + " attempts: " +
                            last_failure);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(100) * (1 << attempt));
    }

    if (response.status < 200 || response.status >= 300) {
        throw Error(ErrorCode::TransportError,
                    "server returned status " + std::to_string(response.status));
    }

    json parsed = json::parse(response.body, nullptr, false);
    if (parsed.is_discarded()) {
        throw Error(ErrorCode::MalformedResponse, "response body is not valid JSON");
    }
    if (!parsed.contains("choices") || !parsed["choices"].is_array() || parsed["choices"].empty()) {
        throw Error(ErrorCode::MalformedResponse, "response carries no choices");
    }
    const json& message = parsed["choices"][0];
    if (!message.contains("message") || !message["message"].contains("content") ||
        !message["message"]["content"].is_string()) {
        throw Error(ErrorCode::MalformedResponse, "response carries no message content");
    }
    return message["message"]["content"].get<std::string>();
}

namespace {

// Deterministic offline backends. Each one reads its structured inputs back
// out of the request's context slots and renders the same output shape the
// live provider is instructed to produce.

std::string require_offline_slot(const AgentRequest& request, const std::string& slot) {
    auto value = extract_slot(request.user_text, slot);
    if (!value) {
        throw Error(ErrorCode::MissingSlot,
                    "offline backend expects context slot \"" + slot + "\"", slot);
    }
    return *value;
}

json parse_offline_json(const std::string& text, const std::string& slot) {
    json parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded()) {
        throw Error(ErrorCode::MalformedResponse,
                    "offline backend cannot parse JSON in slot \"" + slot + "\"", slot);
    }
    return parsed;
}

std::string strip_trailing_period(std::string text) {
    while (!text.empty() && (text.back() == ' ' || text.back() == '.')) {
        text.pop_back();
    }
    return text;
}

std::string offline_dfd_summary(const AgentRequest& request) {
    return require_offline_slot(request, "structure");
}

std::string offline_easyreq(const AgentRequest& request) {
    json use_case = parse_offline_json(require_offline_slot(request, "use_case"), "use_case");
    json requirements =
        parse_offline_json(require_offline_slot(request, "requirements"), "requirements");
    if (!use_case.is_object() || !requirements.is_array()) {
        throw Error(ErrorCode::MalformedResponse,
                    "offline backend expects a use case object and a requirement array");
    }

    std::string title = use_case.value("title", "");
    std::string scenario = use_case.value("scenario", "");
    std::string goal = use_case.value("goal", "");

    std::ostringstream out;
    out << "<system_description>The system \"" << title << "\" works as follows: " << scenario
        << "</system_description>\n";
    out << "<purpose>This system is being built to " << strip_trailing_period(goal)
        << ".</purpose>";
    for (const auto& req : requirements) {
        if (!req.is_object()) {
            throw Error(ErrorCode::MalformedResponse,
                        "offline backend expects requirement objects");
        }
        out << "\n<requirement_item>\n";
        out << "<requirement_id>" << req.value("id", "") << "</requirement_id>\n";
        out << "<plain_text>The system will: " << strip_trailing_period(req.value("text", ""))
            << ".</plain_text>\n";
        out << "<rationale>This supports the goal: " << strip_trailing_period(goal)
            << ".</rationale>\n";
        out << "</requirement_item>";
    }
    return out.str();
}

std::string offline_stride_handler(const AgentRequest& request) {
    json entry = parse_offline_json(require_offline_slot(request, "stride_entry"), "stride_entry");
    // The slot holds the entry in list serialization, a single-element array.
    if (entry.is_array() && entry.size() == 1) entry = entry[0];
    if (!entry.is_object()) {
        throw Error(ErrorCode::MalformedResponse, "offline backend expects one analyzed entry");
    }
    std::ostringstream out;
    out << "<what>Risk: " << strip_trailing_period(entry.value("title", "")) << ". "
        << entry.value("description", "") << "</what>\n";
    out << "<why>Impact on monitored workers: " << entry.value("impact", "") << "</why>\n";
    out << "<how>Planned protection: " << entry.value("mitigation", "") << "</how>";
    return out.str();
}

}  // namespace

std::string Provider::complete_offline(const std::string& agent_name,
                                       const AgentRequest& request) const {
    if (agent_name == kAgentDfdSummary) return offline_dfd_summary(request);
    if (agent_name == kAgentEasyReq) return offline_easyreq(request);
    if (agent_name == kAgentStrideHandler) return offline_stride_handler(request);
    throw Error(ErrorCode::InvalidConfig, "no offline backend for agent \"" + agent_name + "\"");
}

DfdSummary run_dfd_summary(const Dfd& dfd, const Provider& provider) {
    DfdSummary result;
    result.mermaid = emit_mermaid(dfd);

    auto request = build_prompt(dfd_summary_template(),
                                {{"mermaid", result.mermaid}, {"structure", summarize_dfd(dfd)}},
                                provider.config());
    std::string raw = provider.complete(kAgentDfdSummary, request);
    AgentOutput output = strip_scratchpad(raw);
    if (output.body.empty()) {
        throw Error(ErrorCode::EmptyCompletion, "summary completion has no content after the "
                                                "scratchpad");
    }
    result.summary = output.body;
    return result;
}

namespace {

std::optional<SimplifiedRequirements> parse_easyreq_body(const std::string& body,
                                                         const std::vector<Requirement>& expected,
                                                         std::string* missing_part) {
    SimplifiedRequirements simplified;
    for (const char* part : {"system_description", "purpose"}) {
        auto value = find_tag_block(body, part);
        if (!value || is_blank(*value)) {
            *missing_part = part;
            return std::nullopt;
        }
        (part == std::string("system_description") ? simplified.system_description
                                                   : simplified.purpose) = trim(*value);
    }

    std::size_t cursor = 0;
    while (true) {
        std::size_t block_end = 0;
        auto block = find_tag_block(body, "requirement_item", cursor, &block_end);
        if (!block) break;
        cursor = block_end;

        SimplifiedRequirementItem item;
        auto id = find_tag_block(*block, "requirement_id");
        auto plain = find_tag_block(*block, "plain_text");
        auto rationale = find_tag_block(*block, "rationale");
        if (!id || !plain || !rationale || is_blank(*plain) || is_blank(*rationale)) {
            return std::nullopt;
        }
        item.requirement_id = trim(*id);
        item.plain_text = trim(*plain);
        item.rationale = trim(*rationale);
        simplified.items.push_back(std::move(item));
    }

    // Exactly one item per bundle requirement; normalize to the bundle order.
    if (simplified.items.size() != expected.size()) return std::nullopt;
    std::vector<SimplifiedRequirementItem> ordered;
    for (const auto& req : expected) {
        auto it = std::find_if(simplified.items.begin(), simplified.items.end(),
                               [&](const auto& item) { return item.requirement_id == req.id; });
        if (it == simplified.items.end()) return std::nullopt;
        ordered.push_back(*it);
    }
    simplified.items = std::move(ordered);
    return simplified;
}

}  // namespace

SimplifiedRequirements run_easyreq(const ProjectBundle& bundle, const Provider& provider) {
    auto request = build_prompt(easyreq_template(),
                                {{"use_case", use_case_to_json(bundle.use_case)},
                                 {"requirements", requirements_to_json(bundle.requirements)}},
                                provider.config());

    // One retry on shape violations, then hard error.
    std::string missing_part;
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string raw = provider.complete(kAgentEasyReq, request);
        AgentOutput output;
        try {
            output = strip_scratchpad(raw);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::UnclosedScratchpad && attempt == 0) continue;
            throw;
        }
        auto simplified = parse_easyreq_body(output.body, bundle.requirements, &missing_part);
        if (simplified) return *simplified;
        if (!missing_part.empty() && attempt == 1) {
            throw Error(ErrorCode::MissingPart,
                        "completion is missing the <" + missing_part + "> part", missing_part);
        }
        missing_part.clear();
    }
    throw Error(ErrorCode::ItemCountMismatch,
                "completion did not yield exactly one item per requirement");
}

ThreatExplanation run_stride_handler(const StrideEntry& entry,
                                     const StrideContext& context,
                                     const Provider& provider) {
    for (const auto& [field, value] : std::initializer_list<std::pair<const char*, const std::string&>>{
             {"title", entry.title},
             {"description", entry.description},
             {"impact", entry.impact},
             {"mitigation", entry.mitigation}}) {
        if (is_blank(value)) {
            throw Error(ErrorCode::PreconditionViolated,
                        "stride entry \"" + entry.id + "\" has an empty " + field +
                            "; fill it in before generating explanations",
                        entry.id);
        }
    }

    auto request = build_prompt(stride_handler_template(),
                                {{"mermaid", context.mermaid},
                                 {"summary", context.summary},
                                 {"requirements", context.requirements},
                                 {"stride_entry", stride_to_json({entry})}},
                                provider.config());

    std::string missing;
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string raw = provider.complete(kAgentStrideHandler, request);
        AgentOutput output;
        try {
            output = strip_scratchpad(raw);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::UnclosedScratchpad && attempt == 0) continue;
            throw;
        }

        ThreatExplanation explanation;
        explanation.entry_id = entry.id;
        missing.clear();
        for (const char* part : {"what", "why", "how"}) {
            auto value = find_tag_block(output.body, part);
            if (!value || is_blank(*value)) {
                missing = part;
                break;
            }
            std::string text = trim(*value);
            if (part == std::string("what")) explanation.what = text;
            else if (part == std::string("why")) explanation.why = text;
            else explanation.how = text;
        }
        if (missing.empty()) return explanation;
    }
    throw Error(ErrorCode::MissingPart, "completion is missing the <" + missing + "> part",
                missing);
}

}  // namespace privreport
