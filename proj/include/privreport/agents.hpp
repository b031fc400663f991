#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "privreport/artifacts.hpp"

namespace privreport {

// Role / Instructions / Context / Constraints / Examples prompt structure,
// plus an ordered list of scratchpad steps the model walks through before
// writing its final answer.
struct PromptTemplate {
    std::string role;
    std::string instructions;
    std::vector<std::string> context_slots;  // slot names, unique, in order
    std::string constraints;
    std::vector<std::pair<std::string, std::string>> examples;  // input -> output
    std::vector<std::string> scratchpad_steps;
};

struct AgentRequest {
    std::string system_text;
    std::string user_text;
    double temperature = 0.0;
    int max_output_tokens = 2048;
};

struct AgentOutput {
    std::string raw;
    std::optional<std::string> scratchpad;
    std::string body;  // never contains a <scratchpad> tag
};

enum class ProviderMode { Offline, Live };

struct ProviderConfig {
    ProviderMode mode = ProviderMode::Offline;
    std::string endpoint;  // Live only: chat-completion URL
    std::string model;     // Live only
    std::string api_key_env = "PRIVREPORT_API_KEY";
    double temperature = 0.0;
    int max_output_tokens = 2048;
    int retries = 2;           // transport/5xx retries in Live mode
    int concurrency_limit = 4; // parallel per-entry explanation calls
};

// Agent names used to key offline backends and error reporting.
inline constexpr const char* kAgentDfdSummary = "dfd_summary";
inline constexpr const char* kAgentEasyReq = "easyreq";
inline constexpr const char* kAgentStrideHandler = "stride_handler";

// Fill a template's slots and lay the request out deterministically: the
// instructions, each slot wrapped in <name>...</name> tags in slot order, the
// constraints, the numbered scratchpad steps, then the examples.
// Throws Error(MissingSlot) when a slot has no value.
AgentRequest build_prompt(const PromptTemplate& tmpl,
                          const std::map<std::string, std::string>& slot_values,
                          const ProviderConfig& config);

// Move every <scratchpad>...</scratchpad> block out of the raw completion.
// Throws Error(UnclosedScratchpad) on an opening tag with no closing tag.
AgentOutput strip_scratchpad(const std::string& raw);

// Pull one slot's content back out of a built user_text. Offline backends use
// this to read their structured inputs from the request itself.
std::optional<std::string> extract_slot(const std::string& user_text, const std::string& slot);

// Chat-completion provider shared by all agents. Safe to call from multiple
// workers once configured; the test seams must be set before concurrent use.
class Provider {
public:
    explicit Provider(ProviderConfig config);

    const ProviderConfig& config() const { return config_; }

    // Live: POST {model, messages, temperature, max_tokens} with bearer auth,
    // retrying transport errors and 5xx responses up to config.retries with
    // exponential backoff. Offline: dispatch to the deterministic template
    // backend for agent_name; never touches the network or the environment.
    std::string complete(const std::string& agent_name, const AgentRequest& request) const;

    // Test seam: transforms every raw completion before it is returned.
    using CompletionHook = std::function<std::string(const std::string& agent, std::string raw)>;
    void set_completion_hook(CompletionHook hook) { completion_hook_ = std::move(hook); }

    // Test seam: observes every request right before completion.
    using RequestObserver = std::function<void(const std::string& agent, const AgentRequest&)>;
    void set_request_observer(RequestObserver observer) { request_observer_ = std::move(observer); }

private:
    std::string complete_live(const AgentRequest& request) const;
    std::string complete_offline(const std::string& agent_name, const AgentRequest& request) const;

    ProviderConfig config_;
    CompletionHook completion_hook_;
    RequestObserver request_observer_;
};

// Prompt templates for the three provider-facing agents.
PromptTemplate dfd_summary_template();
PromptTemplate easyreq_template();
PromptTemplate stride_handler_template();

struct ThreatExplanation {
    std::string entry_id;
    std::string what;
    std::string why;
    std::string how;

    bool operator==(const ThreatExplanation&) const = default;
};

struct SimplifiedRequirementItem {
    std::string requirement_id;
    std::string plain_text;
    std::string rationale;

    bool operator==(const SimplifiedRequirementItem&) const = default;
};

struct SimplifiedRequirements {
    std::string system_description;
    std::string purpose;
    std::vector<SimplifiedRequirementItem> items;  // one per bundle requirement

    bool operator==(const SimplifiedRequirements&) const = default;
};

struct DfdSummary {
    std::string mermaid;
    std::string summary;

    bool operator==(const DfdSummary&) const = default;
};

// Context shared by every per-entry explanation call.
struct StrideContext {
    std::string mermaid;
    std::string summary;
    std::string requirements;  // serialized requirement list
};

// mermaid is always emit_mermaid(dfd); the summary is summarize_dfd(dfd) in
// Offline mode or the provider's completion in Live mode.
DfdSummary run_dfd_summary(const Dfd& dfd, const Provider& provider);

// One simplified item per bundle requirement, plus the rewritten system
// description and purpose. Retries a malformed completion once, then throws
// Error(ItemCountMismatch).
SimplifiedRequirements run_easyreq(const ProjectBundle& bundle, const Provider& provider);

// Three-part plain-language explanation of one analyzed threat. Retries a
// completion missing a <what>/<why>/<how> marker once, then throws
// Error(MissingPart). The entry must be fully filled in.
ThreatExplanation run_stride_handler(const StrideEntry& entry,
                                     const StrideContext& context,
                                     const Provider& provider);

}  // namespace privreport
