#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "privreport/agents.hpp"

namespace privreport {

struct RequirementItem {
    std::string requirement_id;
    std::string plain_text;
    std::string rationale;
    std::optional<Moscow> priority;

    bool operator==(const RequirementItem&) const = default;
};

// One what/why pair inside a threat section. Ungrouped sections hold exactly
// one block; group_by_mitigation merges blocks that share a mitigation.
struct ThreatBlock {
    std::string entry_id;
    std::string what;
    std::string why;

    bool operator==(const ThreatBlock&) const = default;
};

struct ThreatSection {
    std::string title;
    std::vector<ThreatBlock> blocks;  // ordered by entry_id
    std::string how;
    std::string mitigation_tag;  // normalized: lowercased, whitespace-collapsed

    const std::string& entry_id() const { return blocks.front().entry_id; }

    bool operator==(const ThreatSection&) const = default;
};

struct ReportMetadata {
    std::string generated_at;   // injected, never read from the clock at render time
    std::string provider_mode;  // "offline" or "live"
    std::string model;          // model name, or "offline"
    std::map<std::string, std::string> artifact_hashes;  // input file -> content hash
    std::string dfd_mermaid;    // shown in the About section

    bool operator==(const ReportMetadata&) const = default;
};

struct ReportModel {
    std::string executive_summary;
    std::string system_description;
    std::string purpose;
    std::vector<RequirementItem> requirement_items;
    std::vector<ThreatSection> threat_sections;  // ordered by entry_id
    ReportMetadata metadata;

    bool operator==(const ReportModel&) const = default;
};

enum class QaCode {
    MissingThreat,
    MissingRequirement,
    UndefinedAbbreviation,
    RedundantMitigation,
    OverLength,
    JargonTerm,
};

const char* qa_code_name(QaCode code);

struct QaFinding {
    QaCode code = QaCode::MissingThreat;
    std::string message;
    std::string subject;  // entry/requirement id, token, or mitigation tag

    bool operator==(const QaFinding&) const = default;
};

// Completeness findings gate the CLI exit code; the rest are hints.
bool is_completeness_finding(const QaFinding& finding);

struct QaLimits {
    int max_section_words = 180;
    std::vector<std::string> jargon_denylist = {"TLS", "AES", "API"};
    std::vector<std::string> abbreviation_allowlist = {"GDPR", "HTML", "ID"};
};

// lowercase + collapse whitespace runs + trim; the grouping key.
std::string normalize_mitigation(const std::string& mitigation);

// Join the simplified requirements and the explanations into a report model.
// `entries` must be exactly the entries the explanations cover and
// `requirements` supplies the MoSCoW priorities. Sections come out ordered by
// entry_id. Throws Error(CoverageMismatch) when explanation ids and entry ids
// differ.
ReportModel combine(const SimplifiedRequirements& simplified,
                    const std::vector<ThreatExplanation>& explanations,
                    const std::vector<StrideEntry>& entries,
                    const std::vector<Requirement>& requirements,
                    const ReportMetadata& metadata);

// Single self-contained HTML document (inline styles, no external resources)
// with the fixed section order: Executive Summary, What This System Does, Why
// It Is Being Built, Your Requirements In Plain Language, Privacy Risks And
// Protections, About This Report. Pure: byte-identical for equal models.
std::string render_html(const ReportModel& model);

// Extract the machine-readable model embedded in a rendered report.
// Throws Error(SchemaViolation) when the report carries none.
ReportModel parse_report_html(const std::string& html);

ReportModel report_model_from_json(const std::string& json_text);
std::string report_model_to_json(const ReportModel& model);

// Mechanical quality proxies; see QaCode. Scans the stakeholder-facing prose
// fields (not the About metadata).
std::vector<QaFinding> qa_check(const ReportModel& model,
                                const ProjectBundle& bundle,
                                const PrivacyScope& scope,
                                const QaLimits& limits);

// Alternative model where sections sharing a mitigation_tag merge into one
// section listing every member's what/why under a single how. Idempotent;
// preserves the multiset of (entry_id, what, why) triples.
ReportModel group_by_mitigation(const ReportModel& model);

}  // namespace privreport
