#include "privreport/stride.hpp"

#include <algorithm>
#include <cstdio>

namespace privreport {

char category_code(ThreatCategory category) {
    switch (category) {
        case ThreatCategory::Spoofing: return 'S';
        case ThreatCategory::Tampering: return 'T';
        case ThreatCategory::Repudiation: return 'R';
        case ThreatCategory::InformationDisclosure: return 'I';
        case ThreatCategory::DenialOfService: return 'D';
        case ThreatCategory::ElevationOfPrivilege: return 'E';
    }
    return '?';
}

std::optional<ThreatCategory> category_from_code(char code) {
    switch (code) {
        case 'S': return ThreatCategory::Spoofing;
        case 'T': return ThreatCategory::Tampering;
        case 'R': return ThreatCategory::Repudiation;
        case 'I': return ThreatCategory::InformationDisclosure;
        case 'D': return ThreatCategory::DenialOfService;
        case 'E': return ThreatCategory::ElevationOfPrivilege;
        default: return std::nullopt;
    }
}

const char* category_name(ThreatCategory category) {
    switch (category) {
        case ThreatCategory::Spoofing: return "Spoofing";
        case ThreatCategory::Tampering: return "Tampering";
        case ThreatCategory::Repudiation: return "Repudiation";
        case ThreatCategory::InformationDisclosure: return "Information Disclosure";
        case ThreatCategory::DenialOfService: return "Denial of Service";
        case ThreatCategory::ElevationOfPrivilege: return "Elevation of Privilege";
    }
    return "Unknown";
}

ElementKind element_kind_of(NodeKind kind) {
    switch (kind) {
        case NodeKind::ExternalEntity: return ElementKind::ExternalEntity;
        case NodeKind::Process: return ElementKind::Process;
        case NodeKind::DataStore: return ElementKind::DataStore;
    }
    return ElementKind::Process;
}

const char* moscow_name(Moscow priority) {
    switch (priority) {
        case Moscow::Must: return "must";
        case Moscow::Should: return "should";
        case Moscow::Could: return "could";
    }
    return "unknown";
}

std::optional<Moscow> moscow_from_string(std::string_view text) {
    if (text == "must") return Moscow::Must;
    if (text == "should") return Moscow::Should;
    if (text == "could") return Moscow::Could;
    return std::nullopt;
}

PrivacyScope::PrivacyScope(std::set<ThreatCategory> categories)
    : categories_(std::move(categories)) {}

PrivacyScope PrivacyScope::default_scope() {
    return PrivacyScope({ThreatCategory::Spoofing, ThreatCategory::Tampering,
                         ThreatCategory::InformationDisclosure});
}

PrivacyScope PrivacyScope::from_categories(std::set<ThreatCategory> categories) {
    if (categories.empty()) {
        throw Error(ErrorCode::PreconditionViolated, "privacy scope must not be empty");
    }
    return PrivacyScope(std::move(categories));
}

std::set<ThreatCategory> applicable_categories(ElementKind kind) {
    switch (kind) {
        case ElementKind::ExternalEntity:
            return {ThreatCategory::Spoofing, ThreatCategory::Repudiation};
        case ElementKind::Process:
            return {ThreatCategory::Spoofing, ThreatCategory::Tampering,
                    ThreatCategory::Repudiation, ThreatCategory::InformationDisclosure,
                    ThreatCategory::DenialOfService, ThreatCategory::ElevationOfPrivilege};
        case ElementKind::DataStore:
            return {ThreatCategory::Tampering, ThreatCategory::Repudiation,
                    ThreatCategory::InformationDisclosure, ThreatCategory::DenialOfService};
        case ElementKind::Flow:
            return {ThreatCategory::Tampering, ThreatCategory::InformationDisclosure,
                    ThreatCategory::DenialOfService};
    }
    return {};
}

std::vector<CandidateThreat> enumerate_candidates(const Dfd& dfd, const PrivacyScope& scope) {
    if (has_errors(validate_dfd(dfd))) {
        throw Error(ErrorCode::PreconditionViolated,
                    "enumerate_candidates requires a DFD with no validation errors");
    }

    std::vector<CandidateThreat> candidates;
    auto add_element = [&](ElementRef::Kind ref_kind, const std::string& id, ElementKind kind) {
        auto applicable = applicable_categories(kind);
        for (ThreatCategory category : kCategoryOrder) {
            if (applicable.count(category) > 0 && scope.contains(category)) {
                candidates.push_back({{ref_kind, id}, category});
            }
        }
    };

    for (const auto& node : dfd.nodes) {
        add_element(ElementRef::Kind::Node, node.id, element_kind_of(node.kind));
    }
    for (const auto& flow : dfd.flows) {
        add_element(ElementRef::Kind::Flow, flow.id, ElementKind::Flow);
    }
    return candidates;
}

namespace {

std::string element_display(const Dfd& dfd, const ElementRef& ref) {
    if (ref.kind == ElementRef::Kind::Node) {
        return dfd.find_node(ref.id)->name;
    }
    const DataFlow* flow = dfd.find_flow(ref.id);
    return "flow " + flow->id + " (" + flow->source + " -> " + flow->target + ")";
}

}  // namespace

std::vector<StrideEntry> scaffold_stride(const Dfd& dfd, const PrivacyScope& scope) {
    auto candidates = enumerate_candidates(dfd, scope);
    std::vector<StrideEntry> entries;
    entries.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        char id[8];
        std::snprintf(id, sizeof id, "t%03zu", i + 1);
        StrideEntry entry;
        entry.id = id;
        entry.category = candidates[i].category;
        entry.target = candidates[i].target;
        entry.title = std::string(category_name(candidates[i].category)) + " threat targeting " +
                      element_display(dfd, candidates[i].target);
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::vector<Diagnostic> coverage_check(const std::vector<StrideEntry>& entries,
                                       const Dfd& dfd,
                                       const PrivacyScope& scope) {
    std::vector<Diagnostic> findings;

    // C1 is about exposure points, so it only applies while Information
    // Disclosure is part of the analysis scope.
    if (scope.contains(ThreatCategory::InformationDisclosure)) {
        for (const auto& flow_id : crossing_flows(dfd)) {
            bool covered = std::any_of(entries.begin(), entries.end(), [&](const StrideEntry& e) {
                return e.category == ThreatCategory::InformationDisclosure &&
                       e.target.kind == ElementRef::Kind::Flow && e.target.id == flow_id;
            });
            if (!covered) {
                findings.push_back({Severity::Warning, "C1",
                                    "boundary-crossing flow \"" + flow_id +
                                        "\" has no Information Disclosure entry",
                                    flow_id});
            }
        }
    }

    for (const auto& entry : entries) {
        bool blank = std::all_of(entry.mitigation.begin(), entry.mitigation.end(),
                                 [](unsigned char c) { return std::isspace(c); });
        if (blank) {
            findings.push_back({Severity::Warning, "C2",
                                "entry \"" + entry.id + "\" has no mitigation yet", entry.id});
        }
    }

    return findings;
}

}  // namespace privreport
