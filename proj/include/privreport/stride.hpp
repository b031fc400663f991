#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "privreport/dfd.hpp"

namespace privreport {

enum class ThreatCategory {
    Spoofing,
    Tampering,
    Repudiation,
    InformationDisclosure,
    DenialOfService,
    ElevationOfPrivilege,
};

// Fixed S,T,R,I,D,E order used for candidate enumeration and serialization.
inline constexpr ThreatCategory kCategoryOrder[] = {
    ThreatCategory::Spoofing,
    ThreatCategory::Tampering,
    ThreatCategory::Repudiation,
    ThreatCategory::InformationDisclosure,
    ThreatCategory::DenialOfService,
    ThreatCategory::ElevationOfPrivilege,
};

// Single-letter code: S, T, R, I, D or E.
char category_code(ThreatCategory category);
std::optional<ThreatCategory> category_from_code(char code);
// Display name, e.g. "Information Disclosure".
const char* category_name(ThreatCategory category);

enum class ElementKind { ExternalEntity, Process, DataStore, Flow };

ElementKind element_kind_of(NodeKind kind);

struct ElementRef {
    enum class Kind { Node, Flow };
    Kind kind = Kind::Node;
    std::string id;

    bool operator==(const ElementRef&) const = default;
};

enum class Moscow { Must, Should, Could };

const char* moscow_name(Moscow priority);
std::optional<Moscow> moscow_from_string(std::string_view text);

struct StrideEntry {
    std::string id;
    ThreatCategory category = ThreatCategory::Spoofing;
    ElementRef target;
    std::string title;
    std::string description;
    std::string impact;
    std::string mitigation;  // empty only in freshly scaffolded entries
    std::optional<Moscow> priority;

    bool operator==(const StrideEntry&) const = default;
};

// Non-empty subset of the six categories treated as privacy-relevant.
class PrivacyScope {
public:
    // Spoofing, Tampering, Information Disclosure.
    static PrivacyScope default_scope();
    static PrivacyScope from_categories(std::set<ThreatCategory> categories);

    bool contains(ThreatCategory category) const { return categories_.count(category) > 0; }
    const std::set<ThreatCategory>& categories() const { return categories_; }

private:
    explicit PrivacyScope(std::set<ThreatCategory> categories);
    std::set<ThreatCategory> categories_;
};

// The conventional STRIDE-per-element applicability matrix:
//   ExternalEntity {S,R}   Process {S,T,R,I,D,E}
//   DataStore      {T,R,I,D}   Flow {T,I,D}
std::set<ThreatCategory> applicable_categories(ElementKind kind);

struct CandidateThreat {
    ElementRef target;
    ThreatCategory category = ThreatCategory::Spoofing;

    bool operator==(const CandidateThreat&) const = default;
};

// Cross product of every node and flow with applicable_categories(kind) and
// the scope. Ordered by DFD declaration order (nodes first, then flows), then
// by the fixed S,T,R,I,D,E category order.
std::vector<CandidateThreat> enumerate_candidates(const Dfd& dfd, const PrivacyScope& scope);

// One skeleton entry per candidate, ids t001, t002, ... in candidate order,
// with description/impact/mitigation left empty for the engineer to fill.
std::vector<StrideEntry> scaffold_stride(const Dfd& dfd, const PrivacyScope& scope);

// Coverage lints:
//   C1 Warning  boundary-crossing flow with no Information Disclosure entry
//               targeting it (checked only while Information Disclosure is in
//               scope)
//   C2 Warning  entry whose mitigation is empty
std::vector<Diagnostic> coverage_check(const std::vector<StrideEntry>& entries,
                                       const Dfd& dfd,
                                       const PrivacyScope& scope);

}  // namespace privreport
