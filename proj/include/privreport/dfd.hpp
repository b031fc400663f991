#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "privreport/errors.hpp"

namespace privreport {

enum class NodeKind { ExternalEntity, Process, DataStore };

const char* node_kind_name(NodeKind kind);

struct DfdNode {
    std::string id;
    std::string name;
    NodeKind kind = NodeKind::Process;

    bool operator==(const DfdNode&) const = default;
};

struct DataFlow {
    std::string id;
    std::string source;
    std::string target;
    std::string label;  // the transported data

    bool operator==(const DataFlow&) const = default;
};

struct TrustBoundary {
    std::string id;
    std::string name;
    std::vector<std::string> members;  // node ids, declaration order

    bool operator==(const TrustBoundary&) const = default;
};

// Immutable after construction; declaration order is meaningful and preserved
// by the parser, the serializer, and every emitter.
struct Dfd {
    std::vector<DfdNode> nodes;
    std::vector<DataFlow> flows;
    std::vector<TrustBoundary> boundaries;

    const DfdNode* find_node(std::string_view id) const;
    const DataFlow* find_flow(std::string_view id) const;
    // Id of the boundary containing the node, or nullopt when unbounded.
    std::optional<std::string> boundary_of(std::string_view node_id) const;

    bool operator==(const Dfd&) const = default;
};

enum class Severity { Error, Warning };

const char* severity_name(Severity severity);

struct Diagnostic {
    Severity severity = Severity::Error;
    std::string code;     // rule identifier: D1..D5, X1..X3, C1..C2
    std::string message;
    std::string subject;  // offending element id, empty when not applicable

    bool operator==(const Diagnostic&) const = default;
};

// True if `id` matches the identifier grammar: [a-z][a-z0-9_]*.
bool is_valid_identifier(std::string_view id);

// Parse the line-based DFD DSL. Lines are `entity|process|store <id> "<name>"`,
// `boundary <id> "<name>" { <id> ... }`, `flow <id> <src> -> <dst> "<label>"`.
// `#` starts a comment, blank lines are ignored. Throws Error with
// SyntaxError, DuplicateId, UnknownReference or EmptyDiagram.
Dfd parse_dfd(std::string_view text);

// Inverse of parse_dfd: canonical DSL text that parses back to an equal Dfd.
std::string serialize_dsl(const Dfd& dfd);

// Structural rules, returned in a fixed order (flows, then boundaries, then
// nodes):
//   D1 Error   flow endpoint is not a declared node
//   D2 Warning neither endpoint of a flow is a Process
//   D3 Error   boundary member is not a declared node
//   D4 Error   node appears in more than one boundary
//   D5 Error   flow source equals flow target
std::vector<Diagnostic> validate_dfd(const Dfd& dfd);

bool has_errors(const std::vector<Diagnostic>& diagnostics);

// Deterministic Mermaid flowchart text. Requires validate_dfd to report no
// Error-severity findings; throws Error(PreconditionViolated) otherwise.
std::string emit_mermaid(const Dfd& dfd);

// Ids of flows whose endpoints have different boundary memberships (a node
// outside every boundary counts as its own membership), declaration order.
std::vector<std::string> crossing_flows(const Dfd& dfd);

// Deterministic structural prose: counts per kind, one sentence per flow,
// boundary memberships, and boundary-crossing flows. Doubles as the offline
// DFD summary and as context handed to the live provider.
std::string summarize_dfd(const Dfd& dfd);

}  // namespace privreport
