#include "privreport/dfd.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace privreport {

namespace {

std::string quote(std::string_view text) {
    return "\"" + std::string(text) + "\"";
}

[[noreturn]] void syntax_error(std::size_t line_no, const std::string& what) {
    throw Error(ErrorCode::SyntaxError, "line " + std::to_string(line_no) + ": " + what);
}

// One line of the DSL, split on whitespace with quoted strings kept whole.
// `#` outside quotes starts a comment.
struct Token {
    std::string text;
    bool quoted = false;
};

std::vector<Token> tokenize_line(std::string_view line, std::size_t line_no) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        char c = line[i];
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            continue;
        }
        if (c == '#') break;
        if (c == '"') {
            std::size_t end = line.find('"', i + 1);
            if (end == std::string_view::npos) {
                syntax_error(line_no, "unterminated string");
            }
            tokens.push_back({std::string(line.substr(i + 1, end - i - 1)), true});
            i = end + 1;
            continue;
        }
        std::size_t end = i;
        while (end < line.size() && line[end] != ' ' && line[end] != '\t' &&
               line[end] != '\r' && line[end] != '"' && line[end] != '#') {
            ++end;
        }
        tokens.push_back({std::string(line.substr(i, end - i)), false});
        i = end;
    }
    return tokens;
}

std::string expect_identifier(const Token& token, std::size_t line_no, const std::string& what) {
    if (token.quoted || !is_valid_identifier(token.text)) {
        syntax_error(line_no, "expected " + what +
                                  " (lowercase letters, digits, underscore, starting with a "
                                  "letter), got " +
                                  quote(token.text));
    }
    return token.text;
}

std::string expect_string(const Token& token, std::size_t line_no, const std::string& what) {
    if (!token.quoted) {
        syntax_error(line_no, "expected quoted " + what + ", got " + quote(token.text));
    }
    if (token.text.empty()) {
        syntax_error(line_no, what + " must not be empty");
    }
    return token.text;
}

}  // namespace

const char* node_kind_name(NodeKind kind) {
    switch (kind) {
        case NodeKind::ExternalEntity: return "external entity";
        case NodeKind::Process: return "process";
        case NodeKind::DataStore: return "data store";
    }
    return "unknown";
}

const char* severity_name(Severity severity) {
    return severity == Severity::Error ? "ERROR" : "WARNING";
}

bool is_valid_identifier(std::string_view id) {
    if (id.empty()) return false;
    if (id[0] < 'a' || id[0] > 'z') return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

const DfdNode* Dfd::find_node(std::string_view id) const {
    for (const auto& node : nodes) {
        if (node.id == id) return &node;
    }
    return nullptr;
}

const DataFlow* Dfd::find_flow(std::string_view id) const {
    for (const auto& flow : flows) {
        if (flow.id == id) return &flow;
    }
    return nullptr;
}

std::optional<std::string> Dfd::boundary_of(std::string_view node_id) const {
    for (const auto& boundary : boundaries) {
        for (const auto& member : boundary.members) {
            if (member == node_id) return boundary.id;
        }
    }
    return std::nullopt;
}

Dfd parse_dfd(std::string_view text) {
    Dfd dfd;
    std::unordered_set<std::string> node_ids;
    std::unordered_set<std::string> flow_ids;
    std::unordered_set<std::string> boundary_ids;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                               : eol - pos);
        ++line_no;
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;

        auto tokens = tokenize_line(line, line_no);
        if (tokens.empty()) continue;

        const std::string& keyword = tokens[0].text;
        if (tokens[0].quoted) syntax_error(line_no, "line must start with a keyword");

        if (keyword == "entity" || keyword == "process" || keyword == "store") {
            if (tokens.size() != 3) {
                syntax_error(line_no, keyword + " takes an id and a quoted name");
            }
            DfdNode node;
            node.id = expect_identifier(tokens[1], line_no, "node id");
            node.name = expect_string(tokens[2], line_no, "node name");
            node.kind = keyword == "entity"   ? NodeKind::ExternalEntity
                        : keyword == "process" ? NodeKind::Process
                                               : NodeKind::DataStore;
            if (!node_ids.insert(node.id).second) {
                throw Error(ErrorCode::DuplicateId,
                            "duplicate node id " + quote(node.id) + " on line " +
                                std::to_string(line_no),
                            node.id);
            }
            dfd.nodes.push_back(std::move(node));
        } else if (keyword == "flow") {
            // flow <id> <source> -> <target> "<label>"
            if (tokens.size() != 6 || tokens[3].text != "->" || tokens[3].quoted) {
                syntax_error(line_no, "flow syntax is: flow <id> <source> -> <target> \"<label>\"");
            }
            DataFlow flow;
            flow.id = expect_identifier(tokens[1], line_no, "flow id");
            flow.source = expect_identifier(tokens[2], line_no, "source node id");
            flow.target = expect_identifier(tokens[4], line_no, "target node id");
            flow.label = expect_string(tokens[5], line_no, "flow label");
            if (!flow_ids.insert(flow.id).second) {
                throw Error(ErrorCode::DuplicateId,
                            "duplicate flow id " + quote(flow.id) + " on line " +
                                std::to_string(line_no),
                            flow.id);
            }
            dfd.flows.push_back(std::move(flow));
        } else if (keyword == "boundary") {
            // boundary <id> "<name>" { <id> <id> ... }
            if (tokens.size() < 5 || tokens[3].text != "{" || tokens[3].quoted ||
                tokens.back().text != "}" || tokens.back().quoted) {
                syntax_error(line_no,
                             "boundary syntax is: boundary <id> \"<name>\" { <id> <id> ... }");
            }
            TrustBoundary boundary;
            boundary.id = expect_identifier(tokens[1], line_no, "boundary id");
            boundary.name = expect_string(tokens[2], line_no, "boundary name");
            for (std::size_t t = 4; t + 1 < tokens.size(); ++t) {
                boundary.members.push_back(expect_identifier(tokens[t], line_no, "member node id"));
            }
            if (boundary.members.empty()) {
                syntax_error(line_no, "boundary must list at least one member");
            }
            if (!boundary_ids.insert(boundary.id).second) {
                throw Error(ErrorCode::DuplicateId,
                            "duplicate boundary id " + quote(boundary.id) + " on line " +
                                std::to_string(line_no),
                            boundary.id);
            }
            dfd.boundaries.push_back(std::move(boundary));
        } else {
            syntax_error(line_no, "unknown keyword " + quote(keyword));
        }
    }

    if (dfd.nodes.empty()) {
        throw Error(ErrorCode::EmptyDiagram, "the diagram declares no nodes");
    }

    // References resolve against the whole document, so forward references
    // between lines are fine.
    for (const auto& flow : dfd.flows) {
        for (const std::string* endpoint : {&flow.source, &flow.target}) {
            if (node_ids.count(*endpoint) == 0) {
                throw Error(ErrorCode::UnknownReference,
                            "flow " + quote(flow.id) + " references undeclared node " +
                                quote(*endpoint),
                            *endpoint);
            }
        }
    }
    for (const auto& boundary : dfd.boundaries) {
        for (const auto& member : boundary.members) {
            if (node_ids.count(member) == 0) {
                throw Error(ErrorCode::UnknownReference,
                            "boundary " + quote(boundary.id) + " references undeclared node " +
                                quote(member),
                            member);
            }
        }
    }

    return dfd;
}

std::string serialize_dsl(const Dfd& dfd) {
    std::ostringstream out;
    for (const auto& node : dfd.nodes) {
        const char* keyword = node.kind == NodeKind::ExternalEntity ? "entity"
                              : node.kind == NodeKind::Process      ? "process"
                                                                    : "store";
        out << keyword << ' ' << node.id << ' ' << quote(node.name) << '\n';
    }
    for (const auto& boundary : dfd.boundaries) {
        out << "boundary " << boundary.id << ' ' << quote(boundary.name) << " {";
        for (const auto& member : boundary.members) {
            out << ' ' << member;
        }
        out << " }\n";
    }
    for (const auto& flow : dfd.flows) {
        out << "flow " << flow.id << ' ' << flow.source << " -> " << flow.target << ' '
            << quote(flow.label) << '\n';
    }
    return out.str();
}

std::vector<Diagnostic> validate_dfd(const Dfd& dfd) {
    std::vector<Diagnostic> findings;

    for (const auto& flow : dfd.flows) {
        bool endpoints_ok = true;
        for (const std::string* endpoint : {&flow.source, &flow.target}) {
            if (dfd.find_node(*endpoint) == nullptr) {
                findings.push_back({Severity::Error, "D1",
                                    "flow endpoint " + quote(*endpoint) + " is not a declared node",
                                    flow.id});
                endpoints_ok = false;
            }
        }
        if (!endpoints_ok) continue;
        if (flow.source == flow.target) {
            findings.push_back({Severity::Error, "D5",
                                "flow connects node " + quote(flow.source) + " to itself",
                                flow.id});
        }
        const DfdNode* source = dfd.find_node(flow.source);
        const DfdNode* target = dfd.find_node(flow.target);
        if (source->kind != NodeKind::Process && target->kind != NodeKind::Process) {
            findings.push_back({Severity::Warning, "D2",
                                "neither endpoint of this flow is a process", flow.id});
        }
    }

    for (const auto& boundary : dfd.boundaries) {
        for (const auto& member : boundary.members) {
            if (dfd.find_node(member) == nullptr) {
                findings.push_back({Severity::Error, "D3",
                                    "boundary member " + quote(member) + " is not a declared node",
                                    boundary.id});
            }
        }
    }

    std::map<std::string, int> membership_counts;
    for (const auto& boundary : dfd.boundaries) {
        for (const auto& member : boundary.members) {
            ++membership_counts[member];
        }
    }
    for (const auto& node : dfd.nodes) {
        auto it = membership_counts.find(node.id);
        if (it != membership_counts.end() && it->second > 1) {
            findings.push_back({Severity::Error, "D4",
                                "node " + quote(node.id) + " appears in more than one boundary",
                                node.id});
        }
    }

    return findings;
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
    return std::any_of(diagnostics.begin(), diagnostics.end(),
                       [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

namespace {

void require_clean(const Dfd& dfd, const char* operation) {
    if (has_errors(validate_dfd(dfd))) {
        throw Error(ErrorCode::PreconditionViolated,
                    std::string(operation) + " requires a DFD with no validation errors");
    }
}

std::string mermaid_node(const DfdNode& node) {
    switch (node.kind) {
        case NodeKind::ExternalEntity: return node.id + "[\"" + node.name + "\"]";
        case NodeKind::Process: return node.id + "((\"" + node.name + "\"))";
        case NodeKind::DataStore: return node.id + "[(\"" + node.name + "\")]";
    }
    return node.id;
}

std::string count_phrase(std::size_t n, const std::string& singular, const std::string& plural) {
    return std::to_string(n) + " " + (n == 1 ? singular : plural);
}

// "a", "a and b", "a, b, and c"
std::string join_names(const std::vector<std::string>& names) {
    if (names.empty()) return {};
    if (names.size() == 1) return names[0];
    if (names.size() == 2) return names[0] + " and " + names[1];
    std::string out;
    for (std::size_t i = 0; i + 1 < names.size(); ++i) {
        out += names[i] + ", ";
    }
    out += "and " + names.back();
    return out;
}

}  // namespace

std::string emit_mermaid(const Dfd& dfd) {
    require_clean(dfd, "emit_mermaid");

    std::ostringstream out;
    out << "flowchart LR\n";
    for (const auto& node : dfd.nodes) {
        if (!dfd.boundary_of(node.id).has_value()) {
            out << "  " << mermaid_node(node) << "\n";
        }
    }
    for (const auto& boundary : dfd.boundaries) {
        out << "  subgraph " << boundary.id << "[\"" << boundary.name << "\"]\n";
        for (const auto& member : boundary.members) {
            out << "    " << mermaid_node(*dfd.find_node(member)) << "\n";
        }
        out << "  end\n";
    }
    for (const auto& flow : dfd.flows) {
        out << "  " << flow.source << " -->|\"" << flow.label << "\"| " << flow.target << "\n";
    }
    return out.str();
}

std::vector<std::string> crossing_flows(const Dfd& dfd) {
    std::vector<std::string> crossing;
    for (const auto& flow : dfd.flows) {
        auto source_boundary = dfd.boundary_of(flow.source);
        auto target_boundary = dfd.boundary_of(flow.target);
        if (source_boundary != target_boundary) {
            crossing.push_back(flow.id);
        }
    }
    return crossing;
}

std::string summarize_dfd(const Dfd& dfd) {
    require_clean(dfd, "summarize_dfd");

    std::size_t entities = 0, processes = 0, stores = 0;
    for (const auto& node : dfd.nodes) {
        switch (node.kind) {
            case NodeKind::ExternalEntity: ++entities; break;
            case NodeKind::Process: ++processes; break;
            case NodeKind::DataStore: ++stores; break;
        }
    }

    std::ostringstream out;
    out << "The data flow diagram contains "
        << count_phrase(entities, "external entity", "external entities") << ", "
        << count_phrase(processes, "process", "processes") << ", "
        << count_phrase(stores, "data store", "data stores") << ", "
        << count_phrase(dfd.flows.size(), "data flow", "data flows") << ", and "
        << count_phrase(dfd.boundaries.size(), "trust boundary", "trust boundaries") << ".\n";

    for (const auto& flow : dfd.flows) {
        out << dfd.find_node(flow.source)->name << " sends " << flow.label << " to "
            << dfd.find_node(flow.target)->name << ".\n";
    }

    for (const auto& boundary : dfd.boundaries) {
        std::vector<std::string> member_names;
        member_names.reserve(boundary.members.size());
        for (const auto& member : boundary.members) {
            member_names.push_back(dfd.find_node(member)->name);
        }
        out << "The trust boundary " << boundary.name << " contains " << join_names(member_names)
            << ".\n";
    }

    for (const auto& flow_id : crossing_flows(dfd)) {
        const DataFlow* flow = dfd.find_flow(flow_id);
        out << "The flow " << flow->id << " (" << dfd.find_node(flow->source)->name << " -> "
            << dfd.find_node(flow->target)->name << ") crosses a trust boundary.\n";
    }

    return out.str();
}

}  // namespace privreport
