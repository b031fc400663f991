#include "privreport/artifacts.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace privreport {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& file, const std::string& path,
                               const std::string& reason) {
    throw Error(ErrorCode::SchemaViolation, file + ": " + path + ": " + reason, file);
}

json parse_json(const std::string& file, const std::string& text) {
    json parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded()) {
        schema_error(file, "$", "not valid JSON");
    }
    return parsed;
}

std::string require_string(const json& value, const std::string& file, const std::string& path,
                           bool allow_empty = false) {
    if (!value.is_string()) schema_error(file, path, "expected a string");
    std::string text = value.get<std::string>();
    if (!allow_empty && text.empty()) schema_error(file, path, "must not be empty");
    return text;
}

const json& require_field(const json& object, const std::string& file, const std::string& path,
                          const std::string& field) {
    if (!object.is_object()) schema_error(file, path, "expected an object");
    auto it = object.find(field);
    if (it == object.end()) schema_error(file, path + "." + field, "missing field");
    return *it;
}

std::vector<std::string> string_list(const json& value, const std::string& file,
                                     const std::string& path) {
    if (!value.is_array()) schema_error(file, path, "expected an array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < value.size(); ++i) {
        out.push_back(require_string(value[i], file, path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

std::optional<Moscow> optional_priority(const json& object, const std::string& file,
                                        const std::string& path) {
    auto it = object.find("priority");
    if (it == object.end() || it->is_null()) return std::nullopt;
    std::string text = require_string(*it, file, path + ".priority");
    auto priority = moscow_from_string(text);
    if (!priority) {
        schema_error(file, path + ".priority", "must be \"must\", \"should\" or \"could\"");
    }
    return priority;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read " + path.string(), path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

bool contains_case_insensitive(const std::string& haystack, const std::string& needle) {
    if (needle.empty()) return true;
    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return s;
    };
    return lower(haystack).find(lower(needle)) != std::string::npos;
}

}  // namespace

MonitoringUseCase parse_use_case_json(const std::string& text) {
    const std::string file = kUseCaseFile;
    json doc = parse_json(file, text);
    if (!doc.is_object()) schema_error(file, "$", "expected an object");

    MonitoringUseCase use_case;
    use_case.id = require_string(require_field(doc, file, "$", "id"), file, "$.id");
    use_case.title = require_string(require_field(doc, file, "$", "title"), file, "$.title");
    use_case.goal = require_string(require_field(doc, file, "$", "goal"), file, "$.goal");
    use_case.scenario =
        require_string(require_field(doc, file, "$", "scenario"), file, "$.scenario");

    const json& data = require_field(doc, file, "$", "monitored_data");
    if (!data.is_array()) schema_error(file, "$.monitored_data", "expected an array");
    if (data.empty()) {
        schema_error(file, "$.monitored_data",
                     "a monitoring use case must name at least one collected data item");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::string path = "$.monitored_data[" + std::to_string(i) + "]";
        DataItem item;
        item.name = require_string(require_field(data[i], file, path, "name"), file, path + ".name");
        item.description = require_string(require_field(data[i], file, path, "description"), file,
                                          path + ".description", /*allow_empty=*/true);
        const json& sensitive = require_field(data[i], file, path, "sensitive");
        if (!sensitive.is_boolean()) schema_error(file, path + ".sensitive", "expected a boolean");
        item.sensitive = sensitive.get<bool>();
        use_case.monitored_data.push_back(std::move(item));
    }

    use_case.equipment =
        string_list(require_field(doc, file, "$", "equipment"), file, "$.equipment");
    use_case.monitored_stakeholders = string_list(
        require_field(doc, file, "$", "monitored_stakeholders"), file, "$.monitored_stakeholders");
    return use_case;
}

std::vector<Requirement> parse_requirements_json(const std::string& text) {
    const std::string file = kRequirementsFile;
    json doc = parse_json(file, text);
    if (!doc.is_array()) schema_error(file, "$", "expected an array");
    if (doc.empty()) schema_error(file, "$", "at least one requirement is required");

    std::vector<Requirement> requirements;
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        std::string path = "$[" + std::to_string(i) + "]";
        Requirement req;
        req.id = require_string(require_field(doc[i], file, path, "id"), file, path + ".id");
        req.text = require_string(require_field(doc[i], file, path, "text"), file, path + ".text");
        req.use_case = require_string(require_field(doc[i], file, path, "use_case"), file,
                                      path + ".use_case");
        req.priority = optional_priority(doc[i], file, path);
        if (!seen.insert(req.id).second) {
            schema_error(file, path + ".id", "duplicate requirement id \"" + req.id + "\"");
        }
        requirements.push_back(std::move(req));
    }
    return requirements;
}

std::vector<StrideEntry> parse_stride_json(const std::string& text) {
    const std::string file = kStrideFile;
    json doc = parse_json(file, text);
    if (!doc.is_array()) schema_error(file, "$", "expected an array");

    std::vector<StrideEntry> entries;
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        std::string path = "$[" + std::to_string(i) + "]";
        StrideEntry entry;
        entry.id = require_string(require_field(doc[i], file, path, "id"), file, path + ".id");

        std::string code =
            require_string(require_field(doc[i], file, path, "category"), file, path + ".category");
        auto category = code.size() == 1 ? category_from_code(code[0]) : std::nullopt;
        if (!category) {
            schema_error(file, path + ".category", "must be one of S, T, R, I, D, E");
        }
        entry.category = *category;

        const json& target = require_field(doc[i], file, path, "target");
        std::string kind =
            require_string(require_field(target, file, path + ".target", "kind"), file,
                           path + ".target.kind");
        if (kind == "node") {
            entry.target.kind = ElementRef::Kind::Node;
        } else if (kind == "flow") {
            entry.target.kind = ElementRef::Kind::Flow;
        } else {
            schema_error(file, path + ".target.kind", "must be \"node\" or \"flow\"");
        }
        entry.target.id = require_string(require_field(target, file, path + ".target", "ref"),
                                         file, path + ".target.ref");

        entry.title =
            require_string(require_field(doc[i], file, path, "title"), file, path + ".title");
        // Scaffolded entries carry empty description/impact/mitigation until an
        // engineer fills them; the pipeline enforces non-emptiness later.
        entry.description = require_string(require_field(doc[i], file, path, "description"), file,
                                           path + ".description", /*allow_empty=*/true);
        entry.impact = require_string(require_field(doc[i], file, path, "impact"), file,
                                      path + ".impact", /*allow_empty=*/true);
        entry.mitigation = require_string(require_field(doc[i], file, path, "mitigation"), file,
                                          path + ".mitigation", /*allow_empty=*/true);
        entry.priority = optional_priority(doc[i], file, path);
        if (!seen.insert(entry.id).second) {
            schema_error(file, path + ".id", "duplicate entry id \"" + entry.id + "\"");
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::string use_case_to_json(const MonitoringUseCase& use_case) {
    json doc;
    doc["id"] = use_case.id;
    doc["title"] = use_case.title;
    doc["goal"] = use_case.goal;
    doc["scenario"] = use_case.scenario;
    doc["monitored_data"] = json::array();
    for (const auto& item : use_case.monitored_data) {
        doc["monitored_data"].push_back(
            {{"name", item.name}, {"description", item.description}, {"sensitive", item.sensitive}});
    }
    doc["equipment"] = use_case.equipment;
    doc["monitored_stakeholders"] = use_case.monitored_stakeholders;
    return doc.dump(2) + "\n";
}

std::string requirements_to_json(const std::vector<Requirement>& requirements) {
    json doc = json::array();
    for (const auto& req : requirements) {
        json item = {{"id", req.id}, {"text", req.text}, {"use_case", req.use_case}};
        if (req.priority) item["priority"] = moscow_name(*req.priority);
        doc.push_back(std::move(item));
    }
    return doc.dump(2) + "\n";
}

std::string stride_to_json(const std::vector<StrideEntry>& entries) {
    json doc = json::array();
    for (const auto& entry : entries) {
        json item = {
            {"id", entry.id},
            {"category", std::string(1, category_code(entry.category))},
            {"target",
             {{"kind", entry.target.kind == ElementRef::Kind::Node ? "node" : "flow"},
              {"ref", entry.target.id}}},
            {"title", entry.title},
            {"description", entry.description},
            {"impact", entry.impact},
            {"mitigation", entry.mitigation},
        };
        if (entry.priority) item["priority"] = moscow_name(*entry.priority);
        doc.push_back(std::move(item));
    }
    return doc.dump(2) + "\n";
}

ProjectBundle load_project(const std::filesystem::path& directory) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(directory)) {
        throw Error(ErrorCode::MissingFile, "project directory " + directory.string() + " not found",
                    directory.string());
    }
    for (const char* name : {kUseCaseFile, kRequirementsFile, kDfdFile, kStrideFile}) {
        if (!fs::exists(directory / name)) {
            throw Error(ErrorCode::MissingFile, std::string(name) + " not found in " +
                                                    directory.string(),
                        name);
        }
    }

    ProjectBundle bundle;
    bundle.use_case = parse_use_case_json(read_text_file(directory / kUseCaseFile));
    bundle.requirements = parse_requirements_json(read_text_file(directory / kRequirementsFile));
    bundle.dfd = parse_dfd(read_text_file(directory / kDfdFile));
    bundle.stride = parse_stride_json(read_text_file(directory / kStrideFile));

    for (std::size_t i = 0; i < bundle.requirements.size(); ++i) {
        if (bundle.requirements[i].use_case != bundle.use_case.id) {
            schema_error(kRequirementsFile, "$[" + std::to_string(i) + "].use_case",
                         "references use case \"" + bundle.requirements[i].use_case +
                             "\" but the bundle's use case is \"" + bundle.use_case.id + "\"");
        }
    }
    return bundle;
}

std::vector<Diagnostic> cross_ref_check(const ProjectBundle& bundle) {
    std::vector<Diagnostic> findings;

    for (const auto& entry : bundle.stride) {
        std::optional<ElementKind> kind;
        if (entry.target.kind == ElementRef::Kind::Node) {
            if (const DfdNode* node = bundle.dfd.find_node(entry.target.id)) {
                kind = element_kind_of(node->kind);
            }
        } else if (bundle.dfd.find_flow(entry.target.id) != nullptr) {
            kind = ElementKind::Flow;
        }

        if (!kind) {
            findings.push_back({Severity::Error, "X1",
                                "entry \"" + entry.id + "\" targets unknown " +
                                    (entry.target.kind == ElementRef::Kind::Node ? "node" : "flow") +
                                    " \"" + entry.target.id + "\"",
                                entry.id});
            continue;
        }
        if (applicable_categories(*kind).count(entry.category) == 0) {
            findings.push_back({Severity::Error, "X2",
                                "category " + std::string(category_name(entry.category)) +
                                    " is not applicable to the targeted element kind",
                                entry.id});
        }
    }

    for (const auto& item : bundle.use_case.monitored_data) {
        if (!item.sensitive) continue;
        bool mentioned =
            std::any_of(bundle.dfd.flows.begin(), bundle.dfd.flows.end(), [&](const DataFlow& f) {
                return contains_case_insensitive(f.label, item.name);
            });
        if (!mentioned) {
            findings.push_back({Severity::Warning, "X3",
                                "sensitive data item \"" + item.name +
                                    "\" appears in no flow label; the DFD may be incomplete",
                                item.name});
        }
    }

    return findings;
}

}  // namespace privreport
