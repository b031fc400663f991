#include "privreport/report.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include <json.hpp>

namespace privreport {

using nlohmann::json;

const char* qa_code_name(QaCode code) {
    switch (code) {
        case QaCode::MissingThreat: return "MissingThreat";
        case QaCode::MissingRequirement: return "MissingRequirement";
        case QaCode::UndefinedAbbreviation: return "UndefinedAbbreviation";
        case QaCode::RedundantMitigation: return "RedundantMitigation";
        case QaCode::OverLength: return "OverLength";
        case QaCode::JargonTerm: return "JargonTerm";
    }
    return "Unknown";
}

bool is_completeness_finding(const QaFinding& finding) {
    return finding.code == QaCode::MissingThreat || finding.code == QaCode::MissingRequirement;
}

std::string normalize_mitigation(const std::string& mitigation) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : mitigation) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

ReportModel combine(const SimplifiedRequirements& simplified,
                    const std::vector<ThreatExplanation>& explanations,
                    const std::vector<StrideEntry>& entries,
                    const std::vector<Requirement>& requirements,
                    const ReportMetadata& metadata) {
    std::set<std::string> explained;
    for (const auto& explanation : explanations) explained.insert(explanation.entry_id);
    std::set<std::string> expected;
    for (const auto& entry : entries) expected.insert(entry.id);
    if (explained != expected) {
        std::string detail;
        for (const auto& id : expected) {
            if (!explained.count(id)) detail += (detail.empty() ? "" : ", ") + id + " unexplained";
        }
        for (const auto& id : explained) {
            if (!expected.count(id)) detail += (detail.empty() ? "" : ", ") + id + " unexpected";
        }
        throw Error(ErrorCode::CoverageMismatch,
                    "explanations do not cover the analyzed entries: " + detail);
    }

    ReportModel model;
    model.system_description = simplified.system_description;
    model.purpose = simplified.purpose;
    model.metadata = metadata;

    for (const auto& item : simplified.items) {
        RequirementItem out;
        out.requirement_id = item.requirement_id;
        out.plain_text = item.plain_text;
        out.rationale = item.rationale;
        auto req = std::find_if(requirements.begin(), requirements.end(),
                                [&](const Requirement& r) { return r.id == item.requirement_id; });
        if (req != requirements.end()) out.priority = req->priority;
        model.requirement_items.push_back(std::move(out));
    }

    for (const auto& explanation : explanations) {
        auto entry = std::find_if(entries.begin(), entries.end(),
                                  [&](const StrideEntry& e) { return e.id == explanation.entry_id; });
        ThreatSection section;
        section.title = entry->title;
        section.blocks.push_back({explanation.entry_id, explanation.what, explanation.why});
        section.how = explanation.how;
        section.mitigation_tag = normalize_mitigation(entry->mitigation);
        model.threat_sections.push_back(std::move(section));
    }
    std::sort(model.threat_sections.begin(), model.threat_sections.end(),
              [](const ThreatSection& a, const ThreatSection& b) { return a.entry_id() < b.entry_id(); });

    std::size_t risk_count = model.threat_sections.size();
    std::size_t req_count = model.requirement_items.size();
    std::ostringstream summary;
    summary << model.purpose << " This report explains " << req_count << " requirement"
            << (req_count == 1 ? "" : "s") << " in plain language and describes " << risk_count
            << " potential privacy risk" << (risk_count == 1 ? "" : "s")
            << " identified and addressed.";
    model.executive_summary = summary.str();
    return model;
}

namespace {

std::string html_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// "</" would end the surrounding <script> element early; JSON allows the
// escaped form.
std::string script_safe_json(const std::string& json_text) {
    std::string out;
    out.reserve(json_text.size());
    for (std::size_t i = 0; i < json_text.size(); ++i) {
        if (json_text[i] == '<' && i + 1 < json_text.size() && json_text[i + 1] == '/') {
            out += "<\\/";
            ++i;
        } else {
            out += json_text[i];
        }
    }
    return out;
}

}  // namespace

std::string render_html(const ReportModel& model) {
    std::ostringstream html;
    html << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
         << "<title>Privacy Report</title>\n<style>\n"
         << "body { font-family: Georgia, serif; max-width: 52rem; margin: 2rem auto; "
            "padding: 0 1rem; color: #1c1c1c; line-height: 1.55; }\n"
         << "h1 { border-bottom: 3px solid #2a5d84; padding-bottom: 0.3rem; }\n"
         << "h2 { color: #2a5d84; margin-top: 2.2rem; }\n"
         << "article { border-left: 4px solid #d8e2ea; padding-left: 1rem; margin: 1.2rem 0; }\n"
         << "h3 { margin-bottom: 0.2rem; }\n"
         << "h4 { margin: 0.8rem 0 0.1rem; color: #555; font-size: 0.95rem; }\n"
         << ".priority { color: #666; font-size: 0.85rem; }\n"
         << "dl { display: grid; grid-template-columns: max-content auto; gap: 0.2rem 1rem; }\n"
         << "dt { font-weight: bold; }\ndd { margin: 0; }\n"
         << "pre { background: #f4f6f8; padding: 0.8rem; overflow-x: auto; }\n"
         << "</style>\n</head>\n<body>\n<main>\n<h1>Privacy Report</h1>\n";

    html << "<section id=\"executive-summary\">\n<h2>Executive Summary</h2>\n<p>"
         << html_escape(model.executive_summary) << "</p>\n</section>\n";

    html << "<section id=\"system-description\">\n<h2>What This System Does</h2>\n<p>"
         << html_escape(model.system_description) << "</p>\n</section>\n";

    html << "<section id=\"purpose\">\n<h2>Why It Is Being Built</h2>\n<p>"
         << html_escape(model.purpose) << "</p>\n</section>\n";

    html << "<section id=\"requirements\">\n<h2>Your Requirements In Plain Language</h2>\n";
    for (const auto& item : model.requirement_items) {
        html << "<article id=\"req-" << html_escape(item.requirement_id) << "\">\n<h3>"
             << html_escape(item.requirement_id);
        if (item.priority) {
            html << " <span class=\"priority\">(" << moscow_name(*item.priority) << ")</span>";
        }
        html << "</h3>\n<p>" << html_escape(item.plain_text) << "</p>\n"
             << "<h4>Why this matters</h4>\n<p>" << html_escape(item.rationale)
             << "</p>\n</article>\n";
    }
    html << "</section>\n";

    html << "<section id=\"risks\">\n<h2>Privacy Risks And Protections</h2>\n";
    if (model.threat_sections.empty()) {
        html << "<p>No in-scope privacy risks were analysed.</p>\n";
    }
    for (const auto& section : model.threat_sections) {
        html << "<article id=\"risk-" << html_escape(section.entry_id()) << "\">\n<h3>"
             << html_escape(section.title) << "</h3>\n";
        for (const auto& block : section.blocks) {
            html << "<h4>What could happen</h4>\n<p>" << html_escape(block.what) << "</p>\n"
                 << "<h4>Why it matters to you</h4>\n<p>" << html_escape(block.why) << "</p>\n";
        }
        html << "<h4>How it is addressed</h4>\n<p>" << html_escape(section.how)
             << "</p>\n</article>\n";
    }
    html << "</section>\n";

    html << "<section id=\"about\">\n<h2>About This Report</h2>\n<dl>\n"
         << "<dt>Generated</dt><dd>" << html_escape(model.metadata.generated_at) << "</dd>\n"
         << "<dt>Provider mode</dt><dd>" << html_escape(model.metadata.provider_mode) << "</dd>\n"
         << "<dt>Model</dt><dd>" << html_escape(model.metadata.model) << "</dd>\n";
    for (const auto& [file, hash] : model.metadata.artifact_hashes) {
        html << "<dt>" << html_escape(file) << "</dt><dd>" << html_escape(hash) << "</dd>\n";
    }
    html << "</dl>\n<h4>Data flow diagram (Mermaid source)</h4>\n<pre>"
         << html_escape(model.metadata.dfd_mermaid) << "</pre>\n"
         << "<script type=\"application/json\" id=\"privreport-model\">\n"
         << script_safe_json(report_model_to_json(model)) << "\n</script>\n</section>\n"
         << "</main>\n</body>\n</html>\n";
    return html.str();
}

ReportModel parse_report_html(const std::string& html) {
    const std::string marker = "<script type=\"application/json\" id=\"privreport-model\">";
    std::size_t start = html.find(marker);
    if (start == std::string::npos) {
        throw Error(ErrorCode::SchemaViolation, "report carries no embedded model data");
    }
    std::size_t content_start = start + marker.size();
    std::size_t end = html.find("</script>", content_start);
    if (end == std::string::npos) {
        throw Error(ErrorCode::SchemaViolation, "embedded model data is truncated");
    }
    std::string payload = html.substr(content_start, end - content_start);
    // Undo the "</" escape applied at render time.
    std::string unescaped;
    unescaped.reserve(payload.size());
    for (std::size_t i = 0; i < payload.size(); ++i) {
        if (payload[i] == '<' && i + 2 < payload.size() && payload[i + 1] == '\\' &&
            payload[i + 2] == '/') {
            unescaped += "</";
            i += 2;
        } else {
            unescaped += payload[i];
        }
    }
    return report_model_from_json(unescaped);
}

namespace {

const json& expect(const json& value, const char* key, json::value_t type) {
    if (!value.contains(key)) {
        throw Error(ErrorCode::SchemaViolation, std::string("report model: missing \"") + key + "\"",
                    key);
    }
    const json& field = value.at(key);
    bool ok = field.type() == type ||
              (type == json::value_t::array && field.is_array()) ||
              (type == json::value_t::object && field.is_object());
    if (!ok) {
        throw Error(ErrorCode::SchemaViolation,
                    std::string("report model: \"") + key + "\" has the wrong type", key);
    }
    return field;
}

std::string expect_string(const json& value, const char* key) {
    return expect(value, key, json::value_t::string).get<std::string>();
}

}  // namespace

std::string report_model_to_json(const ReportModel& model) {
    json items = json::array();
    for (const auto& item : model.requirement_items) {
        json j = {{"requirement_id", item.requirement_id},
                  {"plain_text", item.plain_text},
                  {"rationale", item.rationale}};
        if (item.priority) j["priority"] = moscow_name(*item.priority);
        items.push_back(std::move(j));
    }

    json sections = json::array();
    for (const auto& section : model.threat_sections) {
        json blocks = json::array();
        for (const auto& block : section.blocks) {
            blocks.push_back({{"entry_id", block.entry_id}, {"what", block.what}, {"why", block.why}});
        }
        sections.push_back({{"title", section.title},
                            {"blocks", std::move(blocks)},
                            {"how", section.how},
                            {"mitigation_tag", section.mitigation_tag}});
    }

    json root = {
        {"executive_summary", model.executive_summary},
        {"system_description", model.system_description},
        {"purpose", model.purpose},
        {"requirement_items", std::move(items)},
        {"threat_sections", std::move(sections)},
        {"metadata",
         {{"generated_at", model.metadata.generated_at},
          {"provider_mode", model.metadata.provider_mode},
          {"model", model.metadata.model},
          {"artifact_hashes", model.metadata.artifact_hashes},
          {"dfd_mermaid", model.metadata.dfd_mermaid}}},
    };
    return root.dump(2);
}

ReportModel report_model_from_json(const std::string& json_text) {
    json root = json::parse(json_text, nullptr, false);
    if (root.is_discarded() || !root.is_object()) {
        throw Error(ErrorCode::SchemaViolation, "report model: not a JSON object");
    }

    ReportModel model;
    model.executive_summary = expect_string(root, "executive_summary");
    model.system_description = expect_string(root, "system_description");
    model.purpose = expect_string(root, "purpose");

    for (const auto& j : expect(root, "requirement_items", json::value_t::array)) {
        RequirementItem item;
        item.requirement_id = expect_string(j, "requirement_id");
        item.plain_text = expect_string(j, "plain_text");
        item.rationale = expect_string(j, "rationale");
        if (j.contains("priority")) {
            auto priority = moscow_from_string(expect_string(j, "priority"));
            if (!priority) {
                throw Error(ErrorCode::SchemaViolation,
                            "report model: unknown priority \"" + expect_string(j, "priority") + "\"");
            }
            item.priority = *priority;
        }
        model.requirement_items.push_back(std::move(item));
    }

    for (const auto& j : expect(root, "threat_sections", json::value_t::array)) {
        ThreatSection section;
        section.title = expect_string(j, "title");
        section.how = expect_string(j, "how");
        section.mitigation_tag = expect_string(j, "mitigation_tag");
        for (const auto& b : expect(j, "blocks", json::value_t::array)) {
            section.blocks.push_back(
                {expect_string(b, "entry_id"), expect_string(b, "what"), expect_string(b, "why")});
        }
        if (section.blocks.empty()) {
            throw Error(ErrorCode::SchemaViolation, "report model: threat section has no blocks");
        }
        model.threat_sections.push_back(std::move(section));
    }

    const json& meta = expect(root, "metadata", json::value_t::object);
    model.metadata.generated_at = expect_string(meta, "generated_at");
    model.metadata.provider_mode = expect_string(meta, "provider_mode");
    model.metadata.model = expect_string(meta, "model");
    model.metadata.dfd_mermaid = expect_string(meta, "dfd_mermaid");
    for (const auto& [file, hash] : expect(meta, "artifact_hashes", json::value_t::object).items()) {
        if (!hash.is_string()) {
            throw Error(ErrorCode::SchemaViolation, "report model: artifact hash is not a string",
                        file);
        }
        model.metadata.artifact_hashes[file] = hash.get<std::string>();
    }
    return model;
}

namespace {

// A prose field of the model, in rendered document order.
struct ProseField {
    std::string where;  // human label used in finding messages
    const std::string* text;
};

std::vector<ProseField> prose_fields(const ReportModel& model) {
    std::vector<ProseField> fields;
    fields.push_back({"the executive summary", &model.executive_summary});
    fields.push_back({"the system description", &model.system_description});
    fields.push_back({"the purpose statement", &model.purpose});
    for (const auto& item : model.requirement_items) {
        fields.push_back({"requirement " + item.requirement_id, &item.plain_text});
        fields.push_back({"the rationale for requirement " + item.requirement_id, &item.rationale});
    }
    for (const auto& section : model.threat_sections) {
        fields.push_back({"the title of section " + section.entry_id(), &section.title});
        for (const auto& block : section.blocks) {
            fields.push_back({"the what block of section " + block.entry_id, &block.what});
            fields.push_back({"the why block of section " + block.entry_id, &block.why});
        }
        fields.push_back({"the how block of section " + section.entry_id(), &section.how});
    }
    return fields;
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

// Uppercase runs of 2-6 letters standing alone as words.
std::vector<std::pair<std::size_t, std::string>> abbreviation_tokens(const std::string& text) {
    std::vector<std::pair<std::size_t, std::string>> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        if (std::isupper(static_cast<unsigned char>(text[i]))) {
            std::size_t j = i;
            while (j < text.size() && std::isupper(static_cast<unsigned char>(text[j]))) ++j;
            std::size_t len = j - i;
            bool bounded = (i == 0 || !is_word_char(text[i - 1])) &&
                           (j == text.size() || !is_word_char(text[j]));
            if (len >= 2 && len <= 6 && bounded) {
                tokens.emplace_back(i, text.substr(i, len));
            }
            i = j;
        } else {
            ++i;
        }
    }
    return tokens;
}

// "Engine (LTPE)" or "LTPE (Long Term ...)" both count as expanded.
bool has_adjacent_expansion(const std::string& text, std::size_t pos, std::size_t len) {
    std::size_t after = pos + len;
    while (after < text.size() && text[after] == ' ') ++after;
    bool followed = after < text.size() && text[after] == '(';

    std::size_t before = pos;
    while (before > 0 && text[before - 1] == ' ') --before;
    bool wrapped = before > 0 && text[before - 1] == '(' && after < text.size() &&
                   text[after] == ')';
    return followed || wrapped;
}

std::optional<std::size_t> find_word(const std::string& text, const std::string& word) {
    std::size_t pos = 0;
    while ((pos = text.find(word, pos)) != std::string::npos) {
        bool bounded = (pos == 0 || !is_word_char(text[pos - 1])) &&
                       (pos + word.size() == text.size() || !is_word_char(text[pos + word.size()]));
        if (bounded) return pos;
        pos += word.size();
    }
    return std::nullopt;
}

int count_words(const std::string& text) {
    std::istringstream stream(text);
    std::string word;
    int count = 0;
    while (stream >> word) ++count;
    return count;
}

}  // namespace

std::vector<QaFinding> qa_check(const ReportModel& model,
                                const ProjectBundle& bundle,
                                const PrivacyScope& scope,
                                const QaLimits& limits) {
    std::vector<QaFinding> findings;

    std::set<std::string> covered_entries;
    for (const auto& section : model.threat_sections) {
        for (const auto& block : section.blocks) covered_entries.insert(block.entry_id);
    }
    for (const auto& entry : bundle.stride) {
        if (!scope.contains(entry.category)) continue;
        if (!covered_entries.count(entry.id)) {
            findings.push_back({QaCode::MissingThreat,
                                "in-scope entry " + entry.id + " has no section in the report",
                                entry.id});
        }
    }

    std::set<std::string> covered_reqs;
    for (const auto& item : model.requirement_items) covered_reqs.insert(item.requirement_id);
    for (const auto& req : bundle.requirements) {
        if (!covered_reqs.count(req.id)) {
            findings.push_back({QaCode::MissingRequirement,
                                "requirement " + req.id + " has no plain-language item", req.id});
        }
    }

    auto fields = prose_fields(model);

    // First occurrence decides for each abbreviation and jargon term.
    std::set<std::string> seen_abbreviations(limits.abbreviation_allowlist.begin(),
                                             limits.abbreviation_allowlist.end());
    for (const auto& field : fields) {
        for (const auto& [pos, token] : abbreviation_tokens(*field.text)) {
            if (seen_abbreviations.count(token)) continue;
            seen_abbreviations.insert(token);
            if (!has_adjacent_expansion(*field.text, pos, token.size())) {
                findings.push_back({QaCode::UndefinedAbbreviation,
                                    "abbreviation \"" + token + "\" first appears in " + field.where +
                                        " without an expansion",
                                    token});
            }
        }
    }

    std::map<std::string, std::vector<std::string>> tag_sections;  // tag -> entry ids
    std::vector<std::string> tag_order;
    for (const auto& section : model.threat_sections) {
        auto& ids = tag_sections[section.mitigation_tag];
        if (ids.empty()) tag_order.push_back(section.mitigation_tag);
        ids.push_back(section.entry_id());
    }
    for (const auto& tag : tag_order) {
        const auto& ids = tag_sections[tag];
        if (ids.size() < 2) continue;
        std::string list;
        for (const auto& id : ids) list += (list.empty() ? "" : ", ") + id;
        findings.push_back({QaCode::RedundantMitigation,
                            std::to_string(ids.size()) + " sections (" + list +
                                ") share the mitigation \"" + tag + "\"",
                            tag});
    }

    for (const auto& section : model.threat_sections) {
        auto check_length = [&](const std::string& part, const std::string& text,
                                const std::string& id) {
            int words = count_words(text);
            if (words > limits.max_section_words) {
                findings.push_back({QaCode::OverLength,
                                    "the " + part + " block of section " + id + " runs " +
                                        std::to_string(words) + " words (limit " +
                                        std::to_string(limits.max_section_words) + ")",
                                    id});
            }
        };
        for (const auto& block : section.blocks) {
            check_length("what", block.what, block.entry_id);
            check_length("why", block.why, block.entry_id);
        }
        check_length("how", section.how, section.entry_id());
    }

    std::set<std::string> seen_jargon;
    for (const auto& field : fields) {
        for (const auto& term : limits.jargon_denylist) {
            if (seen_jargon.count(term)) continue;
            auto pos = find_word(*field.text, term);
            if (!pos) continue;
            seen_jargon.insert(term);
            std::string rest = field.text->substr(*pos + term.size());
            bool explained =
                rest.find("that is,") != std::string::npos || find_word(rest, "meaning").has_value();
            if (!explained) {
                findings.push_back({QaCode::JargonTerm,
                                    "\"" + term + "\" appears in " + field.where +
                                        " without an explanation in plain words",
                                    term});
            }
        }
    }

    return findings;
}

ReportModel group_by_mitigation(const ReportModel& model) {
    ReportModel grouped = model;
    grouped.threat_sections.clear();

    std::map<std::string, std::size_t> tag_index;  // tag -> position in output
    std::vector<std::vector<const ThreatSection*>> groups;
    for (const auto& section : model.threat_sections) {
        auto [it, fresh] = tag_index.emplace(section.mitigation_tag, groups.size());
        if (fresh) groups.emplace_back();
        groups[it->second].push_back(&section);
    }

    for (const auto& members : groups) {
        if (members.size() == 1) {
            grouped.threat_sections.push_back(*members.front());
            continue;
        }
        ThreatSection merged;
        merged.mitigation_tag = members.front()->mitigation_tag;
        merged.how = members.front()->how;
        std::string title;
        for (const auto* member : members) {
            title += (title.empty() ? "" : " / ") + member->title;
            merged.blocks.insert(merged.blocks.end(), member->blocks.begin(),
                                 member->blocks.end());
        }
        merged.title = title;
        std::sort(merged.blocks.begin(), merged.blocks.end(),
                  [](const ThreatBlock& a, const ThreatBlock& b) { return a.entry_id < b.entry_id; });
        grouped.threat_sections.push_back(std::move(merged));
    }
    return grouped;
}

}  // namespace privreport
