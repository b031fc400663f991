// End-to-end acceptance checks. Each numbered check prints exactly one
// PASS/FAIL line; the process exits nonzero if any check fails.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "privreport/pipeline.hpp"
#include "support/fake_server.hpp"
#include "support/generators.hpp"
#include "support/subprocess.hpp"

using namespace privreport;
using testsupport::chat_response;
using testsupport::FakeChatServer;
using testsupport::make_temp_dir;
using testsupport::random_bundle;
using testsupport::random_dfd;
using testsupport::run_command;
using testsupport::RunResult;
using testsupport::ScriptedReply;
using testsupport::slurp;

namespace fs = std::filesystem;

namespace {

struct CheckFailure {
    std::string detail;
};

void require(bool condition, const std::string& detail) {
    if (!condition) throw CheckFailure{detail};
}

std::string cli() {
    return std::string(PRIVREPORT_CLI_PATH);
}

std::string q(const fs::path& path) {
    return "'" + path.string() + "'";
}

fs::path fixtures(const char* name) {
    return fs::path(PRIVREPORT_FIXTURES_DIR) / name;
}

std::string golden(const char* name) {
    return slurp(fs::path(PRIVREPORT_GOLDEN_DIR) / name);
}

ReportModel golden_model() {
    return report_model_from_json(golden("uc1.report.json"));
}

ProjectBundle fixture_bundle() {
    return load_project(fixtures("uc1"));
}

Provider offline_provider() {
    ProviderConfig config;
    config.mode = ProviderMode::Offline;
    return Provider(config);
}

// 1. Three offline CLI runs in under five seconds, all byte-identical to the
//    frozen golden report.
void check_offline_determinism() {
    auto started = std::chrono::steady_clock::now();
    std::vector<std::string> reports;
    for (int run = 0; run < 3; ++run) {
        auto out = make_temp_dir("acc_gen" + std::to_string(run));
        RunResult result =
            run_command(cli() + " generate " + q(fixtures("uc1")) + " --offline --out " + q(out));
        require(result.exit_code == 0, "generate exited " + std::to_string(result.exit_code) +
                                           ": " + result.err);
        reports.push_back(slurp(out / "report.html"));
        fs::remove_all(out);
    }
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - started)
                       .count();
    require(reports[0] == reports[1] && reports[1] == reports[2],
            "the three runs differ from each other");
    require(reports[0] == golden("uc1.report.html"), "output differs from the golden report");
    require(elapsed < 5000, "three runs took " + std::to_string(elapsed) + " ms");
}

// 2. The diagram command reproduces all three Mermaid goldens.
void check_mermaid_goldens() {
    const std::pair<const char*, const char*> cases[] = {
        {"uc1", "uc1.mermaid"},
        {"single_node", "single_node.mermaid"},
        {"boundary_only", "boundary_only.mermaid"},
    };
    for (const auto& [fixture, file] : cases) {
        RunResult result = run_command(cli() + " mermaid " + q(fixtures(fixture)));
        require(result.exit_code == 0, std::string(fixture) + " exited nonzero");
        require(result.out == golden(file), std::string(fixture) + " differs from " + file);
    }
}

// Applicability table restated by hand as the enumeration oracle.
std::set<ThreatCategory> oracle_matrix(ElementKind kind) {
    using C = ThreatCategory;
    switch (kind) {
        case ElementKind::ExternalEntity: return {C::Spoofing, C::Repudiation};
        case ElementKind::Process:
            return {C::Spoofing, C::Tampering, C::Repudiation, C::InformationDisclosure,
                    C::DenialOfService, C::ElevationOfPrivilege};
        case ElementKind::DataStore:
            return {C::Tampering, C::Repudiation, C::InformationDisclosure, C::DenialOfService};
        case ElementKind::Flow:
            return {C::Tampering, C::InformationDisclosure, C::DenialOfService};
    }
    return {};
}

// 3. Candidate enumeration equals the brute-force cross product on 100 random
//    diagrams, and the fixture yields exactly 9 candidates.
void check_enumeration_oracle() {
    using Key = std::tuple<int, std::string, int>;
    PrivacyScope scope = PrivacyScope::default_scope();

    for (int i = 0; i < 100; ++i) {
        std::mt19937_64 rng(5000 + i);
        Dfd dfd = random_dfd(rng);

        std::set<Key> expected;
        for (const auto& node : dfd.nodes) {
            for (ThreatCategory category : oracle_matrix(element_kind_of(node.kind))) {
                if (scope.contains(category)) {
                    expected.insert({0, node.id, static_cast<int>(category)});
                }
            }
        }
        for (const auto& flow : dfd.flows) {
            for (ThreatCategory category : oracle_matrix(ElementKind::Flow)) {
                if (scope.contains(category)) {
                    expected.insert({1, flow.id, static_cast<int>(category)});
                }
            }
        }

        std::set<Key> actual;
        for (const auto& candidate : enumerate_candidates(dfd, scope)) {
            actual.insert({candidate.target.kind == ElementRef::Kind::Node ? 0 : 1,
                           candidate.target.id, static_cast<int>(candidate.category)});
        }
        require(actual == expected, "candidate set mismatch at seed " + std::to_string(5000 + i));
    }

    Dfd fixture = parse_dfd(read_file(fixtures("uc1") / kDfdFile));
    auto candidates = enumerate_candidates(fixture, scope);
    require(candidates.size() == 9,
            "fixture yields " + std::to_string(candidates.size()) + " candidates, expected 9");
}

// 4. Parse and serialize invert each other on 100 random diagrams.
void check_dsl_round_trip() {
    for (int i = 0; i < 100; ++i) {
        std::mt19937_64 rng(6000 + i);
        Dfd dfd = random_dfd(rng);
        Dfd re_parsed = parse_dfd(serialize_dsl(dfd));
        require(re_parsed == dfd, "round trip changed the diagram at seed " +
                                      std::to_string(6000 + i));
    }
}

// 5. Rendered sections keep their order for 50 random offline models.
void check_section_order() {
    Provider provider = offline_provider();
    for (int i = 0; i < 50; ++i) {
        std::mt19937_64 rng(9000 + i);
        ProjectBundle bundle = random_bundle(rng);
        auto out = make_temp_dir("acc_order");
        PipelineOptions options;
        options.out_dir = out;
        PipelineResult result = run_pipeline(bundle, provider, options);
        fs::remove_all(out);
        require(result.completed(), "pipeline did not complete at seed " + std::to_string(9000 + i));

        std::string html = render_html(*result.report);
        const char* anchors[] = {
            "<h2>Executive Summary</h2>",
            "<h2>What This System Does</h2>",
            "<h2>Why It Is Being Built</h2>",
            "<h2>Your Requirements In Plain Language</h2>",
            "<article id=\"risk-",
        };
        std::size_t previous = 0;
        for (const char* anchor : anchors) {
            std::size_t pos = html.find(anchor);
            require(pos != std::string::npos, std::string("missing anchor ") + anchor +
                                                  " at seed " + std::to_string(9000 + i));
            require(pos > previous, std::string("out-of-order anchor ") + anchor + " at seed " +
                                        std::to_string(9000 + i));
            previous = pos;
        }
    }
}

// 6. Deleting any single section or requirement item triggers exactly one
//    completeness finding and the QA exit code.
void check_completeness_gate() {
    ReportModel base = golden_model();
    ProjectBundle bundle = fixture_bundle();
    auto dir = make_temp_dir("acc_gate");

    auto run_check = [&](const ReportModel& model, const std::string& expected_code,
                         const std::string& expected_subject) {
        std::size_t completeness = 0;
        std::string subject;
        for (const auto& finding :
             qa_check(model, bundle, PrivacyScope::default_scope(), QaLimits{})) {
            if (is_completeness_finding(finding)) {
                ++completeness;
                subject = finding.subject;
            }
        }
        require(completeness == 1, "expected one completeness finding for " + expected_subject +
                                       ", saw " + std::to_string(completeness));
        require(subject == expected_subject,
                "completeness finding names " + subject + ", expected " + expected_subject);

        auto report = dir / "tampered.html";
        atomic_write_file(report, render_html(model));
        RunResult result =
            run_command(cli() + " check " + q(report) + " " + q(fixtures("uc1")));
        require(result.exit_code == 4, "check exited " + std::to_string(result.exit_code) +
                                           " for " + expected_subject + ", expected 4");
        require(result.err.find("ERROR " + expected_code + " " + expected_subject + ":") !=
                    std::string::npos,
                "stderr lacks ERROR " + expected_code + " " + expected_subject);
    };

    for (std::size_t i = 0; i < base.threat_sections.size(); ++i) {
        ReportModel model = base;
        std::string id = model.threat_sections[i].entry_id();
        model.threat_sections.erase(model.threat_sections.begin() + static_cast<long>(i));
        run_check(model, "MissingThreat", id);
    }
    for (std::size_t i = 0; i < base.requirement_items.size(); ++i) {
        ReportModel model = base;
        std::string id = model.requirement_items[i].requirement_id;
        model.requirement_items.erase(model.requirement_items.begin() + static_cast<long>(i));
        run_check(model, "MissingRequirement", id);
    }
    fs::remove_all(dir);
}

// 7. A bare abbreviation is flagged; the expanded form is accepted.
void check_abbreviation_detector() {
    ProjectBundle bundle = fixture_bundle();
    auto abbreviation_findings = [&](const std::string& purpose) {
        ReportModel model = golden_model();
        model.purpose = purpose;
        std::vector<QaFinding> found;
        for (const auto& finding :
             qa_check(model, bundle, PrivacyScope::default_scope(), QaLimits{})) {
            if (finding.code == QaCode::UndefinedAbbreviation) found.push_back(finding);
        }
        return found;
    };

    auto bare = abbreviation_findings("Workers rely on the LTPE during their checks.");
    require(bare.size() == 1, "bare LTPE produced " + std::to_string(bare.size()) + " findings");
    require(bare[0].subject == "LTPE", "finding names " + bare[0].subject);

    auto expanded = abbreviation_findings(
        "Workers rely on the Lean Time Processing Engine (LTPE) during their checks.");
    require(expanded.empty(), "the expanded form still produced a finding");
}

// 8. Scratchpad blocks injected into every completion never reach the report.
void check_scratchpad_hygiene() {
    const std::string noise = "<scratchpad>INJECTED-NOISE-7f3a do not ship this</scratchpad>";
    ProjectBundle bundle = fixture_bundle();

    for (int i = 0; i < 100; ++i) {
        Provider provider = offline_provider();
        auto rng = std::make_shared<std::mt19937_64>(3000 + i);
        auto mutex = std::make_shared<std::mutex>();
        provider.set_completion_hook([rng, mutex, noise](const std::string&, std::string raw) {
            std::lock_guard<std::mutex> lock(*mutex);
            std::uniform_int_distribution<std::size_t> dist(0, raw.size());
            raw.insert(dist(*rng), noise);
            return raw;
        });

        auto out = make_temp_dir("acc_pad");
        PipelineOptions options;
        options.out_dir = out;
        PipelineResult result = run_pipeline(bundle, provider, options);
        fs::remove_all(out);
        require(result.completed(), "pipeline failed at seed " + std::to_string(3000 + i));

        std::string html = render_html(*result.report);
        require(html.find("<scratchpad>") == std::string::npos,
                "a scratchpad tag leaked at seed " + std::to_string(3000 + i));
        require(html.find("INJECTED-NOISE-7f3a") == std::string::npos,
                "scratchpad content leaked at seed " + std::to_string(3000 + i));
    }
}

// 9. Live-mode wire contract against a scripted local server.
void check_live_contract() {
    ::setenv("PRIVREPORT_API_KEY", "sk-test-secret-123", 1);

    {  // Two 500s, then success, within retries=2.
        FakeChatServer server([](int index, const std::string&) -> ScriptedReply {
            if (index < 2) return {500, "overloaded"};
            return {200, chat_response("All good.")};
        });
        ProviderConfig config;
        config.mode = ProviderMode::Live;
        config.endpoint = server.endpoint();
        config.model = "fake-model";
        config.retries = 2;
        Provider provider(config);
        std::string completion = provider.complete(kAgentDfdSummary, {"sys", "user text"});
        require(completion == "All good.", "unexpected completion: " + completion);
        require(server.request_count() == 3,
                "saw " + std::to_string(server.request_count()) + " requests, expected 3");
    }

    {  // A completion missing <how> is retried exactly once, then rejected.
        FakeChatServer server([](int, const std::string&) -> ScriptedReply {
            return {200, chat_response("<what>W</what>\n<why>Y</why>")};
        });
        ProviderConfig config;
        config.mode = ProviderMode::Live;
        config.endpoint = server.endpoint();
        config.model = "fake-model";
        Provider provider(config);
        ProjectBundle bundle = fixture_bundle();
        StrideContext context{"flowchart LR\n", "summary", "requirements"};
        bool threw = false;
        try {
            run_stride_handler(bundle.stride[0], context, provider);
        } catch (const Error& error) {
            threw = true;
            require(error.code() == ErrorCode::MissingPart,
                    std::string("expected MissingPart, got ") + error_code_name(error.code()));
            require(error.subject() == "how", "finding names part " + error.subject());
        }
        require(threw, "the malformed completion was accepted");
        require(server.request_count() == 2,
                "saw " + std::to_string(server.request_count()) + " requests, expected 2");
    }

    {  // Full live run: the key travels only in the Authorization header.
        FakeChatServer server([](int, const std::string& body) -> ScriptedReply {
            if (body.find("<stride_entry>") != std::string::npos) {
                return {200, chat_response("<what>Something could go wrong.</what>\n"
                                           "<why>It would affect the workers.</why>\n"
                                           "<how>A protection is planned.</how>")};
            }
            if (body.find("<use_case>") != std::string::npos) {
                return {200, chat_response(
                                 "<system_description>The system watches the assembly line."
                                 "</system_description>\n"
                                 "<purpose>This system is being built to improve quality."
                                 "</purpose>\n"
                                 "<requirement_item><requirement_id>r1</requirement_id>"
                                 "<plain_text>Errors are caught fast.</plain_text>"
                                 "<rationale>Speed matters.</rationale></requirement_item>\n"
                                 "<requirement_item><requirement_id>r2</requirement_id>"
                                 "<plain_text>Workers hear about mistakes.</plain_text>"
                                 "<rationale>Fairness.</rationale></requirement_item>\n"
                                 "<requirement_item><requirement_id>r3</requirement_id>"
                                 "<plain_text>Video stays on the floor.</plain_text>"
                                 "<rationale>Privacy.</rationale></requirement_item>")};
            }
            return {200, chat_response("The diagram shows a camera, an edge device, and a "
                                       "cloud platform.")};
        });

        auto dir = make_temp_dir("acc_live");
        auto config_path = dir / "config.json";
        atomic_write_file(config_path,
                          std::string(R"({"provider": {"mode": "live", "endpoint": ")") +
                              server.endpoint() + R"(", "model": "fake-model"}})");
        auto out = dir / "out";
        RunResult result = run_command("env PRIVREPORT_API_KEY=sk-test-secret-123 " + cli() +
                                       " --config " + q(config_path) + " generate " +
                                       q(fixtures("uc1")) + " --live --out " + q(out));
        require(result.exit_code == 0,
                "live generate exited " + std::to_string(result.exit_code) + ": " + result.err);
        require(server.request_count() == 6,
                "saw " + std::to_string(server.request_count()) + " requests, expected 6");

        for (const auto& header : server.auth_headers()) {
            require(header == "Bearer sk-test-secret-123", "unexpected auth header: " + header);
        }

        const std::string key = "sk-test-secret-123";
        require(result.out.find(key) == std::string::npos, "the key leaked to stdout");
        require(result.err.find(key) == std::string::npos, "the key leaked to stderr");
        for (const auto& entry : fs::directory_iterator(out)) {
            require(slurp(entry.path()).find(key) == std::string::npos,
                    "the key leaked into " + entry.path().filename().string());
        }
        fs::remove_all(dir);
    }

    ::unsetenv("PRIVREPORT_API_KEY");
}

// 10. Grouping merges the shared mitigation, stays idempotent, and keeps
//     every block.
void check_grouping() {
    ReportModel model = golden_model();
    require(model.threat_sections.size() == 4, "golden model lost a section");

    ReportModel grouped = group_by_mitigation(model);
    require(grouped.threat_sections.size() == 3,
            "grouping produced " + std::to_string(grouped.threat_sections.size()) +
                " sections, expected 3");
    require(grouped.threat_sections[0].blocks.size() == 2, "the shared mitigation did not merge");
    require(grouped.threat_sections[0].mitigation_tag == "encryption of the video stream",
            "unexpected merged tag " + grouped.threat_sections[0].mitigation_tag);
    require(group_by_mitigation(grouped) == grouped, "grouping is not idempotent");

    auto triples = [](const ReportModel& m) {
        std::vector<std::tuple<std::string, std::string, std::string>> out;
        for (const auto& section : m.threat_sections) {
            for (const auto& block : section.blocks) {
                out.emplace_back(block.entry_id, block.what, block.why);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    require(triples(grouped) == triples(model), "grouping changed the block triples");
}

struct Criterion {
    int number;
    const char* label;
    std::function<void()> run;
};

}  // namespace

int main() {
    const Criterion criteria[] = {
        {1, "offline generate is deterministic, golden-equal, and fast", check_offline_determinism},
        {2, "mermaid output matches the three goldens", check_mermaid_goldens},
        {3, "candidate enumeration matches the brute-force oracle", check_enumeration_oracle},
        {4, "DSL parse/serialize round trips 100 random diagrams", check_dsl_round_trip},
        {5, "report sections stay ordered over 50 random models", check_section_order},
        {6, "single deletions trip the completeness gate with exit 4", check_completeness_gate},
        {7, "bare abbreviations are flagged, expanded ones accepted", check_abbreviation_detector},
        {8, "injected scratchpad blocks never reach the report", check_scratchpad_hygiene},
        {9, "live wire contract: retries, one-shot repair, key hygiene", check_live_contract},
        {10, "mitigation grouping merges, stays idempotent, keeps blocks", check_grouping},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        try {
            criterion.run();
            std::cout << "PASS " << criterion.number << ": " << criterion.label << "\n";
        } catch (const CheckFailure& failure) {
            ++failures;
            std::cout << "FAIL " << criterion.number << ": " << criterion.label << " ["
                      << failure.detail << "]\n";
        } catch (const std::exception& error) {
            ++failures;
            std::cout << "FAIL " << criterion.number << ": " << criterion.label << " ["
                      << error.what() << "]\n";
        }
    }
    return failures == 0 ? 0 : 1;
}
