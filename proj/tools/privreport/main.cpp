#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "privreport/artifacts.hpp"
#include "privreport/pipeline.hpp"
#include "privreport/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace privreport;

namespace {

// Exit codes: 0 ok, 1 validation or provider error, 2 I/O or load failure,
// 3 overwrite refusal, 4 QA completeness failure.
constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitLoadFailure = 2;
constexpr int kExitOverwriteRefused = 3;
constexpr int kExitQaGate = 4;

struct CliConfig {
    ProviderConfig provider;
    PrivacyScope scope = PrivacyScope::default_scope();
    QaLimits limits;
    fs::path out_dir;
};

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingFile:
        case ErrorCode::IoError:
        case ErrorCode::SchemaViolation:
            return kExitLoadFailure;
        default:
            return kExitInvalid;
    }
}

void print_error(const Error& e) {
    std::cerr << "ERROR " << error_code_name(e.code());
    if (!e.subject().empty()) std::cerr << " " << e.subject();
    std::cerr << ": " << e.message() << "\n";
}

void print_diagnostics(const std::vector<Diagnostic>& diagnostics) {
    for (const auto& d : diagnostics) {
        std::cerr << (d.severity == Severity::Error ? "ERROR" : "WARNING") << " " << d.code << " "
                  << d.subject << ": " << d.message << "\n";
    }
}

void print_findings(const std::vector<QaFinding>& findings) {
    for (const auto& f : findings) {
        std::cerr << (is_completeness_finding(f) ? "ERROR" : "HINT") << " " << qa_code_name(f.code)
                  << " " << f.subject << ": " << f.message << "\n";
    }
}

std::size_t blocking_count(const std::vector<QaFinding>& findings) {
    std::size_t count = 0;
    for (const auto& f : findings) {
        if (is_completeness_finding(f)) ++count;
    }
    return count;
}

CliConfig load_config(const fs::path& path, bool explicit_path) {
    CliConfig config;
    if (!fs::exists(path)) {
        if (explicit_path) {
            throw Error(ErrorCode::MissingFile, "config file " + path.string() + " does not exist",
                        path.string());
        }
        return config;
    }

    json root = json::parse(read_file(path), nullptr, false);
    if (root.is_discarded() || !root.is_object()) {
        throw Error(ErrorCode::SchemaViolation, path.string() + ": not a JSON object",
                    path.string());
    }

    if (root.contains("provider")) {
        const json& p = root["provider"];
        std::string mode = p.value("mode", "offline");
        if (mode == "offline") {
            config.provider.mode = ProviderMode::Offline;
        } else if (mode == "live") {
            config.provider.mode = ProviderMode::Live;
        } else {
            throw Error(ErrorCode::InvalidConfig, "provider.mode must be \"offline\" or \"live\"");
        }
        config.provider.endpoint = p.value("endpoint", config.provider.endpoint);
        config.provider.model = p.value("model", config.provider.model);
        config.provider.api_key_env = p.value("api_key_env", config.provider.api_key_env);
        config.provider.temperature = p.value("temperature", config.provider.temperature);
        config.provider.max_output_tokens =
            p.value("max_output_tokens", config.provider.max_output_tokens);
        config.provider.retries = p.value("retries", config.provider.retries);
        config.provider.concurrency_limit =
            p.value("concurrency_limit", config.provider.concurrency_limit);
        if (config.provider.retries < 0 || config.provider.concurrency_limit < 1) {
            throw Error(ErrorCode::InvalidConfig,
                        "provider.retries must be >= 0 and provider.concurrency_limit >= 1");
        }
    }

    if (root.contains("scope")) {
        std::set<ThreatCategory> categories;
        for (const auto& code : root["scope"]) {
            if (!code.is_string() || code.get<std::string>().size() != 1) {
                throw Error(ErrorCode::InvalidConfig,
                            "scope entries must be single-letter category codes");
            }
            auto category = category_from_code(code.get<std::string>()[0]);
            if (!category) {
                throw Error(ErrorCode::InvalidConfig,
                            "unknown category code \"" + code.get<std::string>() + "\" in scope");
            }
            categories.insert(*category);
        }
        config.scope = PrivacyScope::from_categories(std::move(categories));
    }

    if (root.contains("report")) {
        const json& r = root["report"];
        config.limits.max_section_words = r.value("max_section_words", config.limits.max_section_words);
        if (r.contains("jargon_denylist")) {
            config.limits.jargon_denylist = r["jargon_denylist"].get<std::vector<std::string>>();
        }
        if (r.contains("abbreviation_allowlist")) {
            config.limits.abbreviation_allowlist =
                r["abbreviation_allowlist"].get<std::vector<std::string>>();
        }
    }

    if (root.contains("out_dir")) config.out_dir = root["out_dir"].get<std::string>();
    return config;
}

int cmd_validate(const CliConfig& config, const fs::path& project) {
    ProjectBundle bundle = load_project(project);
    std::vector<Diagnostic> diagnostics = validate_dfd(bundle.dfd);
    auto append = [&](std::vector<Diagnostic> more) {
        diagnostics.insert(diagnostics.end(), more.begin(), more.end());
    };
    append(cross_ref_check(bundle));
    append(coverage_check(bundle.stride, bundle.dfd, config.scope));
    print_diagnostics(diagnostics);

    std::size_t errors = 0;
    for (const auto& d : diagnostics) {
        if (d.severity == Severity::Error) ++errors;
    }
    std::cout << "validate: " << errors << " error(s), " << diagnostics.size() - errors
              << " warning(s)\n";
    return errors == 0 ? kExitOk : kExitInvalid;
}

int cmd_mermaid(const fs::path& project, const std::string& out_file) {
    std::string text = read_file(project / kDfdFile);
    Dfd dfd = parse_dfd(text);
    auto diagnostics = validate_dfd(dfd);
    if (has_errors(diagnostics)) {
        print_diagnostics(diagnostics);
        return kExitInvalid;
    }
    std::string mermaid = emit_mermaid(dfd);
    if (out_file.empty()) {
        std::cout << mermaid;
    } else {
        atomic_write_file(out_file, mermaid);
    }
    return kExitOk;
}

int cmd_scaffold(const CliConfig& config, const fs::path& project, bool force) {
    std::string text = read_file(project / kDfdFile);
    Dfd dfd = parse_dfd(text);
    auto diagnostics = validate_dfd(dfd);
    if (has_errors(diagnostics)) {
        print_diagnostics(diagnostics);
        return kExitInvalid;
    }

    fs::path target = project / kStrideFile;
    if (fs::exists(target) && !force) {
        std::cerr << "ERROR " << target.string()
                  << " already exists; pass --force to overwrite it\n";
        return kExitOverwriteRefused;
    }
    auto entries = scaffold_stride(dfd, config.scope);
    atomic_write_file(target, stride_to_json(entries));
    std::cout << "scaffold: wrote " << entries.size() << " skeleton entr"
              << (entries.size() == 1 ? "y" : "ies") << " to " << target.string() << "\n";
    return kExitOk;
}

int cmd_generate(CliConfig config, const fs::path& project, bool offline, bool live, bool review,
                 const std::string& out_override, bool group) {
    if (offline) config.provider.mode = ProviderMode::Offline;
    if (live) config.provider.mode = ProviderMode::Live;

    ProjectBundle bundle = load_project(project);
    std::vector<Diagnostic> diagnostics = validate_dfd(bundle.dfd);
    auto cross = cross_ref_check(bundle);
    diagnostics.insert(diagnostics.end(), cross.begin(), cross.end());
    if (has_errors(diagnostics)) {
        print_diagnostics(diagnostics);
        return kExitInvalid;
    }

    PipelineOptions options;
    options.review = review;
    options.scope = config.scope;
    if (!out_override.empty()) {
        options.out_dir = out_override;
    } else if (!config.out_dir.empty()) {
        options.out_dir = config.out_dir;
    } else {
        options.out_dir = project / "privreport_out";
    }

    Provider provider(config.provider);
    PipelineResult result = run_pipeline(bundle, provider, options);
    if (!result.completed()) {
        std::cout << "generate: paused after stage " << *result.paused_after_stage
                  << "; review the checkpoints in " << options.out_dir.string()
                  << " and run again to continue\n";
        return kExitOk;
    }

    const ReportModel& model = *result.report;
    fs::path report_path = options.out_dir / "report.html";
    atomic_write_file(report_path, render_html(model));
    if (group) {
        atomic_write_file(options.out_dir / "report.grouped.html",
                          render_html(group_by_mitigation(model)));
    }

    auto findings = qa_check(model, bundle, config.scope, config.limits);
    print_findings(findings);
    std::size_t blocking = blocking_count(findings);
    std::cout << "generate: wrote " << report_path.string() << " (" << findings.size()
              << " finding(s), " << blocking << " blocking)\n";
    return blocking == 0 ? kExitOk : kExitQaGate;
}

int cmd_check(const CliConfig& config, const fs::path& report_path, const fs::path& project) {
    ReportModel model;
    try {
        model = parse_report_html(read_file(report_path));
    } catch (const Error& e) {
        print_error(e);
        return kExitLoadFailure;
    }
    ProjectBundle bundle = load_project(project);
    auto findings = qa_check(model, bundle, config.scope, config.limits);
    print_findings(findings);
    std::size_t blocking = blocking_count(findings);
    std::cout << "check: " << findings.size() << " finding(s), " << blocking << " blocking\n";
    return blocking == 0 ? kExitOk : kExitQaGate;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Turn monitoring use cases, requirements, a data flow diagram, and a threat "
                 "analysis into a stakeholder-oriented privacy report"};
    app.require_subcommand(1);

    std::string config_path = "./privreport.json";
    app.add_option("--config", config_path, "Path to the configuration file")
        ->capture_default_str();

    std::string project;
    std::string out_file;
    std::string report_file;
    bool force = false;
    bool offline = false;
    bool live = false;
    bool review = false;
    bool group = false;

    auto* validate =
        app.add_subcommand("validate", "Check the project artifacts and print diagnostics");
    validate->add_option("project", project, "Project directory")->required();

    auto* mermaid = app.add_subcommand("mermaid", "Emit the data flow diagram as Mermaid text");
    mermaid->add_option("project", project, "Project directory")->required();
    mermaid->add_option("--out", out_file, "Write to this file instead of standard output");

    auto* scaffold =
        app.add_subcommand("scaffold", "Write a skeleton stride.json derived from the diagram");
    scaffold->add_option("project", project, "Project directory")->required();
    scaffold->add_flag("--force", force, "Overwrite an existing stride.json");

    auto* generate = app.add_subcommand("generate", "Run the full report pipeline");
    generate->add_option("project", project, "Project directory")->required();
    auto* offline_flag = generate->add_flag("--offline", offline, "Use the deterministic backend");
    generate->add_flag("--live", live, "Use the configured chat-completion endpoint")
        ->excludes(offline_flag);
    generate->add_flag("--review", review, "Run one stage, then pause for checkpoint review");
    generate->add_option("--out", out_file, "Directory for checkpoints and the report");
    generate->add_flag("--group", group, "Also write report.grouped.html with merged mitigations");

    auto* check = app.add_subcommand("check", "Re-run the quality checks on a rendered report");
    check->add_option("report", report_file, "Path to report.html")->required();
    check->add_option("project", project, "Project directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        CliConfig config = load_config(config_path, app.count("--config") > 0);
        if (validate->parsed()) return cmd_validate(config, project);
        if (mermaid->parsed()) return cmd_mermaid(project, out_file);
        if (scaffold->parsed()) return cmd_scaffold(config, project, force);
        if (generate->parsed()) {
            return cmd_generate(std::move(config), project, offline, live, review, out_file, group);
        }
        if (check->parsed()) return cmd_check(config, report_file, project);
    } catch (const Error& e) {
        print_error(e);
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "ERROR Internal: " << e.what() << "\n";
        return kExitInvalid;
    }
    return kExitOk;
}
