#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "privreport/artifacts.hpp"
#include "privreport/pipeline.hpp"
#include "privreport/report.hpp"

namespace py = pybind11;
using namespace privreport;

namespace {

PrivacyScope scope_from_codes(const std::string& codes) {
    std::set<ThreatCategory> categories;
    for (char code : codes) {
        auto category = category_from_code(code);
        if (!category) {
            throw Error(ErrorCode::InvalidConfig,
                        std::string("unknown category code '") + code + "'");
        }
        categories.insert(*category);
    }
    return PrivacyScope::from_categories(std::move(categories));
}

py::dict diagnostic_to_dict(const Diagnostic& d) {
    py::dict out;
    out["severity"] = d.severity == Severity::Error ? "error" : "warning";
    out["code"] = d.code;
    out["subject"] = d.subject;
    out["message"] = d.message;
    return out;
}

py::dict finding_to_dict(const QaFinding& f) {
    py::dict out;
    out["code"] = qa_code_name(f.code);
    out["subject"] = f.subject;
    out["message"] = f.message;
    out["blocking"] = is_completeness_finding(f);
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Privacy report toolkit: diagram parsing, threat scaffolding, report generation";

    py::register_exception<Error>(m, "ToolError");

    py::enum_<NodeKind>(m, "NodeKind")
        .value("ExternalEntity", NodeKind::ExternalEntity)
        .value("Process", NodeKind::Process)
        .value("DataStore", NodeKind::DataStore);

    py::class_<DfdNode>(m, "DfdNode")
        .def_readonly("id", &DfdNode::id)
        .def_readonly("name", &DfdNode::name)
        .def_readonly("kind", &DfdNode::kind)
        .def("__repr__", [](const DfdNode& n) { return "<DfdNode " + n.id + ">"; });

    py::class_<DataFlow>(m, "DataFlow")
        .def_readonly("id", &DataFlow::id)
        .def_readonly("source", &DataFlow::source)
        .def_readonly("target", &DataFlow::target)
        .def_readonly("label", &DataFlow::label)
        .def("__repr__", [](const DataFlow& f) { return "<DataFlow " + f.id + ">"; });

    py::class_<TrustBoundary>(m, "TrustBoundary")
        .def_readonly("id", &TrustBoundary::id)
        .def_readonly("name", &TrustBoundary::name)
        .def_readonly("members", &TrustBoundary::members);

    py::class_<Dfd>(m, "Dfd")
        .def_readonly("nodes", &Dfd::nodes)
        .def_readonly("flows", &Dfd::flows)
        .def_readonly("boundaries", &Dfd::boundaries);

    m.def("parse_dfd", &parse_dfd, py::arg("text"),
          "Parse diagram DSL text into a Dfd");
    m.def("serialize_dsl", &serialize_dsl, py::arg("dfd"),
          "Render a Dfd back to canonical DSL text");
    m.def("emit_mermaid", &emit_mermaid, py::arg("dfd"),
          "Render a validated Dfd as a Mermaid flowchart");
    m.def("summarize_dfd", &summarize_dfd, py::arg("dfd"),
          "Describe a validated Dfd in plain sentences");
    m.def(
        "validate_dfd",
        [](const Dfd& dfd) {
            py::list out;
            for (const auto& d : validate_dfd(dfd)) out.append(diagnostic_to_dict(d));
            return out;
        },
        py::arg("dfd"), "Run the diagram lint rules; returns a list of diagnostics");

    m.def(
        "scaffold_stride_json",
        [](const std::string& dsl, const std::string& scope) {
            Dfd dfd = parse_dfd(dsl);
            return stride_to_json(scaffold_stride(dfd, scope_from_codes(scope)));
        },
        py::arg("dsl"), py::arg("scope") = "STI",
        "Build skeleton threat entries for a diagram, as stride.json text");

    m.def(
        "generate_offline",
        [](const std::string& project_dir, const std::string& out_dir, bool group,
           const std::string& scope) {
            ProjectBundle bundle = load_project(project_dir);
            Provider provider{ProviderConfig{}};
            PipelineOptions options;
            options.scope = scope_from_codes(scope);
            options.out_dir = out_dir;
            PipelineResult result = run_pipeline(bundle, provider, options);
            std::filesystem::path report = std::filesystem::path(out_dir) / "report.html";
            atomic_write_file(report, render_html(*result.report));
            if (group) {
                atomic_write_file(std::filesystem::path(out_dir) / "report.grouped.html",
                                  render_html(group_by_mitigation(*result.report)));
            }
            return report.string();
        },
        py::arg("project_dir"), py::arg("out_dir"), py::arg("group") = false,
        py::arg("scope") = "STI",
        "Run the deterministic pipeline on a project directory; returns the report path");

    m.def(
        "qa_findings",
        [](const std::string& report_path, const std::string& project_dir,
           const std::string& scope) {
            ReportModel model = parse_report_html(read_file(report_path));
            ProjectBundle bundle = load_project(project_dir);
            py::list out;
            for (const auto& f :
                 qa_check(model, bundle, scope_from_codes(scope), QaLimits{})) {
                out.append(finding_to_dict(f));
            }
            return out;
        },
        py::arg("report_path"), py::arg("project_dir"), py::arg("scope") = "STI",
        "Re-run the quality checks on a rendered report against its project");

    m.def("content_hash", &content_hash, py::arg("content"),
          "64-bit content fingerprint, hex-encoded");
}
