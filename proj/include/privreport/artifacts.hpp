#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "privreport/dfd.hpp"
#include "privreport/stride.hpp"

namespace privreport {

struct DataItem {
    std::string name;
    std::string description;
    bool sensitive = false;

    bool operator==(const DataItem&) const = default;
};

struct MonitoringUseCase {
    std::string id;
    std::string title;
    std::string goal;
    std::string scenario;
    std::vector<DataItem> monitored_data;
    std::vector<std::string> equipment;
    std::vector<std::string> monitored_stakeholders;

    bool operator==(const MonitoringUseCase&) const = default;
};

struct Requirement {
    std::string id;
    std::string text;
    std::string use_case;
    std::optional<Moscow> priority;

    bool operator==(const Requirement&) const = default;
};

struct ProjectBundle {
    MonitoringUseCase use_case;
    std::vector<Requirement> requirements;
    Dfd dfd;
    std::vector<StrideEntry> stride;

    bool operator==(const ProjectBundle&) const = default;
};

// File names expected inside a project directory.
inline constexpr const char* kUseCaseFile = "usecase.json";
inline constexpr const char* kRequirementsFile = "requirements.json";
inline constexpr const char* kDfdFile = "model.dfd";
inline constexpr const char* kStrideFile = "stride.json";

// Load and parse the four project files, enforcing structural invariants.
// Throws Error with MissingFile, SchemaViolation, IoError, or any parse_dfd
// error. Entries with empty description/impact/mitigation load fine (they
// are scaffold output until filled); the pipeline rejects them later.
ProjectBundle load_project(const std::filesystem::path& directory);

// Parse the individual files; used by load_project and the scaffold command.
MonitoringUseCase parse_use_case_json(const std::string& text);
std::vector<Requirement> parse_requirements_json(const std::string& text);
std::vector<StrideEntry> parse_stride_json(const std::string& text);

std::string use_case_to_json(const MonitoringUseCase& use_case);
std::string requirements_to_json(const std::vector<Requirement>& requirements);
std::string stride_to_json(const std::vector<StrideEntry>& entries);

// Cross-artifact rules:
//   X1 Error    stride entry targets an element missing from the DFD
//   X2 Error    stride category not applicable to the target's element kind
//   X3 Warning  sensitive data item named in no flow label
std::vector<Diagnostic> cross_ref_check(const ProjectBundle& bundle);

}  // namespace privreport
