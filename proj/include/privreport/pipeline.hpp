#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "privreport/report.hpp"

namespace privreport {

// Checkpoint file names written into the output directory after each stage.
inline constexpr const char* kCheckpointDfd = "01_dfd.json";
inline constexpr const char* kCheckpointEasyReq = "02_easyreq.json";
inline constexpr const char* kCheckpointExplanations = "03_explanations.json";
inline constexpr const char* kCheckpointReport = "04_report.json";

// Stage names, also used in abort messages.
inline constexpr const char* kStageDfdSummary = "dfd_summary";
inline constexpr const char* kStageEasyReq = "easyreq";
inline constexpr const char* kStageStrideHandler = "stride_handler";
inline constexpr const char* kStageCombine = "combine";

struct PipelineOptions {
    bool review = false;
    PrivacyScope scope = PrivacyScope::default_scope();
    std::filesystem::path out_dir;
};

struct PipelineResult {
    // Set when the run paused after a stage for human review.
    std::optional<std::string> paused_after_stage;
    // Set when the pipeline ran to completion.
    std::optional<ReportModel> report;

    bool completed() const { return report.has_value(); }
};

// Execute the agent chain: dfd_summary, then easyreq, then one stride_handler
// call per in-scope entry (bounded by the provider's concurrency limit), then
// combine. A checkpoint is written atomically after each stage. With
// options.review each call performs only the next stage whose checkpoint is
// missing, re-reading earlier (possibly human-edited) checkpoints, and pauses.
// Stage failures surface as PipelineError naming the stage.
PipelineResult run_pipeline(const ProjectBundle& bundle,
                            const Provider& provider,
                            const PipelineOptions& options);

// Checkpoint (de)serialization, exposed for the review workflow and tests.
std::string dfd_summary_to_json(const DfdSummary& summary);
DfdSummary dfd_summary_from_json(const std::string& json_text);
std::string simplified_to_json(const SimplifiedRequirements& simplified);
SimplifiedRequirements simplified_from_json(const std::string& json_text);
std::string explanations_to_json(const std::vector<ThreatExplanation>& explanations);
std::vector<ThreatExplanation> explanations_from_json(const std::string& json_text);

// Write content to path via a temp file in the same directory plus rename, so
// an interrupted run never leaves a partial file at the target.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

// Read a whole file; throws Error(IoError) / Error(MissingFile).
std::string read_file(const std::filesystem::path& path);

// 64-bit FNV-1a content fingerprint, hex-encoded; reports record one per
// input artifact so a reader can tell which inputs produced them.
std::string content_hash(const std::string& content);

// Current UTC time as ISO-8601; Live-mode report timestamp.
std::string utc_now_iso8601();

// Offline runs must be byte-reproducible, so they stamp this fixed sentinel
// instead of the clock.
inline constexpr const char* kOfflineTimestamp = "1970-01-01T00:00:00Z";

}  // namespace privreport
