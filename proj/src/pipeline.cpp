#include "privreport/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>
#include <vector>

#include <json.hpp>

namespace privreport {

using nlohmann::json;

std::string content_hash(const std::string& content) {
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : content) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
    return hex;
}

std::string utc_now_iso8601() {
    std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buffer[32];
    std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buffer;
}

void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path temp = path;
    temp += ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::IoError, "cannot open " + temp.string() + " for writing",
                        path.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw Error(ErrorCode::IoError, "write to " + temp.string() + " failed", path.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(temp, path, ec);
    if (ec) {
        throw Error(ErrorCode::IoError,
                    "cannot move " + temp.string() + " into place: " + ec.message(), path.string());
    }
}

std::string read_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw Error(ErrorCode::MissingFile, path.string() + " does not exist", path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string(), path.string());
    }
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw Error(ErrorCode::IoError, "read from " + path.string() + " failed", path.string());
    }
    return content;
}

namespace {

json parse_checkpoint(const std::string& text, const char* file) {
    json parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded()) {
        throw Error(ErrorCode::SchemaViolation, std::string(file) + ": not valid JSON", file);
    }
    return parsed;
}

std::string checkpoint_string(const json& value, const char* key, const char* file) {
    if (!value.contains(key) || !value.at(key).is_string()) {
        throw Error(ErrorCode::SchemaViolation,
                    std::string(file) + ": expected string field \"" + key + "\"", file);
    }
    return value.at(key).get<std::string>();
}

}  // namespace

std::string dfd_summary_to_json(const DfdSummary& summary) {
    json root = {{"mermaid", summary.mermaid}, {"summary", summary.summary}};
    return root.dump(2) + "\n";
}

DfdSummary dfd_summary_from_json(const std::string& json_text) {
    json root = parse_checkpoint(json_text, kCheckpointDfd);
    DfdSummary summary;
    summary.mermaid = checkpoint_string(root, "mermaid", kCheckpointDfd);
    summary.summary = checkpoint_string(root, "summary", kCheckpointDfd);
    return summary;
}

std::string simplified_to_json(const SimplifiedRequirements& simplified) {
    json items = json::array();
    for (const auto& item : simplified.items) {
        items.push_back({{"requirement_id", item.requirement_id},
                         {"plain_text", item.plain_text},
                         {"rationale", item.rationale}});
    }
    json root = {{"system_description", simplified.system_description},
                 {"purpose", simplified.purpose},
                 {"items", std::move(items)}};
    return root.dump(2) + "\n";
}

SimplifiedRequirements simplified_from_json(const std::string& json_text) {
    json root = parse_checkpoint(json_text, kCheckpointEasyReq);
    SimplifiedRequirements simplified;
    simplified.system_description = checkpoint_string(root, "system_description", kCheckpointEasyReq);
    simplified.purpose = checkpoint_string(root, "purpose", kCheckpointEasyReq);
    if (!root.contains("items") || !root["items"].is_array()) {
        throw Error(ErrorCode::SchemaViolation,
                    std::string(kCheckpointEasyReq) + ": expected an \"items\" array",
                    kCheckpointEasyReq);
    }
    for (const auto& j : root["items"]) {
        SimplifiedRequirementItem item;
        item.requirement_id = checkpoint_string(j, "requirement_id", kCheckpointEasyReq);
        item.plain_text = checkpoint_string(j, "plain_text", kCheckpointEasyReq);
        item.rationale = checkpoint_string(j, "rationale", kCheckpointEasyReq);
        simplified.items.push_back(std::move(item));
    }
    return simplified;
}

std::string explanations_to_json(const std::vector<ThreatExplanation>& explanations) {
    json root = json::array();
    for (const auto& explanation : explanations) {
        root.push_back({{"entry_id", explanation.entry_id},
                        {"what", explanation.what},
                        {"why", explanation.why},
                        {"how", explanation.how}});
    }
    return root.dump(2) + "\n";
}

std::vector<ThreatExplanation> explanations_from_json(const std::string& json_text) {
    json root = parse_checkpoint(json_text, kCheckpointExplanations);
    if (!root.is_array()) {
        throw Error(ErrorCode::SchemaViolation,
                    std::string(kCheckpointExplanations) + ": expected a JSON array",
                    kCheckpointExplanations);
    }
    std::vector<ThreatExplanation> explanations;
    for (const auto& j : root) {
        ThreatExplanation explanation;
        explanation.entry_id = checkpoint_string(j, "entry_id", kCheckpointExplanations);
        explanation.what = checkpoint_string(j, "what", kCheckpointExplanations);
        explanation.why = checkpoint_string(j, "why", kCheckpointExplanations);
        explanation.how = checkpoint_string(j, "how", kCheckpointExplanations);
        explanations.push_back(std::move(explanation));
    }
    return explanations;
}

namespace {

template <typename F>
auto stage(const char* name, F&& body) {
    try {
        return body();
    } catch (const PipelineError&) {
        throw;
    } catch (const Error& e) {
        throw PipelineError(name, e);
    }
}

std::vector<StrideEntry> in_scope_entries(const ProjectBundle& bundle, const PrivacyScope& scope) {
    std::vector<StrideEntry> entries;
    for (const auto& entry : bundle.stride) {
        if (scope.contains(entry.category)) entries.push_back(entry);
    }
    return entries;
}

// Shared fan-out for the per-entry explanation calls. Worker threads claim
// entries from a shared cursor; the first failure wins and the rest finish
// their in-flight entry. Results come back ordered by entry id.
std::vector<ThreatExplanation> explain_entries(const std::vector<StrideEntry>& entries,
                                               const StrideContext& context,
                                               const Provider& provider) {
    std::vector<ThreatExplanation> explanations(entries.size());
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        while (!failed.load()) {
            std::size_t index = cursor.fetch_add(1);
            if (index >= entries.size()) break;
            try {
                explanations[index] = run_stride_handler(entries[index], context, provider);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!first_failure) first_failure = std::current_exception();
                failed.store(true);
            }
        }
    };

    std::size_t worker_count =
        std::min<std::size_t>(std::max(provider.config().concurrency_limit, 1),
                              std::max<std::size_t>(entries.size(), 1));
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < worker_count; ++i) workers.emplace_back(worker);
    for (auto& thread : workers) thread.join();
    if (first_failure) std::rethrow_exception(first_failure);

    std::sort(explanations.begin(), explanations.end(),
              [](const ThreatExplanation& a, const ThreatExplanation& b) {
                  return a.entry_id < b.entry_id;
              });
    return explanations;
}

ReportMetadata make_metadata(const ProjectBundle& bundle, const Provider& provider,
                             const std::string& mermaid) {
    ReportMetadata metadata;
    bool offline = provider.config().mode == ProviderMode::Offline;
    metadata.generated_at = offline ? kOfflineTimestamp : utc_now_iso8601();
    metadata.provider_mode = offline ? "offline" : "live";
    metadata.model = offline ? "offline" : provider.config().model;
    metadata.artifact_hashes = {
        {kDfdFile, content_hash(serialize_dsl(bundle.dfd))},
        {kUseCaseFile, content_hash(use_case_to_json(bundle.use_case))},
        {kRequirementsFile, content_hash(requirements_to_json(bundle.requirements))},
        {kStrideFile, content_hash(stride_to_json(bundle.stride))},
    };
    metadata.dfd_mermaid = mermaid;
    return metadata;
}

StrideContext make_context(const DfdSummary& summary, const ProjectBundle& bundle) {
    return {summary.mermaid, summary.summary, requirements_to_json(bundle.requirements)};
}

ReportModel combine_stage(const ProjectBundle& bundle, const Provider& provider,
                          const DfdSummary& summary, const SimplifiedRequirements& simplified,
                          const std::vector<ThreatExplanation>& explanations) {
    // The entries to cover are the ones the explanations name; a checkpoint
    // edit that drops an in-scope entry surfaces later as a QA completeness
    // finding rather than here.
    std::vector<StrideEntry> entries;
    for (const auto& explanation : explanations) {
        auto it = std::find_if(bundle.stride.begin(), bundle.stride.end(),
                               [&](const StrideEntry& e) { return e.id == explanation.entry_id; });
        if (it != bundle.stride.end()) entries.push_back(*it);
    }
    return combine(simplified, explanations, entries, bundle.requirements,
                   make_metadata(bundle, provider, summary.mermaid));
}

}  // namespace

PipelineResult run_pipeline(const ProjectBundle& bundle,
                            const Provider& provider,
                            const PipelineOptions& options) {
    std::filesystem::path out = options.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) {
        throw Error(ErrorCode::IoError, "cannot create " + out.string() + ": " + ec.message(),
                    out.string());
    }

    PipelineResult result;

    if (!options.review) {
        auto summary = stage(kStageDfdSummary, [&] {
            auto s = run_dfd_summary(bundle.dfd, provider);
            atomic_write_file(out / kCheckpointDfd, dfd_summary_to_json(s));
            return s;
        });
        auto simplified = stage(kStageEasyReq, [&] {
            auto s = run_easyreq(bundle, provider);
            atomic_write_file(out / kCheckpointEasyReq, simplified_to_json(s));
            return s;
        });
        auto explanations = stage(kStageStrideHandler, [&] {
            auto e = explain_entries(in_scope_entries(bundle, options.scope),
                                     make_context(summary, bundle), provider);
            atomic_write_file(out / kCheckpointExplanations, explanations_to_json(e));
            return e;
        });
        result.report = stage(kStageCombine, [&] {
            auto model = combine_stage(bundle, provider, summary, simplified, explanations);
            atomic_write_file(out / kCheckpointReport, report_model_to_json(model) + "\n");
            return model;
        });
        return result;
    }

    // Review mode: run the first stage whose checkpoint is missing, re-reading
    // the (possibly human-edited) earlier checkpoints, then pause.
    if (!std::filesystem::exists(out / kCheckpointDfd)) {
        stage(kStageDfdSummary, [&] {
            atomic_write_file(out / kCheckpointDfd,
                              dfd_summary_to_json(run_dfd_summary(bundle.dfd, provider)));
            return 0;
        });
        result.paused_after_stage = kStageDfdSummary;
        return result;
    }
    if (!std::filesystem::exists(out / kCheckpointEasyReq)) {
        stage(kStageEasyReq, [&] {
            atomic_write_file(out / kCheckpointEasyReq,
                              simplified_to_json(run_easyreq(bundle, provider)));
            return 0;
        });
        result.paused_after_stage = kStageEasyReq;
        return result;
    }
    if (!std::filesystem::exists(out / kCheckpointExplanations)) {
        stage(kStageStrideHandler, [&] {
            auto summary = dfd_summary_from_json(read_file(out / kCheckpointDfd));
            auto explanations = explain_entries(in_scope_entries(bundle, options.scope),
                                                make_context(summary, bundle), provider);
            atomic_write_file(out / kCheckpointExplanations, explanations_to_json(explanations));
            return 0;
        });
        result.paused_after_stage = kStageStrideHandler;
        return result;
    }
    if (!std::filesystem::exists(out / kCheckpointReport)) {
        result.report = stage(kStageCombine, [&] {
            auto summary = dfd_summary_from_json(read_file(out / kCheckpointDfd));
            auto simplified = simplified_from_json(read_file(out / kCheckpointEasyReq));
            auto explanations = explanations_from_json(read_file(out / kCheckpointExplanations));
            auto model = combine_stage(bundle, provider, summary, simplified, explanations);
            atomic_write_file(out / kCheckpointReport, report_model_to_json(model) + "\n");
            return model;
        });
        return result;
    }
    result.report = stage(kStageCombine, [&] {
        return report_model_from_json(read_file(out / kCheckpointReport));
    });
    return result;
}

}  // namespace privreport
