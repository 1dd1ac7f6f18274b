#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "echotriage/geometry.hpp"
#include "echotriage/triage.hpp"
#include "echotriage/view.hpp"

namespace echotriage {

class ReportStore;

struct PipelineConfig {
    std::string classifier = "hint";
    std::string segmenter = "threshold";  // "threshold[:level]" or "sidecar"
    int n_disks = kDefaultDisks;
    int smoothing_window = kDefaultSmoothingWindow;
    ThresholdConfig thresholds;
    double precision_floor = 0.8;
    std::filesystem::path store_path;  // empty => reports are not persisted
    int workers = 0;                   // 0 => OpenMP default

    /// Throws InvalidConfig (bad values, unknown backends) / InvalidThresholds.
    void validate() const;
};

/// Every key is optional; a relative [store] path is resolved against `base_dir`.
[[nodiscard]] PipelineConfig parse_config(const std::string& toml_text, const std::filesystem::path& base_dir = {});
[[nodiscard]] PipelineConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of the result-affecting fields (store path and worker
/// count excluded), and its SHA-256 in hex.
[[nodiscard]] std::string config_canonical_json(const PipelineConfig& cfg);
[[nodiscard]] std::string config_fingerprint(const PipelineConfig& cfg);

[[nodiscard]] std::unique_ptr<SegmentationBackend> make_segmenter(std::string_view spec,
                                                                  const std::filesystem::path& study_dir);

struct ClipRecord {
    std::string file;
    std::string clip_id;
    std::uint32_t num_frames = 0;
    std::int32_t acquisition_index = 0;
    bool calibrated = false;
    ViewLabel label;
    std::string backend;
    std::vector<std::string> flags;
};

struct ParseFailure {
    std::string file;
    std::string code;
    std::string message;
};

struct CycleRecord {
    std::size_t ed_frame = 0;  // frames of the primary (A4C when available) clip
    std::size_t es_frame = 0;
    std::optional<std::size_t> a2c_ed_frame;  // biplane only
    std::optional<std::size_t> a2c_es_frame;
    double edv_ml = 0.0;
    double esv_ml = 0.0;
};

struct ReviewerOverride {
    Category category = Category::UNDETERMINED;
    std::string reviewer_id;
    std::string timestamp;  // ISO 8601, UTC
};

struct ReportError {
    std::string code;
    std::string message;
};

struct StudyReport {
    std::string study_id;
    std::string config_fingerprint;
    std::vector<ClipRecord> clips;
    std::vector<ParseFailure> parse_failures;
    std::optional<std::string> selected_a4c;
    std::optional<std::string> selected_a2c;
    std::vector<CycleRecord> cycles;
    std::optional<LvefResult> lvef;
    TriageDecision triage;  // UNDETERMINED when no LVEF
    std::map<std::string, double> dice;  // "<view>/<chamber>" -> mean DICE vs sidecar truth
    std::vector<std::string> quality_flags;  // sorted, unique
    std::optional<ReportError> error;
    std::optional<ReviewerOverride> reviewer_override;
};

/// Canonical wire format: fixed field order, no insignificant whitespace.
[[nodiscard]] std::string to_json(const StudyReport& r);
[[nodiscard]] StudyReport report_from_json(std::string_view text);

/// Directory of `.dcm` files (and optional mask sidecars) -> report. Never
/// throws for per-study problems; they become flags / UNDETERMINED.
/// `serial_guard` serializes non-thread-safe backends across concurrent calls.
[[nodiscard]] StudyReport run_study(const std::filesystem::path& study_dir, const PipelineConfig& cfg,
                                    std::mutex* serial_guard = nullptr);

/// `root` holding study subdirectories, or a single study directory.
[[nodiscard]] std::vector<std::filesystem::path> study_dirs(const std::filesystem::path& root);

/// Runs every study, persisting to `store` when given. Exactly one report
/// per study directory, in study_dirs() order.
[[nodiscard]] std::vector<StudyReport> run_batch(const std::filesystem::path& root, const PipelineConfig& cfg,
                                                 ReportStore* store = nullptr);

/// Applies `<store>/thresholds.json` if present (prospective threshold updates).
[[nodiscard]] PipelineConfig effective_config(PipelineConfig cfg, const ReportStore& store);

}  // namespace echotriage
