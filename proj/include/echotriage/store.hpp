#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "echotriage/pipeline.hpp"
#include "echotriage/segmentation.hpp"
#include "echotriage/triage.hpp"

namespace echotriage {

[[nodiscard]] std::string sha256_hex(std::string_view data);

struct StudySummary {
    std::string study_id;
    std::string config_fingerprint;
    Category category = Category::UNDETERMINED;          // override if present, else machine
    Category machine_category = Category::UNDETERMINED;
    std::optional<double> mean_lvef;
    std::vector<std::string> flags;
    bool overridden = false;
};

struct VerifyResult {
    std::size_t records = 0;
    std::vector<std::string> corrupt;  // file names
};

/// Append-only report store in one directory. Every record is its own file,
/// `records/<seq>.<kind>.etr`, holding `ETR1 <sha256 of body>\n<body>`. A
/// record is written to tmp/ and hard-linked into place, so readers see
/// either nothing or the complete file. Writers are serialized by a mutex
/// and an flock on `<root>/lock`.
///
/// Reports are keyed by (study_id, config_fingerprint); the highest sequence
/// number wins. Overrides and mask payloads are separate records and never
/// rewrite a stored report.
class ReportStore {
public:
    explicit ReportStore(std::filesystem::path root);

    [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }

    /// Stores the machine report (any reviewer_override in `r` is dropped).
    void put_report(const StudyReport& r);
    void put_masks(const std::string& study_id, const std::string& fingerprint, const std::string& clip_id,
                   Chamber chamber, const std::string& sidecar_text);
    /// Attaches to the latest report of `study_id`. Throws UnknownStudy.
    void put_override(const std::string& study_id, const ReviewerOverride& o);

    /// Latest report (optionally of one fingerprint) with its latest override
    /// applied. Throws StoreCorrupt on checksum mismatch.
    [[nodiscard]] std::optional<StudyReport> load(const std::string& study_id,
                                                  const std::optional<std::string>& fingerprint = {}) const;
    /// The stored machine report bytes, unmodified.
    [[nodiscard]] std::optional<std::string> load_machine_json(const std::string& study_id,
                                                               const std::optional<std::string>& fingerprint = {}) const;
    [[nodiscard]] std::vector<std::string> fingerprints(const std::string& study_id) const;
    [[nodiscard]] std::vector<StudySummary> list() const;
    [[nodiscard]] std::optional<std::string> load_masks(const std::string& study_id, const std::string& clip_id,
                                                        Chamber chamber) const;

    /// Re-hashes every record.
    [[nodiscard]] VerifyResult verify() const;

    [[nodiscard]] std::optional<ThresholdConfig> thresholds() const;
    void set_thresholds(const ThresholdConfig& t);

    /// Cohort CSVs under `<root>/cohorts/<name>.csv`.
    [[nodiscard]] std::vector<std::string> cohort_names() const;
    [[nodiscard]] std::optional<std::vector<CohortEntry>> cohort(const std::string& name) const;

private:
    struct Record {
        std::uint64_t seq = 0;
        std::string kind;
        std::filesystem::path path;
    };

    void append(std::string_view kind, const std::string& body);
    [[nodiscard]] std::vector<Record> records() const;
    [[nodiscard]] static std::string read_body(const Record& rec);

    std::filesystem::path root_;
    mutable std::mutex mu_;
};

}  // namespace echotriage
