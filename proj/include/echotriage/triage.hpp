#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "echotriage/kernels.hpp"

namespace echotriage {

struct ThresholdConfig {
    double abnormal_below = 40.0;
    double normal_above = 60.0;

    /// Throws InvalidThresholds unless 0 < abnormal_below <= normal_above < 100.
    void validate() const;

    bool operator==(const ThresholdConfig&) const = default;
};

/// UNDETERMINED is never produced by triage(); the pipeline uses it for
/// studies whose LVEF could not be measured.
enum class Category { ABNORMAL, GREY, NORMAL, UNDETERMINED };

std::string_view to_string(Category c) noexcept;
std::optional<Category> category_from_string(std::string_view s) noexcept;

struct TriageDecision {
    Category category = Category::UNDETERMINED;
    double lvef = 0.0;
    ThresholdConfig thresholds;
    std::vector<std::string> flags;

    bool operator==(const TriageDecision&) const = default;
};

/// lvef < abnormal_below -> ABNORMAL; lvef > normal_above -> NORMAL; both
/// boundaries belong to GREY. Throws InvalidLvef outside [0, 100].
[[nodiscard]] TriageDecision triage(double lvef, const ThresholdConfig& cfg = {});

// NORMAL is the positive class throughout.
struct Prediction {
    bool predicted_normal = false;
    bool truly_normal = false;
};

struct Metrics {
    kernels::Confusion counts;
    std::optional<double> precision;    // empty when nothing was predicted normal
    std::optional<double> sensitivity;  // empty when nobody is truly normal
    double accuracy = 0.0;
};

[[nodiscard]] Metrics metrics_from(const kernels::Confusion& m);
[[nodiscard]] Metrics metrics(std::span<const Prediction> predictions);

struct CohortEntry {
    std::string study_id;
    double estimated_lvef = 0.0;
    bool truly_normal = false;
};

struct CalibrationResult {
    double chosen_cutoff = 0.0;  // predict NORMAL iff estimated_lvef > chosen_cutoff
    std::optional<double> achieved_precision;
    double achieved_sensitivity = 0.0;
    bool feasible = false;
    kernels::Confusion counts;

    bool operator==(const CalibrationResult&) const = default;
};

/// Maximises sensitivity subject to precision >= floor over the observed
/// LVEF values as cutoffs. Ties: higher precision, then the larger cutoff.
/// Throws EmptyInput / SingleClassCohort / InvalidParameter.
[[nodiscard]] CalibrationResult calibrate_cutoff(std::span<const CohortEntry> cohort, double precision_floor);

/// Serial reference: sorted sweep with running counts.
[[nodiscard]] CalibrationResult calibrate_cutoff_serial(std::span<const CohortEntry> cohort,
                                                        double precision_floor);

/// Metrics of the rule "predict NORMAL iff estimated_lvef > cutoff" on a cohort.
[[nodiscard]] Metrics evaluate_cutoff(std::span<const CohortEntry> cohort, double cutoff);

/// CSV with header `study_id,estimated_lvef,truly_normal`; truly_normal is 0/1 or true/false.
[[nodiscard]] std::vector<CohortEntry> parse_cohort_csv(std::string_view text);
[[nodiscard]] std::vector<CohortEntry> read_cohort_csv(const std::filesystem::path& path);
[[nodiscard]] std::string write_cohort_csv(std::span<const CohortEntry> cohort);

struct WorkloadParams {
    double studies_per_year = 10000.0;
    double normal_prevalence = 0.40;
    double sensitivity = 0.30;
    double minutes_per_study = 9.0;

    void validate() const;
};

/// Cardiologist hours per year no longer spent on studies the pipeline
/// confidently flags as normal.
[[nodiscard]] double workload_savings(const WorkloadParams& p);

}  // namespace echotriage
