#include "echotriage/triage.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "echotriage/error.hpp"

namespace echotriage {

namespace {

void check_cohort(std::span<const CohortEntry> cohort, double precision_floor) {
    if (cohort.empty()) throw Error(Errc::EmptyInput, "empty cohort");
    if (!(precision_floor >= 0.0 && precision_floor <= 1.0)) {
        throw Error(Errc::InvalidParameter, "precision floor must be in [0,1]");
    }
    std::size_t positives = 0;
    for (const auto& e : cohort) {
        if (!std::isfinite(e.estimated_lvef)) throw Error(Errc::InvalidParameter, "non-finite LVEF in cohort");
        positives += e.truly_normal;
    }
    if (positives == 0 || positives == cohort.size()) {
        throw Error(Errc::SingleClassCohort, "cohort needs both normal and non-normal studies");
    }
}

bool meets_floor(const kernels::Confusion& m, double floor) {
    const std::uint32_t predicted = m.tp + m.fp;
    return predicted > 0 && static_cast<double>(m.tp) / static_cast<double>(predicted) >= floor;
}

/// True when (a, cutoff_a) is preferred over (b, cutoff_b). Same cohort, so
/// sensitivity compares on TP; precision compares exactly by cross-multiplying.
bool preferred(const kernels::Confusion& a, double cutoff_a, const kernels::Confusion& b, double cutoff_b) {
    if (a.tp != b.tp) return a.tp > b.tp;
    const auto lhs = static_cast<std::uint64_t>(a.tp) * (b.tp + b.fp);
    const auto rhs = static_cast<std::uint64_t>(b.tp) * (a.tp + a.fp);
    if (lhs != rhs) return lhs > rhs;
    return cutoff_a > cutoff_b;
}

CalibrationResult pick(std::span<const double> cutoffs, std::span<const kernels::Confusion> counts,
                       double precision_floor) {
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < cutoffs.size(); ++k) {
        if (!meets_floor(counts[k], precision_floor)) continue;
        if (!best || preferred(counts[k], cutoffs[k], counts[*best], cutoffs[*best])) best = k;
    }
    CalibrationResult out;
    std::size_t chosen = 0;
    if (best) {
        chosen = *best;
        out.feasible = true;
    } else {
        // All-negative operating point: the largest observed value.
        chosen = static_cast<std::size_t>(std::max_element(cutoffs.begin(), cutoffs.end()) - cutoffs.begin());
    }
    out.chosen_cutoff = cutoffs[chosen];
    out.counts = counts[chosen];
    const auto m = metrics_from(out.counts);
    out.achieved_precision = m.precision;
    out.achieved_sensitivity = m.sensitivity.value_or(0.0);
    return out;
}

std::vector<double> distinct_scores(std::span<const CohortEntry> cohort) {
    std::vector<double> v;
    v.reserve(cohort.size());
    for (const auto& e : cohort) v.push_back(e.estimated_lvef);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::string_view trim_cr(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    return s;
}

}  // namespace

void ThresholdConfig::validate() const {
    if (!(abnormal_below > 0.0 && abnormal_below <= normal_above && normal_above < 100.0)) {
        throw Error(Errc::InvalidThresholds, "need 0 < abnormal_below <= normal_above < 100");
    }
}

std::string_view to_string(Category c) noexcept {
    switch (c) {
        case Category::ABNORMAL: return "ABNORMAL";
        case Category::GREY: return "GREY";
        case Category::NORMAL: return "NORMAL";
        case Category::UNDETERMINED: return "UNDETERMINED";
    }
    return "UNDETERMINED";
}

std::optional<Category> category_from_string(std::string_view s) noexcept {
    for (const auto c : {Category::ABNORMAL, Category::GREY, Category::NORMAL, Category::UNDETERMINED}) {
        if (s == to_string(c)) return c;
    }
    return std::nullopt;
}

TriageDecision triage(double lvef, const ThresholdConfig& cfg) {
    cfg.validate();
    if (!(lvef >= 0.0 && lvef <= 100.0)) throw Error(Errc::InvalidLvef, "LVEF must lie in [0,100]");
    TriageDecision d;
    d.lvef = lvef;
    d.thresholds = cfg;
    if (lvef < cfg.abnormal_below) {
        d.category = Category::ABNORMAL;
    } else if (lvef > cfg.normal_above) {
        d.category = Category::NORMAL;
    } else {
        d.category = Category::GREY;
    }
    return d;
}

Metrics metrics_from(const kernels::Confusion& m) {
    Metrics out;
    out.counts = m;
    const std::uint32_t n = m.tp + m.fp + m.fn + m.tn;
    if (m.tp + m.fp > 0) out.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
    if (m.tp + m.fn > 0) out.sensitivity = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    out.accuracy = n > 0 ? static_cast<double>(m.tp + m.tn) / static_cast<double>(n) : 0.0;
    return out;
}

Metrics metrics(std::span<const Prediction> predictions) {
    if (predictions.empty()) throw Error(Errc::EmptyInput, "no predictions");
    kernels::Confusion m;
    for (const auto& p : predictions) {
        if (p.predicted_normal && p.truly_normal) ++m.tp;
        else if (p.predicted_normal) ++m.fp;
        else if (p.truly_normal) ++m.fn;
        else ++m.tn;
    }
    return metrics_from(m);
}

CalibrationResult calibrate_cutoff(std::span<const CohortEntry> cohort, double precision_floor) {
    check_cohort(cohort, precision_floor);
    const auto cutoffs = distinct_scores(cohort);
    std::vector<double> scores;
    std::vector<std::uint8_t> truth;
    scores.reserve(cohort.size());
    truth.reserve(cohort.size());
    for (const auto& e : cohort) {
        scores.push_back(e.estimated_lvef);
        truth.push_back(e.truly_normal ? 1 : 0);
    }
    std::vector<kernels::Confusion> counts(cutoffs.size());
    kernels::omp::cutoff_confusion(scores, truth, cutoffs, counts);
    return pick(cutoffs, counts, precision_floor);
}

CalibrationResult calibrate_cutoff_serial(std::span<const CohortEntry> cohort, double precision_floor) {
    check_cohort(cohort, precision_floor);
    std::vector<const CohortEntry*> order;
    order.reserve(cohort.size());
    for (const auto& e : cohort) order.push_back(&e);
    std::sort(order.begin(), order.end(),
              [](const CohortEntry* a, const CohortEntry* b) { return a->estimated_lvef > b->estimated_lvef; });

    std::uint32_t positives = 0;
    for (const auto& e : cohort) positives += e.truly_normal;
    const auto negatives = static_cast<std::uint32_t>(cohort.size()) - positives;

    // Descending sweep: at cutoff v everything strictly above v is predicted NORMAL.
    std::vector<double> cutoffs;
    std::vector<kernels::Confusion> counts;
    std::uint32_t tp = 0;
    std::uint32_t fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double v = order[i]->estimated_lvef;
        cutoffs.push_back(v);
        counts.push_back({tp, fp, positives - tp, negatives - fp});
        for (; i < order.size() && order[i]->estimated_lvef == v; ++i) {
            if (order[i]->truly_normal) ++tp;
            else ++fp;
        }
    }
    return pick(cutoffs, counts, precision_floor);
}

Metrics evaluate_cutoff(std::span<const CohortEntry> cohort, double cutoff) {
    if (cohort.empty()) throw Error(Errc::EmptyInput, "empty cohort");
    kernels::Confusion m;
    for (const auto& e : cohort) {
        const bool predicted = e.estimated_lvef > cutoff;
        if (predicted && e.truly_normal) ++m.tp;
        else if (predicted) ++m.fp;
        else if (e.truly_normal) ++m.fn;
        else ++m.tn;
    }
    return metrics_from(m);
}

std::vector<CohortEntry> parse_cohort_csv(std::string_view text) {
    std::vector<CohortEntry> out;
    bool header = true;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = trim_cr(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty()) continue;
        if (header) {
            if (line != "study_id,estimated_lvef,truly_normal") {
                throw Error(Errc::InvalidParameter, "cohort CSV header must be study_id,estimated_lvef,truly_normal");
            }
            header = false;
            continue;
        }
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string_view::npos || line.find(',', c2 + 1) != std::string_view::npos) {
            throw Error(Errc::InvalidParameter, "cohort line " + std::to_string(line_no) + " needs 3 fields");
        }
        CohortEntry e;
        e.study_id = std::string(trim_cr(line.substr(0, c1)));
        const auto lvef = trim_cr(line.substr(c1 + 1, c2 - c1 - 1));
        const auto [ptr, ec] = std::from_chars(lvef.data(), lvef.data() + lvef.size(), e.estimated_lvef);
        if (lvef.empty() || ec != std::errc() || ptr != lvef.data() + lvef.size()) {
            throw Error(Errc::InvalidParameter, "bad LVEF on cohort line " + std::to_string(line_no));
        }
        const auto flag = trim_cr(line.substr(c2 + 1));
        if (flag == "1" || flag == "true") {
            e.truly_normal = true;
        } else if (flag == "0" || flag == "false") {
            e.truly_normal = false;
        } else {
            throw Error(Errc::InvalidParameter, "bad truly_normal on cohort line " + std::to_string(line_no));
        }
        out.push_back(std::move(e));
    }
    if (header) throw Error(Errc::InvalidParameter, "cohort CSV has no header");
    return out;
}

std::vector<CohortEntry> read_cohort_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_cohort_csv(buf.str());
}

std::string write_cohort_csv(std::span<const CohortEntry> cohort) {
    std::string out = "study_id,estimated_lvef,truly_normal\n";
    for (const auto& e : cohort) {
        std::array<char, 32> buf{};
        const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), e.estimated_lvef);
        out += e.study_id + ',' + std::string(buf.data(), ptr) + ',' + (e.truly_normal ? "1" : "0") + '\n';
    }
    return out;
}

void WorkloadParams::validate() const {
    const bool ok = studies_per_year >= 0.0 && minutes_per_study >= 0.0 && normal_prevalence >= 0.0 &&
                    normal_prevalence <= 1.0 && sensitivity >= 0.0 && sensitivity <= 1.0 &&
                    std::isfinite(studies_per_year) && std::isfinite(minutes_per_study);
    if (!ok) throw Error(Errc::InvalidParameter, "workload parameters out of range");
}

double workload_savings(const WorkloadParams& p) {
    p.validate();
    return p.studies_per_year * p.normal_prevalence * p.sensitivity * p.minutes_per_study / 60.0;
}

}  // namespace echotriage
