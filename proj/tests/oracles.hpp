#pragma once
// Independent reference implementations and random generators shared by the
// unit tests and the acceptance binary. Deliberately naive.

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "echotriage/dicom.hpp"
#include "echotriage/segmentation.hpp"
#include "echotriage/triage.hpp"

namespace oracle {

inline std::string random_id(std::mt19937_64& rng, std::size_t max_len) {
    static constexpr char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.-_";
    std::uniform_int_distribution<std::size_t> len(1, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, sizeof alphabet - 2);
    std::string s(len(rng), ' ');
    for (auto& c : s) c = alphabet[pick(rng)];
    return s;
}

inline echotriage::EchoClip random_clip(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::uint32_t> dim(1, 16);
    std::uniform_int_distribution<std::uint32_t> nframes(1, 4);
    std::uniform_real_distribution<double> spacing(0.01, 2.0);
    std::uniform_real_distribution<double> interval(1.0, 100.0);
    std::uniform_int_distribution<int> byte(0, 255);
    std::bernoulli_distribution coin(0.5);

    echotriage::EchoClip c;
    c.study_id = random_id(rng, 16);
    c.clip_id = random_id(rng, 40);
    c.rows = dim(rng);
    c.cols = dim(rng);
    c.num_frames = nframes(rng);
    c.frame_interval_ms = interval(rng);
    if (coin(rng)) c.pixel_spacing_mm = echotriage::PixelSpacing{spacing(rng), spacing(rng)};
    c.acquisition_index = std::uniform_int_distribution<std::int32_t>(0, 99999)(rng);
    if (coin(rng)) c.declared_view_hint = random_id(rng, 20);
    c.pixels.resize(c.frame_size() * c.num_frames);
    for (auto& p : c.pixels) p = static_cast<std::uint8_t>(byte(rng));
    return c;
}

inline echotriage::ChamberMask random_mask(std::mt19937_64& rng, std::uint32_t rows, std::uint32_t cols,
                                           double density) {
    std::bernoulli_distribution on(density);
    echotriage::ChamberMask m;
    m.rows = rows;
    m.cols = cols;
    m.bits.resize(static_cast<std::size_t>(rows) * cols);
    for (auto& b : m.bits) b = on(rng) ? 1 : 0;
    return m;
}

// Counts set membership cell by cell.
inline double brute_dice(const echotriage::ChamberMask& a, const echotriage::ChamberMask& b) {
    int inter = 0, na = 0, nb = 0;
    for (std::uint32_t r = 0; r < a.rows; ++r) {
        for (std::uint32_t c = 0; c < a.cols; ++c) {
            const bool x = a.at(r, c), y = b.at(r, c);
            na += x;
            nb += y;
            inter += x && y;
        }
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * inter / (na + nb);
}

/// Sizes 2..100, both classes present, scores on a coarse grid so ties occur.
inline std::vector<echotriage::CohortEntry> random_cohort(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> size(2, 100);
    std::uniform_int_distribution<int> grid(0, 200);
    std::bernoulli_distribution coin(0.5);
    std::vector<echotriage::CohortEntry> c(static_cast<std::size_t>(size(rng)));
    for (std::size_t i = 0; i < c.size(); ++i) {
        c[i].study_id = "s" + std::to_string(i);
        c[i].truly_normal = coin(rng);
        // Normals skew higher, with overlap.
        c[i].estimated_lvef = grid(rng) * 0.25 + (c[i].truly_normal ? 30.0 : 15.0);
    }
    c[0].truly_normal = true;
    c[1].truly_normal = false;
    return c;
}

inline double random_floor(std::mt19937_64& rng) {
    static constexpr double common[] = {0.5, 0.7, 0.75, 0.8, 0.9, 1.0, 0.0};
    std::uniform_int_distribution<int> pick(0, 9);
    const int k = pick(rng);
    if (k < 7) return common[k];
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Tries every observed score as a cutoff, counting each patient directly.
inline echotriage::CalibrationResult brute_force_calibration(const std::vector<echotriage::CohortEntry>& cohort,
                                                             double floor) {
    std::set<double> candidates;
    for (const auto& e : cohort) candidates.insert(e.estimated_lvef);

    struct Row {
        double cutoff;
        echotriage::kernels::Confusion m;
        double precision;
        double sensitivity;
    };
    std::vector<Row> rows;
    for (const double c : candidates) {
        echotriage::kernels::Confusion m;
        for (const auto& e : cohort) {
            const bool p = e.estimated_lvef > c;
            if (p && e.truly_normal) ++m.tp;
            else if (p) ++m.fp;
            else if (e.truly_normal) ++m.fn;
            else ++m.tn;
        }
        const double precision = m.tp + m.fp > 0 ? static_cast<double>(m.tp) / (m.tp + m.fp) : -1.0;
        const double sensitivity = static_cast<double>(m.tp) / (m.tp + m.fn);
        rows.push_back({c, m, precision, sensitivity});
    }

    const Row* best = nullptr;
    for (const auto& r : rows) {
        if (r.precision < 0.0 || r.precision < floor) continue;
        const bool better = !best || r.sensitivity > best->sensitivity ||
                            (r.sensitivity == best->sensitivity &&
                             (r.precision > best->precision ||
                              (r.precision == best->precision && r.cutoff > best->cutoff)));
        if (better) best = &r;
    }
    echotriage::CalibrationResult out;
    out.feasible = best != nullptr;
    if (!best) best = &rows.back();  // largest cutoff: nobody predicted normal
    out.chosen_cutoff = best->cutoff;
    out.counts = best->m;
    if (best->precision >= 0.0) out.achieved_precision = best->precision;
    out.achieved_sensitivity = best->sensitivity;
    return out;
}

}  // namespace oracle
