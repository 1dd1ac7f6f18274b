#include "echotriage/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "echotriage/error.hpp"
#include "echotriage/kernels.hpp"

namespace echotriage {

namespace {

const PixelSpacing& spacing_of(const ChamberMask& mask) {
    if (!mask.pixel_spacing_mm) throw Error(Errc::UncalibratedClip, "mask has no pixel spacing");
    return *mask.pixel_spacing_mm;
}

}  // namespace

std::vector<double> area_series(std::span<const ChamberMask> masks) {
    if (masks.empty()) throw Error(Errc::EmptyInput, "area_series needs at least one mask");
    std::vector<std::span<const std::uint8_t>> frames;
    frames.reserve(masks.size());
    for (const auto& m : masks) {
        spacing_of(m);
        frames.emplace_back(m.bits);
    }
    std::vector<std::uint64_t> counts(masks.size());
    kernels::omp::pixel_counts(frames, counts);

    std::vector<double> areas(masks.size());
    for (std::size_t i = 0; i < masks.size(); ++i) {
        const auto& s = *masks[i].pixel_spacing_mm;
        areas[i] = static_cast<double>(counts[i]) * s.row_mm * s.col_mm;
    }
    return areas;
}

std::vector<double> smooth(std::span<const double> series, int window) {
    if (window < 1 || window % 2 == 0) throw Error(Errc::InvalidParameter, "smoothing window must be odd and >= 1");
    const auto n = static_cast<std::ptrdiff_t>(series.size());
    const std::ptrdiff_t half = window / 2;
    std::vector<double> out(series.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::ptrdiff_t j = -half; j <= half; ++j) {
            sum += series[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i + j, 0, n - 1))];
        }
        out[static_cast<std::size_t>(i)] = sum / static_cast<double>(window);
    }
    return out;
}

std::vector<CycleFrames> detect_cycles(std::span<const double> areas, int window) {
    if (areas.size() < 3) throw Error(Errc::NoCycleFound, "need at least 3 frames");
    const auto s = smooth(areas, window);
    const std::size_t n = s.size();

    std::vector<std::size_t> maxima;
    for (std::size_t i = 0; i < n; ++i) {
        const bool above_prev = i == 0 || s[i] > s[i - 1];
        const bool above_next = i + 1 == n || s[i] > s[i + 1];
        if (above_prev && above_next) maxima.push_back(i);
    }
    if (maxima.size() < 2) throw Error(Errc::NoCycleFound, "fewer than two end-diastolic peaks");

    std::vector<CycleFrames> cycles;
    for (std::size_t k = 0; k + 1 < maxima.size(); ++k) {
        const std::size_t ed = maxima[k];
        std::size_t es = ed + 1;
        for (std::size_t i = ed + 1; i < maxima[k + 1]; ++i) {
            if (areas[i] < areas[es]) es = i;
        }
        // A smoothed peak can sit on a raw dip; such a pair is not a beat.
        if (areas[ed] < areas[es]) continue;
        cycles.push_back({ed, es});
    }
    if (cycles.empty()) throw Error(Errc::NoCycleFound, "no peak pair brackets a contraction");
    return cycles;
}

DiskProfile disk_profile(const ChamberMask& mask, int n_disks) {
    if (n_disks < 1) throw Error(Errc::InvalidParameter, "n_disks must be >= 1");
    const auto& spacing = spacing_of(mask);
    if (mask.bits.size() != static_cast<std::size_t>(mask.rows) * mask.cols) {
        throw Error(Errc::DimensionMismatch, "mask bits do not match rows*cols");
    }

    // Work in units of one row spacing so an isotropic rescale leaves every
    // intermediate bit-identical; lengths are scaled back at the end.
    const double unit = spacing.row_mm;
    const double sy = 1.0;
    const double sx = spacing.col_mm / unit;

    std::vector<double> xs;
    std::vector<double> ys;
    for (std::uint32_t r = 0; r < mask.rows; ++r) {
        for (std::uint32_t c = 0; c < mask.cols; ++c) {
            if (!mask.at(r, c)) continue;
            xs.push_back(static_cast<double>(c) * sx);
            ys.push_back(static_cast<double>(r) * sy);
        }
    }
    const std::size_t count = xs.size();
    if (count == 0) throw Error(Errc::DegenerateMask, "empty mask");

    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(count);
    my /= static_cast<double>(count);
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    sxx /= static_cast<double>(count);
    syy /= static_cast<double>(count);
    sxy /= static_cast<double>(count);

    const double mean = 0.5 * (sxx + syy);
    const double radius = std::hypot(0.5 * (sxx - syy), sxy);
    const double major = mean + radius;
    const double minor = mean - radius;
    if (!(major > 0.0) || minor <= 1e-12 * major) {
        throw Error(Errc::DegenerateMask, "mask pixels are collinear");
    }

    // Principal direction, oriented towards increasing row (then column).
    double ux = 0.0;
    double uy = 0.0;
    if (std::abs(sxy) > 1e-12 * major) {
        ux = sxy;
        uy = major - sxx;
        const double norm = std::hypot(ux, uy);
        ux /= norm;
        uy /= norm;
    } else if (syy >= sxx) {
        uy = 1.0;
    } else {
        ux = 1.0;
    }
    if (uy < 0.0 || (uy == 0.0 && ux < 0.0)) {
        ux = -ux;
        uy = -uy;
    }
    const double vx = -uy;
    const double vy = ux;

    // Half-extent of one pixel footprint projected on each axis.
    const double half_u = 0.5 * (std::abs(ux) * sx + std::abs(uy) * sy);
    const double half_v = 0.5 * (std::abs(vx) * sx + std::abs(vy) * sy);

    std::vector<double> along(count);
    std::vector<double> across(count);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < count; ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        along[i] = dx * ux + dy * uy;
        across[i] = dx * vx + dy * vy;
        lo = std::min(lo, along[i] - half_u);
        hi = std::max(hi, along[i] + half_u);
    }
    const double length = hi - lo;
    const double slab = length / n_disks;

    std::vector<double> lo_q(static_cast<std::size_t>(n_disks), std::numeric_limits<double>::infinity());
    std::vector<double> hi_q(static_cast<std::size_t>(n_disks), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < count; ++i) {
        // Slabs whose mid-level line passes through this pixel's footprint.
        const double first = (along[i] - half_u - lo) / slab - 0.5;
        const double last = (along[i] + half_u - lo) / slab - 0.5;
        const auto k0 = static_cast<std::ptrdiff_t>(std::max(0.0, std::ceil(first)));
        const auto k1 = std::min<std::ptrdiff_t>(n_disks - 1, static_cast<std::ptrdiff_t>(std::ceil(last)) - 1);
        for (std::ptrdiff_t k = k0; k <= k1; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            lo_q[kk] = std::min(lo_q[kk], across[i] - half_v);
            hi_q[kk] = std::max(hi_q[kk], across[i] + half_v);
        }
    }

    DiskProfile profile;
    profile.length_mm = length * unit;
    profile.diameters_mm.resize(static_cast<std::size_t>(n_disks));
    for (std::size_t k = 0; k < profile.diameters_mm.size(); ++k) {
        profile.diameters_mm[k] = hi_q[k] > lo_q[k] ? (hi_q[k] - lo_q[k]) * unit : 0.0;
    }
    return profile;
}

double disk_volume(const ChamberMask& mask, int n_disks) {
    const auto p = disk_profile(mask, n_disks);
    const double h = p.length_mm / n_disks;
    double mm3 = 0.0;
    for (const double d : p.diameters_mm) mm3 += std::numbers::pi / 4.0 * d * d * h;
    return mm3 / 1000.0;
}

BiplaneVolume biplane_volume(const ChamberMask& mask_a4c, const ChamberMask& mask_a2c, int n_disks) {
    const auto a = disk_profile(mask_a4c, n_disks);
    const auto b = disk_profile(mask_a2c, n_disks);
    const double length = std::min(a.length_mm, b.length_mm);
    const double h = length / n_disks;
    double mm3 = 0.0;
    for (std::size_t k = 0; k < a.diameters_mm.size(); ++k) {
        mm3 += std::numbers::pi / 4.0 * a.diameters_mm[k] * b.diameters_mm[k] * h;
    }
    BiplaneVolume out;
    out.ml = mm3 / 1000.0;
    out.axis_length_mismatch = std::abs(a.length_mm - b.length_mm) > 0.2 * std::max(a.length_mm, b.length_mm);
    return out;
}

std::string_view to_string(VolumeMethod m) noexcept {
    switch (m) {
        case VolumeMethod::single_plane_a4c: return "single_plane_a4c";
        case VolumeMethod::single_plane_a2c: return "single_plane_a2c";
        case VolumeMethod::biplane: return "biplane";
    }
    return "single_plane_a4c";
}

LvefResult compute_lvef(std::span<const CardiacCycle> cycles, VolumeMethod method) {
    if (cycles.empty()) throw Error(Errc::NoCycles, "no cardiac cycles with volumes");
    LvefResult out;
    out.method = method;
    out.cycles_used = std::min(cycles.size(), kBeatsPerStudy);
    double sum = 0.0;
    for (std::size_t i = 0; i < out.cycles_used; ++i) {
        const auto& c = cycles[i];
        if (!(c.edv_ml > 0.0) || !(c.esv_ml >= 0.0) || c.esv_ml > c.edv_ml || !std::isfinite(c.edv_ml)) {
            throw Error(Errc::InvalidParameter, "cycle volumes violate 0 <= ESV <= EDV, EDV > 0");
        }
        const double ef = 100.0 * (c.edv_ml - c.esv_ml) / c.edv_ml;
        out.per_cycle_lvef.push_back(ef);
        sum += ef;
    }
    out.mean_lvef = sum / static_cast<double>(out.cycles_used);
    if (out.cycles_used < kBeatsPerStudy) out.quality_flags.emplace_back("fewer-than-5-beats");
    return out;
}

}  // namespace echotriage
