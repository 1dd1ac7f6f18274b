#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "echotriage/segmentation.hpp"

namespace echotriage {

inline constexpr int kDefaultDisks = 20;
inline constexpr int kDefaultSmoothingWindow = 3;
inline constexpr std::size_t kBeatsPerStudy = 5;

/// Per-frame chamber area in mm². Throws UncalibratedClip / EmptyInput.
[[nodiscard]] std::vector<double> area_series(std::span<const ChamberMask> masks);

/// Centered moving average; out-of-range neighbours are clamped to the edge sample.
[[nodiscard]] std::vector<double> smooth(std::span<const double> series, int window);

struct CycleFrames {
    std::size_t ed_frame = 0;
    std::size_t es_frame = 0;

    bool operator==(const CycleFrames&) const = default;
};

/// ED = strict local maxima of the smoothed series (edge samples compare
/// against their single neighbour). ES = earliest raw minimum strictly
/// between consecutive EDs. Throws NoCycleFound.
[[nodiscard]] std::vector<CycleFrames> detect_cycles(std::span<const double> areas,
                                                     int window = kDefaultSmoothingWindow);

/// Long-axis length and the n disk diameters, all in mm.
struct DiskProfile {
    double length_mm = 0.0;
    std::vector<double> diameters_mm;
};

/// Long axis = principal axis of the pixel second-moment matrix; diameters
/// are measured across each slab at its mid-level. Throws DegenerateMask.
[[nodiscard]] DiskProfile disk_profile(const ChamberMask& mask, int n_disks = kDefaultDisks);

/// Single-plane method of disks, in mL.
[[nodiscard]] double disk_volume(const ChamberMask& mask, int n_disks = kDefaultDisks);

struct BiplaneVolume {
    double ml = 0.0;
    bool axis_length_mismatch = false;  // long axes differ by more than 20%
};

[[nodiscard]] BiplaneVolume biplane_volume(const ChamberMask& mask_a4c, const ChamberMask& mask_a2c,
                                           int n_disks = kDefaultDisks);

struct CardiacCycle {
    std::size_t ed_frame = 0;
    std::size_t es_frame = 0;
    double edv_ml = 0.0;
    double esv_ml = 0.0;

    bool operator==(const CardiacCycle&) const = default;
};

enum class VolumeMethod { single_plane_a4c, single_plane_a2c, biplane };

std::string_view to_string(VolumeMethod m) noexcept;

struct LvefResult {
    std::vector<double> per_cycle_lvef;
    double mean_lvef = 0.0;
    std::size_t cycles_used = 0;
    VolumeMethod method = VolumeMethod::single_plane_a4c;
    std::vector<std::string> quality_flags;

    bool operator==(const LvefResult&) const = default;
};

/// First five cycles in temporal order, LVEF = 100 (EDV - ESV) / EDV.
[[nodiscard]] LvefResult compute_lvef(std::span<const CardiacCycle> cycles,
                                      VolumeMethod method = VolumeMethod::single_plane_a4c);

}  // namespace echotriage
