#pragma once

// Data-parallel inner loops of the pipeline. Every kernel exists twice:
// `serial::` is the reference kept for tests and benchmarks, `omp::` is the
// OpenMP version used in production. Both must produce identical output.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace echotriage::kernels {

struct Confusion {
    std::uint32_t tp = 0;
    std::uint32_t fp = 0;
    std::uint32_t fn = 0;
    std::uint32_t tn = 0;

    bool operator==(const Confusion&) const = default;
};

/// Parameters for drawing a dark ellipse on a bright canvas, one radial
/// semi-axis per frame. The long axis runs along image rows.
struct EllipseFrames {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    double row_mm = 1.0;
    double col_mm = 1.0;
    double long_semi_mm = 0.0;
    std::vector<double> radial_semi_mm;  // one per frame
    std::uint8_t background = 200;
    std::uint8_t interior = 40;
    std::uint32_t noise_amplitude = 0;
    std::uint64_t noise_seed = 0;
};

/// Deterministic 64-bit mixer used for per-frame noise streams.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

namespace serial {

/// bits[f] = largest 4-connected component of (pixel < threshold) in frame f.
/// Ties between equal-size components go to the one met first in raster order.
void threshold_largest_component(std::span<const std::uint8_t> pixels, std::uint32_t rows,
                                 std::uint32_t cols, std::uint32_t frames, std::uint8_t threshold,
                                 std::span<std::uint8_t> bits);

void pixel_counts(std::span<const std::span<const std::uint8_t>> frames, std::span<std::uint64_t> counts);

void render_ellipse_frames(const EllipseFrames& spec, std::span<std::uint8_t> pixels,
                           std::span<std::uint8_t> masks);

/// Confusion matrix of the rule "predict positive iff score > cutoff" for each cutoff.
void cutoff_confusion(std::span<const double> scores, std::span<const std::uint8_t> truth,
                      std::span<const double> cutoffs, std::span<Confusion> out);

}  // namespace serial

namespace omp {

void threshold_largest_component(std::span<const std::uint8_t> pixels, std::uint32_t rows,
                                 std::uint32_t cols, std::uint32_t frames, std::uint8_t threshold,
                                 std::span<std::uint8_t> bits);

void pixel_counts(std::span<const std::span<const std::uint8_t>> frames, std::span<std::uint64_t> counts);

void render_ellipse_frames(const EllipseFrames& spec, std::span<std::uint8_t> pixels,
                           std::span<std::uint8_t> masks);

void cutoff_confusion(std::span<const double> scores, std::span<const std::uint8_t> truth,
                      std::span<const double> cutoffs, std::span<Confusion> out);

}  // namespace omp

namespace detail {
// Single-frame bodies shared by both variants.
void threshold_frame(std::span<const std::uint8_t> frame, std::uint32_t rows, std::uint32_t cols,
                     std::uint8_t threshold, std::span<std::uint8_t> bits,
                     std::vector<std::int32_t>& labels, std::vector<std::uint32_t>& queue);
void render_frame(const EllipseFrames& spec, std::size_t frame, std::span<std::uint8_t> pixels,
                  std::span<std::uint8_t> mask);
Confusion confusion_at(std::span<const double> scores, std::span<const std::uint8_t> truth, double cutoff);
}  // namespace detail

}  // namespace echotriage::kernels
