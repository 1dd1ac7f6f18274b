#include <omp.h>

#include "echotriage/kernels.hpp"

namespace echotriage::kernels::omp {

void threshold_largest_component(std::span<const std::uint8_t> pixels, std::uint32_t rows,
                                 std::uint32_t cols, std::uint32_t frames, std::uint8_t threshold,
                                 std::span<std::uint8_t> bits) {
    const std::size_t fs = static_cast<std::size_t>(rows) * cols;
    const auto n = static_cast<std::int64_t>(frames);
#pragma omp parallel
    {
        std::vector<std::int32_t> labels;
        std::vector<std::uint32_t> queue;
#pragma omp for schedule(static)
        for (std::int64_t f = 0; f < n; ++f) {
            const auto off = static_cast<std::size_t>(f) * fs;
            detail::threshold_frame(pixels.subspan(off, fs), rows, cols, threshold, bits.subspan(off, fs), labels,
                                    queue);
        }
    }
}

void pixel_counts(std::span<const std::span<const std::uint8_t>> frames, std::span<std::uint64_t> counts) {
    const auto n = static_cast<std::int64_t>(frames.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t f = 0; f < n; ++f) {
        const auto frame = frames[static_cast<std::size_t>(f)];
        const std::uint8_t* p = frame.data();
        const std::size_t size = frame.size();
        std::uint64_t c = 0;
#pragma omp simd reduction(+ : c)
        for (std::size_t i = 0; i < size; ++i) c += p[i] != 0;
        counts[static_cast<std::size_t>(f)] = c;
    }
}

void render_ellipse_frames(const EllipseFrames& spec, std::span<std::uint8_t> pixels,
                           std::span<std::uint8_t> masks) {
    const std::size_t fs = static_cast<std::size_t>(spec.rows) * spec.cols;
    const auto n = static_cast<std::int64_t>(spec.radial_semi_mm.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t f = 0; f < n; ++f) {
        const auto off = static_cast<std::size_t>(f) * fs;
        detail::render_frame(spec, static_cast<std::size_t>(f), pixels.subspan(off, fs), masks.subspan(off, fs));
    }
}

void cutoff_confusion(std::span<const double> scores, std::span<const std::uint8_t> truth,
                      std::span<const double> cutoffs, std::span<Confusion> out) {
    const auto n = static_cast<std::int64_t>(cutoffs.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < n; ++k) {
        out[static_cast<std::size_t>(k)] = detail::confusion_at(scores, truth, cutoffs[static_cast<std::size_t>(k)]);
    }
}

}  // namespace echotriage::kernels::omp
