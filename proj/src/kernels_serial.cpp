#include <algorithm>
#include <cmath>

#include "echotriage/kernels.hpp"

namespace echotriage::kernels {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace detail {

void threshold_frame(std::span<const std::uint8_t> frame, std::uint32_t rows, std::uint32_t cols,
                     std::uint8_t threshold, std::span<std::uint8_t> bits,
                     std::vector<std::int32_t>& labels, std::vector<std::uint32_t>& queue) {
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    labels.assign(n, -1);
    std::int32_t best_label = -1;
    std::size_t best_size = 0;
    std::int32_t next_label = 0;

    for (std::size_t start = 0; start < n; ++start) {
        if (frame[start] >= threshold || labels[start] >= 0) continue;
        const std::int32_t label = next_label++;
        queue.clear();
        queue.push_back(static_cast<std::uint32_t>(start));
        labels[start] = label;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const std::uint32_t p = queue[head];
            const std::uint32_t r = p / cols;
            const std::uint32_t c = p % cols;
            auto visit = [&](std::uint32_t q) {
                if (frame[q] < threshold && labels[q] < 0) {
                    labels[q] = label;
                    queue.push_back(q);
                }
            };
            if (r > 0) visit(p - cols);
            if (r + 1 < rows) visit(p + cols);
            if (c > 0) visit(p - 1);
            if (c + 1 < cols) visit(p + 1);
        }
        if (queue.size() > best_size) {
            best_size = queue.size();
            best_label = label;
        }
    }
    for (std::size_t i = 0; i < n; ++i) bits[i] = (best_label >= 0 && labels[i] == best_label) ? 1 : 0;
}

void render_frame(const EllipseFrames& spec, std::size_t frame, std::span<std::uint8_t> pixels,
                  std::span<std::uint8_t> mask) {
    const double cr = (static_cast<double>(spec.rows) - 1.0) / 2.0;
    const double cc = (static_cast<double>(spec.cols) - 1.0) / 2.0;
    const double a = spec.long_semi_mm;
    const double b = spec.radial_semi_mm[frame];
    std::uint64_t state = spec.noise_seed ^ (0xD1B54A32D192ED03ull * (frame + 1));
    const std::uint64_t span = 2ull * spec.noise_amplitude + 1ull;

    for (std::uint32_t r = 0; r < spec.rows; ++r) {
        const double y = (static_cast<double>(r) - cr) * spec.row_mm / a;
        for (std::uint32_t c = 0; c < spec.cols; ++c) {
            const double x = (static_cast<double>(c) - cc) * spec.col_mm / b;
            const std::size_t i = static_cast<std::size_t>(r) * spec.cols + c;
            const bool inside = x * x + y * y <= 1.0;
            mask[i] = inside ? 1 : 0;
            int value = inside ? spec.interior : spec.background;
            if (spec.noise_amplitude > 0) {
                value += static_cast<int>(splitmix64(state) % span) - static_cast<int>(spec.noise_amplitude);
            }
            pixels[i] = static_cast<std::uint8_t>(std::clamp(value, 0, 255));
        }
    }
}

Confusion confusion_at(std::span<const double> scores, std::span<const std::uint8_t> truth, double cutoff) {
    Confusion m;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] > cutoff;
        const bool actual = truth[i] != 0;
        if (predicted && actual) ++m.tp;
        else if (predicted) ++m.fp;
        else if (actual) ++m.fn;
        else ++m.tn;
    }
    return m;
}

}  // namespace detail

namespace serial {

void threshold_largest_component(std::span<const std::uint8_t> pixels, std::uint32_t rows,
                                 std::uint32_t cols, std::uint32_t frames, std::uint8_t threshold,
                                 std::span<std::uint8_t> bits) {
    const std::size_t fs = static_cast<std::size_t>(rows) * cols;
    std::vector<std::int32_t> labels;
    std::vector<std::uint32_t> queue;
    for (std::size_t f = 0; f < frames; ++f) {
        detail::threshold_frame(pixels.subspan(f * fs, fs), rows, cols, threshold, bits.subspan(f * fs, fs),
                                labels, queue);
    }
}

void pixel_counts(std::span<const std::span<const std::uint8_t>> frames, std::span<std::uint64_t> counts) {
    for (std::size_t f = 0; f < frames.size(); ++f) {
        std::uint64_t n = 0;
        for (const auto b : frames[f]) n += b != 0;
        counts[f] = n;
    }
}

void render_ellipse_frames(const EllipseFrames& spec, std::span<std::uint8_t> pixels,
                           std::span<std::uint8_t> masks) {
    const std::size_t fs = static_cast<std::size_t>(spec.rows) * spec.cols;
    for (std::size_t f = 0; f < spec.radial_semi_mm.size(); ++f) {
        detail::render_frame(spec, f, pixels.subspan(f * fs, fs), masks.subspan(f * fs, fs));
    }
}

void cutoff_confusion(std::span<const double> scores, std::span<const std::uint8_t> truth,
                      std::span<const double> cutoffs, std::span<Confusion> out) {
    for (std::size_t k = 0; k < cutoffs.size(); ++k) out[k] = detail::confusion_at(scores, truth, cutoffs[k]);
}

}  // namespace serial

}  // namespace echotriage::kernels
