// Serial reference vs OpenMP kernels on phantom-sized inputs.
//   ./bench_kernels --benchmark_counters_tabular=true
#include <benchmark/benchmark.h>

#include <random>

#include "echotriage/kernels.hpp"
#include "echotriage/phantom.hpp"

using namespace echotriage;

namespace {

// Six 20-frame cycles of the default phantom: 120 frames of 169x89.
const RenderedPhantom& phantom() {
    static const RenderedPhantom p = [] {
        PhantomSpec s;
        s.noise_seed = 1;
        s.noise_amplitude = 20;
        return render_phantom(s);
    }();
    return p;
}

kernels::EllipseFrames render_spec() {
    PhantomSpec s;
    kernels::EllipseFrames spec;
    spec.rows = s.canvas_rows();
    spec.cols = s.canvas_cols();
    spec.row_mm = spec.col_mm = s.pixel_spacing_mm;
    spec.long_semi_mm = s.long_semi_axis_mm;
    for (std::uint32_t f = 0; f < s.frames_per_cycle * s.n_cycles; ++f) spec.radial_semi_mm.push_back(s.radial_semi_axis_at(f));
    spec.noise_amplitude = 20;
    spec.noise_seed = 1;
    return spec;
}

template <auto Kernel>
void threshold(benchmark::State& state) {
    const auto& clip = phantom().clip;
    std::vector<std::uint8_t> bits(clip.pixels.size());
    for (auto _ : state) {
        Kernel(clip.pixels, clip.rows, clip.cols, clip.num_frames, 128, bits);
        benchmark::DoNotOptimize(bits.data());
    }
    state.SetItemsProcessed(state.iterations() * clip.num_frames);
}

template <auto Kernel>
void render(benchmark::State& state) {
    const auto spec = render_spec();
    const std::size_t n = static_cast<std::size_t>(spec.rows) * spec.cols * spec.radial_semi_mm.size();
    std::vector<std::uint8_t> px(n), masks(n);
    for (auto _ : state) {
        Kernel(spec, px, masks);
        benchmark::DoNotOptimize(px.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(spec.radial_semi_mm.size()));
}

template <auto Kernel>
void counts(benchmark::State& state) {
    const auto& masks = phantom().masks;
    std::vector<std::span<const std::uint8_t>> frames;
    for (const auto& m : masks) frames.emplace_back(m.bits);
    std::vector<std::uint64_t> out(frames.size());
    for (auto _ : state) {
        Kernel(frames, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(frames.size()));
}

template <auto Kernel>
void sweep(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> lvef(10, 80);
    std::vector<double> scores(n);
    std::vector<std::uint8_t> truth(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = lvef(rng);
        truth[i] = scores[i] + lvef(rng) / 4 > 65 ? 1 : 0;
    }
    std::vector<double> cutoffs = scores;
    std::vector<kernels::Confusion> out(cutoffs.size());
    for (auto _ : state) {
        Kernel(scores, truth, cutoffs, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

}  // namespace

BENCHMARK(threshold<kernels::serial::threshold_largest_component>)->Name("threshold/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(threshold<kernels::omp::threshold_largest_component>)->Name("threshold/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(render<kernels::serial::render_ellipse_frames>)->Name("render/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(render<kernels::omp::render_ellipse_frames>)->Name("render/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(counts<kernels::serial::pixel_counts>)->Name("pixel_counts/serial");
BENCHMARK(counts<kernels::omp::pixel_counts>)->Name("pixel_counts/omp")->UseRealTime();
BENCHMARK(sweep<kernels::serial::cutoff_confusion>)->Name("cutoff_sweep/serial")->Arg(100)->Arg(2000);
BENCHMARK(sweep<kernels::omp::cutoff_confusion>)->Name("cutoff_sweep/omp")->Arg(100)->Arg(2000)->UseRealTime();

BENCHMARK_MAIN();
