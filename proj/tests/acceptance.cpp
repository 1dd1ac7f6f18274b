// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "echotriage/dicom.hpp"
#include "echotriage/error.hpp"
#include "echotriage/geometry.hpp"
#include "echotriage/kernels.hpp"
#include "echotriage/phantom.hpp"
#include "echotriage/pipeline.hpp"
#include "echotriage/segmentation.hpp"
#include "echotriage/triage.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace echotriage;
using std::numbers::pi;

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

int failures = 0;

void criterion(const char* name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = limit_s <= 0 || s <= limit_s;
    const bool pass = o.ok && in_time;
    if (!pass) ++failures;
    std::printf("%s %-22s %s (%.2f s%s)\n", pass ? "PASS" : "FAIL", name, o.detail.c_str(), s,
                in_time ? "" : ", over time limit");
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ChamberMask ellipse_mask(double a, double b, double s) {
    kernels::EllipseFrames spec;
    spec.row_mm = spec.col_mm = s;
    spec.rows = 2 * static_cast<std::uint32_t>(std::ceil(a / s)) + 9;
    spec.cols = 2 * static_cast<std::uint32_t>(std::ceil(b / s)) + 9;
    spec.long_semi_mm = a;
    spec.radial_semi_mm = {b};
    std::vector<std::uint8_t> px(static_cast<std::size_t>(spec.rows) * spec.cols);
    ChamberMask m;
    m.rows = spec.rows;
    m.cols = spec.cols;
    m.bits.resize(px.size());
    m.pixel_spacing_mm = PixelSpacing{s, s};
    kernels::omp::render_ellipse_frames(spec, px, m.bits);
    return m;
}

std::vector<StudyReport> run_sweep(const std::filesystem::path& dir) {
    write_phantom_study(load_phantom_specs(et_test::config("phantom_sweep.toml")), dir);
    return run_batch(dir, {});
}

}  // namespace

int main() {
    criterion("triage-grid", 1.0, [] {
        int matched = 0;
        for (int v = 0; v <= 100; ++v) {
            const auto want = v < 40 ? Category::ABNORMAL : v > 60 ? Category::NORMAL : Category::GREY;
            matched += triage(v).category == want;
        }
        return Outcome{matched == 101, fmt("%d/101 grid values match", matched)};
    });

    criterion("volumetry-oracle", 1.0, [] {
        const double s = 0.5;
        ChamberMask cyl;
        cyl.rows = 100;
        cyl.cols = 60;
        cyl.bits.assign(6000, 0);
        cyl.pixel_spacing_mm = PixelSpacing{s, s};
        for (std::uint32_t r = 10; r < 90; ++r) {
            for (std::uint32_t c = 10; c < 50; ++c) cyl.bits[r * 60 + c] = 1;
        }
        const double cyl_want = pi / 4 * 20 * 20 * 40 / 1000;
        const double cyl_got = disk_volume(cyl, 20);
        const double sph_want = 4.0 / 3.0 * pi * 40 * 15 * 15 / 1000;
        const double sph_got = disk_volume(ellipse_mask(40, 15, s), 20);
        const double e_cyl = std::abs(cyl_got - cyl_want) / cyl_want;
        const double e_sph = std::abs(sph_got - sph_want) / sph_want;

        // Convergence in n on a 0.05 mm raster, where pixel quantization is
        // well below the disk discretization error.
        const auto fine = ellipse_mask(40, 15, 0.05);
        std::string errs;
        bool monotone = true;
        double prev = INFINITY;
        for (const int n : {5, 10, 20, 40}) {
            const double e = std::abs(disk_volume(fine, n) - sph_want);
            monotone = monotone && e <= prev;
            prev = e;
            errs += fmt("%s%.4f", errs.empty() ? "" : ",", e);
        }
        const bool ok = e_cyl <= 0.02 && e_sph <= 0.02 && monotone;
        return Outcome{ok, fmt("cylinder %.3f mL (%.2f%%), spheroid %.3f mL (%.2f%%); |err| n=5,10,20,40: %s mL",
                               cyl_got, 100 * e_cyl, sph_got, 100 * e_sph, errs.c_str())};
    });

    criterion("phantom-sweep", 30.0, [] {
        et_test::TempDir tmp;
        const auto reports = run_sweep(tmp / "sweep");
        const double truth[] = {15, 35, 45, 55, 65, 75};
        const Category want[] = {Category::ABNORMAL, Category::ABNORMAL, Category::GREY,
                                 Category::GREY,     Category::NORMAL,   Category::NORMAL};
        bool ok = reports.size() == 6;
        std::string detail;
        for (std::size_t i = 0; ok && i < 6; ++i) {
            const auto& r = reports[i];
            const double est = r.lvef ? r.lvef->mean_lvef : NAN;
            ok = r.lvef && std::abs(est - truth[i]) <= 3.0 && r.triage.category == want[i];
            detail += fmt("%s%.0f->%.2f %c", i ? ", " : "", truth[i], est, to_string(r.triage.category)[0]);
        }
        return Outcome{ok, detail};
    });

    criterion("calibration-oracle", 10.0, [] {
        std::mt19937_64 rng(2024);
        int equal = 0;
        for (int i = 0; i < 200; ++i) {
            const auto cohort = oracle::random_cohort(rng);
            const double floor = oracle::random_floor(rng);
            equal += calibrate_cutoff(cohort, floor) == oracle::brute_force_calibration(cohort, floor);
        }
        return Outcome{equal == 200, fmt("%d/200 cohorts equal the exhaustive sweep", equal)};
    });

    criterion("workload-figure", 0, [] {
        const double h = workload_savings({});
        return Outcome{h == 180.0, fmt("%.17g h/year", h)};
    });

    criterion("parser-round-trip", 60.0, [] {
        std::mt19937_64 rng(7);
        int same = 0;
        std::vector<std::vector<std::uint8_t>> corpus;
        for (int i = 0; i < 1000; ++i) {
            const auto clip = oracle::random_clip(rng);
            const auto bytes = write_dicom(clip);
            same += parse_dicom(bytes) == clip;
            if (i < 50) corpus.push_back(bytes);
        }
        std::size_t cuts = 0, rejected = 0, other = 0;
        for (const auto& bytes : corpus) {
            for (std::size_t n = 0; n < bytes.size(); ++n) {
                ++cuts;
                try {
                    (void)parse_dicom(std::span(bytes.data(), n));
                } catch (const Error&) {
                    ++rejected;
                } catch (...) {
                    ++other;
                }
            }
        }
        const bool ok = same == 1000 && other == 0;
        return Outcome{ok, fmt("%d/1000 round trips exact; %zu truncations, %zu rejected cleanly, %zu unexpected",
                               same, cuts, rejected, other)};
    });

    criterion("dice-brute-force", 5.0, [] {
        std::mt19937_64 rng(99);
        std::uniform_int_distribution<std::uint32_t> dim(1, 32);
        std::uniform_real_distribution<double> density(0.0, 1.0);
        int equal = 0;
        for (int i = 0; i < 1000; ++i) {
            const auto rows = dim(rng), cols = dim(rng);
            const auto a = oracle::random_mask(rng, rows, cols, density(rng));
            const auto b = oracle::random_mask(rng, rows, cols, density(rng));
            equal += dice(a, b) == oracle::brute_dice(a, b);
        }
        return Outcome{equal == 1000, fmt("%d/1000 mask pairs exact", equal)};
    });

    criterion("determinism", 0, [] {
        et_test::TempDir tmp;
        const auto first = run_sweep(tmp / "a");
        const auto second = run_sweep(tmp / "b");
        std::size_t same = 0;
        for (std::size_t i = 0; i < std::min(first.size(), second.size()); ++i) {
            same += to_json(first[i]) == to_json(second[i]);
        }
        const bool files = et_test::read_bytes(tmp / "a/ef55/ef55-a4c.dcm") == et_test::read_bytes(tmp / "b/ef55/ef55-a4c.dcm");
        const bool ok = first.size() == 6 && second.size() == 6 && same == 6 && files;
        return Outcome{ok, fmt("%zu/6 reports byte-identical across two runs", same)};
    });

    return failures == 0 ? 0 : 1;
}
