#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "echotriage/error.hpp"
#include "echotriage/geometry.hpp"
#include "echotriage/phantom.hpp"
#include "support.hpp"

using namespace echotriage;
using std::numbers::pi;

namespace {

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return Errc::Io;
}

}  // namespace

TEST_CASE("analytic truth examples", "[phantom]") {
    PhantomSpec s;
    s.long_semi_axis_mm = 40;
    s.radial_semi_axis_ed_mm = 30;
    s.radial_semi_axis_es_mm = 21;
    CHECK(analytic_truth(s).lvef_pct == Catch::Approx(51.0));

    s.radial_semi_axis_ed_mm = 15;
    s.radial_semi_axis_es_mm = 10;
    const auto t = analytic_truth(s);
    CHECK(t.edv_ml == Catch::Approx(37.699).margin(1e-3));
    CHECK(t.esv_ml == Catch::Approx(4.0 / 3.0 * pi * 40 * 100 / 1000));

    for (const double ef : {0.0, 15.0, 35.0, 45.0, 55.0, 65.0, 75.0, 99.0}) {
        s.set_target_lvef(ef);
        CHECK(analytic_truth(s).lvef_pct == Catch::Approx(ef).margin(1e-9));
    }
    CHECK_THROWS_AS(s.set_target_lvef(100.0), Error);
    CHECK_THROWS_AS(s.set_target_lvef(-1.0), Error);
}

TEST_CASE("radial semi-axis follows a cosine between ED and ES", "[phantom]") {
    PhantomSpec s;
    s.radial_semi_axis_ed_mm = 20;
    s.radial_semi_axis_es_mm = 14;
    s.frames_per_cycle = 20;
    CHECK(s.radial_semi_axis_at(0) == 20.0);
    CHECK(s.radial_semi_axis_at(10) == Catch::Approx(14.0));
    CHECK(s.radial_semi_axis_at(20) == 20.0);
    CHECK(s.radial_semi_axis_at(5) == Catch::Approx(17.0));
    CHECK(s.radial_semi_axis_at(15) == Catch::Approx(17.0));
}

TEST_CASE("spec validation", "[phantom]") {
    PhantomSpec s;
    CHECK_NOTHROW(s.validate());
    CHECK(s.canvas_rows() % 2 == 1);
    CHECK(s.canvas_cols() % 2 == 1);

    auto small = s;
    small.rows = 50;
    small.cols = 50;
    CHECK(code_of([&] { small.validate(); }) == Errc::CanvasTooSmall);
    CHECK(code_of([&] { (void)render_phantom(small); }) == Errc::CanvasTooSmall);

    auto bad = s;
    bad.radial_semi_axis_es_mm = 25;
    CHECK(code_of([&] { bad.validate(); }) == Errc::InvalidParameter);
    bad = s;
    bad.frames_per_cycle = 4;
    CHECK(code_of([&] { bad.validate(); }) == Errc::InvalidParameter);
    bad = s;
    bad.pixel_spacing_mm = 0;
    CHECK(code_of([&] { bad.validate(); }) == Errc::InvalidParameter);
    bad = s;
    bad.clip_id.clear();
    CHECK(code_of([&] { bad.validate(); }) == Errc::InvalidParameter);
}

TEST_CASE("rendered phantom matches its spec", "[phantom]") {
    PhantomSpec s;
    s.noise_seed = 3;
    s.n_cycles = 2;
    const auto r = render_phantom(s);
    CHECK(r.clip.num_frames == 40);
    CHECK(r.masks.size() == 40);
    CHECK(r.clip.rows == s.canvas_rows());
    CHECK(r.clip.pixel_spacing_mm == PixelSpacing{0.5, 0.5});
    CHECK(r.clip.declared_view_hint == "A4C");
    CHECK(r.clip.frame_interval_ms == 50.0);

    // Raster area within one boundary band of pi*a*b(t) in every frame.
    const auto areas = area_series(r.masks);
    for (std::uint32_t f = 0; f < r.clip.num_frames; ++f) {
        const double b = s.radial_semi_axis_at(f);
        const double h = std::pow(40.0 - b, 2) / std::pow(40.0 + b, 2);
        const double perimeter = pi * (40.0 + b) * (1 + 3 * h / (10 + std::sqrt(4 - 3 * h)));
        REQUIRE(std::abs(areas[f] - pi * 40.0 * b) <= perimeter * 0.5);
    }

    const auto truth = analytic_truth(s);
    CHECK(std::abs(disk_volume(r.masks[0]) - truth.edv_ml) / truth.edv_ml < 0.02);
    CHECK(std::abs(disk_volume(r.masks[10]) - truth.esv_ml) / truth.esv_ml < 0.02);
}

TEST_CASE("rendering is deterministic in the seed", "[phantom][determinism]") {
    PhantomSpec s;
    s.n_cycles = 1;
    s.noise_seed = 42;
    const auto a = render_phantom(s);
    const auto b = render_phantom(s);
    CHECK(a.clip == b.clip);
    CHECK(a.masks == b.masks);

    s.noise_seed = 43;
    const auto c = render_phantom(s);
    CHECK(c.clip.pixels != a.clip.pixels);
    CHECK(c.masks == a.masks);

    s.noise_amplitude = 0;
    const auto quiet = render_phantom(s);
    CHECK(std::all_of(quiet.clip.pixels.begin(), quiet.clip.pixels.end(),
                      [](std::uint8_t p) { return p == 40 || p == 200; }));
}

TEST_CASE("phantom TOML", "[phantom][toml]") {
    const auto specs = parse_phantom_specs(R"(
study_id = "sweep"
long_semi_axis_mm = 40.0
radial_semi_axis_ed_mm = 20.0
noise_seed = 7

[[clip]]
clip_id = "ef35"
target_lvef_pct = 35.0

[[clip]]
clip_id = "a2c"
view = "A2C"
radial_semi_axis_es_mm = 16.0
frames_per_cycle = 16
acquisition_index = 2
)");
    REQUIRE(specs.size() == 2);
    CHECK(specs[0].study_id == "sweep");
    CHECK(specs[0].noise_seed == 7);
    CHECK(analytic_truth(specs[0]).lvef_pct == Catch::Approx(35.0));
    CHECK(specs[1].view_hint == "A2C");
    CHECK(specs[1].radial_semi_axis_es_mm == 16.0);
    CHECK(specs[1].frame_interval_ms == Catch::Approx(1000.0 / 16));
    CHECK(specs[1].acquisition_index == 2);

    const auto single = parse_phantom_specs("clip_id = \"only\"\nradial_semi_axis_es_mm = 12.0\n");
    REQUIRE(single.size() == 1);
    CHECK(single[0].clip_id == "only");

    CHECK(code_of([] { (void)parse_phantom_specs("colour = 3\n"); }) == Errc::InvalidConfig);
    CHECK(code_of([] { (void)parse_phantom_specs("[[clip]]\nnoise = 3\n"); }) == Errc::InvalidConfig);
    CHECK_THROWS_AS(parse_phantom_specs("this is = = not toml"), Error);
}

TEST_CASE("writing phantom studies", "[phantom][io]") {
    et_test::TempDir tmp;
    PhantomSpec s;
    s.n_cycles = 1;
    s.clip_id = "c1";
    write_phantom_study({s}, tmp / "flat");
    CHECK(std::filesystem::exists(tmp / "flat" / "c1.dcm"));
    CHECK(std::filesystem::exists(tmp / "flat" / "c1.LV.masks.rle"));
    const auto truth = et_test::read_text(tmp / "flat" / "truth.csv");
    CHECK(truth.starts_with("clip_id,edv_ml,esv_ml,lvef_pct\nc1,"));

    const auto clip = parse_dicom(et_test::read_bytes(tmp / "flat" / "c1.dcm"));
    CHECK(clip == render_phantom(s).clip);
    const auto masks = decode_sidecar(et_test::read_text(tmp / "flat" / "c1.LV.masks.rle"));
    CHECK(masks.size() == clip.num_frames);

    auto other = s;
    other.study_id = "second";
    write_phantom_study({s, other}, tmp / "nested");
    CHECK(std::filesystem::exists(tmp / "nested" / "phantom" / "c1.dcm"));
    CHECK(std::filesystem::exists(tmp / "nested" / "second" / "c1.dcm"));
    CHECK(std::filesystem::exists(tmp / "nested" / "second" / "truth.csv"));
    const auto all = et_test::read_text(tmp / "nested" / "truth.csv");
    CHECK(std::count(all.begin(), all.end(), '\n') == 3);
}
