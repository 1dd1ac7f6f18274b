#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "echotriage/dicom.hpp"
#include "echotriage/segmentation.hpp"

namespace echotriage {

/// A beating prolate spheroid seen in one apical plane. The long semi-axis
/// runs along image rows; the radial semi-axis follows a cosine from ED
/// (frame 0) to ES (frame T/2) and back.
struct PhantomSpec {
    std::string study_id = "phantom";
    std::string clip_id = "phantom-a4c";
    std::string view_hint = "A4C";
    std::int32_t acquisition_index = 1;

    double long_semi_axis_mm = 40.0;
    double radial_semi_axis_ed_mm = 20.0;
    double radial_semi_axis_es_mm = 15.0;
    std::uint32_t frames_per_cycle = 20;
    std::uint32_t n_cycles = 6;
    double pixel_spacing_mm = 0.5;
    double frame_interval_ms = 50.0;
    std::uint64_t noise_seed = 0;
    std::uint32_t noise_amplitude = 10;
    std::uint32_t rows = 0;  // 0 => sized to fit the ED ellipse
    std::uint32_t cols = 0;

    /// Throws InvalidParameter / CanvasTooSmall.
    void validate() const;
    [[nodiscard]] std::uint32_t canvas_rows() const;
    [[nodiscard]] std::uint32_t canvas_cols() const;
    [[nodiscard]] double radial_semi_axis_at(std::uint32_t frame) const;

    /// Sets radial_semi_axis_es_mm so that the analytic LVEF equals `lvef_pct`.
    void set_target_lvef(double lvef_pct);
};

struct PhantomTruth {
    double edv_ml = 0.0;
    double esv_ml = 0.0;
    double lvef_pct = 0.0;
};

[[nodiscard]] PhantomTruth analytic_truth(const PhantomSpec& spec);

struct RenderedPhantom {
    EchoClip clip;
    std::vector<ChamberMask> masks;  // ground-truth LV rasters, one per frame
};

[[nodiscard]] RenderedPhantom render_phantom(const PhantomSpec& spec);

/// Parses a phantom TOML file: top-level keys are defaults, each [[clip]]
/// table is one clip. A file without [[clip]] describes a single clip.
[[nodiscard]] std::vector<PhantomSpec> parse_phantom_specs(const std::string& toml_text);
[[nodiscard]] std::vector<PhantomSpec> load_phantom_specs(const std::filesystem::path& path);

/// Writes `<clip_id>.dcm`, `<clip_id>.LV.masks.rle` and `truth.csv` into
/// `out_dir`. Specs spanning several study_ids get one subdirectory per
/// study (each with its own truth.csv) and a combined truth.csv on top.
void write_phantom_study(const std::vector<PhantomSpec>& specs, const std::filesystem::path& out_dir);

}  // namespace echotriage
