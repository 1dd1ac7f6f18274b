#include "echotriage/phantom.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include <toml.hpp>

#include "echotriage/error.hpp"
#include "echotriage/kernels.hpp"

namespace echotriage {

namespace {

constexpr std::uint32_t kMarginPx = 4;

std::uint32_t fit(double semi_axis_mm, double spacing_mm) {
    return 2 * (static_cast<std::uint32_t>(std::ceil(semi_axis_mm / spacing_mm)) + kMarginPx) + 1;
}

std::string shortest(double v) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return {buf.data(), ptr};
}

void write_file(const std::filesystem::path& path, const void* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw Error(Errc::Io, "cannot write " + path.string());
}

struct PendingClip {
    PhantomSpec spec;
    bool interval_given = false;
    std::optional<double> target_lvef;
};

void apply(const toml::table& table, PendingClip& pending) {
    auto& s = pending.spec;
    for (const auto& [key, node] : table) {
        const std::string_view k = key.str();
        auto number = [&]() {
            const auto v = node.value<double>();
            if (!v) throw Error(Errc::InvalidConfig, "phantom key '" + std::string(k) + "' must be a number");
            return *v;
        };
        auto integer = [&]() {
            const auto v = node.value<std::int64_t>();
            if (!v || *v < 0) {
                throw Error(Errc::InvalidConfig, "phantom key '" + std::string(k) + "' must be a non-negative integer");
            }
            return *v;
        };
        auto text = [&]() {
            const auto v = node.value<std::string>();
            if (!v) throw Error(Errc::InvalidConfig, "phantom key '" + std::string(k) + "' must be a string");
            return *v;
        };
        if (k == "clip") continue;
        if (k == "study_id") s.study_id = text();
        else if (k == "clip_id") s.clip_id = text();
        else if (k == "view") s.view_hint = text();
        else if (k == "acquisition_index") s.acquisition_index = static_cast<std::int32_t>(integer());
        else if (k == "long_semi_axis_mm") s.long_semi_axis_mm = number();
        else if (k == "radial_semi_axis_ed_mm") s.radial_semi_axis_ed_mm = number();
        else if (k == "radial_semi_axis_es_mm") s.radial_semi_axis_es_mm = number();
        else if (k == "target_lvef_pct") pending.target_lvef = number();
        else if (k == "frames_per_cycle") s.frames_per_cycle = static_cast<std::uint32_t>(integer());
        else if (k == "n_cycles") s.n_cycles = static_cast<std::uint32_t>(integer());
        else if (k == "pixel_spacing_mm") s.pixel_spacing_mm = number();
        else if (k == "frame_interval_ms") {
            s.frame_interval_ms = number();
            pending.interval_given = true;
        } else if (k == "noise_seed") s.noise_seed = static_cast<std::uint64_t>(integer());
        else if (k == "noise_amplitude") s.noise_amplitude = static_cast<std::uint32_t>(integer());
        else if (k == "rows") s.rows = static_cast<std::uint32_t>(integer());
        else if (k == "cols") s.cols = static_cast<std::uint32_t>(integer());
        else throw Error(Errc::InvalidConfig, "unknown phantom key '" + std::string(k) + "'");
    }
}

PhantomSpec finish(PendingClip pending) {
    auto& s = pending.spec;
    if (!pending.interval_given && s.frames_per_cycle > 0) s.frame_interval_ms = 1000.0 / s.frames_per_cycle;
    if (pending.target_lvef) s.set_target_lvef(*pending.target_lvef);
    s.validate();
    return s;
}

}  // namespace

void PhantomSpec::validate() const {
    const bool ok = long_semi_axis_mm > 0.0 && radial_semi_axis_ed_mm > 0.0 && radial_semi_axis_es_mm > 0.0 &&
                    radial_semi_axis_es_mm <= radial_semi_axis_ed_mm && frames_per_cycle >= 8 && n_cycles >= 1 &&
                    pixel_spacing_mm > 0.0 && frame_interval_ms > 0.0 && std::isfinite(long_semi_axis_mm) &&
                    std::isfinite(radial_semi_axis_ed_mm) && std::isfinite(pixel_spacing_mm) &&
                    noise_amplitude <= 100 && !clip_id.empty();
    if (!ok) throw Error(Errc::InvalidParameter, "invalid phantom spec for clip '" + clip_id + "'");
    auto fits = [this](std::uint32_t px, double semi_axis) {
        return (static_cast<double>(px) - 1.0) * pixel_spacing_mm / 2.0 >= semi_axis + pixel_spacing_mm;
    };
    if (!fits(canvas_rows(), long_semi_axis_mm) || !fits(canvas_cols(), radial_semi_axis_ed_mm)) {
        throw Error(Errc::CanvasTooSmall, "canvas does not contain the ED ellipse of '" + clip_id + "'");
    }
    if (canvas_rows() > 0xFFFF || canvas_cols() > 0xFFFF) {
        throw Error(Errc::InvalidParameter, "canvas exceeds 65535 pixels per side");
    }
}

std::uint32_t PhantomSpec::canvas_rows() const {
    return rows != 0 ? rows : fit(long_semi_axis_mm, pixel_spacing_mm);
}

std::uint32_t PhantomSpec::canvas_cols() const {
    return cols != 0 ? cols : fit(radial_semi_axis_ed_mm, pixel_spacing_mm);
}

double PhantomSpec::radial_semi_axis_at(std::uint32_t frame) const {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(frame % frames_per_cycle) /
                         static_cast<double>(frames_per_cycle);
    return radial_semi_axis_ed_mm - (radial_semi_axis_ed_mm - radial_semi_axis_es_mm) * (1.0 - std::cos(phase)) / 2.0;
}

void PhantomSpec::set_target_lvef(double lvef_pct) {
    if (!(lvef_pct >= 0.0 && lvef_pct < 100.0)) throw Error(Errc::InvalidParameter, "target LVEF must be in [0,100)");
    radial_semi_axis_es_mm = radial_semi_axis_ed_mm * std::sqrt(1.0 - lvef_pct / 100.0);
}

PhantomTruth analytic_truth(const PhantomSpec& spec) {
    spec.validate();
    const double a = spec.long_semi_axis_mm;
    const double b_ed = spec.radial_semi_axis_ed_mm;
    const double b_es = spec.radial_semi_axis_es_mm;
    PhantomTruth t;
    t.edv_ml = 4.0 / 3.0 * std::numbers::pi * a * b_ed * b_ed / 1000.0;
    t.esv_ml = 4.0 / 3.0 * std::numbers::pi * a * b_es * b_es / 1000.0;
    const double ratio = b_es / b_ed;
    t.lvef_pct = 100.0 * (1.0 - ratio * ratio);
    return t;
}

RenderedPhantom render_phantom(const PhantomSpec& spec) {
    spec.validate();
    kernels::EllipseFrames frames;
    frames.rows = spec.canvas_rows();
    frames.cols = spec.canvas_cols();
    frames.row_mm = spec.pixel_spacing_mm;
    frames.col_mm = spec.pixel_spacing_mm;
    frames.long_semi_mm = spec.long_semi_axis_mm;
    frames.noise_amplitude = spec.noise_amplitude;
    frames.noise_seed = spec.noise_seed;
    const std::uint32_t n = spec.frames_per_cycle * spec.n_cycles;
    frames.radial_semi_mm.reserve(n);
    for (std::uint32_t f = 0; f < n; ++f) frames.radial_semi_mm.push_back(spec.radial_semi_axis_at(f));

    RenderedPhantom out;
    auto& clip = out.clip;
    clip.study_id = spec.study_id;
    clip.clip_id = spec.clip_id;
    clip.rows = frames.rows;
    clip.cols = frames.cols;
    clip.num_frames = n;
    clip.frame_interval_ms = spec.frame_interval_ms;
    clip.pixel_spacing_mm = PixelSpacing{spec.pixel_spacing_mm, spec.pixel_spacing_mm};
    clip.acquisition_index = spec.acquisition_index;
    clip.declared_view_hint = spec.view_hint;
    clip.pixels.resize(clip.frame_size() * n);

    std::vector<std::uint8_t> bits(clip.pixels.size());
    kernels::omp::render_ellipse_frames(frames, clip.pixels, bits);

    const std::size_t fs = clip.frame_size();
    out.masks.resize(n);
    for (std::uint32_t f = 0; f < n; ++f) {
        auto& m = out.masks[f];
        m.chamber = Chamber::LV;
        m.frame_index = f;
        m.rows = clip.rows;
        m.cols = clip.cols;
        m.bits.assign(bits.begin() + static_cast<std::ptrdiff_t>(f * fs),
                      bits.begin() + static_cast<std::ptrdiff_t>((f + 1) * fs));
        m.pixel_spacing_mm = clip.pixel_spacing_mm;
        m.degenerate = m.area_pixels() == 0;
    }
    return out;
}

std::vector<PhantomSpec> parse_phantom_specs(const std::string& toml_text) {
    toml::table root;
    try {
        root = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        throw Error(Errc::InvalidConfig, std::string("phantom spec: ") + std::string(e.description()));
    }
    PendingClip defaults;
    apply(root, defaults);

    std::vector<PhantomSpec> specs;
    const auto* clips = root["clip"].as_array();
    if (!clips) {
        specs.push_back(finish(defaults));
        return specs;
    }
    for (const auto& node : *clips) {
        const auto* table = node.as_table();
        if (!table) throw Error(Errc::InvalidConfig, "[[clip]] entries must be tables");
        PendingClip pending = defaults;
        apply(*table, pending);
        specs.push_back(finish(pending));
    }
    return specs;
}

std::vector<PhantomSpec> load_phantom_specs(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_phantom_specs(buf.str());
}

void write_phantom_study(const std::vector<PhantomSpec>& specs, const std::filesystem::path& out_dir) {
    std::map<std::string, std::vector<const PhantomSpec*>> studies;
    for (const auto& spec : specs) studies[spec.study_id].push_back(&spec);
    const bool nested = studies.size() > 1;

    std::filesystem::create_directories(out_dir);
    const std::string header = "clip_id,edv_ml,esv_ml,lvef_pct\n";
    std::string all = header;
    for (const auto& [study_id, members] : studies) {
        const auto dir = nested ? out_dir / study_id : out_dir;
        std::filesystem::create_directories(dir);
        std::string truth = header;
        for (const auto* spec : members) {
            const auto rendered = render_phantom(*spec);
            const auto bytes = write_dicom(rendered.clip);
            write_file(dir / (spec->clip_id + ".dcm"), bytes.data(), bytes.size());
            const auto rle = encode_sidecar(rendered.masks);
            write_file(dir / sidecar_filename(spec->clip_id, Chamber::LV), rle.data(), rle.size());
            const auto t = analytic_truth(*spec);
            const auto line =
                spec->clip_id + ',' + shortest(t.edv_ml) + ',' + shortest(t.esv_ml) + ',' + shortest(t.lvef_pct) + '\n';
            truth += line;
            all += line;
        }
        if (nested) write_file(dir / "truth.csv", truth.data(), truth.size());
    }
    write_file(out_dir / "truth.csv", all.data(), all.size());
}

}  // namespace echotriage
