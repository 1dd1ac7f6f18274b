#include "echotriage/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <omp.h>

#include <json.hpp>
#include <toml.hpp>

#include "echotriage/error.hpp"
#include "echotriage/store.hpp"

namespace echotriage {

using ojson = nlohmann::ordered_json;

namespace {

constexpr std::string_view kReportSchema = "echotriage.report/1";

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    const auto text = read_text(path);
    return {text.begin(), text.end()};
}

std::optional<std::uint8_t> threshold_level(std::string_view spec) {
    if (spec == "threshold") return 128;
    if (!spec.starts_with("threshold:")) return std::nullopt;
    spec.remove_prefix(10);
    unsigned v = 0;
    const auto [ptr, ec] = std::from_chars(spec.data(), spec.data() + spec.size(), v);
    if (spec.empty() || ec != std::errc() || ptr != spec.data() + spec.size() || v > 255) return std::nullopt;
    return static_cast<std::uint8_t>(v);
}

// Geometry/segmentation failures surface as report flags.
std::string flag_for(Errc code) {
    switch (code) {
        case Errc::BackendFailure: return "segmentation-failed";
        case Errc::UncalibratedClip: return "uncalibrated";
        case Errc::NoCycleFound: return "no-cycle-found";
        case Errc::DegenerateMask: return "degenerate-mask";
        case Errc::NoCycles: return "no-cycle-found";
        case Errc::InvalidParameter: return "invalid-volumes";
        default: return "pipeline-error";
    }
}

struct MaskPayload {
    std::string clip_id;
    Chamber chamber = Chamber::LV;
    std::string sidecar;
};

struct ViewAnalysis {
    const EchoClip* clip = nullptr;
    std::vector<ChamberMask> lv;
    std::vector<CycleFrames> cycles;
};

class StudyRunner {
public:
    StudyRunner(const std::filesystem::path& dir, const PipelineConfig& cfg, const ClassifierBackend& classifier,
                std::mutex* guard)
        : dir_(dir), cfg_(cfg), classifier_(classifier), guard_(guard) {}

    StudyReport run(std::vector<MaskPayload>* masks_out) {
        masks_out_ = masks_out;
        report_.config_fingerprint = config_fingerprint(cfg_);
        report_.triage.thresholds = cfg_.thresholds;
        try {
            ingest();
            measure();
        } catch (const Error& e) {
            fail(std::string(errc_name(e.code())), e.what());
        } catch (const std::exception& e) {
            fail("Internal", e.what());
        }
        std::sort(flags_.begin(), flags_.end());
        flags_.erase(std::unique(flags_.begin(), flags_.end()), flags_.end());
        report_.quality_flags = flags_;
        return std::move(report_);
    }

private:
    void fail(std::string code, std::string message) {
        report_.error = ReportError{std::move(code), std::move(message)};
        report_.lvef.reset();
        report_.triage.category = Category::UNDETERMINED;
        report_.triage.lvef = 0.0;
    }

    void ingest() {
        std::vector<std::filesystem::path> files;
        if (std::filesystem::is_directory(dir_)) {
            for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
                if (entry.is_regular_file() && entry.path().extension() == ".dcm") files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        report_.study_id = dir_.filename().string();

        std::set<std::string> study_ids;
        for (const auto& path : files) {
            const auto name = path.filename().string();
            try {
                clips_.push_back(parse_dicom(read_bytes(path)));
                files_.push_back(name);
                study_ids.insert(clips_.back().study_id);
            } catch (const Error& e) {
                report_.parse_failures.push_back({name, std::string(errc_name(e.code())), e.what()});
            }
        }
        if (!report_.parse_failures.empty()) flags_.emplace_back("parse-failed");
        if (clips_.empty()) {
            throw Error(Errc::NoUsableClips, "no parsable DICOM clip in " + dir_.filename().string());
        }
        if (!clips_.front().study_id.empty()) report_.study_id = clips_.front().study_id;
        if (study_ids.size() > 1) flags_.emplace_back("mixed-study-ids");

        for (std::size_t i = 0; i < clips_.size(); ++i) {
            const auto& clip = clips_[i];
            auto classified = classify_view(clip, classifier_, guard_);
            ClipRecord rec;
            rec.file = files_[i];
            rec.clip_id = clip.clip_id;
            rec.num_frames = clip.num_frames;
            rec.acquisition_index = clip.acquisition_index;
            rec.calibrated = clip.pixel_spacing_mm.has_value();
            rec.label = classified.label;
            rec.backend = classified.backend;
            rec.flags = std::move(classified.flags);
            if (!rec.calibrated) rec.flags.emplace_back("uncalibrated");
            for (const auto& f : rec.flags) {
                if (f == "classifier-failed") flags_.push_back(f);
            }
            labeled_.push_back({&clip, classified.label});
            report_.clips.push_back(std::move(rec));
        }
    }

    std::optional<ViewAnalysis> analyze(View view, const SegmentationBackend& seg) {
        const auto chosen = select_clip(labeled_, view);
        if (!chosen) return std::nullopt;
        const auto& clip = *chosen->clip;
        (view == View::A4C ? report_.selected_a4c : report_.selected_a2c) = clip.clip_id;

        ViewAnalysis va;
        va.clip = &clip;
        try {
            va.lv = segment_clip(clip, view, Chamber::LV, seg);
            if (masks_out_) masks_out_->push_back({clip.clip_id, Chamber::LV, encode_sidecar(va.lv)});
            segment_la(clip, view, seg);
            score_against_truth(clip, view, va.lv);
            va.cycles = detect_cycles(area_series(va.lv), cfg_.smoothing_window);
            if (va.cycles.size() > kBeatsPerStudy) va.cycles.resize(kBeatsPerStudy);
        } catch (const Error& e) {
            flags_.push_back(flag_for(e.code()));
            view_errors_.push_back(e);
            return std::nullopt;
        }
        return va;
    }

    // LA is produced and persisted for review but never feeds the decision.
    void segment_la(const EchoClip& clip, View view, const SegmentationBackend& seg) {
        if (!seg.supports(Chamber::LA)) return;
        if (const auto* sidecar = dynamic_cast<const SidecarSegmenter*>(&seg)) {
            if (!std::filesystem::exists(sidecar->path_for(clip, Chamber::LA))) return;
        }
        try {
            const auto la = segment_clip(clip, view, Chamber::LA, seg);
            if (masks_out_) masks_out_->push_back({clip.clip_id, Chamber::LA, encode_sidecar(la)});
        } catch (const Error&) {
            flags_.emplace_back("la-segmentation-failed");
        }
    }

    // Sidecar masks next to a clip act as ground truth for other backends.
    void score_against_truth(const EchoClip& clip, View view, const std::vector<ChamberMask>& lv) {
        if (cfg_.segmenter == "sidecar") return;
        const SidecarSegmenter truth(dir_);
        if (!std::filesystem::exists(truth.path_for(clip, Chamber::LV))) return;
        try {
            const auto ref = segment_clip(clip, view, Chamber::LV, truth);
            double sum = 0.0;
            for (std::size_t f = 0; f < lv.size(); ++f) sum += dice(lv[f], ref[f]);
            report_.dice[std::string(to_string(view)) + "/LV"] = sum / static_cast<double>(lv.size());
        } catch (const Error&) {
            flags_.emplace_back("sidecar-truth-unreadable");
        }
    }

    void measure() {
        const auto seg = make_segmenter(cfg_.segmenter, dir_);
        auto a4c = analyze(View::A4C, *seg);
        auto a2c = analyze(View::A2C, *seg);
        if (!report_.selected_a4c && !report_.selected_a2c) {
            flags_.emplace_back("no-apical-view");
            throw Error(Errc::NoCycles, "no A4C or A2C clip in study");
        }

        std::vector<CardiacCycle> cycles;
        VolumeMethod method = VolumeMethod::single_plane_a4c;
        if (a4c && a2c) {
            method = VolumeMethod::biplane;
            const std::size_t n = std::min(a4c->cycles.size(), a2c->cycles.size());
            bool mismatch = false;
            for (std::size_t k = 0; k < n; ++k) {
                const auto& c4 = a4c->cycles[k];
                const auto& c2 = a2c->cycles[k];
                const auto ed = biplane_volume(a4c->lv[c4.ed_frame], a2c->lv[c2.ed_frame], cfg_.n_disks);
                const auto es = biplane_volume(a4c->lv[c4.es_frame], a2c->lv[c2.es_frame], cfg_.n_disks);
                mismatch = mismatch || ed.axis_length_mismatch || es.axis_length_mismatch;
                cycles.push_back({c4.ed_frame, c4.es_frame, ed.ml, es.ml});
                report_.cycles.push_back({c4.ed_frame, c4.es_frame, c2.ed_frame, c2.es_frame, ed.ml, es.ml});
            }
            if (mismatch) flags_.emplace_back("axis-length-mismatch");
        } else {
            const auto& va = a4c ? a4c : a2c;
            if (!va) throw view_errors_.front();
            if (report_.selected_a4c && report_.selected_a2c) flags_.emplace_back("biplane-fallback");
            method = a4c ? VolumeMethod::single_plane_a4c : VolumeMethod::single_plane_a2c;
            for (const auto& c : va->cycles) {
                const double edv = disk_volume(va->lv[c.ed_frame], cfg_.n_disks);
                const double esv = disk_volume(va->lv[c.es_frame], cfg_.n_disks);
                cycles.push_back({c.ed_frame, c.es_frame, edv, esv});
                report_.cycles.push_back({c.ed_frame, c.es_frame, std::nullopt, std::nullopt, edv, esv});
            }
        }

        auto lvef = compute_lvef(cycles, method);
        for (const auto& f : lvef.quality_flags) flags_.push_back(f);
        report_.triage = triage(lvef.mean_lvef, cfg_.thresholds);
        report_.triage.flags = lvef.quality_flags;
        report_.lvef = std::move(lvef);
    }

    const std::filesystem::path& dir_;
    const PipelineConfig& cfg_;
    const ClassifierBackend& classifier_;
    std::mutex* guard_;
    std::vector<MaskPayload>* masks_out_ = nullptr;

    std::vector<EchoClip> clips_;
    std::vector<std::string> files_;
    std::vector<LabeledClip> labeled_;
    std::vector<Error> view_errors_;
    std::vector<std::string> flags_;
    StudyReport report_;
};

// ---- JSON ----

ojson optional_number(const std::optional<std::size_t>& v) {
    return v ? ojson(*v) : ojson(nullptr);
}

ojson thresholds_json(const ThresholdConfig& t) {
    ojson j;
    j["abnormal_below"] = t.abnormal_below;
    j["normal_above"] = t.normal_above;
    return j;
}

ThresholdConfig thresholds_from(const ojson& j) {
    ThresholdConfig t;
    t.abnormal_below = j.at("abnormal_below").get<double>();
    t.normal_above = j.at("normal_above").get<double>();
    return t;
}

template <typename T>
std::optional<T> opt(const ojson& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<T>();
}

Category category_or_throw(const std::string& s) {
    const auto c = category_from_string(s);
    if (!c) throw Error(Errc::StoreCorrupt, "unknown category '" + s + "'");
    return *c;
}

ojson report_json(const StudyReport& r) {
    ojson j;
    j["schema"] = kReportSchema;
    j["study_id"] = r.study_id;
    j["config_fingerprint"] = r.config_fingerprint;

    ojson clips = ojson::array();
    for (const auto& c : r.clips) {
        ojson cj;
        cj["file"] = c.file;
        cj["clip_id"] = c.clip_id;
        cj["num_frames"] = c.num_frames;
        cj["acquisition_index"] = c.acquisition_index;
        cj["calibrated"] = c.calibrated;
        cj["view"] = to_string(c.label.view);
        cj["confidence"] = c.label.confidence;
        cj["backend"] = c.backend;
        cj["flags"] = c.flags;
        clips.push_back(std::move(cj));
    }
    j["clips"] = std::move(clips);

    ojson failures = ojson::array();
    for (const auto& f : r.parse_failures) {
        failures.push_back(ojson{{"file", f.file}, {"code", f.code}, {"message", f.message}});
    }
    j["parse_failures"] = std::move(failures);

    ojson selected;
    selected["A4C"] = r.selected_a4c ? ojson(*r.selected_a4c) : ojson(nullptr);
    selected["A2C"] = r.selected_a2c ? ojson(*r.selected_a2c) : ojson(nullptr);
    j["selected"] = std::move(selected);

    ojson cycles = ojson::array();
    for (const auto& c : r.cycles) {
        ojson cj;
        cj["ed_frame"] = c.ed_frame;
        cj["es_frame"] = c.es_frame;
        cj["a2c_ed_frame"] = optional_number(c.a2c_ed_frame);
        cj["a2c_es_frame"] = optional_number(c.a2c_es_frame);
        cj["edv_ml"] = c.edv_ml;
        cj["esv_ml"] = c.esv_ml;
        cycles.push_back(std::move(cj));
    }
    j["cycles"] = std::move(cycles);

    if (r.lvef) {
        ojson lj;
        lj["method"] = to_string(r.lvef->method);
        lj["per_cycle_lvef"] = r.lvef->per_cycle_lvef;
        lj["mean_lvef"] = r.lvef->mean_lvef;
        lj["cycles_used"] = r.lvef->cycles_used;
        lj["quality_flags"] = r.lvef->quality_flags;
        j["lvef"] = std::move(lj);
    } else {
        j["lvef"] = nullptr;
    }

    ojson tj;
    tj["category"] = to_string(r.triage.category);
    tj["lvef"] = r.triage.category == Category::UNDETERMINED ? ojson(nullptr) : ojson(r.triage.lvef);
    tj["thresholds"] = thresholds_json(r.triage.thresholds);
    tj["flags"] = r.triage.flags;
    j["triage"] = std::move(tj);

    ojson dj = ojson::object();
    for (const auto& [k, v] : r.dice) dj[k] = v;
    j["dice"] = std::move(dj);

    j["quality_flags"] = r.quality_flags;
    if (r.error) {
        j["error"] = ojson{{"code", r.error->code}, {"message", r.error->message}};
    } else {
        j["error"] = nullptr;
    }
    if (r.reviewer_override) {
        ojson oj;
        oj["category"] = to_string(r.reviewer_override->category);
        oj["reviewer_id"] = r.reviewer_override->reviewer_id;
        oj["timestamp"] = r.reviewer_override->timestamp;
        j["reviewer_override"] = std::move(oj);
    } else {
        j["reviewer_override"] = nullptr;
    }
    return j;
}

VolumeMethod method_from(const std::string& s) {
    for (const auto m : {VolumeMethod::single_plane_a4c, VolumeMethod::single_plane_a2c, VolumeMethod::biplane}) {
        if (s == to_string(m)) return m;
    }
    throw Error(Errc::StoreCorrupt, "unknown volume method '" + s + "'");
}

StudyReport report_from(const ojson& j) {
    if (j.at("schema").get<std::string>() != kReportSchema) throw Error(Errc::StoreCorrupt, "unknown report schema");
    StudyReport r;
    r.study_id = j.at("study_id").get<std::string>();
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    for (const auto& cj : j.at("clips")) {
        ClipRecord c;
        c.file = cj.at("file").get<std::string>();
        c.clip_id = cj.at("clip_id").get<std::string>();
        c.num_frames = cj.at("num_frames").get<std::uint32_t>();
        c.acquisition_index = cj.at("acquisition_index").get<std::int32_t>();
        c.calibrated = cj.at("calibrated").get<bool>();
        const auto view = view_from_string(cj.at("view").get<std::string>());
        if (!view) throw Error(Errc::StoreCorrupt, "unknown view");
        c.label = {*view, cj.at("confidence").get<double>()};
        c.backend = cj.at("backend").get<std::string>();
        c.flags = cj.at("flags").get<std::vector<std::string>>();
        r.clips.push_back(std::move(c));
    }
    for (const auto& fj : j.at("parse_failures")) {
        r.parse_failures.push_back(
            {fj.at("file").get<std::string>(), fj.at("code").get<std::string>(), fj.at("message").get<std::string>()});
    }
    r.selected_a4c = opt<std::string>(j.at("selected"), "A4C");
    r.selected_a2c = opt<std::string>(j.at("selected"), "A2C");
    for (const auto& cj : j.at("cycles")) {
        CycleRecord c;
        c.ed_frame = cj.at("ed_frame").get<std::size_t>();
        c.es_frame = cj.at("es_frame").get<std::size_t>();
        c.a2c_ed_frame = opt<std::size_t>(cj, "a2c_ed_frame");
        c.a2c_es_frame = opt<std::size_t>(cj, "a2c_es_frame");
        c.edv_ml = cj.at("edv_ml").get<double>();
        c.esv_ml = cj.at("esv_ml").get<double>();
        r.cycles.push_back(c);
    }
    if (const auto& lj = j.at("lvef"); !lj.is_null()) {
        LvefResult l;
        l.method = method_from(lj.at("method").get<std::string>());
        l.per_cycle_lvef = lj.at("per_cycle_lvef").get<std::vector<double>>();
        l.mean_lvef = lj.at("mean_lvef").get<double>();
        l.cycles_used = lj.at("cycles_used").get<std::size_t>();
        l.quality_flags = lj.at("quality_flags").get<std::vector<std::string>>();
        r.lvef = std::move(l);
    }
    const auto& tj = j.at("triage");
    r.triage.category = category_or_throw(tj.at("category").get<std::string>());
    r.triage.lvef = opt<double>(tj, "lvef").value_or(0.0);
    r.triage.thresholds = thresholds_from(tj.at("thresholds"));
    r.triage.flags = tj.at("flags").get<std::vector<std::string>>();
    for (const auto& [k, v] : j.at("dice").items()) r.dice[k] = v.get<double>();
    r.quality_flags = j.at("quality_flags").get<std::vector<std::string>>();
    if (const auto& ej = j.at("error"); !ej.is_null()) {
        r.error = ReportError{ej.at("code").get<std::string>(), ej.at("message").get<std::string>()};
    }
    if (const auto& oj = j.at("reviewer_override"); !oj.is_null()) {
        r.reviewer_override = ReviewerOverride{category_or_throw(oj.at("category").get<std::string>()),
                                               oj.at("reviewer_id").get<std::string>(),
                                               oj.at("timestamp").get<std::string>()};
    }
    return r;
}

StudyReport run_one(const std::filesystem::path& dir, const PipelineConfig& cfg, const ClassifierBackend& classifier,
                    std::mutex* guard, std::vector<MaskPayload>* masks) {
    return StudyRunner(dir, cfg, classifier, guard).run(masks);
}

}  // namespace

void PipelineConfig::validate() const {
    thresholds.validate();
    if (n_disks < 1 || n_disks > 1000) throw Error(Errc::InvalidConfig, "n_disks must be in [1, 1000]");
    if (smoothing_window < 1 || smoothing_window % 2 == 0 || smoothing_window > 99) {
        throw Error(Errc::InvalidConfig, "smoothing_window must be odd and in [1, 99]");
    }
    if (!(precision_floor >= 0.0 && precision_floor <= 1.0)) {
        throw Error(Errc::InvalidConfig, "precision_floor must be in [0, 1]");
    }
    if (workers < 0) throw Error(Errc::InvalidConfig, "workers must be >= 0");
    if (segmenter != "sidecar" && !threshold_level(segmenter)) {
        throw Error(Errc::InvalidConfig, "unknown segmenter '" + segmenter + "'");
    }
    try {
        (void)make_classifier(classifier);
    } catch (const Error& e) {
        throw Error(Errc::InvalidConfig, e.what());
    }
}

PipelineConfig parse_config(const std::string& toml_text, const std::filesystem::path& base_dir) {
    toml::table root;
    try {
        root = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        throw Error(Errc::InvalidConfig, std::string(e.description()));
    }
    static const std::map<std::string, std::set<std::string>> known = {
        {"backends", {"classifier", "segmenter"}},
        {"geometry", {"n_disks", "smoothing_window"}},
        {"thresholds", {"abnormal_below", "normal_above"}},
        {"calibration", {"precision_floor"}},
        {"store", {"path"}},
        {"run", {"workers"}},
    };
    for (const auto& [section, node] : root) {
        const std::string name(section.str());
        const auto it = known.find(name);
        const auto* table = node.as_table();
        if (it == known.end() || !table) throw Error(Errc::InvalidConfig, "unknown config section '" + name + "'");
        for (const auto& [key, _] : *table) {
            if (!it->second.contains(std::string(key.str()))) {
                throw Error(Errc::InvalidConfig, "unknown key '" + name + "." + std::string(key.str()) + "'");
            }
        }
    }

    auto need = [](const auto& v, const char* key) {
        if (!v) throw Error(Errc::InvalidConfig, std::string("wrong type for ") + key);
        return *v;
    };
    PipelineConfig cfg;
    if (const auto n = root["backends"]["classifier"]) cfg.classifier = need(n.value<std::string>(), "backends.classifier");
    if (const auto n = root["backends"]["segmenter"]) cfg.segmenter = need(n.value<std::string>(), "backends.segmenter");
    if (const auto n = root["geometry"]["n_disks"]) {
        cfg.n_disks = static_cast<int>(need(n.value<std::int64_t>(), "geometry.n_disks"));
    }
    if (const auto n = root["geometry"]["smoothing_window"]) {
        cfg.smoothing_window = static_cast<int>(need(n.value<std::int64_t>(), "geometry.smoothing_window"));
    }
    if (const auto n = root["thresholds"]["abnormal_below"]) {
        cfg.thresholds.abnormal_below = need(n.value<double>(), "thresholds.abnormal_below");
    }
    if (const auto n = root["thresholds"]["normal_above"]) {
        cfg.thresholds.normal_above = need(n.value<double>(), "thresholds.normal_above");
    }
    if (const auto n = root["calibration"]["precision_floor"]) {
        cfg.precision_floor = need(n.value<double>(), "calibration.precision_floor");
    }
    if (const auto n = root["store"]["path"]) {
        std::filesystem::path p = need(n.value<std::string>(), "store.path");
        cfg.store_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    if (const auto n = root["run"]["workers"]) cfg.workers = static_cast<int>(need(n.value<std::int64_t>(), "run.workers"));
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_text(path), path.parent_path());
}

std::string config_canonical_json(const PipelineConfig& cfg) {
    ojson j;
    j["classifier"] = cfg.classifier;
    j["segmenter"] = cfg.segmenter;
    j["n_disks"] = cfg.n_disks;
    j["smoothing_window"] = cfg.smoothing_window;
    j["thresholds"] = thresholds_json(cfg.thresholds);
    j["precision_floor"] = cfg.precision_floor;
    return j.dump();
}

std::string config_fingerprint(const PipelineConfig& cfg) {
    return sha256_hex(config_canonical_json(cfg));
}

std::unique_ptr<SegmentationBackend> make_segmenter(std::string_view spec, const std::filesystem::path& study_dir) {
    if (spec == "sidecar") return std::make_unique<SidecarSegmenter>(study_dir);
    if (const auto level = threshold_level(spec)) return std::make_unique<ThresholdSegmenter>(*level);
    throw Error(Errc::InvalidConfig, "unknown segmenter '" + std::string(spec) + "'");
}

std::string to_json(const StudyReport& r) {
    return report_json(r).dump();
}

StudyReport report_from_json(std::string_view text) {
    try {
        return report_from(ojson::parse(text));
    } catch (const ojson::exception& e) {
        throw Error(Errc::StoreCorrupt, std::string("report JSON: ") + e.what());
    }
}

StudyReport run_study(const std::filesystem::path& study_dir, const PipelineConfig& cfg, std::mutex* serial_guard) {
    const auto classifier = make_classifier(cfg.classifier);
    return run_one(study_dir, cfg, *classifier, serial_guard, nullptr);
}

std::vector<std::filesystem::path> study_dirs(const std::filesystem::path& root) {
    std::vector<std::filesystem::path> dirs;
    if (!std::filesystem::is_directory(root)) throw Error(Errc::Io, "not a directory: " + root.string());
    bool has_clips = false;
    for (const auto& entry : std::filesystem::directory_iterator(root)) {
        if (entry.is_directory()) dirs.push_back(entry.path());
        if (entry.is_regular_file() && entry.path().extension() == ".dcm") has_clips = true;
    }
    if (has_clips || dirs.empty()) return {root};
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

std::vector<StudyReport> run_batch(const std::filesystem::path& root, const PipelineConfig& cfg, ReportStore* store) {
    cfg.validate();
    const auto dirs = study_dirs(root);
    const auto classifier = make_classifier(cfg.classifier);
    std::mutex guard;
    std::vector<StudyReport> reports(dirs.size());
    const int workers = cfg.workers > 0 ? cfg.workers : omp_get_max_threads();

    // run_one never throws; store failures are collected and rethrown after the loop.
    std::vector<std::string> store_errors(dirs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(dirs.size()); ++i) {
        const auto k = static_cast<std::size_t>(i);
        std::vector<MaskPayload> masks;
        reports[k] = run_one(dirs[k], cfg, *classifier, &guard, store ? &masks : nullptr);
        if (!store) continue;
        try {
            for (const auto& m : masks) {
                store->put_masks(reports[k].study_id, reports[k].config_fingerprint, m.clip_id, m.chamber, m.sidecar);
            }
            store->put_report(reports[k]);
        } catch (const std::exception& e) {
            store_errors[k] = e.what();
        }
    }
    for (const auto& e : store_errors) {
        if (!e.empty()) throw Error(Errc::Io, "storing report: " + e);
    }
    return reports;
}

PipelineConfig effective_config(PipelineConfig cfg, const ReportStore& store) {
    if (const auto t = store.thresholds()) cfg.thresholds = *t;
    return cfg;
}

}  // namespace echotriage
