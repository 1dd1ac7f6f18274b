// echotriage command-line front end.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "echotriage/dicom.hpp"
#include "echotriage/error.hpp"
#include "echotriage/phantom.hpp"
#include "echotriage/pipeline.hpp"
#include "echotriage/server.hpp"
#include "echotriage/store.hpp"
#include "echotriage/triage.hpp"
#include "echotriage/view.hpp"

namespace fs = std::filesystem;
using namespace echotriage;

namespace {

std::vector<std::uint8_t> slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spill(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::Io, "cannot write " + path.string());
}

std::vector<fs::path> dcm_files(const fs::path& p) {
    if (fs::is_regular_file(p)) return {p};
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".dcm") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Study IDs become directory names.
std::string safe_name(const std::string& s) {
    std::string out;
    for (const char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ? c : '_';
    if (out.empty() || out == "." || out == "..") out = "unknown";
    return out;
}

int ingest(const fs::path& dir, const fs::path& store, bool anon) {
    int failures = 0;
    for (const auto& path : dcm_files(dir)) {
        try {
            const auto bytes = slurp(path);
            const auto decoded = read_dicom(bytes);
            const auto dest = store / "studies" / safe_name(decoded.clip.study_id);
            fs::create_directories(dest);
            if (anon) {
                spill(dest / path.filename(), write_dicom(decoded.clip, anonymize(decoded.dataset)));
            } else {
                spill(dest / path.filename(), bytes);
            }
            for (const auto chamber : {Chamber::LV, Chamber::LA}) {
                const auto sidecar = path.parent_path() / sidecar_filename(decoded.clip.clip_id, chamber);
                if (fs::exists(sidecar)) fs::copy_file(sidecar, dest / sidecar.filename(), fs::copy_options::overwrite_existing);
            }
            std::printf("ok\t%s\tstudy=%s\tclip=%s\tframes=%u%s\n", path.filename().c_str(),
                        decoded.clip.study_id.c_str(), decoded.clip.clip_id.c_str(), decoded.clip.num_frames,
                        decoded.clip.pixel_spacing_mm ? "" : "\tuncalibrated");
        } catch (const Error& e) {
            ++failures;
            std::printf("error\t%s\t%s\n", path.filename().c_str(), e.what());
        }
    }
    return failures == 0 ? 0 : 3;
}

int classify(const fs::path& target, const std::string& backend_spec) {
    const auto backend = make_classifier(backend_spec);
    for (const auto& path : dcm_files(target)) {
        try {
            const auto clip = parse_dicom(slurp(path));
            const auto c = classify_view(clip, *backend);
            std::printf("%s\t%s\t%.3f%s\n", path.filename().c_str(), std::string(to_string(c.label.view)).c_str(),
                        c.label.confidence, c.flags.empty() ? "" : "\tclassifier-failed");
        } catch (const Error& e) {
            std::printf("%s\terror\t%s\n", path.filename().c_str(), e.what());
        }
    }
    return 0;
}

int calibrate(const fs::path& cohort_path, double floor) {
    const auto cohort = read_cohort_csv(cohort_path);
    const auto r = calibrate_cutoff(cohort, floor);
    nlohmann::ordered_json j;
    j["chosen_cutoff"] = r.chosen_cutoff;
    j["feasible"] = r.feasible;
    j["achieved_precision"] = r.achieved_precision ? nlohmann::ordered_json(*r.achieved_precision) : nullptr;
    j["achieved_sensitivity"] = r.achieved_sensitivity;
    j["counts"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}};
    std::cout << j.dump(2) << '\n';
    return r.feasible ? 0 : 4;
}

int run(const fs::path& dir, const fs::path& config_path, const std::string& store_override, const fs::path& report_dir) {
    auto cfg = load_config(config_path);
    if (!store_override.empty()) cfg.store_path = store_override;
    std::unique_ptr<ReportStore> store;
    if (!cfg.store_path.empty()) {
        store = std::make_unique<ReportStore>(cfg.store_path);
        cfg = effective_config(cfg, *store);
    }
    const auto reports = run_batch(dir, cfg, store.get());
    if (!report_dir.empty()) fs::create_directories(report_dir);
    for (const auto& r : reports) {
        if (!report_dir.empty()) {
            const auto json = to_json(r);
            spill(report_dir / (safe_name(r.study_id) + ".json"),
                  {reinterpret_cast<const std::uint8_t*>(json.data()), json.size()});
        }
        std::string lvef = "-";
        if (r.lvef) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f", r.lvef->mean_lvef);
            lvef = buf;
        }
        std::string flags;
        for (const auto& f : r.quality_flags) flags += (flags.empty() ? "" : ",") + f;
        std::printf("%s\t%s\t%s\t%s\n", r.study_id.c_str(), std::string(to_string(r.triage.category)).c_str(),
                    lvef.c_str(), flags.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Echocardiogram LVEF triage pipeline"};
    app.require_subcommand(1);

    fs::path in_dir, out_dir, store_path, cohort, spec, config, report_dir;
    std::string backend = "hint", store_override, host = "127.0.0.1";
    bool anon = false;
    double floor = 0.8;
    int port = 8080;
    WorkloadParams wl;

    auto* ingest_cmd = app.add_subcommand("ingest", "Parse a directory of DICOM clips into a store");
    ingest_cmd->add_option("dir", in_dir, "Directory of .dcm files")->required()->check(CLI::ExistingDirectory);
    ingest_cmd->add_option("--out", out_dir, "Store directory")->required();
    ingest_cmd->add_flag("--anonymize", anon, "Replace PHI tags with ANON");

    auto* classify_cmd = app.add_subcommand("classify", "Label the view of each clip");
    classify_cmd->add_option("path", in_dir, "A .dcm file or a directory")->required()->check(CLI::ExistingPath);
    classify_cmd->add_option("--backend", backend, "hint | constant[:VIEW] | external:<path>");

    auto* calibrate_cmd = app.add_subcommand("calibrate", "Choose the NORMAL cutoff under a precision floor");
    calibrate_cmd->add_option("--cohort", cohort, "CSV: study_id,estimated_lvef,truly_normal")
        ->required()
        ->check(CLI::ExistingFile);
    calibrate_cmd->add_option("--precision-floor", floor)->check(CLI::Range(0.0, 1.0));

    auto* workload_cmd = app.add_subcommand("workload", "Cardiologist hours saved per year");
    workload_cmd->add_option("--studies", wl.studies_per_year)->check(CLI::NonNegativeNumber);
    workload_cmd->add_option("--prevalence", wl.normal_prevalence)->check(CLI::Range(0.0, 1.0));
    workload_cmd->add_option("--sensitivity", wl.sensitivity)->check(CLI::Range(0.0, 1.0));
    workload_cmd->add_option("--minutes", wl.minutes_per_study)->check(CLI::NonNegativeNumber);

    auto* phantom_cmd = app.add_subcommand("phantom", "Render phantom studies with known LVEF");
    phantom_cmd->add_option("--spec", spec, "Phantom TOML")->required()->check(CLI::ExistingFile);
    phantom_cmd->add_option("--out", out_dir)->required();

    auto* run_cmd = app.add_subcommand("run", "Run the pipeline on a study or a directory of studies");
    run_cmd->add_option("dir", in_dir)->required()->check(CLI::ExistingDirectory);
    run_cmd->add_option("--config", config, "Pipeline TOML")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--store", store_override, "Overrides [store] path");
    run_cmd->add_option("--report-dir", report_dir, "Also write <study_id>.json here");

    auto* serve_cmd = app.add_subcommand("serve", "Serve stored reports over HTTP");
    serve_cmd->add_option("--store", store_path)->required()->check(CLI::ExistingDirectory);
    serve_cmd->add_option("--port", port)->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--host", host);
    serve_cmd->add_option("--config", config, "Default thresholds")->check(CLI::ExistingFile);

    auto* verify_cmd = app.add_subcommand("verify", "Re-check every record checksum in a store");
    verify_cmd->add_option("--store", store_path)->required()->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest_cmd) return ingest(in_dir, out_dir, anon);
        if (*classify_cmd) return classify(in_dir, backend);
        if (*calibrate_cmd) return calibrate(cohort, floor);
        if (*workload_cmd) {
            std::printf("%.2f hours/year\n", workload_savings(wl));
            return 0;
        }
        if (*phantom_cmd) {
            const auto specs = load_phantom_specs(spec);
            write_phantom_study(specs, out_dir);
            std::printf("wrote %zu clip(s) to %s\n", specs.size(), out_dir.c_str());
            return 0;
        }
        if (*run_cmd) return run(in_dir, config, store_override, report_dir);
        if (*serve_cmd) {
            ReportStore store(store_path);
            ThresholdConfig defaults;
            if (!config.empty()) defaults = load_config(config).thresholds;
            ReviewServer server(store, defaults);
            if (server.bind(host, port) < 0) {
                std::fprintf(stderr, "cannot bind %s:%d\n", host.c_str(), port);
                return 1;
            }
            std::printf("serving %s on http://%s:%d\n", store_path.c_str(), host.c_str(), server.port());
            std::fflush(stdout);
            return server.serve() ? 0 : 1;
        }
        if (*verify_cmd) {
            const auto v = ReportStore(store_path).verify();
            for (const auto& f : v.corrupt) std::printf("corrupt\t%s\n", f.c_str());
            std::printf("%zu record(s), %zu corrupt\n", v.records, v.corrupt.size());
            return v.corrupt.empty() ? 0 : 5;
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "echotriage: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "echotriage: %s\n", e.what());
        return 1;
    }
    return 0;
}
