#include "echotriage/view.hpp"

#include <dlfcn.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <tuple>

#include "echotriage/error.hpp"

namespace echotriage {

namespace {

std::string normalized(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (const char c : s) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            out.push_back(static_cast<char>(std::toupper(u)));
        } else if (!out.empty() && out.back() != ' ') {
            out.push_back(' ');
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

}  // namespace

std::string_view to_string(View v) noexcept {
    switch (v) {
        case View::PLAX: return "PLAX";
        case View::A2C: return "A2C";
        case View::A4C: return "A4C";
        case View::OTHER: return "OTHER";
    }
    return "OTHER";
}

std::optional<View> view_from_string(std::string_view s) noexcept {
    for (const View v : {View::PLAX, View::A2C, View::A4C, View::OTHER}) {
        if (s == to_string(v)) return v;
    }
    return std::nullopt;
}

ViewLabel HintClassifier::classify(const EchoClip& clip) const {
    if (!clip.declared_view_hint) return {View::OTHER, 0.0};
    const std::string hint = normalized(*clip.declared_view_hint);
    struct Keyword {
        std::string_view text;
        View view;
    };
    static constexpr std::array<Keyword, 12> kKeywords = {{
        {"A4C", View::A4C},
        {"A2C", View::A2C},
        {"PLAX", View::PLAX},
        {"AP4", View::A4C},
        {"AP2", View::A2C},
        {"4CH", View::A4C},
        {"2CH", View::A2C},
        {"APICAL 4", View::A4C},
        {"APICAL 2", View::A2C},
        {"APICAL FOUR", View::A4C},
        {"APICAL TWO", View::A2C},
        {"PARASTERNAL LONG", View::PLAX},
    }};
    // Whole-word match so "A4C" never fires inside e.g. "XA4CX".
    const std::string padded = " " + hint + " ";
    for (const auto& k : kKeywords) {
        if (padded.find(" " + std::string(k.text) + " ") != std::string::npos) return {k.view, 1.0};
    }
    return {View::OTHER, 0.0};
}

std::string ConstantClassifier::name() const {
    return "constant:" + std::string(to_string(label_.view));
}

ExternalClassifier::ExternalClassifier(const std::string& path) : path_(path) {
    handle_ = ::dlopen(path.c_str(), RTLD_NOW | RTLD_LOCAL);
    if (!handle_) {
        const char* msg = ::dlerror();
        throw Error(Errc::BackendFailure, "cannot load classifier plug-in " + path + ": " + (msg ? msg : "?"));
    }
    classify_ = reinterpret_cast<ClassifyFn>(::dlsym(handle_, "echotriage_classify_v1"));
    if (!classify_) {
        ::dlclose(handle_);
        handle_ = nullptr;
        throw Error(Errc::BackendFailure, path + " does not export echotriage_classify_v1");
    }
    using ThreadSafeFn = int (*)();
    if (auto fn = reinterpret_cast<ThreadSafeFn>(::dlsym(handle_, "echotriage_thread_safe_v1"))) {
        thread_safe_ = fn() != 0;
    }
}

ExternalClassifier::~ExternalClassifier() {
    if (handle_) ::dlclose(handle_);
}

ViewLabel ExternalClassifier::classify(const EchoClip& clip) const {
    double confidence = 0.0;
    const int code = classify_(clip.pixels.data(), clip.rows, clip.cols, clip.num_frames, &confidence);
    if (code < 0 || code > 3) {
        throw Error(Errc::BackendFailure, name() + " returned " + std::to_string(code));
    }
    const auto view = static_cast<View>(code);
    if (view == View::OTHER) return {View::OTHER, std::clamp(confidence, 0.0, 1.0)};
    if (!(confidence >= 0.0 && confidence <= 1.0)) {
        throw Error(Errc::BackendFailure, name() + " returned confidence outside [0,1]");
    }
    return {view, confidence};
}

std::unique_ptr<ClassifierBackend> make_classifier(std::string_view spec) {
    if (spec == "hint") return std::make_unique<HintClassifier>();
    if (spec == "constant") return std::make_unique<ConstantClassifier>(ViewLabel{View::A4C, 1.0});
    if (spec.starts_with("constant:")) {
        const auto v = view_from_string(spec.substr(9));
        if (!v) throw Error(Errc::InvalidConfig, "unknown view in classifier spec: " + std::string(spec));
        return std::make_unique<ConstantClassifier>(ViewLabel{*v, *v == View::OTHER ? 0.0 : 1.0});
    }
    if (spec.starts_with("external:")) {
        return std::make_unique<ExternalClassifier>(std::string(spec.substr(9)));
    }
    throw Error(Errc::InvalidConfig, "unknown classifier backend: " + std::string(spec));
}

ClassifiedClip classify_view(const EchoClip& clip, const ClassifierBackend& backend, std::mutex* serial_guard) {
    ClassifiedClip out;
    out.backend = backend.name();
    try {
        if (!backend.thread_safe() && serial_guard) {
            std::lock_guard lock(*serial_guard);
            out.label = backend.classify(clip);
        } else {
            out.label = backend.classify(clip);
        }
        if (!(out.label.confidence >= 0.0 && out.label.confidence <= 1.0)) {
            throw Error(Errc::BackendFailure, "confidence outside [0,1]");
        }
    } catch (const std::exception&) {
        out.label = {View::OTHER, 0.0};
        out.flags.emplace_back("classifier-failed");
    }
    return out;
}

std::optional<LabeledClip> select_clip(std::span<const LabeledClip> clips, View view) {
    std::optional<LabeledClip> best;
    auto key = [](const LabeledClip& c) {
        return std::tie(c.clip->num_frames, c.clip->acquisition_index, c.clip->clip_id);
    };
    for (const auto& c : clips) {
        if (c.label.view != view || c.clip == nullptr) continue;
        if (!best || key(*best) < key(c)) best = c;
    }
    return best;
}

double view_accuracy(std::span<const View> predicted, std::span<const View> truth) {
    if (predicted.empty() || predicted.size() != truth.size()) {
        throw Error(Errc::EmptyInput, "accuracy needs equal-length, nonempty label lists");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == truth[i];
    return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

}  // namespace echotriage
