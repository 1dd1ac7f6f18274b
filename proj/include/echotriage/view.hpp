#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "echotriage/dicom.hpp"

namespace echotriage {

enum class View { PLAX, A2C, A4C, OTHER };

std::string_view to_string(View v) noexcept;
std::optional<View> view_from_string(std::string_view s) noexcept;

struct ViewLabel {
    View view = View::OTHER;
    double confidence = 0.0;  // [0, 1]

    bool operator==(const ViewLabel&) const = default;
};

/// Contract for view classifiers. Implementations must be deterministic and
/// total; returning OTHER is the way to decline a clip.
class ClassifierBackend {
public:
    virtual ~ClassifierBackend() = default;

    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual ViewLabel classify(const EchoClip& clip) const = 0;
    /// False means the orchestrator must serialize calls.
    [[nodiscard]] virtual bool thread_safe() const { return true; }
};

/// Reads declared_view_hint (SeriesDescription) through a keyword map.
class HintClassifier final : public ClassifierBackend {
public:
    [[nodiscard]] std::string name() const override { return "hint"; }
    [[nodiscard]] ViewLabel classify(const EchoClip& clip) const override;
};

class ConstantClassifier final : public ClassifierBackend {
public:
    explicit ConstantClassifier(ViewLabel label) : label_(label) {}

    [[nodiscard]] std::string name() const override;
    [[nodiscard]] ViewLabel classify(const EchoClip&) const override { return label_; }

private:
    ViewLabel label_;
};

/// Plug-in classifier loaded from a shared object exporting
///
///   extern "C" int echotriage_classify_v1(const uint8_t* pixels, uint32_t rows,
///                                         uint32_t cols, uint32_t frames,
///                                         double* confidence);
///
/// returning 0=PLAX, 1=A2C, 2=A4C, 3=OTHER, negative on failure. An optional
/// `extern "C" int echotriage_thread_safe_v1()` returning nonzero marks the
/// plug-in as reentrant.
class ExternalClassifier final : public ClassifierBackend {
public:
    explicit ExternalClassifier(const std::string& path);
    ~ExternalClassifier() override;
    ExternalClassifier(const ExternalClassifier&) = delete;
    ExternalClassifier& operator=(const ExternalClassifier&) = delete;

    [[nodiscard]] std::string name() const override { return "external:" + path_; }
    [[nodiscard]] ViewLabel classify(const EchoClip& clip) const override;
    [[nodiscard]] bool thread_safe() const override { return thread_safe_; }

private:
    using ClassifyFn = int (*)(const std::uint8_t*, std::uint32_t, std::uint32_t, std::uint32_t, double*);

    std::string path_;
    void* handle_ = nullptr;
    ClassifyFn classify_ = nullptr;
    bool thread_safe_ = false;
};

/// "hint", "constant[:VIEW]" or "external:<path>".
[[nodiscard]] std::unique_ptr<ClassifierBackend> make_classifier(std::string_view spec);

struct ClassifiedClip {
    ViewLabel label;
    std::string backend;
    std::vector<std::string> flags;
};

/// Never throws on backend errors: failures become {OTHER, 0} with a flag.
/// `serial_guard` is locked around the call when the backend is not thread safe.
[[nodiscard]] ClassifiedClip classify_view(const EchoClip& clip, const ClassifierBackend& backend,
                                           std::mutex* serial_guard = nullptr);

struct LabeledClip {
    const EchoClip* clip = nullptr;
    ViewLabel label;
};

/// Most frames wins, then the latest acquisition_index, then the larger clip_id.
[[nodiscard]] std::optional<LabeledClip> select_clip(std::span<const LabeledClip> clips, View view);

/// Per-clip accuracy; throws EmptyInput on empty or mismatched input.
[[nodiscard]] double view_accuracy(std::span<const View> predicted, std::span<const View> truth);

}  // namespace echotriage
