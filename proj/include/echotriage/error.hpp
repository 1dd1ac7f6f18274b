#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace echotriage {

enum class Errc {
    // dicom-ingest
    MissingMagic,
    UnsupportedTransferSyntax,
    UnsupportedPixelData,
    MissingRequiredTag,
    TruncatedValue,
    MalformedElement,
    UnencodableValue,
    // view-classify / segmentation
    BackendFailure,
    DimensionMismatch,
    MalformedSidecar,
    // cardiac-geometry
    UncalibratedClip,
    NoCycleFound,
    DegenerateMask,
    NoCycles,
    // triage-calibration
    InvalidLvef,
    InvalidThresholds,
    EmptyInput,
    SingleClassCohort,
    InvalidParameter,
    // synthetic-phantom
    CanvasTooSmall,
    // pipeline-core
    NoUsableClips,
    StoreCorrupt,
    InvalidConfig,
    UnknownStudy,
    Io,
};

std::string_view errc_name(Errc code) noexcept;

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace echotriage
