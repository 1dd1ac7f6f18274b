#include "echotriage/error.hpp"

namespace echotriage {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::MissingMagic: return "MissingMagic";
        case Errc::UnsupportedTransferSyntax: return "UnsupportedTransferSyntax";
        case Errc::UnsupportedPixelData: return "UnsupportedPixelData";
        case Errc::MissingRequiredTag: return "MissingRequiredTag";
        case Errc::TruncatedValue: return "TruncatedValue";
        case Errc::MalformedElement: return "MalformedElement";
        case Errc::UnencodableValue: return "UnencodableValue";
        case Errc::BackendFailure: return "BackendFailure";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::MalformedSidecar: return "MalformedSidecar";
        case Errc::UncalibratedClip: return "UncalibratedClip";
        case Errc::NoCycleFound: return "NoCycleFound";
        case Errc::DegenerateMask: return "DegenerateMask";
        case Errc::NoCycles: return "NoCycles";
        case Errc::InvalidLvef: return "InvalidLvef";
        case Errc::InvalidThresholds: return "InvalidThresholds";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::SingleClassCohort: return "SingleClassCohort";
        case Errc::InvalidParameter: return "InvalidParameter";
        case Errc::CanvasTooSmall: return "CanvasTooSmall";
        case Errc::NoUsableClips: return "NoUsableClips";
        case Errc::StoreCorrupt: return "StoreCorrupt";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::UnknownStudy: return "UnknownStudy";
        case Errc::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace echotriage
