#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace echotriage {

struct Tag {
    std::uint16_t group = 0;
    std::uint16_t element = 0;

    friend constexpr auto operator<=>(const Tag&, const Tag&) = default;
};

namespace tags {
inline constexpr Tag kTransferSyntaxUid{0x0002, 0x0010};
inline constexpr Tag kSopClassUid{0x0008, 0x0016};
inline constexpr Tag kSopInstanceUid{0x0008, 0x0018};
inline constexpr Tag kModality{0x0008, 0x0060};
inline constexpr Tag kInstitutionName{0x0008, 0x0080};
inline constexpr Tag kReferringPhysicianName{0x0008, 0x0090};
inline constexpr Tag kSeriesDescription{0x0008, 0x103E};
inline constexpr Tag kPatientName{0x0010, 0x0010};
inline constexpr Tag kPatientId{0x0010, 0x0020};
inline constexpr Tag kPatientBirthDate{0x0010, 0x0030};
inline constexpr Tag kCineRate{0x0018, 0x0040};
inline constexpr Tag kFrameTime{0x0018, 0x1063};
inline constexpr Tag kUltrasoundRegions{0x0018, 0x6011};
inline constexpr Tag kPhysicalUnitsX{0x0018, 0x6024};
inline constexpr Tag kPhysicalUnitsY{0x0018, 0x6026};
inline constexpr Tag kPhysicalDeltaX{0x0018, 0x602C};
inline constexpr Tag kPhysicalDeltaY{0x0018, 0x602E};
inline constexpr Tag kStudyId{0x0020, 0x0010};
inline constexpr Tag kInstanceNumber{0x0020, 0x0013};
inline constexpr Tag kSamplesPerPixel{0x0028, 0x0002};
inline constexpr Tag kPhotometricInterpretation{0x0028, 0x0004};
inline constexpr Tag kNumberOfFrames{0x0028, 0x0008};
inline constexpr Tag kRows{0x0028, 0x0010};
inline constexpr Tag kColumns{0x0028, 0x0011};
inline constexpr Tag kPixelSpacing{0x0028, 0x0030};
inline constexpr Tag kBitsAllocated{0x0028, 0x0100};
inline constexpr Tag kBitsStored{0x0028, 0x0101};
inline constexpr Tag kHighBit{0x0028, 0x0102};
inline constexpr Tag kPixelRepresentation{0x0028, 0x0103};
inline constexpr Tag kPixelData{0x7FE0, 0x0010};
}  // namespace tags

inline constexpr std::string_view kExplicitVrLittleEndian = "1.2.840.10008.1.2.1";
inline constexpr std::string_view kImplicitVrLittleEndian = "1.2.840.10008.1.2";
inline constexpr std::string_view kUltrasoundMultiframeSopClass = "1.2.840.10008.5.1.4.1.1.3.1";

class DicomDataset;

/// One data element. Sequence (SQ) elements carry their items instead of raw bytes.
struct DicomElement {
    Tag tag;
    std::string vr;  // two-character value representation
    std::vector<std::uint8_t> value;
    std::vector<DicomDataset> items;

    bool operator==(const DicomElement&) const;
};

/// Elements kept sorted by tag, at most one element per tag.
class DicomDataset {
public:
    DicomDataset() = default;

    [[nodiscard]] const DicomElement* find(Tag tag) const;
    [[nodiscard]] bool contains(Tag tag) const { return find(tag) != nullptr; }

    /// Inserts or replaces.
    void set(DicomElement element);
    void set_string(Tag tag, std::string_view vr, std::string_view text);
    void set_u16(Tag tag, std::uint16_t v);
    bool erase(Tag tag);

    [[nodiscard]] std::optional<std::string> get_string(Tag tag) const;
    [[nodiscard]] std::optional<std::uint16_t> get_u16(Tag tag) const;
    [[nodiscard]] std::optional<double> get_f64(Tag tag) const;
    /// Backslash-separated multi-valued decimal strings (DS/IS).
    [[nodiscard]] std::vector<double> get_decimals(Tag tag) const;

    [[nodiscard]] const std::vector<DicomElement>& elements() const noexcept { return elements_; }
    [[nodiscard]] std::size_t size() const noexcept { return elements_.size(); }

    bool operator==(const DicomDataset&) const = default;

private:
    std::vector<DicomElement> elements_;
};

struct PixelSpacing {
    double row_mm = 0.0;
    double col_mm = 0.0;

    bool operator==(const PixelSpacing&) const = default;
};

/// One multi-frame 8-bit grayscale recording.
struct EchoClip {
    std::string study_id;
    std::string clip_id;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::uint32_t num_frames = 0;
    double frame_interval_ms = 0.0;
    std::optional<PixelSpacing> pixel_spacing_mm;  // empty => uncalibrated
    std::vector<std::uint8_t> pixels;               // frame-major, row-major
    std::int32_t acquisition_index = 0;
    std::optional<std::string> declared_view_hint;

    [[nodiscard]] bool calibrated() const noexcept { return pixel_spacing_mm.has_value(); }
    [[nodiscard]] std::size_t frame_size() const noexcept {
        return static_cast<std::size_t>(rows) * cols;
    }
    [[nodiscard]] std::span<const std::uint8_t> frame(std::size_t index) const {
        return std::span(pixels).subspan(index * frame_size(), frame_size());
    }

    /// Throws Error(UnencodableValue) when an invariant does not hold.
    void validate() const;

    bool operator==(const EchoClip&) const = default;
};

struct DecodedDicom {
    DicomDataset meta;     // group 0002
    DicomDataset dataset;  // everything after the meta group
    EchoClip clip;
};

/// Reads the element structure only. Throws Error on malformed input.
[[nodiscard]] DecodedDicom read_dicom(std::span<const std::uint8_t> bytes);

[[nodiscard]] EchoClip parse_dicom(std::span<const std::uint8_t> bytes);

/// Calibration as the parser derives it: PixelSpacing first, then the
/// ultrasound region deltas (cm -> mm).
[[nodiscard]] std::optional<PixelSpacing> spacing_from(const DicomDataset& ds);
[[nodiscard]] std::optional<double> frame_interval_from(const DicomDataset& ds);

/// PHI tags replaced with "ANON"; everything else untouched.
[[nodiscard]] DicomDataset anonymize(const DicomDataset& elements);

/// Tags whose values are replaced by anonymize().
[[nodiscard]] std::span<const Tag> phi_tags() noexcept;

/// Explicit VR Little Endian. Clip fields override the matching elements.
[[nodiscard]] std::vector<std::uint8_t> write_dicom(const EchoClip& clip,
                                                    const DicomDataset& elements = {});

/// Shortest round-trippable decimal string.
[[nodiscard]] std::string format_decimal(double v);

}  // namespace echotriage
