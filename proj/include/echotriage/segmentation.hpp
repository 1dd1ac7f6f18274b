#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "echotriage/dicom.hpp"
#include "echotriage/view.hpp"

namespace echotriage {

enum class Chamber { LV, LA };

std::string_view to_string(Chamber c) noexcept;
std::optional<Chamber> chamber_from_string(std::string_view s) noexcept;

struct ChamberMask {
    Chamber chamber = Chamber::LV;
    std::uint32_t frame_index = 0;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<std::uint8_t> bits;  // rows*cols, each 0 or 1
    std::optional<PixelSpacing> pixel_spacing_mm;
    bool degenerate = false;  // set when the mask is empty

    [[nodiscard]] std::size_t area_pixels() const noexcept;
    [[nodiscard]] bool at(std::uint32_t r, std::uint32_t c) const { return bits[r * cols + c] != 0; }

    bool operator==(const ChamberMask&) const = default;
};

class SegmentationBackend {
public:
    virtual ~SegmentationBackend() = default;

    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual bool supports(Chamber chamber) const = 0;
    /// One mask per frame, dimensions and spacing taken from the clip.
    [[nodiscard]] virtual std::vector<ChamberMask> segment(const EchoClip& clip, View view,
                                                           Chamber chamber) const = 0;
    [[nodiscard]] virtual bool thread_safe() const { return true; }
};

/// Dark blood pool on bright myocardium: pixel < threshold, then the
/// largest 4-connected component. Segments LV only.
class ThresholdSegmenter final : public SegmentationBackend {
public:
    explicit ThresholdSegmenter(std::uint8_t threshold = 128) : threshold_(threshold) {}

    [[nodiscard]] std::string name() const override { return "threshold"; }
    [[nodiscard]] bool supports(Chamber chamber) const override { return chamber == Chamber::LV; }
    [[nodiscard]] std::vector<ChamberMask> segment(const EchoClip& clip, View view,
                                                   Chamber chamber) const override;

private:
    std::uint8_t threshold_;
};

/// Loads `<clip_id>.<chamber>.masks.rle` files from a directory.
class SidecarSegmenter final : public SegmentationBackend {
public:
    explicit SidecarSegmenter(std::filesystem::path dir) : dir_(std::move(dir)) {}

    [[nodiscard]] std::string name() const override { return "sidecar"; }
    [[nodiscard]] bool supports(Chamber) const override { return true; }
    [[nodiscard]] std::vector<ChamberMask> segment(const EchoClip& clip, View view,
                                                   Chamber chamber) const override;
    [[nodiscard]] std::filesystem::path path_for(const EchoClip& clip, Chamber chamber) const;

private:
    std::filesystem::path dir_;
};

/// Throws BackendFailure if the backend fails or violates its contract.
[[nodiscard]] std::vector<ChamberMask> segment_clip(const EchoClip& clip, View view, Chamber chamber,
                                                    const SegmentationBackend& backend);

/// 2|A∩B| / (|A|+|B|); 1.0 when both are empty.
[[nodiscard]] double dice(const ChamberMask& a, const ChamberMask& b);

// Sidecar run-length format. A record is a header line `chamber,frame,rows,cols`
// and a runs line: row-major run lengths alternating 0/1, starting with a
// (possibly zero) run of zeros.
inline constexpr std::string_view kSidecarHeader = "chamber,frame,rows,cols";

[[nodiscard]] std::string encode_runs(const ChamberMask& mask);
[[nodiscard]] std::string encode_mask(const ChamberMask& mask);
/// Parses one record (two lines). Spacing is not part of the record.
[[nodiscard]] ChamberMask decode_mask(std::string_view record);

[[nodiscard]] std::string encode_sidecar(const std::vector<ChamberMask>& masks);
[[nodiscard]] std::vector<ChamberMask> decode_sidecar(std::string_view text);

[[nodiscard]] std::string sidecar_filename(std::string_view clip_id, Chamber chamber);

}  // namespace echotriage
