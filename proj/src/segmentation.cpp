#include "echotriage/segmentation.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "echotriage/error.hpp"
#include "echotriage/kernels.hpp"

namespace echotriage {

namespace {

std::uint64_t parse_uint(std::string_view s, std::string_view what) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(Errc::MalformedSidecar, "bad " + std::string(what) + " '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    while (true) {
        const auto cut = s.find(sep);
        out.push_back(s.substr(0, cut));
        if (cut == std::string_view::npos) return out;
        s.remove_prefix(cut + 1);
    }
}

/// Next '\n'-terminated line; the terminator is required.
std::string_view take_line(std::string_view& text) {
    const auto nl = text.find('\n');
    if (nl == std::string_view::npos) throw Error(Errc::MalformedSidecar, "unterminated line");
    const auto line = text.substr(0, nl);
    text.remove_prefix(nl + 1);
    return line;
}

ChamberMask decode_record(std::string_view& text) {
    const auto header = split(take_line(text), ',');
    if (header.size() != 4) throw Error(Errc::MalformedSidecar, "record header needs 4 fields");
    ChamberMask m;
    const auto chamber = chamber_from_string(header[0]);
    if (!chamber) throw Error(Errc::MalformedSidecar, "unknown chamber '" + std::string(header[0]) + "'");
    m.chamber = *chamber;
    const auto frame = parse_uint(header[1], "frame");
    const auto rows = parse_uint(header[2], "rows");
    const auto cols = parse_uint(header[3], "cols");
    if (rows == 0 || cols == 0 || rows > 0xFFFF || cols > 0xFFFF || frame > 0xFFFFFFFFull) {
        throw Error(Errc::MalformedSidecar, "dimensions out of range");
    }
    m.frame_index = static_cast<std::uint32_t>(frame);
    m.rows = static_cast<std::uint32_t>(rows);
    m.cols = static_cast<std::uint32_t>(cols);
    const std::size_t total = static_cast<std::size_t>(rows * cols);
    m.bits.reserve(total);

    const auto runs = split(take_line(text), ',');
    std::uint8_t value = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto len = parse_uint(runs[i], "run");
        if (len == 0 && i != 0) throw Error(Errc::MalformedSidecar, "zero-length run after the first");
        if (len > total - m.bits.size()) throw Error(Errc::MalformedSidecar, "runs exceed rows*cols");
        m.bits.insert(m.bits.end(), static_cast<std::size_t>(len), value);
        value ^= 1;
    }
    if (m.bits.size() != total) throw Error(Errc::MalformedSidecar, "runs do not cover rows*cols");
    m.degenerate = m.area_pixels() == 0;
    return m;
}

}  // namespace

std::string_view to_string(Chamber c) noexcept {
    return c == Chamber::LV ? "LV" : "LA";
}

std::optional<Chamber> chamber_from_string(std::string_view s) noexcept {
    if (s == "LV") return Chamber::LV;
    if (s == "LA") return Chamber::LA;
    return std::nullopt;
}

std::size_t ChamberMask::area_pixels() const noexcept {
    std::size_t n = 0;
    for (const auto b : bits) n += b != 0;
    return n;
}

std::vector<ChamberMask> ThresholdSegmenter::segment(const EchoClip& clip, View, Chamber chamber) const {
    if (!supports(chamber)) {
        throw Error(Errc::BackendFailure, "threshold segmenter does not segment " + std::string(to_string(chamber)));
    }
    const std::size_t fs = clip.frame_size();
    std::vector<std::uint8_t> bits(clip.pixels.size());
    kernels::omp::threshold_largest_component(clip.pixels, clip.rows, clip.cols, clip.num_frames, threshold_, bits);

    std::vector<ChamberMask> masks(clip.num_frames);
    for (std::uint32_t f = 0; f < clip.num_frames; ++f) {
        auto& m = masks[f];
        m.chamber = chamber;
        m.frame_index = f;
        m.rows = clip.rows;
        m.cols = clip.cols;
        m.bits.assign(bits.begin() + static_cast<std::ptrdiff_t>(f * fs),
                      bits.begin() + static_cast<std::ptrdiff_t>((f + 1) * fs));
        m.pixel_spacing_mm = clip.pixel_spacing_mm;
        m.degenerate = m.area_pixels() == 0;
    }
    return masks;
}

std::filesystem::path SidecarSegmenter::path_for(const EchoClip& clip, Chamber chamber) const {
    return dir_ / sidecar_filename(clip.clip_id, chamber);
}

std::vector<ChamberMask> SidecarSegmenter::segment(const EchoClip& clip, View, Chamber chamber) const {
    const auto path = path_for(clip, chamber);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::BackendFailure, "no sidecar " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    auto masks = decode_sidecar(buf.str());
    for (auto& m : masks) m.pixel_spacing_mm = clip.pixel_spacing_mm;
    return masks;
}

std::vector<ChamberMask> segment_clip(const EchoClip& clip, View view, Chamber chamber,
                                      const SegmentationBackend& backend) {
    std::vector<ChamberMask> masks;
    try {
        masks = backend.segment(clip, view, chamber);
    } catch (const Error& e) {
        if (e.code() == Errc::BackendFailure) throw;
        throw Error(Errc::BackendFailure, backend.name() + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error(Errc::BackendFailure, backend.name() + ": " + e.what());
    }
    if (masks.size() != clip.num_frames) {
        throw Error(Errc::BackendFailure, backend.name() + " returned " + std::to_string(masks.size()) +
                                              " masks for " + std::to_string(clip.num_frames) + " frames");
    }
    for (std::uint32_t f = 0; f < clip.num_frames; ++f) {
        auto& m = masks[f];
        if (m.rows != clip.rows || m.cols != clip.cols || m.bits.size() != clip.frame_size() ||
            m.frame_index != f || m.chamber != chamber) {
            throw Error(Errc::BackendFailure, backend.name() + " returned a mask that does not match the clip");
        }
        m.pixel_spacing_mm = clip.pixel_spacing_mm;
        m.degenerate = m.area_pixels() == 0;
    }
    return masks;
}

double dice(const ChamberMask& a, const ChamberMask& b) {
    if (a.rows != b.rows || a.cols != b.cols || a.bits.size() != b.bits.size()) {
        throw Error(Errc::DimensionMismatch, "dice on masks of different size");
    }
    std::size_t overlap = 0;
    std::size_t sum = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        const bool x = a.bits[i] != 0;
        const bool y = b.bits[i] != 0;
        overlap += x && y;
        sum += static_cast<std::size_t>(x) + static_cast<std::size_t>(y);
    }
    if (sum == 0) return 1.0;
    return 2.0 * static_cast<double>(overlap) / static_cast<double>(sum);
}

std::string encode_runs(const ChamberMask& mask) {
    std::string out;
    std::uint8_t current = 0;
    std::size_t run = 0;
    for (const auto b : mask.bits) {
        const std::uint8_t v = b != 0;
        if (v == current) {
            ++run;
            continue;
        }
        out += std::to_string(run);
        out += ',';
        current = v;
        run = 1;
    }
    out += std::to_string(run);
    return out;
}

std::string encode_mask(const ChamberMask& mask) {
    std::string out;
    out += to_string(mask.chamber);
    out += ',' + std::to_string(mask.frame_index) + ',' + std::to_string(mask.rows) + ',' +
           std::to_string(mask.cols) + '\n';
    out += encode_runs(mask);
    out += '\n';
    return out;
}

ChamberMask decode_mask(std::string_view record) {
    auto m = decode_record(record);
    if (!record.empty()) throw Error(Errc::MalformedSidecar, "trailing data after record");
    return m;
}

std::string encode_sidecar(const std::vector<ChamberMask>& masks) {
    std::string out(kSidecarHeader);
    out += '\n';
    for (const auto& m : masks) out += encode_mask(m);
    return out;
}

std::vector<ChamberMask> decode_sidecar(std::string_view text) {
    if (take_line(text) != kSidecarHeader) throw Error(Errc::MalformedSidecar, "missing sidecar header");
    std::vector<ChamberMask> masks;
    while (!text.empty()) masks.push_back(decode_record(text));
    return masks;
}

std::string sidecar_filename(std::string_view clip_id, Chamber chamber) {
    return std::string(clip_id) + "." + std::string(to_string(chamber)) + ".masks.rle";
}

}  // namespace echotriage
