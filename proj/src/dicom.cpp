#include "echotriage/dicom.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>

#include "echotriage/error.hpp"

namespace echotriage {

namespace {

constexpr std::size_t kPreambleSize = 128;
constexpr std::uint32_t kUndefinedLength = 0xFFFFFFFFu;
constexpr int kMaxSequenceDepth = 8;
constexpr std::string_view kImplementationClassUid = "2.25.329800735698586629295641978511506172918";

constexpr Tag kItem{0xFFFE, 0xE000};
constexpr Tag kItemDelimiter{0xFFFE, 0xE00D};
constexpr Tag kSequenceDelimiter{0xFFFE, 0xE0DD};

bool is_long_vr(std::string_view vr) {
    static constexpr std::array<std::string_view, 13> kLong = {
        "OB", "OD", "OF", "OL", "OV", "OW", "SQ", "SV", "UC", "UN", "UR", "UT", "UV"};
    return std::find(kLong.begin(), kLong.end(), vr) != kLong.end();
}

std::string tag_text(Tag t) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string s = "(0000,0000)";
    for (int i = 0; i < 4; ++i) {
        s[1 + i] = kHex[(t.group >> (12 - 4 * i)) & 0xF];
        s[6 + i] = kHex[(t.element >> (12 - 4 * i)) & 0xF];
    }
    return s;
}

/// VRs for implicit-VR decoding; anything else is UN.
std::string implicit_vr(Tag t) {
    struct Entry {
        Tag tag;
        std::string_view vr;
    };
    static constexpr std::array<Entry, 31> kDict = {{
        {{0x0002, 0x0000}, "UL"}, {{0x0002, 0x0001}, "OB"}, {{0x0002, 0x0002}, "UI"},
        {{0x0002, 0x0003}, "UI"}, {{0x0002, 0x0010}, "UI"}, {{0x0002, 0x0012}, "UI"},
        {tags::kSopClassUid, "UI"}, {tags::kSopInstanceUid, "UI"}, {tags::kModality, "CS"},
        {tags::kInstitutionName, "LO"}, {tags::kReferringPhysicianName, "PN"},
        {tags::kSeriesDescription, "LO"}, {tags::kPatientName, "PN"}, {tags::kPatientId, "LO"},
        {tags::kPatientBirthDate, "DA"}, {tags::kCineRate, "IS"}, {tags::kFrameTime, "DS"},
        {tags::kUltrasoundRegions, "SQ"}, {tags::kPhysicalUnitsX, "US"},
        {tags::kPhysicalUnitsY, "US"}, {tags::kPhysicalDeltaX, "FD"},
        {tags::kPhysicalDeltaY, "FD"}, {tags::kStudyId, "SH"}, {tags::kInstanceNumber, "IS"},
        {tags::kSamplesPerPixel, "US"}, {tags::kPhotometricInterpretation, "CS"},
        {tags::kNumberOfFrames, "IS"}, {tags::kRows, "US"}, {tags::kColumns, "US"},
        {tags::kPixelSpacing, "DS"}, {tags::kPixelData, "OB"},
    }};
    for (const auto& e : kDict) {
        if (e.tag == t) return std::string(e.vr);
    }
    if (t == tags::kBitsAllocated || t == tags::kBitsStored || t == tags::kHighBit ||
        t == tags::kPixelRepresentation) {
        return "US";
    }
    return "UN";
}

std::string_view trim(std::string_view s) {
    constexpr std::string_view kWs = std::string_view(" \0", 2);
    const auto b = s.find_first_not_of(kWs);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(kWs);
    return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes, bool explicit_vr)
        : bytes_(bytes), explicit_vr_(explicit_vr) {}

    [[nodiscard]] std::size_t pos() const noexcept { return pos_; }
    [[nodiscard]] std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
    void set_explicit(bool v) noexcept { explicit_vr_ = v; }
    void skip(std::size_t n) {
        need(n, "skip");
        pos_ += n;
    }

    std::uint16_t u16() {
        need(2, "u16");
        const auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4, "u32");
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
        pos_ += 4;
        return v;
    }
    Tag peek_tag() const {
        if (remaining() < 4) throw Error(Errc::TruncatedValue, "tag past end of data");
        return {static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8)),
                static_cast<std::uint16_t>(bytes_[pos_ + 2] | (bytes_[pos_ + 3] << 8))};
    }

    /// Reads elements until `end` or a delimiter tag.
    DicomDataset dataset(std::size_t end, int depth, bool stop_at_item_delim) {
        DicomDataset ds;
        while (pos_ < end) {
            const Tag t = peek_tag();
            if (t == kItemDelimiter && stop_at_item_delim) {
                pos_ += 4;
                if (u32() != 0) throw Error(Errc::MalformedElement, "item delimiter with length");
                return ds;
            }
            DicomElement el = element(end, depth);
            if (ds.contains(el.tag)) {
                throw Error(Errc::MalformedElement, "duplicate element " + tag_text(el.tag));
            }
            ds.set(std::move(el));
        }
        if (stop_at_item_delim) throw Error(Errc::TruncatedValue, "missing item delimiter");
        return ds;
    }

    DicomElement element(std::size_t end, int depth) {
        DicomElement el;
        el.tag = {u16(), u16()};
        if (el.tag.group == 0xFFFE) {
            throw Error(Errc::MalformedElement, "unexpected delimiter " + tag_text(el.tag));
        }
        std::uint32_t length = 0;
        if (explicit_vr_) {
            need(2, "VR");
            el.vr.assign(reinterpret_cast<const char*>(&bytes_[pos_]), 2);
            pos_ += 2;
            if (!std::isupper(static_cast<unsigned char>(el.vr[0])) ||
                !std::isupper(static_cast<unsigned char>(el.vr[1]))) {
                throw Error(Errc::MalformedElement, "invalid VR at " + tag_text(el.tag));
            }
            if (is_long_vr(el.vr)) {
                u16();
                length = u32();
            } else {
                length = u16();
            }
        } else {
            el.vr = implicit_vr(el.tag);
            length = u32();
        }
        if (pos_ > end) throw Error(Errc::TruncatedValue, "header of " + tag_text(el.tag) + " runs past end");

        if (length == kUndefinedLength) {
            if (el.tag == tags::kPixelData) {
                throw Error(Errc::UnsupportedTransferSyntax, "encapsulated pixel data");
            }
            if (el.vr == "UN" && !explicit_vr_) el.vr = "SQ";
            if (el.vr != "SQ") {
                throw Error(Errc::MalformedElement, "undefined length on " + tag_text(el.tag));
            }
            el.items = sequence(end, depth, /*defined_end=*/std::nullopt);
            return el;
        }
        if (length > end - pos_) {
            throw Error(Errc::TruncatedValue, "value of " + tag_text(el.tag) + " runs past end");
        }
        if (length % 2 != 0) {
            throw Error(Errc::MalformedElement, "odd length on " + tag_text(el.tag));
        }
        if (el.vr == "SQ") {
            el.items = sequence(end, depth, pos_ + length);
            return el;
        }
        el.value.assign(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                        bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + length));
        pos_ += length;
        return el;
    }

private:
    void need(std::size_t n, const char* what) const {
        if (remaining() < n) throw Error(Errc::TruncatedValue, std::string(what) + " past end of data");
    }

    std::vector<DicomDataset> sequence(std::size_t end, int depth,
                                       std::optional<std::size_t> defined_end) {
        if (depth >= kMaxSequenceDepth) throw Error(Errc::MalformedElement, "sequence nesting too deep");
        const std::size_t limit = defined_end.value_or(end);
        std::vector<DicomDataset> items;
        while (true) {
            if (defined_end && pos_ == *defined_end) return items;
            if (pos_ >= limit) throw Error(Errc::TruncatedValue, "sequence runs past end");
            const Tag t{u16(), u16()};
            const std::uint32_t len = u32();
            if (t == kSequenceDelimiter) {
                if (defined_end) throw Error(Errc::MalformedElement, "delimiter in defined-length sequence");
                if (len != 0) throw Error(Errc::MalformedElement, "sequence delimiter with length");
                return items;
            }
            if (t != kItem) throw Error(Errc::MalformedElement, "expected item in sequence");
            if (len == kUndefinedLength) {
                items.push_back(dataset(limit, depth + 1, /*stop_at_item_delim=*/true));
            } else {
                if (len > limit - pos_) throw Error(Errc::TruncatedValue, "item runs past end");
                const std::size_t item_end = pos_ + len;
                items.push_back(dataset(item_end, depth + 1, false));
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
    bool explicit_vr_ = true;
};

void append_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void encode_dataset(const DicomDataset& ds, std::vector<std::uint8_t>& out);

void encode_element(const DicomElement& el, std::vector<std::uint8_t>& out) {
    if (el.vr.size() != 2) throw Error(Errc::UnencodableValue, "bad VR on " + tag_text(el.tag));
    std::vector<std::uint8_t> body;
    if (el.vr == "SQ") {
        for (const auto& item : el.items) {
            std::vector<std::uint8_t> item_body;
            encode_dataset(item, item_body);
            append_u16(body, kItem.group);
            append_u16(body, kItem.element);
            append_u32(body, static_cast<std::uint32_t>(item_body.size()));
            body.insert(body.end(), item_body.begin(), item_body.end());
        }
    }
    const auto& value = el.vr == "SQ" ? body : el.value;
    if (value.size() % 2 != 0) {
        throw Error(Errc::UnencodableValue, "odd-length value on " + tag_text(el.tag));
    }
    append_u16(out, el.tag.group);
    append_u16(out, el.tag.element);
    out.push_back(static_cast<std::uint8_t>(el.vr[0]));
    out.push_back(static_cast<std::uint8_t>(el.vr[1]));
    if (is_long_vr(el.vr)) {
        if (value.size() >= kUndefinedLength) {
            throw Error(Errc::UnencodableValue, "oversized value on " + tag_text(el.tag));
        }
        append_u16(out, 0);
        append_u32(out, static_cast<std::uint32_t>(value.size()));
    } else {
        if (value.size() > 0xFFFE) {
            throw Error(Errc::UnencodableValue, "oversized value on " + tag_text(el.tag));
        }
        append_u16(out, static_cast<std::uint16_t>(value.size()));
    }
    out.insert(out.end(), value.begin(), value.end());
}

void encode_dataset(const DicomDataset& ds, std::vector<std::uint8_t>& out) {
    for (const auto& el : ds.elements()) encode_element(el, out);
}

std::vector<std::uint8_t> padded_text(std::string_view vr, std::string_view text) {
    std::vector<std::uint8_t> v(text.begin(), text.end());
    if (v.size() % 2 != 0) v.push_back(vr == "UI" ? 0 : ' ');
    return v;
}

std::optional<std::int64_t> parse_integer(const DicomDataset& ds, Tag tag) {
    const auto s = ds.get_string(tag);
    if (!s) return std::nullopt;
    const auto v = parse_number(*s);
    if (!v || *v != std::floor(*v)) {
        throw Error(Errc::MalformedElement, "non-integer value in " + tag_text(tag));
    }
    return static_cast<std::int64_t>(*v);
}

}  // namespace

bool DicomElement::operator==(const DicomElement& o) const {
    return tag == o.tag && vr == o.vr && value == o.value && items == o.items;
}

const DicomElement* DicomDataset::find(Tag tag) const {
    const auto it = std::lower_bound(elements_.begin(), elements_.end(), tag,
                                     [](const DicomElement& e, Tag t) { return e.tag < t; });
    return (it != elements_.end() && it->tag == tag) ? &*it : nullptr;
}

void DicomDataset::set(DicomElement element) {
    const auto it = std::lower_bound(elements_.begin(), elements_.end(), element.tag,
                                     [](const DicomElement& e, Tag t) { return e.tag < t; });
    if (it != elements_.end() && it->tag == element.tag) {
        *it = std::move(element);
    } else {
        elements_.insert(it, std::move(element));
    }
}

void DicomDataset::set_string(Tag tag, std::string_view vr, std::string_view text) {
    set(DicomElement{tag, std::string(vr), padded_text(vr, text), {}});
}

void DicomDataset::set_u16(Tag tag, std::uint16_t v) {
    DicomElement el{tag, "US", {}, {}};
    append_u16(el.value, v);
    set(std::move(el));
}

bool DicomDataset::erase(Tag tag) {
    const auto it = std::lower_bound(elements_.begin(), elements_.end(), tag,
                                     [](const DicomElement& e, Tag t) { return e.tag < t; });
    if (it == elements_.end() || it->tag != tag) return false;
    elements_.erase(it);
    return true;
}

std::optional<std::string> DicomDataset::get_string(Tag tag) const {
    const auto* el = find(tag);
    if (!el) return std::nullopt;
    const std::string_view raw(reinterpret_cast<const char*>(el->value.data()), el->value.size());
    return std::string(trim(raw));
}

std::optional<std::uint16_t> DicomDataset::get_u16(Tag tag) const {
    const auto* el = find(tag);
    if (!el) return std::nullopt;
    if (el->value.size() != 2) throw Error(Errc::MalformedElement, "expected US in " + tag_text(tag));
    return static_cast<std::uint16_t>(el->value[0] | (el->value[1] << 8));
}

std::optional<double> DicomDataset::get_f64(Tag tag) const {
    const auto* el = find(tag);
    if (!el) return std::nullopt;
    if (el->value.size() != 8) throw Error(Errc::MalformedElement, "expected FD in " + tag_text(tag));
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | el->value[static_cast<std::size_t>(i)];
    double v = 0.0;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

std::vector<double> DicomDataset::get_decimals(Tag tag) const {
    const auto s = get_string(tag);
    if (!s) return {};
    std::vector<double> out;
    std::string_view rest = *s;
    while (true) {
        const auto cut = rest.find('\\');
        const auto v = parse_number(rest.substr(0, cut));
        if (!v) throw Error(Errc::MalformedElement, "bad decimal in " + tag_text(tag));
        out.push_back(*v);
        if (cut == std::string_view::npos) break;
        rest.remove_prefix(cut + 1);
    }
    return out;
}

void EchoClip::validate() const {
    if (num_frames == 0) throw Error(Errc::UnencodableValue, "clip has no frames");
    if (rows == 0 || cols == 0 || rows > 0xFFFF || cols > 0xFFFF) {
        throw Error(Errc::UnencodableValue, "rows/cols out of range");
    }
    if (pixels.size() != frame_size() * num_frames) {
        throw Error(Errc::UnencodableValue, "pixel buffer does not match rows*cols*frames");
    }
    if (!(frame_interval_ms > 0.0) || !std::isfinite(frame_interval_ms)) {
        throw Error(Errc::UnencodableValue, "frame interval must be positive");
    }
    if (pixel_spacing_mm) {
        const auto [r, c] = *pixel_spacing_mm;
        if (!(r > 0.0) || !(c > 0.0) || !std::isfinite(r) || !std::isfinite(c)) {
            throw Error(Errc::UnencodableValue, "pixel spacing must be positive and finite");
        }
    }
}

std::optional<PixelSpacing> spacing_from(const DicomDataset& ds) {
    if (ds.contains(tags::kPixelSpacing)) {
        const auto v = ds.get_decimals(tags::kPixelSpacing);
        if (v.size() == 2 && v[0] > 0.0 && v[1] > 0.0) return PixelSpacing{v[0], v[1]};
    }
    const auto* regions = ds.find(tags::kUltrasoundRegions);
    if (!regions) return std::nullopt;
    constexpr std::uint16_t kUnitsCm = 3;
    for (const auto& region : regions->items) {
        const auto ux = region.get_u16(tags::kPhysicalUnitsX).value_or(kUnitsCm);
        const auto uy = region.get_u16(tags::kPhysicalUnitsY).value_or(kUnitsCm);
        const auto dx = region.get_f64(tags::kPhysicalDeltaX);
        const auto dy = region.get_f64(tags::kPhysicalDeltaY);
        if (ux != kUnitsCm || uy != kUnitsCm || !dx || !dy) continue;
        const double col_mm = std::abs(*dx) * 10.0;
        const double row_mm = std::abs(*dy) * 10.0;
        if (col_mm > 0.0 && row_mm > 0.0 && std::isfinite(col_mm) && std::isfinite(row_mm)) {
            return PixelSpacing{row_mm, col_mm};
        }
    }
    return std::nullopt;
}

std::optional<double> frame_interval_from(const DicomDataset& ds) {
    if (ds.contains(tags::kFrameTime)) {
        const auto v = ds.get_decimals(tags::kFrameTime);
        if (!v.empty() && v[0] > 0.0) return v[0];
    }
    if (ds.contains(tags::kCineRate)) {
        const auto v = ds.get_decimals(tags::kCineRate);
        if (!v.empty() && v[0] > 0.0) return 1000.0 / v[0];
    }
    return std::nullopt;
}

DecodedDicom read_dicom(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kPreambleSize + 4 ||
        std::memcmp(bytes.data() + kPreambleSize, "DICM", 4) != 0) {
        throw Error(Errc::MissingMagic, "no DICM magic after 128-byte preamble");
    }
    DecodedDicom out;
    Reader reader(bytes, /*explicit_vr=*/true);
    reader.skip(kPreambleSize + 4);

    while (reader.remaining() >= 4 && reader.peek_tag().group == 0x0002) {
        auto el = reader.element(bytes.size(), 0);
        out.meta.set(std::move(el));
    }
    const auto ts = out.meta.get_string(tags::kTransferSyntaxUid);
    if (!ts) throw Error(Errc::MissingRequiredTag, "TransferSyntaxUID (0002,0010)");
    if (*ts == kImplicitVrLittleEndian) {
        reader.set_explicit(false);
    } else if (*ts != kExplicitVrLittleEndian) {
        throw Error(Errc::UnsupportedTransferSyntax, *ts);
    }
    out.dataset = reader.dataset(bytes.size(), 0, false);

    const auto& ds = out.dataset;
    auto& clip = out.clip;
    const auto rows = ds.get_u16(tags::kRows);
    const auto cols = ds.get_u16(tags::kColumns);
    if (!rows) throw Error(Errc::MissingRequiredTag, "Rows (0028,0010)");
    if (!cols) throw Error(Errc::MissingRequiredTag, "Columns (0028,0011)");
    const auto frames = parse_integer(ds, tags::kNumberOfFrames);
    if (!frames) throw Error(Errc::MissingRequiredTag, "NumberOfFrames (0028,0008)");
    const auto* pixel_data = ds.find(tags::kPixelData);
    if (!pixel_data) throw Error(Errc::MissingRequiredTag, "PixelData (7FE0,0010)");
    if (*rows == 0 || *cols == 0 || *frames < 1 || *frames > std::numeric_limits<std::int32_t>::max()) {
        throw Error(Errc::MalformedElement, "non-positive image dimensions");
    }
    if (ds.get_u16(tags::kSamplesPerPixel).value_or(1) != 1 ||
        ds.get_u16(tags::kBitsAllocated).value_or(8) != 8 ||
        ds.get_u16(tags::kPixelRepresentation).value_or(0) != 0) {
        throw Error(Errc::UnsupportedPixelData, "only 8-bit unsigned grayscale is supported");
    }

    clip.rows = *rows;
    clip.cols = *cols;
    clip.num_frames = static_cast<std::uint32_t>(*frames);
    const std::size_t expected = clip.frame_size() * clip.num_frames;
    const auto& px = pixel_data->value;
    if (px.size() < expected) throw Error(Errc::TruncatedValue, "PixelData shorter than rows*cols*frames");
    if (px.size() > expected + 1) throw Error(Errc::MalformedElement, "PixelData longer than rows*cols*frames");
    clip.pixels.assign(px.begin(), px.begin() + static_cast<std::ptrdiff_t>(expected));

    const auto interval = frame_interval_from(ds);
    if (!interval) throw Error(Errc::MissingRequiredTag, "FrameTime (0018,1063) or CineRate (0018,0040)");
    clip.frame_interval_ms = *interval;
    clip.pixel_spacing_mm = spacing_from(ds);
    clip.study_id = ds.get_string(tags::kStudyId).value_or("");
    clip.clip_id = ds.get_string(tags::kSopInstanceUid).value_or("");
    clip.acquisition_index = static_cast<std::int32_t>(parse_integer(ds, tags::kInstanceNumber).value_or(0));
    clip.declared_view_hint = ds.get_string(tags::kSeriesDescription);
    return out;
}

EchoClip parse_dicom(std::span<const std::uint8_t> bytes) {
    return read_dicom(bytes).clip;
}

std::span<const Tag> phi_tags() noexcept {
    static constexpr std::array<Tag, 5> kPhi = {tags::kInstitutionName, tags::kReferringPhysicianName,
                                                tags::kPatientName, tags::kPatientId,
                                                tags::kPatientBirthDate};
    return kPhi;
}

DicomDataset anonymize(const DicomDataset& elements) {
    DicomDataset out = elements;
    for (const Tag t : phi_tags()) {
        if (const auto* el = out.find(t)) {
            const std::string vr = el->vr;
            out.set_string(t, vr, "ANON");
        }
    }
    return out;
}

std::string format_decimal(double v) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

std::vector<std::uint8_t> write_dicom(const EchoClip& clip, const DicomDataset& elements) {
    clip.validate();

    DicomDataset ds;
    for (const auto& el : elements.elements()) {
        if (el.tag.group != 0x0002) ds.set(el);
    }

    auto set_or_erase = [&ds](Tag tag, std::string_view vr, std::string_view text) {
        if (text.empty()) {
            ds.erase(tag);
        } else if (ds.get_string(tag) != std::optional<std::string>(std::string(text))) {
            ds.set_string(tag, vr, text);
        }
    };

    if (!ds.contains(tags::kSopClassUid)) ds.set_string(tags::kSopClassUid, "UI", kUltrasoundMultiframeSopClass);
    set_or_erase(tags::kSopInstanceUid, "UI", clip.clip_id);
    if (!ds.contains(tags::kModality)) ds.set_string(tags::kModality, "CS", "US");
    set_or_erase(tags::kStudyId, "SH", clip.study_id);
    {
        std::optional<std::int64_t> current;
        try {
            current = parse_integer(ds, tags::kInstanceNumber);
        } catch (const Error&) {
        }
        if (current != std::optional<std::int64_t>(clip.acquisition_index)) {
            ds.set_string(tags::kInstanceNumber, "IS", std::to_string(clip.acquisition_index));
        }
    }
    if (clip.declared_view_hint) {
        if (ds.get_string(tags::kSeriesDescription) != clip.declared_view_hint) {
            ds.set_string(tags::kSeriesDescription, "LO", *clip.declared_view_hint);
        }
    } else {
        ds.erase(tags::kSeriesDescription);
    }

    ds.set_u16(tags::kSamplesPerPixel, 1);
    ds.set_string(tags::kPhotometricInterpretation, "CS", "MONOCHROME2");
    ds.set_string(tags::kNumberOfFrames, "IS", std::to_string(clip.num_frames));
    ds.set_u16(tags::kRows, static_cast<std::uint16_t>(clip.rows));
    ds.set_u16(tags::kColumns, static_cast<std::uint16_t>(clip.cols));
    ds.set_u16(tags::kBitsAllocated, 8);
    ds.set_u16(tags::kBitsStored, 8);
    ds.set_u16(tags::kHighBit, 7);
    ds.set_u16(tags::kPixelRepresentation, 0);

    std::optional<PixelSpacing> existing_spacing;
    try {
        existing_spacing = spacing_from(ds);
    } catch (const Error&) {
    }
    if (existing_spacing != clip.pixel_spacing_mm) {
        ds.erase(tags::kPixelSpacing);
        if (clip.pixel_spacing_mm) {
            ds.set_string(tags::kPixelSpacing, "DS",
                          format_decimal(clip.pixel_spacing_mm->row_mm) + "\\" +
                              format_decimal(clip.pixel_spacing_mm->col_mm));
        } else {
            ds.erase(tags::kUltrasoundRegions);
        }
    }

    std::optional<double> existing_interval;
    try {
        existing_interval = frame_interval_from(ds);
    } catch (const Error&) {
    }
    if (existing_interval != clip.frame_interval_ms) {
        ds.erase(tags::kCineRate);
        ds.set_string(tags::kFrameTime, "DS", format_decimal(clip.frame_interval_ms));
    }

    DicomElement pixel_data{tags::kPixelData, "OB", clip.pixels, {}};
    if (pixel_data.value.size() % 2 != 0) pixel_data.value.push_back(0);
    ds.set(std::move(pixel_data));

    DicomDataset meta;
    meta.set(DicomElement{{0x0002, 0x0001}, "OB", {0x00, 0x01}, {}});
    meta.set_string({0x0002, 0x0002}, "UI", ds.get_string(tags::kSopClassUid).value_or(""));
    meta.set_string({0x0002, 0x0003}, "UI", clip.clip_id);
    meta.set_string(tags::kTransferSyntaxUid, "UI", kExplicitVrLittleEndian);
    meta.set_string({0x0002, 0x0012}, "UI", kImplementationClassUid);
    std::vector<std::uint8_t> meta_body;
    encode_dataset(meta, meta_body);

    std::vector<std::uint8_t> out(kPreambleSize + 4, 0);
    std::memcpy(out.data() + kPreambleSize, "DICM", 4);
    DicomElement group_length{{0x0002, 0x0000}, "UL", {}, {}};
    append_u32(group_length.value, static_cast<std::uint32_t>(meta_body.size()));
    encode_element(group_length, out);
    out.insert(out.end(), meta_body.begin(), meta_body.end());
    encode_dataset(ds, out);
    return out;
}

}  // namespace echotriage
