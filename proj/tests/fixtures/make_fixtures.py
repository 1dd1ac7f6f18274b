#!/usr/bin/env python3
"""Minimal standalone DICOM writer used to produce the parser test fixtures.

Kept deliberately separate from the C++ writer: the fixtures it emits are the
reference bytes the C++ parser and writer are checked against.

Canonical layout (Explicit VR Little Endian):
  128 zero bytes, "DICM",
  meta group 0002 with group length, version, SOP class/instance, transfer
  syntax and implementation class UID,
  dataset elements sorted by (group, element), every value even-length.
"""
import struct
import sys
from pathlib import Path

EXPLICIT_LE = "1.2.840.10008.1.2.1"
IMPLICIT_LE = "1.2.840.10008.1.2"
US_MULTIFRAME = "1.2.840.10008.5.1.4.1.1.3.1"
IMPL_CLASS = "2.25.329800735698586629295641978511506172918"

LONG_VRS = {"OB", "OD", "OF", "OL", "OW", "SQ", "UC", "UR", "UT", "UN"}


def pad(vr, raw):
    if len(raw) % 2 == 0:
        return raw
    if vr in ("UI", "OB", "OW", "UN"):
        return raw + b"\x00"
    return raw + b" "


def text(vr, s):
    return pad(vr, s.encode("ascii"))


def explicit(group, elem, vr, value):
    head = struct.pack("<HH", group, elem) + vr.encode("ascii")
    if vr in LONG_VRS:
        return head + b"\x00\x00" + struct.pack("<I", len(value)) + value
    return head + struct.pack("<H", len(value)) + value


def implicit(group, elem, value):
    return struct.pack("<HHI", group, elem, len(value)) + value


def meta(sop_instance, transfer_syntax):
    body = b"".join([
        explicit(0x0002, 0x0001, "OB", b"\x00\x01"),
        explicit(0x0002, 0x0002, "UI", text("UI", US_MULTIFRAME)),
        explicit(0x0002, 0x0003, "UI", text("UI", sop_instance)),
        explicit(0x0002, 0x0010, "UI", text("UI", transfer_syntax)),
        explicit(0x0002, 0x0012, "UI", text("UI", IMPL_CLASS)),
    ])
    return explicit(0x0002, 0x0000, "UL", struct.pack("<I", len(body))) + body


def us(v):
    return struct.pack("<H", v)


def fd(v):
    return struct.pack("<d", v)


def sequence_item(elements):
    body = b"".join(explicit(*e) for e in sorted(elements, key=lambda e: (e[0], e[1])))
    return struct.pack("<HHI", 0xFFFE, 0xE000, len(body)) + body


def base_elements(rows, cols, frames, sop_instance, study_id, pixels):
    return [
        (0x0008, 0x0016, "UI", text("UI", US_MULTIFRAME)),
        (0x0008, 0x0018, "UI", text("UI", sop_instance)),
        (0x0008, 0x0060, "CS", text("CS", "US")),
        (0x0020, 0x0010, "SH", text("SH", study_id)),
        (0x0020, 0x0013, "IS", text("IS", "1")),
        (0x0028, 0x0002, "US", us(1)),
        (0x0028, 0x0004, "CS", text("CS", "MONOCHROME2")),
        (0x0028, 0x0008, "IS", text("IS", str(frames))),
        (0x0028, 0x0010, "US", us(rows)),
        (0x0028, 0x0011, "US", us(cols)),
        (0x0028, 0x0100, "US", us(8)),
        (0x0028, 0x0101, "US", us(8)),
        (0x0028, 0x0102, "US", us(7)),
        (0x0028, 0x0103, "US", us(0)),
        (0x7FE0, 0x0010, "OB", pad("OB", pixels)),
    ]


def write_explicit(path, sop_instance, elements):
    data = bytearray(128) + b"DICM" + meta(sop_instance, EXPLICIT_LE)
    for e in sorted(elements, key=lambda e: (e[0], e[1])):
        data += explicit(*e)
    Path(path).write_bytes(bytes(data))


def ramp(rows, cols, frames):
    return bytes((f * 16 + i * 3) % 256 for f in range(frames) for i in range(rows * cols))


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    # 4x4x2 clip calibrated by PixelSpacing, timed by FrameTime.
    px = ramp(4, 4, 2)
    els = base_elements(4, 4, 2, "1.2.3.4.1", "STUDY01", px)
    els += [
        (0x0008, 0x103E, "LO", text("LO", "A4C")),
        (0x0018, 0x1063, "DS", text("DS", "33.3")),
        (0x0028, 0x0030, "DS", text("DS", "0.5\\0.5")),
    ]
    write_explicit(out / "minimal_4x4x2.dcm", "1.2.3.4.1", els)

    # Calibration from the ultrasound region sequence only (cm/pixel), CineRate timing.
    px = ramp(3, 5, 1)
    els = base_elements(3, 5, 1, "1.2.3.4.2", "STUDY01", px)
    region = sequence_item([
        (0x0018, 0x6024, "US", us(3)),
        (0x0018, 0x6026, "US", us(3)),
        (0x0018, 0x602C, "FD", fd(0.05)),
        (0x0018, 0x602E, "FD", fd(0.04)),
    ])
    els += [
        (0x0018, 0x0040, "IS", text("IS", "25")),
        (0x0018, 0x6011, "SQ", region),
    ]
    write_explicit(out / "region_calibrated.dcm", "1.2.3.4.2", els)

    # All five PHI tags present, plus the hand-edited anonymized twin.
    px = ramp(2, 2, 1)
    phi = {
        (0x0008, 0x0080): ("LO", "HOSPITAL UNIVERSITARIO"),
        (0x0008, 0x0090): ("PN", "HOUSE^GREGORY"),
        (0x0010, 0x0010): ("PN", "DOE^JANE"),
        (0x0010, 0x0020): ("LO", "PID-0042"),
        (0x0010, 0x0030): ("DA", "19700101"),
    }
    common = base_elements(2, 2, 1, "1.2.3.4.3", "STUDY02", px) + [
        (0x0018, 0x1063, "DS", text("DS", "40")),
        (0x0028, 0x0030, "DS", text("DS", "0.3\\0.3")),
    ]
    with_phi = common + [(g, e, vr, text(vr, v)) for (g, e), (vr, v) in phi.items()]
    anon = common + [(g, e, vr, text(vr, "ANON")) for (g, e), (vr, _) in phi.items()]
    write_explicit(out / "phi_all.dcm", "1.2.3.4.3", with_phi)
    write_explicit(out / "phi_all_anon.dcm", "1.2.3.4.3", anon)

    # Same 4x4x2 content in Implicit VR Little Endian.
    px = ramp(4, 4, 2)
    data = bytearray(128) + b"DICM" + meta("1.2.3.4.4", IMPLICIT_LE)
    els = base_elements(4, 4, 2, "1.2.3.4.4", "STUDY03", px) + [
        (0x0018, 0x1063, "DS", text("DS", "20")),
        (0x0028, 0x0030, "DS", text("DS", "0.25\\0.5")),
    ]
    for g, e, _vr, v in sorted(els, key=lambda e: (e[0], e[1])):
        data += implicit(g, e, v)
    (out / "implicit_4x4x2.dcm").write_bytes(bytes(data))

    # Big-endian transfer syntax: must be rejected.
    data = bytearray(128) + b"DICM" + meta("1.2.3.4.5", "1.2.840.10008.1.2.2")
    (out / "big_endian.dcm").write_bytes(bytes(data))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent)
