"""Bit-exact file interfaces: baseline multi-page TIFF, localization CSV,
model weights, and flat key=value run configuration.

Only the baseline grayscale TIFF subset is handled (8/16-bit unsigned,
uncompressed, strip layout). Anything else fails loudly with an
"unsupported TIFF feature" error instead of mis-decoding; malformed bytes
raise structured errors, never crash.
"""

from __future__ import annotations

import os
import struct
import tempfile
import zlib
import numpy as np

from .core import ImageStack
from .errors import (
    CsvFormatError,
    ConfigError,
    TiffFormatError,
    TiffUnsupportedError,
    WeightsChecksumError,
    WeightsFileError,
    WeightsVersionError,
)
from .slnet import ConvLayer, SLNetModel

LOCS_HEADER = '"id","frame","x [nm]","y [nm]","sigma [nm]","intensity [photon]"'
TRUTH_HEADER = '"frame","emitter","x [px]","y [px]"'
WEIGHTS_MAGIC = b"SLNW"
WEIGHTS_VERSION = 1

_COMPRESSION_NAMES = {
    2: "CCITT Group 3 1-D", 3: "CCITT Group 3 fax", 4: "CCITT Group 4 fax",
    5: "LZW", 6: "old-style JPEG", 7: "JPEG", 8: "Deflate",
    32773: "PackBits", 32946: "Deflate",
}
_PHOTOMETRIC_NAMES = {
    0: "white-is-zero photometric", 2: "RGB photometric",
    3: "palette-color (paletted) photometric", 4: "transparency mask",
    5: "CMYK photometric", 6: "YCbCr photometric",
}


def _atomic_write_bytes(path, data):
    """Write via a temp file in the same directory plus rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_text(path, text):
    _atomic_write_bytes(path, text.encode("utf-8"))


# ---------------------------------------------------------------------------
# TIFF
# ---------------------------------------------------------------------------

class _Reader:
    """Bounds-checked access to the raw file bytes."""

    def __init__(self, data):
        self.data = data
        self.size = len(data)

    def bytes_at(self, offset, count, what):
        if offset < 0 or count < 0 or offset + count > self.size:
            raise TiffFormatError(
                f"truncated file: {what} needs bytes [{offset}, {offset + count}) "
                f"of a {self.size}-byte file")
        return self.data[offset:offset + count]

    def unpack(self, fmt, offset, what):
        return struct.unpack_from(fmt, self.bytes_at(offset, struct.calcsize(fmt), what))


_TYPE_SIZES = {1: 1, 2: 1, 3: 2, 4: 4, 5: 8, 6: 1, 7: 1, 8: 2, 9: 4, 10: 8, 11: 4, 12: 8}


def _read_tag_values(reader, order, entry_offset, what):
    tag, typ, count = reader.unpack(order + "HHI", entry_offset, what)
    if typ not in _TYPE_SIZES:
        return tag, None  # unknown value type: skip the tag
    size = _TYPE_SIZES[typ] * count
    if size <= 4:
        raw = reader.bytes_at(entry_offset + 8, 4, what)[:size]
    else:
        (offset,) = reader.unpack(order + "I", entry_offset + 8, what)
        raw = reader.bytes_at(offset, size, f"values of tag {tag}")
    if typ == 3:
        values = struct.unpack(order + "H" * count, raw)
    elif typ == 4:
        values = struct.unpack(order + "I" * count, raw)
    elif typ == 1:
        values = struct.unpack("B" * count, raw)
    else:
        values = None  # rational/ascii/etc: present but not a plain integer list
    return tag, values


def _require(tags, tag, name):
    if tag not in tags or not tags[tag]:
        raise TiffFormatError(f"missing required tag {name} ({tag})")
    return tags[tag]


def _parse_page(reader, order, ifd_offset):
    (n_entries,) = reader.unpack(order + "H", ifd_offset, "IFD entry count")
    if n_entries == 0:
        raise TiffFormatError(f"IFD at offset {ifd_offset} has no entries")
    tags = {}
    for i in range(n_entries):
        tag, values = _read_tag_values(reader, order, ifd_offset + 2 + 12 * i, f"IFD entry {i}")
        if values is not None:
            tags[tag] = values
    (next_ifd,) = reader.unpack(order + "I", ifd_offset + 2 + 12 * n_entries, "next-IFD offset")

    for tile_tag in (322, 323, 324, 325):
        if tile_tag in tags:
            raise TiffUnsupportedError("unsupported TIFF feature: tiled layout")
    compression = tags.get(259, (1,))[0]
    if compression != 1:
        name = _COMPRESSION_NAMES.get(compression, f"compression scheme {compression}")
        raise TiffUnsupportedError(f"unsupported TIFF feature: {name}")
    photometric = tags.get(262, (1,))[0]
    if photometric != 1:
        name = _PHOTOMETRIC_NAMES.get(photometric, f"photometric {photometric}")
        raise TiffUnsupportedError(f"unsupported TIFF feature: {name}")
    if tags.get(284, (1,))[0] != 1:
        raise TiffUnsupportedError("unsupported TIFF feature: planar configuration")
    samples = tags.get(277, (1,))[0]
    if samples != 1:
        raise TiffUnsupportedError(
            f"unsupported TIFF feature: multi-sample pixels (SamplesPerPixel={samples})")
    bits = _require(tags, 258, "BitsPerSample")[0]
    if bits not in (8, 16):
        raise TiffUnsupportedError(f"unsupported TIFF feature: {bits}-bit samples")
    sample_format = tags.get(339, (1,))[0]
    if sample_format != 1:
        raise TiffUnsupportedError(
            f"unsupported TIFF feature: sample format {sample_format}")

    width = _require(tags, 256, "ImageWidth")[0]
    length = _require(tags, 257, "ImageLength")[0]
    if width < 1 or length < 1:
        raise TiffFormatError(f"invalid page dimensions {width}x{length}")
    offsets = _require(tags, 273, "StripOffsets")
    counts = _require(tags, 279, "StripByteCounts")
    rows_per_strip = tags.get(278, (0xFFFFFFFF,))[0]
    rows_per_strip = min(rows_per_strip, length) or length
    n_strips = (length + rows_per_strip - 1) // rows_per_strip
    if len(offsets) != n_strips or len(counts) != n_strips:
        raise TiffFormatError(
            f"expected {n_strips} strips for {length} rows at {rows_per_strip} "
            f"rows/strip, found {len(offsets)} offsets and {len(counts)} counts")
    bytes_per_pixel = bits // 8
    chunks = []
    for i, (off, cnt) in enumerate(zip(offsets, counts)):
        rows = min(rows_per_strip, length - i * rows_per_strip)
        expected = rows * width * bytes_per_pixel
        if cnt != expected:
            raise TiffFormatError(
                f"strip {i} byte count {cnt} does not cover its {rows} rows "
                f"(expected {expected})")
        chunks.append(reader.bytes_at(off, cnt, f"strip {i} data"))
    dtype = np.dtype(("<" if order == "<" else ">") + ("u1" if bits == 8 else "u2"))
    pixels = np.frombuffer(b"".join(chunks), dtype=dtype).reshape(length, width)
    return pixels, bits, next_ifd


def read_tiff(path):
    """Decode a baseline grayscale multi-page TIFF into an ImageStack."""
    with open(path, "rb") as fh:
        data = fh.read()
    reader = _Reader(data)
    head = reader.bytes_at(0, 8, "file header")
    if head[:2] == b"II":
        order = "<"
    elif head[:2] == b"MM":
        order = ">"
    else:
        raise TiffFormatError(f"bad byte-order marker {head[:2]!r}")
    (magic,) = struct.unpack_from(order + "H", head, 2)
    if magic == 43:
        raise TiffUnsupportedError("unsupported TIFF feature: BigTIFF")
    if magic != 42:
        raise TiffFormatError(f"bad TIFF magic number {magic}")
    (ifd_offset,) = struct.unpack_from(order + "I", head, 4)
    if ifd_offset == 0:
        raise TiffFormatError("file contains no pages")
    pages = []
    bit_depth = None
    seen = set()
    while ifd_offset != 0:
        if ifd_offset in seen:
            raise TiffFormatError(f"IFD chain loops back to offset {ifd_offset}")
        seen.add(ifd_offset)
        if len(seen) > 100000:
            raise TiffFormatError("IFD chain exceeds 100000 pages")
        pixels, bits, ifd_offset = _parse_page(reader, order, ifd_offset)
        if bit_depth is None:
            bit_depth = bits
        elif bits != bit_depth:
            raise TiffFormatError("pages disagree on bit depth")
        if pages and pixels.shape != pages[0].shape:
            raise TiffFormatError(
                f"inconsistent page dimensions: {pixels.shape} vs {pages[0].shape}")
        pages.append(pixels)
    return ImageStack(np.stack(pages), bit_depth=bit_depth)


def write_tiff(stack, path, bit_depth=None):
    """Write a little-endian baseline multi-page TIFF, one strip per page.

    Values are rounded and saturated to the target depth. The write is
    atomic (temp file + rename).
    """
    bit_depth = bit_depth or stack.bit_depth or 16
    if bit_depth not in (8, 16):
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    max_val = (1 << bit_depth) - 1
    dtype = np.uint8 if bit_depth == 8 else np.dtype("<u2")
    frames = np.clip(np.rint(stack.frames.astype(np.float64)), 0, max_val).astype(dtype)
    k, length, width = frames.shape
    data_size = length * width * (bit_depth // 8)
    padded = data_size + (data_size & 1)
    block = padded + 2 + 10 * 12 + 4

    def entry(tag, typ, value):
        if typ == 3:
            return struct.pack("<HHIHH", tag, 3, 1, value, 0)
        return struct.pack("<HHII", tag, 4, 1, value)

    parts = [struct.pack("<2sHI", b"II", 42, 8 + padded)]
    for i in range(k):
        data_off = 8 + i * block
        next_off = 8 + (i + 1) * block + padded if i + 1 < k else 0
        raw = frames[i].tobytes()
        parts.append(raw + b"\0" * (padded - data_size))
        entries = (
            entry(256, 4, width) + entry(257, 4, length) + entry(258, 3, bit_depth)
            + entry(259, 3, 1) + entry(262, 3, 1) + entry(273, 4, data_off)
            + entry(277, 3, 1) + entry(278, 4, length) + entry(279, 4, data_size)
            + entry(339, 3, 1)
        )
        parts.append(struct.pack("<H", 10) + entries + struct.pack("<I", next_off))
    _atomic_write_bytes(path, b"".join(parts))


# ---------------------------------------------------------------------------
# Localization CSV
# ---------------------------------------------------------------------------

def write_locs_csv(table, path):
    """One row per localization, positions and widths in nm."""
    nm = table.pixel_size_nm
    lines = [LOCS_HEADER]
    for i, loc in enumerate(table, start=1):
        lines.append(f"{i},{loc.frame},{loc.x * nm:.6g},{loc.y * nm:.6g},"
                     f"{loc.sigma * nm:.6g},{loc.intensity:.6g}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_locs_csv(path, pixel_size_nm=100.0):
    """Parse a localization CSV back to a table (positions in pixels)."""
    from .localize import Localization, LocalizationTable

    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != LOCS_HEADER:
        raise CsvFormatError(f"line 1: expected header {LOCS_HEADER}")
    table = LocalizationTable(pixel_size_nm=pixel_size_nm, source=str(path))
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise CsvFormatError(f"line {lineno}: expected 6 fields, found {len(parts)}")
        try:
            frame = int(parts[1])
            x, y, sigma, intensity = (float(v) for v in parts[2:6])
        except ValueError as exc:
            raise CsvFormatError(f"line {lineno}: {exc}") from None
        table.rows.append(Localization(frame, x / pixel_size_nm, y / pixel_size_nm,
                                       sigma / pixel_size_nm, intensity))
    return table


def write_truth_csv(truth, path):
    """Active (frame, emitter, x, y) rows of a synthetic ground truth."""
    lines = [TRUTH_HEADER]
    n_frames, n_emitters = truth.on_states.shape
    for f in range(n_frames):
        for e in range(n_emitters):
            if truth.on_states[f, e]:
                x, y = truth.positions[e]
                lines.append(f"{f},{e},{x:.6g},{y:.6g}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_truth_csv(path):
    """{frame: (n_active, 2) array of true (x, y) positions in pixels}."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != TRUTH_HEADER:
        raise CsvFormatError(f"line 1: expected header {TRUTH_HEADER}")
    actives = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise CsvFormatError(f"line {lineno}: expected 4 fields, found {len(parts)}")
        try:
            frame = int(parts[0])
            x, y = float(parts[2]), float(parts[3])
        except ValueError as exc:
            raise CsvFormatError(f"line {lineno}: {exc}") from None
        actives.setdefault(frame, []).append((x, y))
    return {f: np.asarray(v, dtype=np.float64) for f, v in actives.items()}


# ---------------------------------------------------------------------------
# Model weights
# ---------------------------------------------------------------------------

def save_model(model, path):
    """Binary weights file: magic, version, dims, float64 payload, CRC-32."""
    k = model.n_frames_in
    c = model.hidden_channels
    kh, kw = model.layer1.weights.shape[2:]
    payload = b"".join(arr.astype("<f8").tobytes()
                       for arr in (model.layer1.weights, model.layer1.bias,
                                   model.layer2.weights, model.layer2.bias))
    header = WEIGHTS_MAGIC + struct.pack("<IIIII", WEIGHTS_VERSION, k, c, kh, kw)
    _atomic_write_bytes(path, header + payload + struct.pack("<I", zlib.crc32(payload)))


def load_model(path):
    """Inverse of save_model; bit-identical weights or a structured error.

    Version mismatch and checksum failure raise distinct errors and never
    produce a partially loaded model. Training provenance is not part of
    the format, so loaded models carry none.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 or blob[:4] != WEIGHTS_MAGIC:
        raise WeightsFileError("not a model weights file (bad magic bytes)")
    if len(blob) < 24:
        raise WeightsFileError("truncated weights header")
    version, k, c, kh, kw = struct.unpack_from("<IIIII", blob, 4)
    if version != WEIGHTS_VERSION:
        raise WeightsVersionError(
            f"weights format version {version} not supported (expected {WEIGHTS_VERSION})")
    if kh != kw:
        raise WeightsFileError(f"non-square kernels unsupported ({kh}x{kw})")
    if min(k, c, kh) < 1:
        raise WeightsFileError(f"invalid declared dimensions k={k} c={c} kernel={kh}x{kw}")
    counts = (c * k * kh * kw, c, k * c * kh * kw, k)
    payload_len = 8 * sum(counts)
    if len(blob) != 24 + payload_len + 4:
        raise WeightsFileError(
            f"payload length {len(blob) - 28} does not match declared dims "
            f"(expected {payload_len})")
    payload = blob[24:24 + payload_len]
    (crc,) = struct.unpack_from("<I", blob, 24 + payload_len)
    if zlib.crc32(payload) != crc:
        raise WeightsChecksumError("weights payload fails its CRC-32 check")
    flat = np.frombuffer(payload, dtype="<f8")
    pos = 0
    arrays = []
    for cnt, shape in zip(counts, ((c, k, kh, kw), (c,), (k, c, kh, kw), (k,))):
        arrays.append(flat[pos:pos + cnt].reshape(shape).astype(np.float64))
        pos += cnt
    return SLNetModel(ConvLayer(arrays[0], arrays[1]), ConvLayer(arrays[2], arrays[3]),
                      n_frames_in=k, hidden_channels=c, kernel_size=kh)


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

def write_config(values, path):
    lines = [f"{key} = {value}" for key, value in values.items()]
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_config(path):
    """Flat key=value file; '#' starts a comment, blank lines are skipped."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values
