"""Reading and writing ENVI cubes, annotation masks and spectral libraries.

ENVI stores a cube as a raw binary file plus a plain-text header::

    ENVI
    samples = 696
    lines = 520
    bands = 128
    interleave = bsq
    data type = 12
    byte order = 0
    wavelength = { 377.0, 382.3, ... }

Only the subset of the format needed for the blood dataset is supported:
BSQ/BIL/BIP interleave, uint16/float32/float64 samples, either byte order.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import CLASS_NAMES, AnnotationMask, HyperCube, Spectrum
from .errors import (
    DataError,
    EmptyLibrary,
    LabelOutOfRange,
    LengthMismatch,
    MalformedList,
    MissingMagic,
    MissingRequiredKey,
    NonMonotoneWavelengths,
    ShapeMismatch,
    SizeMismatch,
    UnsupportedDataType,
)

# ENVI "data type" code -> numpy dtype (native order; byte order applied later)
DATA_TYPES = {
    12: np.dtype(np.uint16),
    4: np.dtype(np.float32),
    5: np.dtype(np.float64),
}
DATA_TYPE_NAMES = {12: "uint16", 4: "float32", 5: "float64"}
INTERLEAVES = ("bsq", "bil", "bip")

REQUIRED_KEYS = ("samples", "lines", "bands", "interleave", "data type")
# per-band list keys whose length must match ``bands``
BAND_LIST_KEYS = ("fwhm", "band names", "bbl", "data gain values", "data offset values")
_KNOWN_KEYS = set(REQUIRED_KEYS) | {
    "byte order",
    "header offset",
    "wavelength",
    "wavelength units",
    "reflectance scale factor",
}

DATA_SUFFIXES = ("", ".img", ".raw", ".dat", ".float", ".bsq", ".bil", ".bip")


@dataclass
class EnviHeader:
    samples: int
    lines: int
    bands: int
    interleave: str = "bsq"
    data_type: int = 4
    byte_order: int = 0
    header_offset: int = 0
    wavelengths: tuple | None = None
    reflectance_scale: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def dtype(self) -> np.dtype:
        try:
            dt = DATA_TYPES[self.data_type]
        except KeyError:
            raise UnsupportedDataType(f"ENVI data type {self.data_type}") from None
        return dt.newbyteorder(">" if self.byte_order == 1 else "<")

    @property
    def shape(self) -> tuple:
        return (self.lines, self.samples, self.bands)

    def expected_size(self) -> int:
        return self.samples * self.lines * self.bands * self.dtype.itemsize + self.header_offset

    def summary(self) -> str:
        text = (
            f"{self.samples}×{self.lines}×{self.bands} {self.interleave} "
            f"{DATA_TYPE_NAMES.get(self.data_type, self.data_type)}"
        )
        if self.wavelengths:
            text += f" {self.wavelengths[0]:g}-{self.wavelengths[-1]:g} nm"
        return text


def _split_entries(text: str) -> list:
    """Return ``(key, raw_value)`` pairs; brace values may span lines."""
    entries = []
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line or line.startswith(";") or "=" not in line:
            if "}" in line or "{" in line:
                raise MalformedList(f"stray brace in line {line!r}")
            continue
        key, value = line.split("=", 1)
        key = " ".join(key.split()).lower()
        value = value.strip()
        if value.startswith("{"):
            while value.count("{") > value.count("}"):
                if i >= len(lines):
                    raise MalformedList(f"unterminated list for key {key!r}")
                value += " " + lines[i].strip()
                i += 1
            if value.count("{") != value.count("}") or not value.endswith("}"):
                raise MalformedList(f"unbalanced braces for key {key!r}")
        elif "{" in value or "}" in value:
            raise MalformedList(f"unbalanced braces for key {key!r}")
        entries.append((key, value))
    return entries


def _list_items(value: str) -> list:
    inner = value.strip()[1:-1]
    return [v.strip() for v in inner.split(",") if v.strip()]


def _int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise DataError(f"{key!r} must be an integer, got {value!r}") from None


def parse_envi_header(text: str) -> EnviHeader:
    """Parse the contents of an ENVI ``.hdr`` file.

    Keys are case-insensitive and whitespace-tolerant. Keys this module does
    not interpret are kept verbatim in ``EnviHeader.extra``.
    """
    body = text.lstrip("﻿").lstrip()
    if not body.startswith("ENVI"):
        raise MissingMagic("header does not start with 'ENVI'")
    entries = dict(_split_entries(body[4:]))
    for key in REQUIRED_KEYS:
        if key not in entries:
            raise MissingRequiredKey(key)

    samples = _int("samples", entries["samples"])
    lines = _int("lines", entries["lines"])
    bands = _int("bands", entries["bands"])
    if min(samples, lines, bands) <= 0:
        raise DataError("samples, lines and bands must be positive")
    interleave = entries["interleave"].strip().lower()
    if interleave not in INTERLEAVES:
        raise DataError(f"unknown interleave {interleave!r}")
    data_type = _int("data type", entries["data type"])
    if data_type not in DATA_TYPES:
        raise UnsupportedDataType(f"ENVI data type {data_type}")
    byte_order = _int("byte order", entries.get("byte order", "0"))
    if byte_order not in (0, 1):
        raise DataError(f"byte order must be 0 or 1, got {byte_order}")
    header_offset = _int("header offset", entries.get("header offset", "0"))
    if header_offset < 0:
        raise DataError("header offset must be >= 0")

    wavelengths = None
    if "wavelength" in entries:
        raw = entries["wavelength"]
        if not raw.startswith("{"):
            raise MalformedList("wavelength must be a brace-delimited list")
        try:
            values = [float(v) for v in _list_items(raw)]
        except ValueError:
            raise DataError("non-numeric wavelength entry") from None
        if len(values) != bands:
            raise LengthMismatch(f"{len(values)} wavelengths for {bands} bands")
        units = entries.get("wavelength units", "nanometers").strip().lower()
        if units in ("micrometers", "microns", "um"):
            values = [v * 1000.0 for v in values]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise NonMonotoneWavelengths("header wavelengths not strictly increasing")
        wavelengths = tuple(values)

    for key in BAND_LIST_KEYS:
        if key in entries and entries[key].startswith("{"):
            n = len(_list_items(entries[key]))
            if n != bands:
                raise LengthMismatch(f"{key!r} has {n} entries for {bands} bands")

    reflectance_scale = None
    if "reflectance scale factor" in entries:
        reflectance_scale = float(entries["reflectance scale factor"])
        if reflectance_scale <= 0:
            raise DataError("reflectance scale factor must be positive")

    extra = {k: v for k, v in entries.items() if k not in _KNOWN_KEYS}
    return EnviHeader(
        samples=samples,
        lines=lines,
        bands=bands,
        interleave=interleave,
        data_type=data_type,
        byte_order=byte_order,
        header_offset=header_offset,
        wavelengths=wavelengths,
        reflectance_scale=reflectance_scale,
        extra=extra,
    )


def format_envi_header(header: EnviHeader) -> str:
    out = [
        "ENVI",
        f"samples = {header.samples}",
        f"lines = {header.lines}",
        f"bands = {header.bands}",
        f"header offset = {header.header_offset}",
        f"data type = {header.data_type}",
        f"interleave = {header.interleave}",
        f"byte order = {header.byte_order}",
    ]
    if header.reflectance_scale is not None:
        out.append(f"reflectance scale factor = {header.reflectance_scale!r}")
    for key, value in header.extra.items():
        out.append(f"{key} = {value}")
    if header.wavelengths is not None:
        out.append("wavelength units = nanometers")
        out.append("wavelength = {" + ", ".join(repr(float(w)) for w in header.wavelengths) + "}")
    return "\n".join(out) + "\n"


def read_header(path) -> EnviHeader:
    return parse_envi_header(Path(path).read_text(encoding="latin-1"))


def read_cube(header: EnviHeader, raw: bytes, apply_scale: bool = True) -> HyperCube:
    """Decode a raw ENVI byte stream into a ``(line, sample, band)`` cube."""
    dtype = header.dtype
    if len(raw) != header.expected_size():
        raise SizeMismatch(f"raw data has {len(raw)} bytes, header implies {header.expected_size()}")
    flat = np.frombuffer(raw, dtype=dtype, offset=header.header_offset)
    L, S, B = header.lines, header.samples, header.bands
    if header.interleave == "bsq":
        data = flat.reshape(B, L, S).transpose(1, 2, 0)
    elif header.interleave == "bil":
        data = flat.reshape(L, B, S).transpose(0, 2, 1)
    else:
        data = flat.reshape(L, S, B)
    data = data.astype(np.float64)
    if header.data_type == 12 and apply_scale and header.reflectance_scale:
        data /= header.reflectance_scale
    if not np.all(np.isfinite(data)):
        raise DataError("cube contains non-finite values")
    return HyperCube(
        np.ascontiguousarray(data),
        None if header.wavelengths is None else np.array(header.wavelengths),
    )


def encode_cube(data: np.ndarray, interleave: str = "bsq", data_type: int = 4, byte_order: int = 0) -> bytes:
    """Inverse of :func:`read_cube` for a ``(line, sample, band)`` array."""
    interleave = interleave.lower()
    if data_type not in DATA_TYPES:
        raise UnsupportedDataType(f"ENVI data type {data_type}")
    dtype = DATA_TYPES[data_type].newbyteorder(">" if byte_order == 1 else "<")
    data = np.asarray(data)
    if interleave == "bsq":
        ordered = data.transpose(2, 0, 1)
    elif interleave == "bil":
        ordered = data.transpose(0, 2, 1)
    elif interleave == "bip":
        ordered = data
    else:
        raise DataError(f"unknown interleave {interleave!r}")
    return np.ascontiguousarray(ordered, dtype=dtype).tobytes()


def find_data_file(header_path) -> Path:
    header_path = Path(header_path)
    stem = header_path.with_suffix("")
    for suffix in DATA_SUFFIXES:
        candidate = Path(str(stem) + suffix)
        if candidate.is_file() and candidate != header_path:
            return candidate
    raise DataError(f"no data file next to {header_path}")


def read_envi(header_path, data_path=None, apply_scale: bool = True) -> HyperCube:
    header = read_header(header_path)
    data_path = find_data_file(header_path) if data_path is None else Path(data_path)
    cube = read_cube(header, data_path.read_bytes(), apply_scale=apply_scale)
    cube.meta["header"] = header
    return cube


def write_envi(header_path, cube: HyperCube, interleave: str = "bsq", data_type: int = 4,
               byte_order: int = 0, extra: dict | None = None) -> Path:
    """Write ``cube`` as ``<stem>.hdr`` + ``<stem>.img``; returns the data path."""
    header_path = Path(header_path)
    data_path = header_path.with_suffix(".img")
    header = EnviHeader(
        samples=cube.samples,
        lines=cube.lines,
        bands=cube.bands,
        interleave=interleave,
        data_type=data_type,
        byte_order=byte_order,
        wavelengths=tuple(float(w) for w in cube.wavelengths),
        extra=dict(extra or {}),
    )
    data_path.write_bytes(encode_cube(cube.data, interleave, data_type, byte_order))
    header_path.write_text(format_envi_header(header), encoding="latin-1")
    return data_path


def read_annotation(path, expected_shape, max_label: int = 8, classes: dict | None = None) -> AnnotationMask:
    """Read per-pixel labels from CSV, flat uint8 binary, or numpy files.

    The format is chosen by extension: ``.csv``/``.txt`` are comma separated
    integers, ``.npy``/``.npz`` are numpy archives (first array is used) and
    anything else is treated as row-major unsigned 8-bit values.
    """
    path = Path(path)
    expected_shape = tuple(int(s) for s in expected_shape)
    suffix = path.suffix.lower()
    if suffix in (".csv", ".txt"):
        rows = [r for r in csv.reader(path.read_text().splitlines()) if r]
        try:
            labels = np.array([[int(v) for v in r] for r in rows], dtype=np.int64)
        except ValueError:
            raise DataError(f"non-integer label in {path}") from None
        if labels.ndim != 2:
            raise ShapeMismatch(f"ragged rows in {path}")
    elif suffix in (".npy", ".npz"):
        loaded = np.load(path)
        if suffix == ".npz":
            loaded = loaded[loaded.files[0]]
        labels = np.asarray(loaded).astype(np.int64)
    else:
        flat = np.fromfile(path, dtype=np.uint8)
        if flat.size != int(np.prod(expected_shape)):
            raise ShapeMismatch(f"{flat.size} labels for shape {expected_shape}")
        labels = flat.reshape(expected_shape).astype(np.int64)
    if labels.shape != expected_shape:
        raise ShapeMismatch(f"mask shape {labels.shape} != expected {expected_shape}")
    if labels.size and (labels.min() < 0 or labels.max() > max_label):
        raise LabelOutOfRange(f"labels must lie in 0..{max_label}")
    return AnnotationMask(labels, dict(classes or CLASS_NAMES))


def write_annotation(path, mask: AnnotationMask | np.ndarray) -> None:
    labels = mask.labels if isinstance(mask, AnnotationMask) else np.asarray(mask)
    path = Path(path)
    if path.suffix.lower() in (".csv", ".txt"):
        path.write_text("\n".join(",".join(str(int(v)) for v in row) for row in labels) + "\n")
    else:
        labels.astype(np.uint8).tofile(path)


@dataclass
class LibraryEntry:
    index: int
    age_label: str
    spectrum: Spectrum


@dataclass
class SpectralLibrary:
    entries: list

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, index: int) -> LibraryEntry:
        for entry in self.entries:
            if entry.index == index:
                return entry
        raise KeyError(index)


_LABEL = re.compile(r"^\s*(\d+)\s*(?::\s*(.*))?$")


def read_spectral_library(path) -> SpectralLibrary:
    """Read a CSV library: wavelength column, then one column per spectrum.

    Header cells after the first are ``index:age`` (e.g. ``24:1h15``), a bare
    integer index, or free text (index then defaults to the column number).
    """
    rows = [r for r in csv.reader(Path(path).read_text().splitlines()) if r]
    if len(rows) < 2 or len(rows[0]) < 2:
        raise EmptyLibrary(f"{path} has no spectra")
    head, body = rows[0], rows[1:]
    try:
        table = np.array([[float(v) for v in r] for r in body], dtype=np.float64)
    except ValueError:
        raise DataError(f"non-numeric entry in {path}") from None
    if table.ndim != 2 or table.shape[1] != len(head):
        raise DataError(f"ragged rows in {path}")
    wavelengths = table[:, 0]
    if np.any(np.diff(wavelengths) <= 0):
        raise NonMonotoneWavelengths(f"{path}: wavelength column not strictly increasing")
    if np.any(table[:, 1:] < 0):
        raise DataError(f"{path}: negative reflectance")
    entries = []
    for col, label in enumerate(head[1:], start=1):
        m = _LABEL.match(label)
        if m:
            index, age = int(m.group(1)), (m.group(2) or "").strip()
        else:
            index, age = col, label.strip()
        entries.append(LibraryEntry(index, age, Spectrum(table[:, col].copy(), wavelengths.copy())))
    return SpectralLibrary(entries)


def write_spectral_library(path, library: SpectralLibrary) -> None:
    if not library.entries:
        raise EmptyLibrary("nothing to write")
    wl = library.entries[0].spectrum.wavelengths
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["wavelength"] + [f"{e.index}:{e.age_label}" for e in library.entries])
        for i, w in enumerate(wl):
            writer.writerow([repr(float(w))] + [repr(float(e.spectrum.values[i])) for e in library.entries])
