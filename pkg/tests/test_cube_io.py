import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_array_equal

from hsiblood.core import HyperCube, Spectrum
from hsiblood.cube_io import (EnviHeader, LibraryEntry, SpectralLibrary, encode_cube, format_envi_header,
                              parse_envi_header, read_annotation, read_cube, read_envi, read_header,
                              read_spectral_library, write_annotation, write_envi, write_spectral_library)
from hsiblood.errors import (DataError, EmptyLibrary, LabelOutOfRange, LengthMismatch, MalformedList,
                             MissingMagic, MissingRequiredKey, NonMonotoneWavelengths, ShapeMismatch,
                             SizeMismatch, UnsupportedDataType)

MINIMAL = "ENVI\nsamples = 4\nlines = 2\nbands = 3\ninterleave = bsq\ndata type = 4\nbyte order = 0"
CUBE = np.arange(24, dtype=np.float64).reshape(2, 4, 3) * 0.25 + 1.0

VALID_HEADERS = ["minimal", "wavelengths", "micrometers", "multiline_list", "case_spacing", "unknown_keys",
                 "band_names", "offset", "cube_bsq", "cube_bil", "cube_bip", "cube_bip_be64", "uint16_scaled"]
BAD_HEADERS = [
    ("bad_missing_magic", MissingMagic),
    ("bad_missing_samples", MissingRequiredKey),
    ("bad_missing_interleave", MissingRequiredKey),
    ("bad_unbalanced_brace", MalformedList),
    ("bad_stray_close", MalformedList),
    ("bad_wavelength_length", LengthMismatch),
    ("bad_fwhm_length", LengthMismatch),
    ("bad_data_type", UnsupportedDataType),
]


def test_minimal_header():
    h = parse_envi_header(MINIMAL)
    assert (h.samples, h.lines, h.bands) == (4, 2, 3)
    assert h.interleave == "bsq" and h.data_type == 4 and h.byte_order == 0
    assert h.wavelengths is None
    assert h.summary() == "4×2×3 bsq float32"


def test_wavelength_list_echo():
    h = parse_envi_header(MINIMAL + "\nwavelength = {400.0, 500.0, 600.0}")
    assert h.wavelengths == (400.0, 500.0, 600.0)


def test_short_wavelength_list():
    with pytest.raises(LengthMismatch):
        parse_envi_header(MINIMAL + "\nwavelength = {400.0, 500.0}")


def test_micrometers_converted(fixtures):
    h = read_header(fixtures / "envi" / "micrometers.hdr")
    assert h.wavelengths == pytest.approx((400.0, 500.0, 600.0))


def test_keys_case_and_space_insensitive(fixtures):
    assert read_header(fixtures / "envi" / "case_spacing.hdr") == read_header(fixtures / "envi" / "minimal.hdr")


def test_unknown_keys_preserved(fixtures):
    h = read_header(fixtures / "envi" / "unknown_keys.hdr")
    assert h.extra["sensor type"] == "Unknown"
    assert "windowless" in h.extra["description"]


def test_multiline_list(fixtures):
    h = read_header(fixtures / "envi" / "multiline_list.hdr")
    assert h.wavelengths == (400.5, 500.25, 600.125)


@pytest.mark.parametrize("name", VALID_HEADERS)
def test_header_round_trip(fixtures, name):
    h = read_header(fixtures / "envi" / f"{name}.hdr")
    assert parse_envi_header(format_envi_header(h)) == h


@pytest.mark.parametrize("name,error", BAD_HEADERS)
def test_header_errors(fixtures, name, error):
    with pytest.raises(error):
        read_header(fixtures / "envi" / f"{name}.hdr")


def test_error_families():
    # the CLI maps these families to distinct exit codes
    for err in (MissingMagic, MissingRequiredKey, MalformedList, LengthMismatch, SizeMismatch):
        assert issubclass(err, DataError)


@pytest.mark.parametrize("name", ["cube_bsq", "cube_bil", "cube_bip", "cube_bip_be64", "offset"])
def test_fixture_cubes_decode_identically(fixtures, name):
    cube = read_envi(fixtures / "envi" / f"{name}.hdr")
    assert_array_equal(cube.data, CUBE)


def test_interleave_small_example():
    values = np.arange(8, dtype=np.float64).reshape(2, 2, 2)
    decoded = []
    for il in ("bsq", "bip"):
        h = EnviHeader(samples=2, lines=2, bands=2, interleave=il)
        decoded.append(read_cube(h, encode_cube(values, il)).data)
    assert_array_equal(decoded[0], decoded[1])
    assert_array_equal(decoded[0], values)


def test_bsq_byte_layout():
    # band-sequential: all of band 0 first, row-major within the band
    values = np.arange(8, dtype=np.float64).reshape(2, 2, 2)
    raw = np.frombuffer(encode_cube(values, "bsq"), dtype="<f4")
    assert_array_equal(raw, [0, 2, 4, 6, 1, 3, 5, 7])


def test_one_byte_short(fixtures):
    h = read_header(fixtures / "envi" / "bad_truncated.hdr")
    raw = (fixtures / "envi" / "bad_truncated.img").read_bytes()
    with pytest.raises(SizeMismatch):
        read_cube(h, raw)


def test_uint16_full_scale(fixtures):
    cube = read_envi(fixtures / "envi" / "uint16_scaled.hdr")
    assert set(np.unique(cube.data)) <= {0.0, 1.0, 2048 / 4095, 1024 / 4095}
    assert cube.data.min() == 0.0 and cube.data.max() == 1.0


def test_uint16_unscaled(fixtures):
    h = read_header(fixtures / "envi" / "uint16_scaled.hdr")
    raw = (fixtures / "envi" / "uint16_scaled.img").read_bytes()
    cube = read_cube(h, raw, apply_scale=False)
    assert cube.data.max() == 4095.0


def test_wavelengths_default_to_band_index(fixtures):
    cube = read_envi(fixtures / "envi" / "minimal.hdr", fixtures / "envi" / "cube_bsq.img")
    assert_array_equal(cube.wavelengths, [0.0, 1.0, 2.0])


@settings(max_examples=60, deadline=None)
@given(
    data=arrays(np.float32, st.tuples(st.integers(1, 5), st.integers(1, 5), st.integers(1, 6)),
                elements=st.floats(-1e6, 1e6, width=32)),
    order=st.sampled_from([0, 1]),
    dtype=st.sampled_from([4, 5]),
)
def test_interleave_round_trip(data, order, dtype):
    L, S, B = data.shape
    decoded = []
    for il in ("bsq", "bil", "bip"):
        h = EnviHeader(samples=S, lines=L, bands=B, interleave=il, data_type=dtype, byte_order=order)
        decoded.append(read_cube(h, encode_cube(data, il, dtype, order)).data)
    for d in decoded:
        assert_array_equal(d, data.astype(np.float64))


@settings(max_examples=30, deadline=None)
@given(arrays(np.uint16, st.tuples(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))),
       st.floats(1.0, 1e4))
def test_uint16_range(data, scale):
    L, S, B = data.shape
    h = EnviHeader(samples=S, lines=L, bands=B, interleave="bip", data_type=12, reflectance_scale=scale)
    cube = read_cube(h, encode_cube(data, "bip", 12))
    assert cube.data.min() >= 0 and cube.data.max() <= 65535 / scale


def test_write_read_envi(tmp_path):
    cube = HyperCube(CUBE.copy(), np.array([450.0, 550.0, 650.0]))
    write_envi(tmp_path / "c.hdr", cube, "bil", 5, 1, {"description": "{test}"})
    back = read_envi(tmp_path / "c.hdr")
    assert_array_equal(back.data, CUBE)
    assert_array_equal(back.wavelengths, cube.wavelengths)
    assert back.meta["header"].extra["description"] == "{test}"


# annotations


def test_annotation_csv(fixtures):
    m = read_annotation(fixtures / "annotations" / "mask_2x2.csv", (2, 2))
    assert_array_equal(m.labels, [[0, 1], [8, 0]])


def test_annotation_label_nine(fixtures):
    with pytest.raises(LabelOutOfRange):
        read_annotation(fixtures / "annotations" / "mask_label9.csv", (2, 2))


def test_annotation_wrong_rows(fixtures):
    with pytest.raises(ShapeMismatch):
        read_annotation(fixtures / "annotations" / "mask_3rows.csv", (2, 2))


def test_annotation_u8(fixtures):
    m = read_annotation(fixtures / "annotations" / "mask_2x4.u8", (2, 4))
    assert_array_equal(m.labels, [[0, 1, 1, 0], [8, 0, 3, 2]])
    with pytest.raises(ShapeMismatch):
        read_annotation(fixtures / "annotations" / "mask_2x4.u8", (3, 3))


@pytest.mark.parametrize("suffix", [".csv", ".u8"])
def test_annotation_round_trip(tmp_path, suffix):
    labels = np.random.default_rng(0).integers(0, 9, size=(5, 7))
    write_annotation(tmp_path / f"m{suffix}", labels)
    assert_array_equal(read_annotation(tmp_path / f"m{suffix}", (5, 7)).labels, labels)


def test_annotation_npz(tmp_path):
    labels = np.eye(3, dtype=np.uint8)
    np.savez(tmp_path / "m.npz", gt=labels)
    assert_array_equal(read_annotation(tmp_path / "m.npz", (3, 3)).labels, labels)


# libraries


def test_library_one_entry(fixtures):
    lib = read_spectral_library(fixtures / "libraries" / "one_entry.csv")
    assert len(lib) == 1
    e = lib.entries[0]
    assert (e.index, e.age_label) == (20, "1 day")
    assert_array_equal(e.spectrum.wavelengths, [400, 500, 600])


def test_library_order(fixtures):
    lib = read_spectral_library(fixtures / "libraries" / "three_entries.csv")
    assert [e.index for e in lib.entries] == [5, 12, 24]
    assert lib.get(12).age_label == "7 days"


@pytest.mark.parametrize("name,error", [("descending", NonMonotoneWavelengths), ("empty", EmptyLibrary)])
def test_library_errors(fixtures, name, error):
    with pytest.raises(error):
        read_spectral_library(fixtures / "libraries" / f"{name}.csv")


def test_library_round_trip(tmp_path):
    wl = np.array([400.0, 450.5, 700.25])
    lib = SpectralLibrary([LibraryEntry(3, "2 days", Spectrum(np.array([0.1, 0.2, 0.3]), wl)),
                           LibraryEntry(9, "", Spectrum(np.array([1.0, 0.5, 1 / 3]), wl))])
    write_spectral_library(tmp_path / "lib.csv", lib)
    back = read_spectral_library(tmp_path / "lib.csv")
    assert [(e.index, e.age_label) for e in back.entries] == [(3, "2 days"), (9, "")]
    for a, b in zip(lib.entries, back.entries):
        assert_array_equal(a.spectrum.values, b.spectrum.values)
