import numpy as np
import pytest

from radiopage import recovery
from radiopage.raster import rgb565_to_rgb888
from radiopage.recovery import (GappedPage, RecoveryError, fill_map,
                                interpolate, mean_abs_pixel_error,
                                render_unrepaired, repair_quality)
from tests.conftest import make_page


def grid_with_columns(values):
    """(h=4) page whose column c is the constant values[c]."""
    arr = np.tile(np.asarray(values, dtype=np.uint16), (4, 1))
    return make_page(arr)


def test_constant_page_fixed_point():
    page = make_page(np.full((20, 30), 0x1234, dtype=np.uint16))
    out = interpolate(GappedPage(page, [3, 7, 8, 29]))
    assert np.array_equal(out.pixels, page.pixels)


def test_left_priority_on_tie():
    page = grid_with_columns([100, 0, 300])
    out = interpolate(GappedPage(page, [1]))
    assert out.pixels[0, 1] == 100  # equidistant: left wins


def test_leading_gap_falls_back_right():
    page = grid_with_columns([0, 200, 300])
    out = interpolate(GappedPage(page, [0]))
    assert out.pixels[0, 0] == 200


def test_strict_nearest_either_side():
    # columns: A _ _ B ; first gap nearer A, second nearer B
    page = grid_with_columns([10, 0, 0, 40])
    out = interpolate(GappedPage(page, [1, 2]))
    assert out.pixels[0, 1] == 10
    assert out.pixels[0, 2] == 40


def test_received_columns_never_modified():
    rng = np.random.default_rng(0)
    page = make_page(rng.integers(0, 65536, (50, 60)).astype(np.uint16))
    missing = [5, 6, 30, 59]
    out = interpolate(GappedPage(page, missing))
    ok = [c for c in range(60) if c not in missing]
    assert np.array_equal(out.pixels[:, ok], page.pixels[:, ok])


def test_interpolation_idempotent_and_deterministic():
    rng = np.random.default_rng(1)
    page = make_page(rng.integers(0, 65536, (40, 40)).astype(np.uint16))
    gapped = GappedPage(page, [0, 1, 17, 39])
    once = interpolate(gapped)
    again = interpolate(GappedPage(once, []))
    third = interpolate(gapped)
    assert np.array_equal(once.pixels, again.pixels)
    assert np.array_equal(once.pixels, third.pixels)


def test_all_columns_missing_is_error():
    page = make_page(np.zeros((5, 5), dtype=np.uint16))
    with pytest.raises(RecoveryError):
        interpolate(GappedPage(page, [0, 1, 2, 3, 4]))


def test_fill_map_mixed_case():
    src = fill_map(8, [0, 3, 4, 7])
    #            0  1  2  3  4  5  6  7
    assert list(src) == [1, 1, 2, 2, 5, 5, 6, 6]


def test_repair_quality_zero_when_nothing_missing():
    rng = np.random.default_rng(2)
    page = make_page(rng.integers(0, 65536, (30, 30)).astype(np.uint16))
    gapped = GappedPage(page, [])
    metrics = repair_quality(page, interpolate(gapped), render_unrepaired(gapped))
    assert metrics["mean_abs_pixel_error_repaired"] == 0.0
    assert metrics["mean_abs_pixel_error_unrepaired"] == 0.0


def test_repair_quality_constant_page_half_missing():
    page = make_page(np.full((20, 40), 0xFFFF, dtype=np.uint16))
    missing = list(range(0, 40, 2))
    gapped = GappedPage(page, missing)
    metrics = repair_quality(page, interpolate(gapped), render_unrepaired(gapped))
    assert metrics["mean_abs_pixel_error_repaired"] == 0.0
    assert metrics["mean_abs_pixel_error_unrepaired"] > 0.0


def test_repair_beats_black_on_natural_pages(norm_corpus):
    rng = np.random.default_rng(3)
    for page in norm_corpus[:3]:
        missing = sorted(rng.choice(page.width_px, page.width_px // 10,
                                    replace=False).tolist())
        damaged = page.pixels.copy()
        damaged[:, missing] = 0
        gapped = GappedPage(make_page(damaged, url=page.url), missing)
        metrics = repair_quality(page, interpolate(gapped),
                                 render_unrepaired(gapped))
        assert metrics["mean_abs_pixel_error_repaired"] < \
            metrics["mean_abs_pixel_error_unrepaired"]


def test_mean_abs_error_dimension_guard():
    with pytest.raises(RecoveryError):
        mean_abs_pixel_error(np.zeros((2, 2, 3)), np.zeros((3, 2, 3)))


def test_monotone_degradation_nested_losses(norm_corpus):
    page = norm_corpus[1]
    truth = rgb565_to_rgb888(page.pixels)
    perm = np.random.default_rng(4).permutation(page.width_px)
    errors = []
    for rate in (0.05, 0.10, 0.20, 0.50):
        missing = sorted(perm[: int(rate * page.width_px)].tolist())
        damaged = page.pixels.copy()
        damaged[:, missing] = 0
        repaired = interpolate(GappedPage(make_page(damaged), missing))
        errors.append(mean_abs_pixel_error(truth, rgb565_to_rgb888(repaired.pixels)))
    assert all(b >= a for a, b in zip(errors, errors[1:]))
