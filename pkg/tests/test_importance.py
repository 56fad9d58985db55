import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from envsampling.envmap import AnalyticMap, ConstantSky, GradientSky, rasterize_analytic
from envsampling.estimator import frame
from envsampling.errors import BuildError, CorruptionError, FormatError
from envsampling.importance import (
    MAGIC,
    ImportanceTable,
    build_table,
    load_table,
    pdf,
    sample,
    save_table,
    select_bins,
    table_from_importance,
    table_images,
    table_to_images,
)
from envsampling.pfm import load_pfm
from envsampling.projection import SquarePoint, direction_to_square, square_to_direction, uniform_sphere
from envsampling.validation import chi_square_bins

from conftest import SUN_AXIS, sun_sky


def single_bin_sky(n, i, j, value=2.0):
    """Radiance ``value`` on the spherical patch of bin (i, j), zero elsewhere."""

    def fn(d):
        u, v = direction_to_square(d)
        inside = (np.floor(u * n) == i) & (np.floor(v * n) == j)
        return np.where(inside[..., None], value, 0.0)

    return AnalyticMap(fn)


def random_table(rng, n):
    raw = rng.random(n * n) ** 4
    raw[rng.random(n * n) < 0.2] = 0.0
    return table_from_importance(raw, n)


class TestBuild:
    @pytest.mark.parametrize("n", [1, 3, 16])
    def test_constant(self, n):
        t = build_table(ConstantSky(0.4), n)
        np.testing.assert_allclose(t.M, 1.0 / n**2, rtol=1e-12)
        np.testing.assert_allclose(t.Mcs, np.arange(1, n * n + 1) / n**2, rtol=1e-12)
        np.testing.assert_array_equal(t.Ms, np.arange(n * n))
        assert t.check() == []

    def test_single_bin(self):
        t = build_table(single_bin_sky(4, 1, 2), 4)
        assert np.count_nonzero(t.M) == 1
        assert t.M[1 * 4 + 2] == 1.0
        assert t.Ms[0] == 6
        assert t.Mcs[0] == 1.0

    def test_flat_index_is_i_major(self):
        # bin (i, j) = (3, 0): u in [3/4, 1), v in [0, 1/4)
        t = build_table(single_bin_sky(4, 3, 0), 4)
        assert np.argmax(t.M) == 12

    def test_all_black_is_error(self):
        with pytest.raises(BuildError, match="zero total importance"):
            build_table(ConstantSky(0.0), 8)

    def test_ties_sorted_by_index(self):
        t = table_from_importance(np.array([1.0, 3.0, 1.0, 3.0]), 2)
        np.testing.assert_array_equal(t.Ms, [1, 3, 0, 2])

    def test_luminance_measure(self):
        env = ConstantSky((1.0, 0.0, 0.0))
        t = build_table(env, 4, measure="luminance")
        assert t.i_total == pytest.approx(16 * 0.2126)
        with pytest.raises(ValueError):
            build_table(env, 4, measure="max")

    def test_i_total_is_raw_sum(self):
        t = build_table(ConstantSky((1.0, 2.0, 3.0)), 8)
        assert t.i_total == pytest.approx(64 * 6.0)

    def test_supersample_averages_bin(self):
        # a gradient's stratified bin mean converges to the patch mean; a 1x1 build uses the centre only
        env = GradientSky((1.0, 1.0, 1.0), (0.0, 0.0, 0.0))
        t1 = build_table(env, 4, supersample=1)
        t8 = build_table(env, 4, supersample=8)
        assert t1.check() == [] and t8.check() == []
        assert not np.allclose(t1.M, t8.M)

    def test_sun_mass_against_cap_oracle(self, sun):
        n = 64
        rng = np.random.default_rng(99)
        # oracle: uniform samples inside the cap give each bin's share of the sun's solid angle
        m = 10**6
        cos_t = 1 - rng.random(m) * (1 - sun.cos_radius)
        phi = 2 * np.pi * rng.random(m)
        sin_t = np.sqrt(1 - cos_t**2)
        d = np.stack([sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t], axis=-1) @ frame(sun.axis)
        u, v = direction_to_square(d)
        idx = np.minimum((u * n).astype(int), n - 1) * n + np.minimum((v * n).astype(int), n - 1)
        omega = sun.solid_angle
        sun_area = np.bincount(idx, minlength=n * n) / m * omega
        s = 4 * np.pi / n**2
        total = 1000 * omega + (4 * np.pi - omega)
        oracle = (1000 * sun_area + (s - sun_area)) / total
        sun_bins = np.flatnonzero(sun_area)

        q = omega / (4 * np.pi)
        expected = 1000 * q / (1000 * q + (1 - q))
        assert oracle[sun_bins].sum() == pytest.approx(expected, rel=0.01)

        t = build_table(sun, n, supersample=16)
        assert t.M[sun_bins].sum() == pytest.approx(expected, rel=0.02)
        assert np.abs(t.M - oracle).max() < 0.1 * oracle.max()


class TestTableInvariants:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 24), st.integers(0, 2**32 - 1))
    def test_random_tables(self, n, seed):
        rng = np.random.default_rng(seed)
        raw = rng.random(n * n) ** rng.integers(1, 8)
        raw[rng.random(n * n) < 0.3] = 0.0
        raw[rng.integers(n * n)] += 1.0
        t = table_from_importance(raw, n)
        assert abs(t.M.sum() - 1) <= 1e-9
        assert np.all(np.diff(t.M[t.Ms]) <= 0)
        assert np.all(np.diff(t.Mcs) >= 0)
        assert abs(t.Mcs[0] - t.M.max()) <= 1e-12
        assert abs(t.Mcs[-1] - 1) <= 1e-9
        np.testing.assert_array_equal(np.sort(t.Ms), np.arange(n * n))
        assert np.all(np.abs(np.diff(t.Mcs) - t.M[t.Ms][1:]) <= 1e-12)
        assert t.check() == []

    def test_bin_solid_angle(self):
        t = build_table(ConstantSky(1.0), 8)
        assert t.s == t.bin_solid_angle == pytest.approx(4 * np.pi / 64)

    def test_entropy(self):
        assert build_table(ConstantSky(1.0), 8).entropy() == pytest.approx(np.log(64))
        assert build_table(single_bin_sky(4, 0, 0), 4).entropy() == 0.0


class TestPdf:
    def test_constant(self, rng):
        t = build_table(ConstantSky(1.0), 16)
        np.testing.assert_allclose(pdf(t, uniform_sphere(rng, 10**4)), 1 / (4 * np.pi), rtol=1e-12)

    def test_single_bin(self):
        t = build_table(single_bin_sky(4, 1, 2), 4)
        inside = square_to_direction(SquarePoint(1.5 / 4, 2.5 / 4))
        outside = square_to_direction(SquarePoint(0.1, 0.9))
        assert pdf(t, inside) == pytest.approx(16 / (4 * np.pi))
        assert pdf(t, outside) == 0.0

    def test_border_clamps_to_last_bin(self):
        t = build_table(single_bin_sky(4, 3, 1), 4)
        # south pole lands on the border u = 1; the clamp must yield a valid bin
        assert t.bin_of(SquarePoint(1.0, 0.3)) == 3 * 4 + 1
        assert np.isfinite(pdf(t, np.array([0.0, 0.0, -1.0])))

    def test_integrates_to_one(self, sun_table_64):
        t = sun_table_64
        assert np.sum(t.bin_pdf(np.arange(t.n_bins)) * t.s) == pytest.approx(1.0, abs=1e-12)

    def test_monte_carlo_integral(self, sun_table_64, rng):
        d = uniform_sphere(rng, 10**6)
        est = 4 * np.pi * pdf(sun_table_64, d).mean()
        assert est == pytest.approx(1.0, rel=0.05)


class TestSample:
    def test_single_bin(self, rng):
        t = build_table(single_bin_sky(4, 1, 2), 4)
        rec = sample(t, rng, 10**4)
        assert np.all(rec.bin == 6)
        assert np.all(t.bin_of(direction_to_square(rec.direction)) == 6)
        np.testing.assert_allclose(rec.pdf, 16 / (4 * np.pi))

    def test_scalar(self, rng):
        t = build_table(ConstantSky(1.0), 4)
        rec = sample(t, rng)
        assert rec.direction.shape == (3,)
        assert np.ndim(rec.pdf) == 0

    def test_strict_selection_skips_zero_bins(self):
        t = table_from_importance(np.array([0.0, 0.5, 0.0, 0.5]), 2)
        # Mcs = [0.5, 1.0, 1.0, 1.0]; r exactly on a cumulative value goes to the next bin
        np.testing.assert_array_equal(select_bins(t, np.array([0.0, 0.49, 0.5, 0.999999])), [1, 1, 3, 3])

    def test_last_cumulative_below_one(self):
        raw = np.array([1.0, 1.0, 1.0, 0.0])
        t = table_from_importance(raw, 2)
        broken = ImportanceTable(2, t.M, t.Ms, t.Mcs * (1 - 1e-15))
        # r above the rounded final sum still selects a positive bin
        assert broken.M[select_bins(broken, np.array([np.nextafter(1.0, 0.0)]))[0]] > 0

    def test_zero_bins_never_sampled(self, rng):
        sky = sun_sky(sky=0.0)
        t = build_table(sky, 32, supersample=4)
        assert np.count_nonzero(t.M == 0) > 0
        rec = sample(t, rng, 10**5)
        assert np.all(t.M[rec.bin] > 0)
        assert np.all(t.M[t.bin_of(direction_to_square(rec.direction))] > 0)

    def test_pdf_matches_lookup(self, sun_table_64, rng):
        rec = sample(sun_table_64, rng, 10**5)
        assert np.mean(pdf(sun_table_64, rec.direction) == rec.pdf) > 0.9999

    def test_constant_uniform_bins(self, rng):
        t = build_table(ConstantSky(1.0), 16)
        rec = sample(t, rng, 10**6)
        counts = np.bincount(t.bin_of(direction_to_square(rec.direction)), minlength=256)
        _, _, p = chi_square_bins(counts, np.full(256, 1 / 256))
        assert p > 1e-3

    def test_sun_bins_match_table(self, rng):
        t = build_table(sun_sky(), 32, supersample=4)
        rec = sample(t, rng, 10**6)
        counts = np.bincount(t.bin_of(direction_to_square(rec.direction)), minlength=t.n_bins)
        _, _, p = chi_square_bins(counts, t.M)
        assert p > 1e-3

    def test_within_bin_uniform_on_sphere(self, rng):
        # jitter inside one bin is uniform over its spherical patch: compare the
        # mean direction of samples with a dense forward-mapped reference
        n = 4
        t = build_table(single_bin_sky(n, 2, 1), n)
        rec = sample(t, rng, 2 * 10**5)
        ref = uniform_sphere(rng, 4 * 10**6)
        u, v = direction_to_square(ref)
        ref = ref[(np.floor(u * n) == 2) & (np.floor(v * n) == 1)]
        se = np.sqrt(ref.var(axis=0) / ref.shape[0] + rec.direction.var(axis=0) / rec.direction.shape[0])
        assert np.all(np.abs(rec.direction.mean(axis=0) - ref.mean(axis=0)) < 4 * se)

    def test_seeded(self):
        t = build_table(sun_sky(), 16, supersample=2)
        a = sample(t, np.random.default_rng(5), 100)
        b = sample(t, np.random.default_rng(5), 100)
        assert a.direction.tobytes() == b.direction.tobytes()


class TestSerialization:
    def test_round_trip(self, tmp_path, rng):
        t = random_table(rng, 13)
        p = tmp_path / "t.eimt"
        save_table(t, p)
        back = load_table(p)
        assert back.n == 13
        for name in ("M", "Ms", "Mcs"):
            assert getattr(back, name).tobytes() == getattr(t, name).astype(getattr(back, name).dtype).tobytes()

    def test_layout(self, tmp_path):
        t = build_table(ConstantSky(1.0), 2)
        p = tmp_path / "t.eimt"
        save_table(t, p)
        raw = p.read_bytes()
        assert raw[:4] == MAGIC
        assert raw[4:12] == b"\x01\x00\x00\x00\x02\x00\x00\x00"
        assert len(raw) == 12 + 4 * (8 + 4 + 8)
        np.testing.assert_array_equal(np.frombuffer(raw, "<u4", 4, 12 + 32), t.Ms)

    def test_truncated(self, tmp_path):
        p = tmp_path / "t.eimt"
        save_table(build_table(ConstantSky(1.0), 4), p)
        p.write_bytes(p.read_bytes()[:-9])
        with pytest.raises(FormatError, match="bytes"):
            load_table(p)
        p.write_bytes(b"EIM")
        with pytest.raises(FormatError):
            load_table(p)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "t.eimt"
        save_table(build_table(ConstantSky(1.0), 4), p)
        p.write_bytes(b"XXXX" + p.read_bytes()[4:])
        with pytest.raises(FormatError, match="magic"):
            load_table(p)

    def test_version_mismatch(self, tmp_path):
        p = tmp_path / "t.eimt"
        save_table(build_table(ConstantSky(1.0), 4), p)
        raw = bytearray(p.read_bytes())
        raw[4] = 7
        p.write_bytes(bytes(raw))
        with pytest.raises(FormatError, match="version 7.*version 1"):
            load_table(p)

    def test_corrupted_entry(self, tmp_path):
        p = tmp_path / "t.eimt"
        save_table(build_table(ConstantSky(1.0), 4), p)
        raw = bytearray(p.read_bytes())
        raw[12:20] = np.float64(0.5).tobytes()
        p.write_bytes(bytes(raw))
        with pytest.raises(CorruptionError, match="sum of M"):
            load_table(p)
        assert load_table(p, check=False).M[0] == 0.5

    def test_corrupted_permutation(self, tmp_path):
        p = tmp_path / "t.eimt"
        t = build_table(ConstantSky(1.0), 4)
        save_table(t, p)
        raw = bytearray(p.read_bytes())
        off = 12 + 8 * 16
        raw[off : off + 4] = np.uint32(5).tobytes()
        p.write_bytes(bytes(raw))
        with pytest.raises(CorruptionError, match="permutation"):
            load_table(p)


class TestImages:
    def test_constant_gray(self):
        pdf_img, rank_img = table_images(build_table(ConstantSky(1.0), 8))
        assert pdf_img.channels == 1
        assert np.all(pdf_img.pixels == np.float32(1 / 64))
        assert rank_img.pixels.max() == 1.0 and rank_img.pixels.min() == 0.0

    def test_single_bin_white(self):
        pdf_img, rank_img = table_images(build_table(single_bin_sky(4, 1, 2), 4))
        assert pdf_img.pixels[2, 1, 0] == 1.0
        assert np.count_nonzero(pdf_img.pixels) == 1
        assert rank_img.pixels[2, 1, 0] == 1.0

    def test_sun_brightest_bin(self):
        t = build_table(sun_sky(), 256)
        pdf_img, _ = table_images(t)
        u, v = direction_to_square(SUN_AXIS)
        # the sun spans several bins at N = 256; the axis bin is one of the brightest
        assert pdf_img.pixels[int(v * 256), int(u * 256), 0] == pdf_img.pixels.max()
        assert t.M[t.Ms[0]] == t.M[int(u * 256) * 256 + int(v * 256)]

    def test_files(self, tmp_path):
        t = build_table(sun_sky(), 16, supersample=2)
        table_to_images(t, tmp_path / "m.pfm", tmp_path / "r.pfm")
        assert load_pfm(tmp_path / "m.pfm").pixels.tobytes() == table_images(t)[0].pixels.tobytes()
        assert load_pfm(tmp_path / "r.pfm").width == 16


class TestParameterizationIndependence:
    """Smooth skies give nearly the same table from either raster layout."""

    @staticmethod
    def tables(sky):
        eq = rasterize_analytic(sky, "equirect", width=1024, height=512)
        cube = rasterize_analytic(sky, "cube", face_size=256)
        return build_table(eq, 64, supersample=2), build_table(cube, 64, supersample=2)

    @settings(max_examples=6, deadline=None)
    @given(
        st.floats(-1.4, 1.4),
        st.floats(0.0, 2 * np.pi, exclude_max=True),
        st.floats(2.0, 40.0),
    )
    def test_smooth_lobe(self, lat, lon, sharpness):
        axis = np.array([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)])
        sky = AnalyticMap(lambda d: 0.1 + np.exp(sharpness * (d @ axis - 1.0))[..., None])
        t_eq, t_cube = self.tables(sky)
        assert np.max(np.abs(t_eq.M - t_cube.M)) < 5e-3

    def test_gradient(self):
        t_eq, t_cube = self.tables(GradientSky([1.0, 0.8, 0.6], 0.05))
        assert np.max(np.abs(t_eq.M - t_cube.M)) < 1e-5
