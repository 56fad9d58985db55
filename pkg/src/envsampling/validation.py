"""Statistical and structural checks for importance tables."""

from __future__ import annotations

import numpy as np
from scipy import stats

from .estimator import EstimatorConfig, estimate_sphere_integral
from .importance import pdf, sample
from .projection import direction_to_square


def chi_square_bins(counts: np.ndarray, probs: np.ndarray, min_expected: float = 5.0):
    """Pearson test of bin counts against bin probabilities.

    Bins whose expected count is below ``min_expected`` are pooled into one
    extra cell (kept only if the pooled expectation reaches the threshold).
    Returns ``(statistic, dof, p_value)``.
    """
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    expected = total * np.asarray(probs, dtype=np.float64)
    keep = expected >= min_expected
    obs = list(counts[keep])
    exp = list(expected[keep])
    rest_e = expected[~keep].sum()
    if rest_e >= min_expected:
        obs.append(counts[~keep].sum())
        exp.append(rest_e)
    obs = np.array(obs)
    exp = np.array(exp)
    if obs.size < 2:
        return 0.0, 0, 1.0
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = obs.size - 1
    return stat, dof, float(stats.chi2.sf(stat, dof))


def boundary_distance_ulps(table, square) -> np.ndarray:
    """Distance of each square point to the nearest bin edge, in ulps of the coordinate."""
    out = []
    for c in (np.asarray(square.u), np.asarray(square.v)):
        scaled = c * table.n
        edge = np.round(scaled) / table.n
        out.append(np.abs(c - edge) / np.spacing(np.maximum(np.abs(c), np.abs(edge))))
    return np.minimum(out[0], out[1])


def validate_table(table, n_samples: int, seed: int, env=None):
    """Run every table check; yields ``(name, passed, detail)``."""
    checks = []
    M, Ms, Mcs = table.M, table.Ms, table.Mcs
    total = float(np.sum(M))
    ok = bool(np.all(np.isfinite(M)) and np.all(M >= 0) and abs(total - 1.0) <= 1e-9)
    checks.append(("normalization", ok, f"sum M = {total!r}"))

    perm = bool(np.array_equal(np.sort(Ms), np.arange(table.n_bins)))
    checks.append(("permutation", perm, "Ms is a permutation" if perm else "Ms is not a permutation"))
    if not perm:
        return checks

    sorted_m = M[Ms]
    coherent = bool(
        np.all(np.diff(sorted_m) <= 0)
        and np.all(np.diff(Mcs) >= 0)
        and abs(Mcs[0] - M.max()) <= 1e-12
        and abs(Mcs[-1] - 1.0) <= 1e-9
        and np.all(np.abs(np.diff(Mcs) - sorted_m[1:]) <= 1e-12)
    )
    checks.append(("coherence", coherent, f"Mcs[0] = {float(Mcs[0])!r}, Mcs[-1] = {float(Mcs[-1])!r}"))
    if not (ok and coherent):
        return checks

    rng = np.random.default_rng(seed)
    rec = sample(table, rng, n_samples)
    mismatch = pdf(table, rec.direction) != rec.pdf
    near_edge = boundary_distance_ulps(table, rec.square) <= 4
    bad = int(np.count_nonzero(mismatch & ~near_edge))
    exempt = int(np.count_nonzero(mismatch & near_edge))
    consistent = bad == 0 and exempt < 1e-4 * n_samples
    checks.append(("sample_pdf", consistent, f"{bad} mismatches, {exempt} at bin edges"))

    zero_hits = int(np.count_nonzero(M[rec.bin] == 0))
    checks.append(("zero_bins", zero_hits == 0, f"{zero_hits} samples in zero bins"))

    counts = np.bincount(table.bin_of(direction_to_square(rec.direction)), minlength=table.n_bins)
    stat, dof, p = chi_square_bins(counts, M)
    checks.append(("chi_square", p > 1e-3, f"chi2 = {stat:.2f}, dof = {dof}, p = {p:.4g}"))

    if env is not None:
        trials = 10
        n = max(n_samples // trials, 2)
        imp = estimate_sphere_integral(env, table, EstimatorConfig("env_importance", n, trials, seed + 1))
        uni = estimate_sphere_integral(env, None, EstimatorConfig("uniform", n, trials, seed + 2))
        err = np.sqrt(imp.std_error**2 + uni.std_error**2)
        diff = np.abs(imp.mean - uni.mean)
        agree = bool(np.all(diff <= 4 * err + 1e-12 * np.abs(uni.mean)))
        checks.append(("unbiased", agree, f"importance {imp.mean[0]:.6g} vs uniform {uni.mean[0]:.6g} (channel 0)"))
    return checks
