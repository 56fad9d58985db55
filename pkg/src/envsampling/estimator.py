"""Monte Carlo estimators over an environment map.

Two integrals are supported:

* the sphere integral ``int L(d) dw`` (uniform or table sampling);
* irradiance ``int L(d) max(0, n.d) dw`` about a normal (uniform, table,
  cosine-weighted, or both combined with the balance heuristic).

Each trial draws ``n_samples`` samples from its own generator seeded by
``(seed, trial)``, so results do not depend on execution order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .importance import ImportanceTable, pdf as table_pdf, sample as table_sample
from .projection import normalize, uniform_sphere

STRATEGIES = ("uniform", "env_importance", "cosine", "mis_balance")
STRATEGY_ALIASES = {"env": "env_importance", "mis": "mis_balance"}
CHANNELS = ("r", "g", "b")


@dataclass(frozen=True)
class EstimatorConfig:
    strategy: str
    n_samples: int
    trials: int = 1
    seed: int = 0

    def __post_init__(self):
        strategy = STRATEGY_ALIASES.get(self.strategy, self.strategy)
        if strategy not in STRATEGIES:
            raise ConfigurationError(f"unknown strategy {self.strategy!r}")
        object.__setattr__(self, "strategy", strategy)
        if self.n_samples < 1 or self.trials < 1:
            raise ConfigurationError("n_samples and trials must be >= 1")
        if self.strategy == "mis_balance" and self.n_samples < 2:
            raise ConfigurationError("mis_balance needs at least 2 samples")

    @property
    def needs_table(self) -> bool:
        return self.strategy in ("env_importance", "mis_balance")


@dataclass(frozen=True)
class EstimateReport:
    """Mean over trials, its standard error, and every per-trial estimate."""

    quantity: str
    config: EstimatorConfig
    mean: np.ndarray
    std_error: np.ndarray
    estimates: np.ndarray = field(repr=False)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed % 2**64, trial]))


def _std_error(x: np.ndarray) -> np.ndarray:
    """Standard error of the mean over axis 0; exactly zero for identical values."""
    if x.shape[0] < 2:
        return np.zeros(x.shape[1:])
    err = x.std(axis=0, ddof=1) / np.sqrt(x.shape[0])
    return np.where(np.ptp(x, axis=0) == 0, 0.0, err)


def _aggregate(quantity, cfg, per_trial, terms_last):
    estimates = np.asarray(per_trial)
    mean = estimates.mean(axis=0)
    # a single trial falls back to the spread of its own terms
    err = _std_error(estimates) if cfg.trials > 1 else _std_error(terms_last)
    return EstimateReport(quantity, cfg, mean, err, estimates)


def _check_table(cfg: EstimatorConfig, table):
    if cfg.needs_table and table is None:
        raise ConfigurationError(f"strategy {cfg.strategy} needs an importance table")


def sphere_terms(env, table, strategy: str, rng: np.random.Generator, n: int) -> np.ndarray:
    if strategy == "uniform":
        d = uniform_sphere(rng, n)
        return 4.0 * np.pi * env.lookup(d)
    if strategy == "env_importance":
        rec = table_sample(table, rng, n)
        return env.lookup(rec.direction) / rec.pdf[:, None]
    raise ConfigurationError(f"strategy {strategy} does not apply to the sphere integral")


def estimate_sphere_integral(env, table: ImportanceTable | None, cfg: EstimatorConfig) -> EstimateReport:
    _check_table(cfg, table)
    per_trial = []
    terms = None
    for t in range(cfg.trials):
        terms = sphere_terms(env, table, cfg.strategy, trial_rng(cfg.seed, t), cfg.n_samples)
        per_trial.append(terms.mean(axis=0))
    return _aggregate("sphere_integral", cfg, per_trial, terms)


def frame(normal) -> np.ndarray:
    """Orthonormal basis as rows ``(tangent, bitangent, normal)``."""
    n = normalize(normal)
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t = normalize(np.cross(helper, n))
    return np.stack([t, np.cross(n, t), n])


def sample_cosine(rng: np.random.Generator, normal, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Cosine-weighted directions about ``normal`` and their density ``cos / pi``."""
    u1 = rng.random(n)
    u2 = rng.random(n)
    r = np.sqrt(u1)
    phi = 2.0 * np.pi * u2
    z = np.sqrt(np.maximum(0.0, 1.0 - u1))
    local = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
    d = local @ frame(normal)
    return d, z / np.pi


def cosine_pdf(normal, d) -> np.ndarray:
    return np.maximum(0.0, np.asarray(d) @ normalize(normal)) / np.pi


def balance_weights(p_self, p_other):
    """Balance-heuristic weight of a technique with density ``p_self``."""
    total = p_self + p_other
    return np.divide(p_self, total, out=np.zeros_like(total, dtype=np.float64), where=total > 0)


def irradiance_terms(env, table, normal, strategy: str, rng: np.random.Generator, n: int) -> np.ndarray:
    normal = normalize(normal)

    def cos_plus(d):
        return np.maximum(0.0, d @ normal)[:, None]

    if strategy == "uniform":
        d = uniform_sphere(rng, n)
        return 4.0 * np.pi * env.lookup(d) * cos_plus(d)
    if strategy == "cosine":
        d, p = sample_cosine(rng, normal, n)
        f = env.lookup(d) * cos_plus(d)
        return np.divide(f, p[:, None], out=np.zeros_like(f), where=p[:, None] > 0)
    if strategy == "env_importance":
        rec = table_sample(table, rng, n)
        return env.lookup(rec.direction) * cos_plus(rec.direction) / rec.pdf[:, None]
    if strategy == "mis_balance":
        # equal split; an odd budget drops its last sample
        half = n // 2
        rec = table_sample(table, rng, half)
        d_cos, p_cos = sample_cosine(rng, normal, half)
        f_env = env.lookup(rec.direction) * cos_plus(rec.direction)
        f_cos = env.lookup(d_cos) * cos_plus(d_cos)
        w_env = balance_weights(rec.pdf, cosine_pdf(normal, rec.direction))
        w_cos = balance_weights(p_cos, table_pdf(table, d_cos))
        t_env = f_env * (w_env / rec.pdf)[:, None]
        t_cos = np.divide(f_cos * w_cos[:, None], p_cos[:, None], out=np.zeros_like(f_cos), where=p_cos[:, None] > 0)
        # estimate = mean(t_env) + mean(t_cos) = mean of the pair sums
        return t_env + t_cos
    raise ConfigurationError(f"unknown strategy {strategy}")


def estimate_irradiance(env, table: ImportanceTable | None, normal, cfg: EstimatorConfig) -> EstimateReport:
    _check_table(cfg, table)
    per_trial = []
    terms = None
    for t in range(cfg.trials):
        terms = irradiance_terms(env, table, normal, cfg.strategy, trial_rng(cfg.seed, t), cfg.n_samples)
        per_trial.append(terms.mean(axis=0))
    return _aggregate("irradiance", cfg, per_trial, terms)


@dataclass(frozen=True)
class VarianceComparison:
    uniform: EstimateReport
    importance: EstimateReport
    ratio: np.ndarray


def std_error_ratio(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a / b`` per channel, 1 where both are zero and inf where only ``b`` is."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(b > 0, a / np.where(b > 0, b, 1.0), np.where(a > 0, np.inf, 1.0))
    return ratio


def variance_comparison(env, table: ImportanceTable, n_samples: int, trials: int, seed: int) -> VarianceComparison:
    """Sphere integral by uniform and by table sampling with equal budgets."""
    uni = estimate_sphere_integral(env, None, EstimatorConfig("uniform", n_samples, trials, seed))
    imp = estimate_sphere_integral(env, table, EstimatorConfig("env_importance", n_samples, trials, seed + 1))
    return VarianceComparison(uni, imp, std_error_ratio(uni.std_error, imp.std_error))


def _fmt(x: float) -> str:
    return repr(float(x))


def report_text(report: EstimateReport) -> str:
    cfg = report.config
    lines = [
        f"{report.quantity} estimate",
        f"  strategy   {cfg.strategy}",
        f"  samples    {cfg.n_samples} x {cfg.trials} trials (seed {cfg.seed})",
        "  mean       " + " ".join(f"{v:.9g}" for v in report.mean),
        "  std_error  " + " ".join(f"{v:.9g}" for v in report.std_error),
    ]
    return "\n".join(lines) + "\n"


def report_kv(report: EstimateReport, prefix: str = "") -> str:
    """``key=value`` lines; see the README for the field names."""
    cfg = report.config
    out = [
        f"{prefix}quantity={report.quantity}",
        f"{prefix}strategy={cfg.strategy}",
        f"{prefix}n_samples={cfg.n_samples}",
        f"{prefix}trials={cfg.trials}",
        f"{prefix}seed={cfg.seed}",
    ]
    for c, m, e in zip(CHANNELS, report.mean, report.std_error):
        out.append(f"{prefix}mean.{c}={_fmt(m)}")
        out.append(f"{prefix}std_error.{c}={_fmt(e)}")
    return "\n".join(out) + "\n"


def comparison_text(cmp: VarianceComparison) -> str:
    return (
        report_text(cmp.uniform)
        + report_text(cmp.importance)
        + "std_error ratio uniform/importance  "
        + " ".join(f"{v:.6g}" for v in cmp.ratio)
        + "\n"
    )


def comparison_kv(cmp: VarianceComparison) -> str:
    ratio = "".join(f"ratio.{c}={_fmt(v)}\n" for c, v in zip(CHANNELS, cmp.ratio))
    return report_kv(cmp.uniform, "uniform.") + report_kv(cmp.importance, "importance.") + ratio
