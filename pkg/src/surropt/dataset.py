"""Sample ingestion, splitting, normalization, and the synthetic label oracle.

The oracle is the documented stand-in for the unavailable simulation data.
Its functional form is fixed here so that generated datasets are fully
reproducible from (seed, coupling_count, noise_stddev, dim):

* f1, f2 (path inductances): positive quadratic forms around a seeded
  center c, each the sum of per-coordinate bowls d_j (x_j - c_j)^2 plus
  `coupling_count` squared two-coordinate terms
  g_k ((x_p - c_p) + s_k (x_q - c_q))^2 acting as loop-area proxies.
  The bowl curvatures d_j decay geometrically over a seeded coordinate
  order (a handful of layout variables dominates each inductance path)
  and coupling pairs are drawn with probability proportional to that
  curvature. Each metric gets its own seeded structure; values are >= 0
  on the box.
* f3 (peak substrate temperature): a smooth soft-max (logsumexp with
  softness tau) over seeded broad Gaussian heat bumps, plus a base
  temperature. Bump distances use a shared diagonal metric with the same
  geometric decay (a few high-power component positions dominate the
  thermal picture).
* Optional i.i.d. Gaussian noise of `noise_stddev` on each metric.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

METRICS = ("f1", "f2", "f3")
DEFAULT_DIM = 36

_HEAT_BUMPS = 5
_BASE_TEMPERATURE = 25.0
_SOFTMAX_TAU = 8.0


class CsvSchemaError(ValueError):
    """CSV header does not match the expected sample schema."""


class CsvParseError(ValueError):
    """A CSV cell could not be parsed as a number."""


@dataclass
class SampleRecord:
    """One labeled observation: layout vector plus the three metrics."""

    x: np.ndarray
    f1: float
    f2: float
    f3: float

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if self.x.ndim != 1:
            raise ValueError(f"x must be a vector, got shape {self.x.shape}")
        values = [*self.x, self.f1, self.f2, self.f3]
        if not np.isfinite(values).all():
            raise ValueError("sample contains non-finite values")

    def metric(self, name: str) -> float:
        if name not in METRICS:
            raise ValueError(f"unknown metric {name!r}")
        return getattr(self, name)


@dataclass
class DataSplit:
    train: list[SampleRecord]
    test: list[SampleRecord]
    split_seed: int
    train_fraction: float


@dataclass
class NormalizationStats:
    """Per-dimension input ranges and per-metric target moments."""

    x_min: np.ndarray
    x_max: np.ndarray
    f_mean: np.ndarray
    f_std: np.ndarray
    f_constant: np.ndarray  # bool per metric: raw std was zero, std stored as 1.0

    @classmethod
    def from_records(cls, records: list[SampleRecord]) -> "NormalizationStats":
        if not records:
            raise ValueError("cannot compute statistics of an empty record list")
        xs = np.stack([r.x for r in records])
        fs = np.array([[r.f1, r.f2, r.f3] for r in records])
        std = fs.std(axis=0)
        constant = std == 0.0
        return cls(
            x_min=xs.min(axis=0),
            x_max=xs.max(axis=0),
            f_mean=fs.mean(axis=0),
            f_std=np.where(constant, 1.0, std),
            f_constant=constant,
        )

    def zscore(self, values: np.ndarray, metric: str) -> np.ndarray:
        i = METRICS.index(metric)
        return (np.asarray(values, dtype=float) - self.f_mean[i]) / self.f_std[i]


def _expected_header(dim: int) -> list[str]:
    return [f"x{i}" for i in range(1, dim + 1)] + list(METRICS)


def load_csv(path: Path | str) -> list[SampleRecord]:
    """Read samples from a `x1..xn,f1,f2,f3` CSV file."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvSchemaError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        n_x = sum(1 for h in header if h.startswith("x") and h[1:].isdigit())
        expected = _expected_header(n_x)
        for col in expected:
            if col not in header:
                raise CsvSchemaError(f"{path}: missing column {col!r}")
        if header != expected:
            raise CsvSchemaError(f"{path}: header must be exactly x1..x{n_x},f1,f2,f3")

        records: list[SampleRecord] = []
        for row_idx, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise CsvParseError(f"{path}: row {row_idx} has {len(row)} cells, expected {len(header)}")
            values = []
            for col_idx, cell in enumerate(row):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise CsvParseError(
                        f"{path}: non-numeric cell {cell!r} at row {row_idx}, column {header[col_idx]!r}"
                    ) from None
            records.append(SampleRecord(np.array(values[:n_x]), *values[n_x:]))
    if not records:
        raise CsvSchemaError(f"{path}: no data rows")
    return records


def write_csv(records: list[SampleRecord], path: Path | str) -> None:
    """Write samples losslessly (shortest round-trip float formatting)."""
    if not records:
        raise ValueError("refusing to write an empty record list")
    dim = records[0].x.shape[0]
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_expected_header(dim))
        for r in records:
            writer.writerow([repr(float(v)) for v in (*r.x, r.f1, r.f2, r.f3)])


def split(records: list[SampleRecord], train_fraction: float, seed: int) -> DataSplit:
    """Deterministic shuffled split; train takes ceil(n * fraction) records."""
    if len(records) < 2:
        raise ValueError(f"need at least 2 records to split, got {len(records)}")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(records))
    n_train = math.ceil(len(records) * train_fraction)
    train = [records[i] for i in order[:n_train]]
    test = [records[i] for i in order[n_train:]]
    return DataSplit(train=train, test=test, split_seed=seed, train_fraction=train_fraction)


def metric_arrays(records: list[SampleRecord], metric: str) -> tuple[np.ndarray, np.ndarray]:
    """Stack records into (features, targets) arrays for one metric."""
    x = np.stack([r.x for r in records])
    y = np.array([r.metric(metric) for r in records])
    return x, y


@dataclass(frozen=True)
class SyntheticOracleConfig:
    seed: int = 0
    coupling_count: int = 24
    noise_stddev: float = 0.0
    dim: int = DEFAULT_DIM

    def __post_init__(self):
        if self.coupling_count < 0:
            raise ValueError(f"coupling_count must be >= 0, got {self.coupling_count}")
        if self.noise_stddev < 0:
            raise ValueError(f"noise_stddev must be >= 0, got {self.noise_stddev}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")


@dataclass
class _QuadraticForm:
    """Positive quadratic form around a center, with pairwise couplings."""

    center: np.ndarray
    diag: np.ndarray  # > 0
    pair_i: np.ndarray  # int, coupled coordinate p_k
    pair_j: np.ndarray  # int, coupled coordinate q_k
    pair_sign: np.ndarray  # +-1
    pair_gain: np.ndarray  # > 0

    def __call__(self, x: np.ndarray) -> float:
        d = x - self.center
        value = float(np.dot(self.diag, d * d))
        if len(self.pair_i):
            cross = d[self.pair_i] + self.pair_sign * d[self.pair_j]
            value += float(np.dot(self.pair_gain, cross * cross))
        return value


@dataclass
class _HeatField:
    """Soft maximum over Gaussian heat bumps under a diagonal distance metric."""

    centers: np.ndarray  # (bumps, dim)
    widths: np.ndarray  # (bumps,)
    amplitudes: np.ndarray  # (bumps,)
    metric: np.ndarray  # (dim,) diagonal weights of the distance metric

    def __call__(self, x: np.ndarray) -> float:
        sq = (self.metric * (x - self.centers) ** 2).sum(axis=1)
        bumps = self.amplitudes * np.exp(-sq / (2.0 * self.widths**2))
        # smooth max: tau * logsumexp(bumps / tau)
        scaled = bumps / _SOFTMAX_TAU
        peak = scaled.max()
        return _BASE_TEMPERATURE + _SOFTMAX_TAU * (
            peak + math.log(np.exp(scaled - peak).sum())
        )


_CURVATURE_DECAY = 0.85
_HEAT_DECAY = 0.7


def _quadratic_from_rng(rng: np.random.Generator, dim: int, couplings: int) -> _QuadraticForm:
    center = rng.uniform(0.0, 1.0, size=dim)
    diag = rng.uniform(0.5, 2.0, size=dim) * _CURVATURE_DECAY ** rng.permutation(dim)
    if dim < 2:
        couplings = 0  # pairwise terms need two distinct coordinates
    weights = diag / diag.sum()
    pair_i = np.empty(couplings, dtype=int)
    pair_j = np.empty(couplings, dtype=int)
    for k in range(couplings):
        pair_i[k], pair_j[k] = rng.choice(dim, size=2, replace=False, p=weights)
    pair_sign = rng.choice([-1.0, 1.0], size=couplings)
    pair_gain = rng.uniform(0.5, 2.0, size=couplings) * np.sqrt(diag[pair_i] * diag[pair_j])
    return _QuadraticForm(center, diag, pair_i, pair_j, pair_sign, pair_gain)


def _heat_from_rng(rng: np.random.Generator, dim: int) -> _HeatField:
    centers = rng.uniform(0.0, 1.0, size=(_HEAT_BUMPS, dim))
    metric = _HEAT_DECAY ** rng.permutation(dim)
    effective_dim = metric.sum()
    widths = math.sqrt(effective_dim) * rng.uniform(0.65, 1.1, size=_HEAT_BUMPS)
    amplitudes = rng.uniform(50.0, 80.0, size=_HEAT_BUMPS)
    return _HeatField(centers, widths, amplitudes, metric)


class SyntheticOracle:
    """Deterministic labeler mapping layout vectors in [0,1]^dim to (f1, f2, f3)."""

    def __init__(self, cfg: SyntheticOracleConfig):
        self.cfg = cfg
        seeds = np.random.SeedSequence(cfg.seed).spawn(4)
        self.f1 = _quadratic_from_rng(np.random.default_rng(seeds[0]), cfg.dim, cfg.coupling_count)
        self.f2 = _quadratic_from_rng(np.random.default_rng(seeds[1]), cfg.dim, cfg.coupling_count)
        self.f3 = _heat_from_rng(np.random.default_rng(seeds[2]), cfg.dim)
        self._sampling_seed = seeds[3]

    def evaluate(self, x: np.ndarray, rng: np.random.Generator | None = None) -> tuple[float, float, float]:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.cfg.dim,):
            raise ValueError(f"x has shape {x.shape}, oracle expects ({self.cfg.dim},)")
        if (x < 0.0).any() or (x > 1.0).any():
            raise ValueError("x is outside the unit box")
        values = np.array([self.f1(x), self.f2(x), self.f3(x)])
        if self.cfg.noise_stddev > 0.0:
            if rng is None:
                rng = np.random.default_rng(self._sampling_seed)
            values = values + rng.normal(0.0, self.cfg.noise_stddev, size=3)
        return float(values[0]), float(values[1]), float(values[2])

    def sampling_rng(self) -> np.random.Generator:
        return np.random.default_rng(self._sampling_seed)


_ORACLE_CACHE: dict[SyntheticOracleConfig, SyntheticOracle] = {}


def get_oracle(cfg: SyntheticOracleConfig) -> SyntheticOracle:
    if cfg not in _ORACLE_CACHE:
        if len(_ORACLE_CACHE) > 64:
            _ORACLE_CACHE.clear()
        _ORACLE_CACHE[cfg] = SyntheticOracle(cfg)
    return _ORACLE_CACHE[cfg]


def synthetic_oracle(
    x: np.ndarray, cfg: SyntheticOracleConfig, rng: np.random.Generator | None = None
) -> tuple[float, float, float]:
    """Label one layout vector. See the module docstring for the functional form."""
    return get_oracle(cfg).evaluate(x, rng=rng)


def gen_dataset(count: int, cfg: SyntheticOracleConfig) -> list[SampleRecord]:
    """Draw `count` uniform layout vectors and label them with the oracle."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    oracle = get_oracle(cfg)
    rng = oracle.sampling_rng()
    records = []
    for _ in range(count):
        x = rng.uniform(0.0, 1.0, size=cfg.dim)
        records.append(SampleRecord(x, *oracle.evaluate(x, rng=rng)))
    return records
