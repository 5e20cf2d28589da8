"""Cohort generation under multiplicative exposure measurement error.

Each subject carries a true exposure X (lognormal), an observed exposure
W = X * e with lognormal error e, a continuous outcome Y and a binary
outcome Z. Under the null configuration (zero slopes) the outcomes are
independent of exposure; positive-control slopes act on log X, where the
error is additive and the attenuation factor has a closed form.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import CohortParseError, ParameterError
from .rng import Rng

__all__ = ["CohortConfig", "CohortRecord", "Cohort", "simulate_cohort", "write_cohort", "read_cohort"]

# stream ids under the cohort seed, one per simulated variable
_STREAM_X, _STREAM_E, _STREAM_Y, _STREAM_Z = 0, 1, 2, 3


@dataclass(frozen=True)
class CohortConfig:
    n: int = 100_000
    mu_x: float = 0.0
    tau_x: float = 1.0
    tau_e: float = 1.0
    outcome_kind: str = "both"  # continuous | binary | both
    pi: float = 0.05
    beta_true: float = 0.0  # continuous-outcome slope on log X (0 = null)
    alpha_true: float = 0.0  # logistic slope on log X (0 = null)
    tau_y: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"n must be >= 1, got {self.n}")
        for name in ("tau_x", "tau_e", "tau_y"):
            v = getattr(self, name)
            if not (v > 0):
                raise ParameterError(f"{name} must be > 0, got {v}")
        if not (0.0 < self.pi < 1.0):
            raise ParameterError(f"pi must lie in (0, 1), got {self.pi}")
        if self.outcome_kind not in ("continuous", "binary", "both"):
            raise ParameterError(f"unknown outcome_kind {self.outcome_kind!r}")


@dataclass(frozen=True)
class CohortRecord:
    x_true: float
    w_obs: float
    y: float
    z: int

    def __post_init__(self):
        if not (self.x_true > 0):
            raise ParameterError(f"x_true must be > 0, got {self.x_true}")
        if not (self.w_obs > 0):
            raise ParameterError(f"w_obs must be > 0, got {self.w_obs}")
        if self.z not in (0, 1):
            raise ParameterError(f"z must be 0 or 1, got {self.z}")


class Cohort:
    """Column-oriented cohort; ``records`` views are built on demand."""

    def __init__(self, x_true, w_obs, y, z, config: CohortConfig | None = None):
        self.x_true = np.asarray(x_true, dtype=float)
        self.w_obs = np.asarray(w_obs, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.z = np.asarray(z, dtype=np.int64)
        n = len(self.x_true)
        if not (len(self.w_obs) == len(self.y) == len(self.z) == n):
            raise ParameterError("cohort columns must have equal length")
        if np.any(self.x_true <= 0) or np.any(self.w_obs <= 0):
            raise ParameterError("exposures must be strictly positive")
        if config is not None and config.n != n:
            raise ParameterError(f"config.n={config.n} but cohort has {n} records")
        self.config = config

    def __len__(self):
        return len(self.x_true)

    @property
    def records(self) -> list[CohortRecord]:
        return [
            CohortRecord(float(x), float(w), float(y), int(z))
            for x, w, y, z in zip(self.x_true, self.w_obs, self.y, self.z)
        ]

    def __eq__(self, other):
        if not isinstance(other, Cohort):
            return NotImplemented
        return (
            np.array_equal(self.x_true, other.x_true)
            and np.array_equal(self.w_obs, other.w_obs)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.z, other.z)
        )


def _expit(x):
    return 1.0 / (1.0 + np.exp(-x))


def simulate_cohort(config: CohortConfig) -> Cohort:
    """Generate one cohort, deterministically for a given config.

    Per subject i: x_i ~ LN(mu_x, tau_x); w_i = x_i * e_i with
    log e_i ~ N(0, 1/tau_e); y_i ~ N(beta_true * log x_i, 1/tau_y);
    z_i ~ Bern(expit(logit(pi) + alpha_true * log x_i)).

    Each variable draws from its own stream under the config seed, so the
    exposures are unchanged by the outcome_kind choice.
    """
    n = config.n
    root = Rng(config.seed)

    log_x = config.mu_x + root.split(_STREAM_X).standard_normal(n) / math.sqrt(config.tau_x)
    log_e = root.split(_STREAM_E).standard_normal(n) / math.sqrt(config.tau_e)
    x = np.exp(log_x)
    w = np.exp(log_x + log_e)

    if config.outcome_kind in ("continuous", "both"):
        y = config.beta_true * log_x + root.split(_STREAM_Y).standard_normal(n) / math.sqrt(config.tau_y)
    else:
        y = np.zeros(n)

    if config.outcome_kind in ("binary", "both"):
        logit_pi = math.log(config.pi / (1.0 - config.pi))
        p = _expit(logit_pi + config.alpha_true * log_x)
        z = (root.split(_STREAM_Z).uniform(n) < p).astype(np.int64)
    else:
        z = np.zeros(n, dtype=np.int64)

    return Cohort(x, w, y, z, config=config)


_HEADER = ["x_true", "w_obs", "y", "z"]
_PROVENANCE_PREFIX = "# meadjust-cohort "


def write_cohort(cohort: Cohort, path) -> None:
    """Write a cohort CSV at full round-trip precision, atomically.

    The config (when known) is embedded as a '#'-prefixed JSON provenance
    line ahead of the header so a read can restore it.
    """
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as f:
        if cohort.config is not None:
            f.write(_PROVENANCE_PREFIX + json.dumps(dataclasses.asdict(cohort.config)) + "\n")
        writer = csv.writer(f)
        writer.writerow(_HEADER)
        for x, w, y, z in zip(cohort.x_true, cohort.w_obs, cohort.y, cohort.z):
            writer.writerow([repr(float(x)), repr(float(w)), repr(float(y)), int(z)])
    os.replace(tmp, path)


def read_cohort(path) -> Cohort:
    """Read a cohort CSV; raises CohortParseError naming the bad line."""
    config = None
    xs, ws, ys, zs = [], [], [], []
    with open(path, newline="", encoding="utf-8") as f:
        lineno = 0
        header_seen = False
        for raw in f:
            lineno += 1
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith(_PROVENANCE_PREFIX):
                    try:
                        config = CohortConfig(**json.loads(line[len(_PROVENANCE_PREFIX):]))
                    except (json.JSONDecodeError, TypeError, ParameterError) as exc:
                        raise CohortParseError(f"bad provenance block: {exc}", lineno) from exc
                continue
            fields = line.split(",")
            if not header_seen:
                if fields != _HEADER:
                    raise CohortParseError(
                        f"expected header {','.join(_HEADER)!r}, got {line!r}", lineno
                    )
                header_seen = True
                continue
            if len(fields) != 4:
                raise CohortParseError(f"expected 4 columns, got {len(fields)}", lineno)
            try:
                x, w, y = float(fields[0]), float(fields[1]), float(fields[2])
                z = int(fields[3])
            except ValueError as exc:
                raise CohortParseError(str(exc), lineno) from exc
            if not (x > 0):
                raise CohortParseError(f"x_true must be > 0, got {x}", lineno)
            if not (w > 0):
                raise CohortParseError(f"w_obs must be > 0, got {w}", lineno)
            if z not in (0, 1):
                raise CohortParseError(f"z must be 0 or 1, got {z}", lineno)
            xs.append(x)
            ws.append(w)
            ys.append(y)
            zs.append(z)
    if not header_seen:
        raise CohortParseError("missing header row", max(lineno, 1))
    return Cohort(np.array(xs), np.array(ws), np.array(ys), np.array(zs, dtype=np.int64), config=config)
