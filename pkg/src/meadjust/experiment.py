"""End-to-end experiment orchestration: run adjustment cells, apply the
convergence gate, and serialize report tables.

Every emitted file embeds a provenance block (the resolved semantic config
and master seeds) sufficient to re-run it bit-identically; output paths and
format choices are deliberately excluded so runs into different directories
produce byte-identical tables.
"""
from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .cohort import Cohort, CohortConfig, simulate_cohort
from .diagnostics import RHAT_GATE, PosteriorSummary, RhatReport, rhat, summarize, transform_summary
from .errors import ParameterError
from .mcmc import McmcConfig, ModelSpec, PosteriorSamples, run_chains
from .priors import PRIOR_VARIANT_ORDER, linear_priors, logistic_priors

__all__ = [
    "ExperimentConfig",
    "CellResult",
    "adjust_cell",
    "run_replication_grid",
    "write_table",
    "experiment_from_dict",
    "experiment_to_dict",
]

_FORMATS = ("csv", "json", "markdown")

# stream namespaces under the mcmc seed, so grid cells never share streams
_STREAM_ADJUST = 1000


@dataclass(frozen=True)
class ExperimentConfig:
    cohort: CohortConfig = field(default_factory=lambda: CohortConfig(n=2000))
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    prior_variants: tuple[str, ...] = PRIOR_VARIANT_ORDER
    model_kinds: tuple[str, ...] = ("linear", "logistic")
    out_dir: str = "out"
    formats: tuple[str, ...] = _FORMATS

    def __post_init__(self):
        if not self.prior_variants:
            raise ParameterError("prior_variants must be non-empty")
        for v in self.prior_variants:
            if v not in PRIOR_VARIANT_ORDER:
                raise ParameterError(f"unknown prior variant {v!r}")
        if not self.model_kinds:
            raise ParameterError("model_kinds must be non-empty")
        for k in self.model_kinds:
            if k not in ("linear", "logistic"):
                raise ParameterError(f"unknown model kind {k!r}")
        for f in self.formats:
            if f not in _FORMATS:
                raise ParameterError(f"unknown report format {f!r}")


def experiment_to_dict(cfg: ExperimentConfig, include_output: bool = True) -> dict:
    d = {
        "cohort": dataclasses.asdict(cfg.cohort),
        "mcmc": dataclasses.asdict(cfg.mcmc),
        "prior_variants": list(cfg.prior_variants),
        "model_kinds": list(cfg.model_kinds),
    }
    if include_output:
        d["out_dir"] = cfg.out_dir
        d["formats"] = list(cfg.formats)
    return d


def experiment_from_dict(d: dict) -> ExperimentConfig:
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    extra = set(d) - known
    if extra:
        raise ParameterError(f"unknown config keys: {sorted(extra)}")
    kwargs = dict(d)
    if "cohort" in kwargs:
        kwargs["cohort"] = CohortConfig(**kwargs["cohort"])
    if "mcmc" in kwargs:
        kwargs["mcmc"] = McmcConfig(**kwargs["mcmc"])
    for key in ("prior_variants", "model_kinds", "formats"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    return ExperimentConfig(**kwargs)


# ---------------------------------------------------------------------------
# One adjustment cell: run chains, diagnose, summarize


def _convergence_views(samples: PosteriorSamples) -> list[RhatReport]:
    """R-hat per parameter, computed on the log scale for strictly positive
    parameters (precisions, and the exposure location when its prior keeps
    it positive) where the normal-theory diagnostic behaves."""
    reports = []
    for name in samples.param_names:
        chains = samples.chain_arrays(name)
        if name.startswith("tau") or (name == "mu_x" and all(np.all(c > 0) for c in chains)):
            chains = [np.log(c) for c in chains]
            label = f"log({name})"
        else:
            label = name
        reports.append(rhat(chains, parameter=label))
    return reports


@dataclass
class CellResult:
    kind: str
    variant: str
    samples: PosteriorSamples
    summaries: list[PosteriorSummary]
    rhats: list[RhatReport]
    target: PosteriorSummary
    target_rhat: float

    @property
    def converged(self) -> bool:
        return all(r.rhat < RHAT_GATE for r in self.rhats)

    @property
    def gate_failures(self) -> list[str]:
        return [r.parameter for r in self.rhats if not (r.rhat < RHAT_GATE)]

    @property
    def cri_contains_null(self) -> bool:
        null = 1.0 if self.kind == "logistic" else 0.0
        return bool(self.target.p2_5 <= null <= self.target.p97_5)


def priors_for(kind: str, variant: str, mu_x_normal: bool = False):
    if kind == "linear":
        return linear_priors(variant, mu_x_normal=mu_x_normal)
    return logistic_priors(variant)


def adjust_cell(
    cohort: Cohort,
    kind: str,
    variant: str,
    mcmc: McmcConfig,
    exposure_transform: str = "identity",
    mu_x_normal: bool = False,
    stream: tuple[int, ...] = (),
) -> CellResult:
    """Run one (model kind, error prior) cell and package its diagnostics.

    The cell owns its RNG streams: they are derived from the mcmc seed plus
    the cell's stream prefix, so grid cells can run in any order or in
    parallel without changing results.
    """
    priors = priors_for(kind, variant, mu_x_normal=mu_x_normal)
    spec = ModelSpec.from_cohort(cohort, kind, priors, exposure_transform=exposure_transform)
    samples = run_chains(spec, mcmc, stream=stream)

    summaries = [summarize(samples.pooled(name), parameter=name) for name in samples.param_names]
    slope_name = "beta" if kind == "linear" else "alpha"
    if kind == "logistic":
        summaries.append(transform_summary(samples.pooled("alpha"), parameter="odds_ratio"))
        target = summaries[-1]
    else:
        target = next(s for s in summaries if s.parameter == "beta")
    rhats = _convergence_views(samples)
    target_rhat = next(r.rhat for r in rhats if r.parameter == slope_name)
    return CellResult(
        kind=kind,
        variant=variant,
        samples=samples,
        summaries=summaries,
        rhats=rhats,
        target=target,
        target_rhat=target_rhat,
    )


# ---------------------------------------------------------------------------
# Replication grid


def run_replication_grid(cfg: ExperimentConfig, cohort: Cohort | None = None) -> dict[str, list[CellResult]]:
    """Run the prior-variant grid for each requested model kind.

    Rows keep table order (uninformative, A, B, C). A cell that fails the
    convergence gate still yields its row, flagged unconverged, so one bad
    cell cannot abort the grid.
    """
    if cohort is None:
        cohort = simulate_cohort(cfg.cohort)
    results: dict[str, list[CellResult]] = {}
    ordered = [v for v in PRIOR_VARIANT_ORDER if v in cfg.prior_variants]
    for k_idx, kind in enumerate(cfg.model_kinds):
        rows = []
        for v_idx, variant in enumerate(ordered):
            rows.append(
                adjust_cell(
                    cohort,
                    kind,
                    variant,
                    cfg.mcmc,
                    stream=(_STREAM_ADJUST, k_idx, v_idx),
                )
            )
        results[kind] = rows
    return results


def replication_rows(cells: list[CellResult]) -> list[dict]:
    rows = []
    for cell in cells:
        rows.append(
            {
                "prior": cell.variant,
                "parameter": cell.target.parameter,
                "mean": cell.target.mean,
                "p2_5": cell.target.p2_5,
                "p97_5": cell.target.p97_5,
                "rhat": cell.target_rhat,
                "converged": cell.converged,
                "cri_contains_null": cell.cri_contains_null,
                "n_retained": cell.target.n_retained,
            }
        )
    return rows


# ---------------------------------------------------------------------------
# Serialization helpers


def provenance_block(cfg: ExperimentConfig | None = None, **extra) -> dict:
    block = {"tool": "meadjust", "version": __version__}
    if cfg is not None:
        block["config"] = experiment_to_dict(cfg, include_output=False)
    block.update(extra)
    return block


def _fmt_full(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fmt_human(value) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        if math.isfinite(value):
            return f"{value:.4g}"
        return repr(value)
    return str(value)


def _write_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(text)
    os.replace(tmp, path)


def write_table(
    base_path: str,
    rows: list[dict],
    fieldnames: list[str],
    formats,
    provenance: dict,
    title: str = "",
) -> list[str]:
    """Write one logical table as CSV/JSON/markdown siblings of base_path.

    CSV and JSON carry full float precision; markdown renders 4 significant
    digits. All three embed the provenance block.
    """
    written = []
    prov_json = json.dumps(provenance, sort_keys=True)
    if "csv" in formats:
        path = base_path + ".csv"
        lines = [f"# meadjust {prov_json}", ",".join(fieldnames)]
        for row in rows:
            lines.append(",".join(_fmt_full(row[f]) for f in fieldnames))
        _write_atomic(path, "\n".join(lines) + "\n")
        written.append(path)
    if "json" in formats:
        path = base_path + ".json"
        payload = {"provenance": provenance, "rows": rows}
        _write_atomic(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")
        written.append(path)
    if "markdown" in formats:
        path = base_path + ".md"
        lines = []
        if title:
            lines.append(f"# {title}")
            lines.append("")
        lines.append("| " + " | ".join(fieldnames) + " |")
        lines.append("|" + "|".join(" --- " for _ in fieldnames) + "|")
        for row in rows:
            lines.append("| " + " | ".join(_fmt_human(row[f]) for f in fieldnames) + " |")
        lines.append("")
        lines.append(f"<!-- meadjust {prov_json} -->")
        _write_atomic(path, "\n".join(lines) + "\n")
        written.append(path)
    return written


def summary_rows(cell: CellResult) -> list[dict]:
    return [
        {
            "parameter": s.parameter,
            "mean": s.mean,
            "p2_5": s.p2_5,
            "p97_5": s.p97_5,
            "n_retained": s.n_retained,
        }
        for s in cell.summaries
    ]


def rhat_rows(cell: CellResult) -> list[dict]:
    rows = []
    for r in cell.rhats:
        row = {"parameter": r.parameter, "rhat": r.rhat, "converged": r.rhat < RHAT_GATE}
        for i, (m, v) in enumerate(zip(r.chain_means, r.chain_variances)):
            row[f"chain{i}_mean"] = m
            row[f"chain{i}_var"] = v
        rows.append(row)
    return rows
