"""Coupling sweeps, transition detection, analytic tables and record emission."""

from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import analytic
from .analytic import Branch
from .eigen import EigenResult, converge_cutoff, lowest_eigenpairs
from .errors import ConfigError, DomainError, TooFewPointsError, TruncationWarning
from .fock import FockCutoff
from .model import (
    ModelParams,
    PhaseLabel,
    SectorLabel,
    build_sector_hamiltonian,
    derive_sector_params,
    embed_sector_state,
)
from .observables import (
    concurrence,
    magnetization,
    mean_photon,
    partial_trace_boson,
    state_fidelity,
    subspace_fidelity,
)

log = logging.getLogger(__name__)

SCENARIOS = ("counter-biased", "unbiased")
FORMATS = ("csv", "json")
AUTO_N_START = 32
AUTO_N_CAP = 4096
AUTO_ENERGY_TOL = 1e-8  # times gamma
MIN_DETECT_POINTS = 20


@dataclass(frozen=True)
class SweepConfig:
    scenario: str = "counter-biased"
    omega: float = 1.0
    gamma_over_omega: tuple[float, ...] = (1000.0,)
    eps_over_gamma: float = 0.01
    lambda_ratio: float = 3.0
    g_min: float = 0.2
    g_max: float = 1.8
    g_steps: int = 33
    cutoff: str | int = "auto"
    eta_bias_over_gamma: float = 1e-3
    format: str = "csv"
    out: str | None = None

    def validate(self) -> "SweepConfig":
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if not self.omega > 0:
            raise ConfigError("omega must be positive")
        if not self.g_min < self.g_max:
            raise ConfigError(f"g_min ({self.g_min}) must be below g_max ({self.g_max})")
        if self.g_steps < 2:
            raise ConfigError("g_steps must be >= 2")
        ladder = self.gamma_over_omega
        if not ladder or any(x <= 0 for x in ladder):
            raise ConfigError("gamma_over_omega entries must be positive")
        if any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ConfigError("gamma_over_omega ladder must be strictly increasing")
        if self.cutoff != "auto" and (not isinstance(self.cutoff, int) or self.cutoff < 1):
            raise ConfigError(f"cutoff must be 'auto' or a positive integer, got {self.cutoff!r}")
        if self.eta_bias_over_gamma < 0:
            raise ConfigError("eta_bias_over_gamma must be non-negative")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if self.scenario == "unbiased" and self.lambda_ratio == -1.0:
            raise ConfigError("lambda_ratio = -1 leaves the plus sector uncoupled")
        return self

    def g_grid(self) -> np.ndarray:
        return np.linspace(self.g_min, self.g_max, self.g_steps)

    def params(self, gamma_over_omega: float, g: float) -> ModelParams:
        gamma = gamma_over_omega * self.omega
        if self.scenario == "counter-biased":
            return ModelParams.counter_biased(self.omega, gamma, g, eps=self.eps_over_gamma * gamma)
        return ModelParams.unbiased(self.omega, gamma, g, lambda_ratio=self.lambda_ratio)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SweepConfig)}


def _coerce(key: str, raw: Any) -> Any:
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    try:
        if key == "gamma_over_omega":
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if key == "g_steps":
            return int(raw)
        if key == "cutoff":
            return raw if raw == "auto" else int(raw)
        if key in ("scenario", "format"):
            return raw
        if key == "out":
            return raw or None
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def read_config_file(path: str | os.PathLike) -> dict[str, Any]:
    """Parse flat ``key = value`` lines (``#`` starts a comment)."""
    values: dict[str, Any] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def make_config(file_values: dict[str, Any] | None = None, **overrides: Any) -> SweepConfig:
    """Build a validated config; ``overrides`` (non-None) win over file values."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(merged) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return SweepConfig(**{k: _coerce(k, v) for k, v in merged.items()}).validate()


@dataclass
class SweepRecord:
    g: float
    gamma_over_omega: float
    sector: str
    E0: float
    E0_rescaled: float
    E1: float
    N: float
    N_rescaled: float
    M_biased: float
    M_sq_root: float
    C: float
    fidelity_analytic: float
    r_analytic: float
    cutoff_used: int
    residual: float
    converged: bool


RECORD_FIELDS = tuple(f.name for f in dataclasses.fields(SweepRecord))


def _solve(cfg: SweepConfig, p: ModelParams, sector: SectorLabel, bias: float = 0.0, k: int = 2) -> EigenResult:
    def builder(c: FockCutoff):
        return build_sector_hamiltonian(p, sector, c, bias=bias)

    if cfg.cutoff == "auto":
        return converge_cutoff(
            builder, k=k, energy_tol=AUTO_ENERGY_TOL * p.gamma, n_start=AUTO_N_START, n_cap=AUTO_N_CAP
        )
    res = lowest_eigenpairs(builder(FockCutoff(cfg.cutoff)), k=k)
    res.cutoff_used = FockCutoff(cfg.cutoff)
    return res


def _pad_sector(amps: np.ndarray, n_from: int, n_to: int) -> np.ndarray:
    if n_to == n_from:
        return amps
    out = np.zeros((2, n_to + 1), dtype=amps.dtype)
    out[:, : n_from + 1] = amps.reshape(2, n_from + 1)
    return out.ravel()


def _analytic_reference(
    p: ModelParams, sector: SectorLabel, g_s: float, ground: EigenResult, cutoff: FockCutoff
) -> tuple[float, float]:
    """``(fidelity, squeeze r)`` against the closed-form sector ground state."""
    sp_ = derive_sector_params(p)
    if sp_.lam(sector) == 0.0 and sp_.eps(sector) != 0.0:
        if sector is not SectorLabel.MINUS:
            return math.nan, math.nan
        ref = analytic.minus_sector_ground(p, cutoff).state
        return state_fidelity(embed_sector_state(ground.eigenvectors[0].amplitudes, sector, cutoff), ref), 0.0
    if sp_.eps(sector) != 0.0 or g_s == 1.0:
        return math.nan, math.nan
    phase = PhaseLabel.for_g(g_s)
    r = analytic.squeeze_param(phase, g_s)
    # the reference may be more squeezed than the numerics needed; compare on a larger space
    n_ref = max(cutoff.n_max, min(AUTO_N_CAP, math.ceil(3.0 * math.exp(4.0 * r))))
    ref_cut = FockCutoff(n_ref)
    full = [
        embed_sector_state(_pad_sector(v.amplitudes, cutoff.n_max, n_ref), sector, ref_cut)
        for v in ground.eigenvectors
    ]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        if phase is PhaseLabel.NORMAL:
            ref = analytic.analytic_ground_state(phase, None, g_s, ref_cut, sector)
            return state_fidelity(full[0], ref), r
        alpha = analytic.superradiant_displacement(g_s, p.gamma / p.omega, Branch.UPPER, sp_.lam(sector))
        ref = analytic.analytic_ground_state(phase, Branch.UPPER, g_s, ref_cut, sector, displacement=alpha)
    return subspace_fidelity(full, ref), r


def solve_point(cfg: SweepConfig, gamma_over_omega: float, g: float) -> list[SweepRecord]:
    """Both sector records for one grid point."""
    p = cfg.params(gamma_over_omega, g)
    sp_ = derive_sector_params(p)
    eta = cfg.eta_bias_over_gamma * p.gamma
    rows = []
    for sector in SectorLabel:
        g_s = abs(analytic.sweep_to_sector_g(p, g, sector))
        res = _solve(cfg, p, sector)
        cutoff = res.cutoff_used
        e0, e1 = (float(x) for x in res.eigenvalues[:2])
        psi0 = embed_sector_state(res.eigenvectors[0].amplitudes, sector, cutoff)
        mag0 = magnetization(psi0)
        selected = psi0
        # sectors with their own bias already have a unique ground state
        if eta > 0.0 and sp_.eps(sector) == 0.0:
            biased = lowest_eigenpairs(build_sector_hamiltonian(p, sector, cutoff, bias=eta), k=1)
            selected = embed_sector_state(biased.eigenvectors[0].amplitudes, sector, cutoff)
        n_ph = mean_photon(psi0)
        try:
            fid, r = _analytic_reference(p, sector, g_s, res, cutoff)
        except DomainError:
            fid, r = math.nan, math.nan
        scale = p.omega / p.gamma
        rows.append(
            SweepRecord(
                g=float(g),
                gamma_over_omega=float(gamma_over_omega),
                sector=sector.short,
                E0=e0,
                E0_rescaled=e0 * scale,
                E1=e1,
                N=n_ph,
                N_rescaled=n_ph * scale,
                M_biased=magnetization(selected)["mean"],
                M_sq_root=math.sqrt(max(0.0, mag0["mean_square"])),
                C=concurrence(partial_trace_boson(selected)),
                fidelity_analytic=fid,
                r_analytic=r,
                cutoff_used=cutoff.n_max,
                residual=res.max_residual,
                converged=bool(res.converged),
            )
        )
    return rows


def _solve_star(args):
    return solve_point(*args)


def _sort_key(rec: SweepRecord):
    return (rec.gamma_over_omega, 0 if rec.sector == "plus" else 1, rec.g)


def run_sweep(cfg: SweepConfig, workers: int = 1) -> list[SweepRecord]:
    """One record per sector per ``(gamma/omega, g)`` grid point, sorted."""
    cfg.validate()
    tasks = [(cfg, x, float(g)) for x in cfg.gamma_over_omega for g in cfg.g_grid()]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_solve_star, tasks))
    else:
        chunks = [_solve_star(t) for t in tasks]
    records = [rec for chunk in chunks for rec in chunk]
    bad = sum(not r.converged for r in records)
    if bad:
        log.warning("%d of %d rows did not converge", bad, len(records))
    return sorted(records, key=_sort_key)


@dataclass
class TransitionReport:
    estimates: dict[str, list[float]]
    uncertainty: float
    diagnostics: dict[str, Any] = field(default_factory=dict)


def _get(rec, name):
    return rec[name] if isinstance(rec, dict) else getattr(rec, name)


def analytic_records(p: ModelParams, g_grid: Iterable[float]) -> list[dict[str, Any]]:
    """Minimal records carrying the limit rescaled energies, for kink detection."""
    g_grid = list(g_grid)
    rows = []
    for g, (ep, em) in zip(g_grid, analytic.rescaled_energies(p, g_grid)):
        for sector, e in (("plus", ep), ("minus", em)):
            rows.append(
                {"g": float(g), "gamma_over_omega": p.gamma / p.omega, "sector": sector,
                 "E0": e * p.gamma / p.omega, "E0_rescaled": e, "residual": 0.0}
            )
    return rows


def _kink(g: np.ndarray, e: np.ndarray, floor: float) -> dict[str, Any]:
    d2 = e[2:] - 2.0 * e[1:-1] + e[:-2]
    mag = np.abs(d2)
    i_max = int(np.argmax(mag))
    info: dict[str, Any] = {"max_second_difference": float(mag[i_max]), "noise_floor": floor}
    if mag[i_max] <= floor:
        return info
    # onset of the curvature peak: the left edge of its half-maximum region
    i = i_max
    while i > 0 and mag[i - 1] >= 0.5 * mag[i_max]:
        i -= 1
    info["g_argmax"] = float(g[i_max + 1])
    info["g_c"] = float(g[i + 1])
    return info


def detect_transition(records: Sequence[Any]) -> TransitionReport:
    """Locate second-order kinks in ``E0_rescaled(g)`` for each sector.

    Uses discrete second differences on a uniform grid. The estimate is the
    onset of the peak in ``|second difference|`` (its half-maximum edge on
    the low-g side), within one grid step of a sharp kink. Curves whose
    second differences never exceed ten times the solver residual (in
    rescaled units) give no estimate.
    """
    ratios = {float(_get(r, "gamma_over_omega")) for r in records}
    if len(ratios) > 1:
        raise ValueError("records span several gamma/omega values; detect one at a time")
    by_sector: dict[str, list[Any]] = {}
    for r in records:
        by_sector.setdefault(str(_get(r, "sector")), []).append(r)

    estimates: dict[str, list[float]] = {}
    diagnostics: dict[str, Any] = {}
    curves: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    step = math.nan
    for sector, rows in sorted(by_sector.items()):
        rows = sorted(rows, key=lambda r: float(_get(r, "g")))
        if len(rows) < MIN_DETECT_POINTS:
            raise TooFewPointsError(
                f"sector {sector}: {len(rows)} points, need at least {MIN_DETECT_POINTS}"
            )
        g = np.array([float(_get(r, "g")) for r in rows])
        e = np.array([float(_get(r, "E0_rescaled")) for r in rows])
        steps = np.diff(g)
        step = float(steps.mean())
        if not np.allclose(steps, step, rtol=1e-6, atol=1e-12):
            raise ValueError("g grid is not uniform")
        scale = next(
            (abs(float(_get(r, "E0_rescaled")) / float(_get(r, "E0"))) for r in rows if float(_get(r, "E0")) != 0.0),
            1.0,
        )
        resid = max(float(_get(r, "residual")) for r in rows)
        floor = max(10.0 * resid * scale, 64 * np.finfo(float).eps * float(np.max(np.abs(e))))
        info = _kink(g, e, floor)
        estimates[sector] = [info["g_c"]] if "g_c" in info else []
        diagnostics[sector] = info
        curves[sector] = (g, e)

    if "plus" in curves and "minus" in curves and np.array_equal(curves["plus"][0], curves["minus"][0]):
        g, ep = curves["plus"]
        diff = np.abs(ep - curves["minus"][1])
        tol = max(1e-3 * float(np.median(np.abs(ep))), diagnostics["plus"]["noise_floor"])
        above = diff > tol
        sep = None
        for i in range(len(g)):
            if above[i:].all():
                sep = float(g[i])
                break
        diagnostics["separation_g"] = sep
        diagnostics["separation_tol"] = tol
    return TransitionReport(estimates, step, diagnostics)


PREDICTION_FIELDS = (
    "gamma_over_omega", "sector", "g", "phase", "branch", "energy", "rescaled_energy", "squeeze_r",
    "n_rescaled", "concurrence", "magnetization", "n_rescaled_meanfield", "magnetization_meanfield", "error",
)


def _prediction_rows(p: ModelParams, g: float, sector: SectorLabel) -> list[dict[str, Any]]:
    base = {"gamma_over_omega": p.gamma / p.omega, "sector": sector.short, "g": float(g)}
    g_s = abs(analytic.sweep_to_sector_g(p, g, sector))
    sp_ = derive_sector_params(p)
    nan_row = dict.fromkeys(PREDICTION_FIELDS, math.nan) | base
    try:
        phase = PhaseLabel.for_g(g_s)
        if sp_.lam(sector) == 0.0:
            # decoupled sector: exact energy, limit observables
            energy = analytic.minus_sector_ground(p).energy if sector is SectorLabel.MINUS else -math.hypot(sp_.eps_plus, p.gamma)
        else:
            energy = analytic.ground_energy(phase, p, sector)
    except DomainError as exc:
        return [nan_row | {"phase": "critical", "branch": Branch.NOT_APPLICABLE.value, "error": str(exc)}]
    branches = [Branch.NOT_APPLICABLE] if phase is PhaseLabel.NORMAL else [Branch.UPPER, Branch.LOWER]
    rows = []
    for branch in branches:
        pred = analytic.AnalyticPrediction(
            g=float(g),
            phase=phase,
            energy=energy,
            rescaled_energy=analytic.rescaled_branch_energy(g_s, p.omega),
            squeeze_r=analytic.squeeze_param(phase, g_s),
            branch=branch,
            **analytic.observables_closed_form(phase, g_s, branch),
        )
        mf = analytic.observables_meanfield(phase, g_s, branch)
        row = base | {k: v for k, v in dataclasses.asdict(pred).items()}
        row["phase"] = pred.phase.value
        row["branch"] = pred.branch.value
        row["n_rescaled_meanfield"] = mf["n_rescaled"]
        row["magnetization_meanfield"] = mf["magnetization"]
        row["error"] = ""
        rows.append({k: row[k] for k in PREDICTION_FIELDS})
    return rows


def predict(cfg: SweepConfig) -> list[dict[str, Any]]:
    """Closed-form rows for every ladder entry, grid point and sector (no numerics)."""
    cfg.validate()
    return predict_grid(cfg, cfg.g_grid())


def predict_grid(cfg: SweepConfig, g_grid: Iterable[float]) -> list[dict[str, Any]]:
    rows = []
    for x in cfg.gamma_over_omega:
        for g in g_grid:
            p = cfg.params(x, float(g))
            for sector in SectorLabel:
                rows.extend(_prediction_rows(p, float(g), sector))
    return rows


def _as_dict(rec: Any) -> dict[str, Any]:
    if dataclasses.is_dataclass(rec):
        return dataclasses.asdict(rec)
    return dict(rec)


def _csv_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, enum.Enum):
        return str(v.value)
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    if v is None:
        return ""
    return str(v)


def _json_value(v: Any) -> Any:
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def render(records: Sequence[Any], fmt: str) -> str:
    rows = [_as_dict(r) for r in records]
    if fmt == "csv":
        if not rows:
            raise ValueError("CSV output needs at least one record for its header")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        header = list(rows[0])
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_value(row[k]) for k in header])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps([{k: _json_value(v) for k, v in row.items()} for row in rows], indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit(records: Sequence[Any], fmt: str, path: str | os.PathLike | None) -> str:
    """Write records as CSV or JSON; ``path`` of ``None`` or ``-`` returns the text only."""
    text = render(records, fmt)
    if path is None or str(path) == "-":
        return text
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return text


def _record_from_strings(row: dict[str, Any]) -> SweepRecord:
    kwargs: dict[str, Any] = {}
    for f in dataclasses.fields(SweepRecord):
        v = row[f.name]
        if f.name == "sector":
            kwargs[f.name] = str(v)
        elif f.name == "converged":
            kwargs[f.name] = v if isinstance(v, bool) else str(v).lower() == "true"
        elif f.name == "cutoff_used":
            kwargs[f.name] = int(v)
        else:
            kwargs[f.name] = math.nan if v is None or v == "" else float(v)
    return SweepRecord(**kwargs)


def load_records(path: str | os.PathLike) -> list[SweepRecord]:
    """Read sweep records back from a CSV or JSON file written by :func:`emit`."""
    text = Path(path).read_text()
    if text.lstrip().startswith("["):
        rows = json.loads(text)
    else:
        rows = list(csv.DictReader(io.StringIO(text)))
    return [_record_from_strings(r) for r in rows]
