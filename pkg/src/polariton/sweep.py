"""Config files, parameter sweeps, figure presets and CSV/JSON output.

Config files are flat ``key = value`` lines; ``#`` starts a comment.
Times are given in ps and energies in eV.  ``values`` is either a comma
separated list or ``start:stop:num`` (inclusive linspace).
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .constants import inv_ev_to_ps, ps_to_inv_ev
from .model import PolaritonSpec, SpecError
from .propagator import (
    PositivityError,
    converged_stationary_state,
    direct_stationary_energy,
    edge_population,
)
from .thermo import SIGN_CONVENTION, thermo_record

log = logging.getLogger(__name__)

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4, 5

M_MAX = 20  # truncation cap for the adaptive edge check (N^2 = 1600)

AXES = ("V", "chi", "A_X", "A_P", "Gamma_P_linked", "alpha_X", "alpha_P")

CSV_COLUMNS = ("series", "axis_value", "E_TLS", "E_pho", "E_int", "E_total",
               "Qdot_X", "Qdot_P", "Wbar", "Qbar_irr", "Eff", "S",
               "stationary", "residual", "error")
ORACLE_COLUMNS = ("E_total_direct", "oracle_rel_diff")

# config key -> (spec field, converter)
SPEC_KEYS = {
    "eps1": ("eps1", float),
    "eps2": ("eps2", float),
    "omega": ("omega", float),
    "chi": ("chi", float),
    "V": ("V", float),
    "omega_drive": ("omega_drive", float),
    "A_X": ("A_X", float),
    "A_P": ("A_P", float),
    "Gamma_X": ("Gamma_X", float),
    "Gamma_P": ("Gamma_P", float),
    "T_env_K": ("T_env", float),
    "m_o": ("m_o", int),
    "horizon_ps": ("t_final", lambda s: ps_to_inv_ev(float(s))),
    "eta": ("eta", float),
    "anharmonic_convention": ("anharmonic_convention", str),
    "zero_point_shift": ("zero_point_shift", lambda s: _parse_bool(s)),
    "cross_terms": ("cross_terms", lambda s: _parse_bool(s)),
}
PLAN_KEYS = ("axis", "values", "preset", "outputs")


class ConfigError(Exception):
    def __init__(self, message, code, key=None):
        super().__init__(message)
        self.code = code
        self.key = key


def _parse_bool(s):
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def parse_values(text):
    text = text.strip()
    if ":" in text:
        start, stop, num = text.split(":")
        return [float(x) for x in np.linspace(float(start), float(stop), int(num))]
    return [float(x) for x in text.split(",") if x.strip()]


@dataclass(frozen=True)
class Series:
    label: str
    overrides: dict = field(default_factory=dict)
    axis: Optional[str] = None  # falls back to the plan axis


@dataclass(frozen=True)
class SweepPlan:
    base: PolaritonSpec
    axis: str
    values: tuple
    outputs: tuple = ()
    preset: Optional[str] = None
    series: tuple = (Series(""),)
    note: str = ""

    def __post_init__(self):
        for s in self.series:
            axis = s.axis or self.axis
            if axis not in AXES:
                raise ConfigError(f"axis must be one of {AXES}", EXIT_VALIDATION, "axis")
        vals = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ConfigError("axis values must be finite", EXIT_VALIDATION, "values")
        d = np.diff(vals)
        if len(vals) > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise ConfigError("axis values must be strictly ordered", EXIT_VALIDATION, "values")
        bad = [o for o in self.outputs if o not in CSV_COLUMNS]
        if bad:
            raise ConfigError(f"unknown output {bad[0]!r}", EXIT_VALIDATION, "outputs")

    def points(self):
        """(series label, axis name, axis value, spec) in output order."""
        out = []
        for s in self.series:
            axis = s.axis or self.axis
            base = self.base.replace(**s.overrides)
            for v in self.values:
                out.append((s.label, axis, float(v), apply_axis(base, axis, v)))
        return out

    def replace_base(self, **changes):
        return SweepPlan(self.base.replace(**changes), self.axis, self.values, self.outputs,
                         self.preset, self.series, self.note)


def apply_axis(spec, axis, value):
    value = float(value)
    if axis == "Gamma_P_linked":
        return spec.replace(Gamma_P=value, Gamma_X=value / 2)
    if axis == "alpha_X":
        return spec.replace(A_X=value, A_P=0.0)
    if axis == "alpha_P":
        return spec.replace(A_X=0.0, A_P=value)
    return spec.replace(**{axis: value})


# ---------------------------------------------------------------- presets

FIG1 = dict(omega=1.0, omega_drive=1.0, Gamma_X=0.2, Gamma_P=0.4, A_X=0.1, A_P=0.0,
            eps1=0.0, eps2=1.0, T_env=300.0, t_final=ps_to_inv_ev(8.27))
V_GRID = tuple(np.linspace(1.0, 3.0, 41))
CHI_WEAK = (0.0, 3e-5, 6e-5, 9e-5)
CHI_STRONG = (2e-4, 1e-3, 2e-3, 6e-3)
CHI_FIG6 = (0.0, 1e-4, 4e-4, 1e-3)
ALPHA_GRID = tuple(np.round(np.linspace(0.0, 0.09, 10), 12))


def _chi_series(chis):
    return tuple(Series(f"chi={c:g}", {"chi": c}) for c in chis)


def figure_presets():
    base = PolaritonSpec(**FIG1)
    weak = lambda panel, outs: SweepPlan(  # noqa: E731
        base.replace(V=2.0), "chi", CHI_WEAK, outs, panel)
    fig5 = lambda tag, V: SweepPlan(  # noqa: E731
        base.replace(V=V, A_X=0.05, A_P=0.05), "A_P", ALPHA_GRID,
        ("E_total", "E_pho", "E_TLS", "E_int"), tag,
        (Series("A_X=0.05,A_P=alpha", {"A_X": 0.05}, "A_P"),
         Series("A_X=alpha,A_P=0.05", {"A_P": 0.05}, "A_X")))
    fig7_base = base.replace(chi=4e-4, t_final=ps_to_inv_ev(827.0))
    fig6_series = tuple(Series(f"{proto},chi={c:g}", {"chi": c}, proto)
                        for proto in ("alpha_X", "alpha_P") for c in CHI_FIG6)
    return {
        "fig1a": SweepPlan(base, "V", V_GRID, ("E_total",), "fig1a", _chi_series(CHI_WEAK[:3])),
        "fig1b": weak("fig1b", ("E_TLS", "E_pho", "E_int")),
        "fig1c": weak("fig1c", ("Qdot_X", "Qdot_P")),
        "fig1d": weak("fig1d", ("Wbar",)),
        "fig2": SweepPlan(base, "V", V_GRID, ("E_TLS", "E_int", "E_pho", "E_total"), "fig2",
                          _chi_series(CHI_STRONG)),
        "fig3": SweepPlan(base, "V", V_GRID, ("Qdot_X", "Qdot_P", "Qbar_irr"), "fig3",
                          _chi_series(CHI_STRONG)),
        "fig4": SweepPlan(base.replace(A_X=0.05), "V", V_GRID,
                          ("E_TLS", "E_int", "E_pho", "E_total", "Qdot_X", "Qdot_P", "Wbar"),
                          "fig4",
                          (Series("A_X=0.05", {"A_X": 0.05, "A_P": 0.0}),
                           Series("A_P=0.05", {"A_X": 0.0, "A_P": 0.05}))),
        "fig5ab": fig5("fig5ab", 2.0),
        "fig5cd": fig5("fig5cd", 1.75),
        "fig6": SweepPlan(base.replace(V=2.0), "alpha_X", ALPHA_GRID[1:], ("E_total", "Eff"),
                          "fig6", fig6_series,
                          note="chi values are a declared choice: " + ", ".join(f"{c:g}" for c in CHI_FIG6)),
        "fig7": SweepPlan(fig7_base, "V", V_GRID, ("E_TLS", "E_int", "E_pho", "E_total"), "fig7",
                          tuple(Series(f"Gamma_P={g:g}", {"Gamma_P": g, "Gamma_X": g / 2})
                                for g in (0.01, 0.08, 0.4))),
    }


# ---------------------------------------------------------------- config

def read_config(path):
    """Parse a flat key = value file into an ordered dict of strings."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}", EXIT_IO) from exc
    except UnicodeDecodeError as exc:
        raise ConfigError(f"{path} is not UTF-8", EXIT_PARSE) from exc
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'", EXIT_PARSE)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{path}:{lineno}: empty key or value", EXIT_PARSE)
        if key in entries:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}", EXIT_PARSE, key)
        entries[key] = value
    return entries


def plan_from_entries(entries):
    unknown = [k for k in entries if k not in SPEC_KEYS and k not in PLAN_KEYS]
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r}", EXIT_VALIDATION, unknown[0])
    preset = entries.get("preset")
    if preset is not None:
        presets = figure_presets()
        if preset not in presets:
            raise ConfigError(f"unknown preset {preset!r}", EXIT_VALIDATION, "preset")
        plan = presets[preset]
        base, axis, values, outputs, series = plan.base, plan.axis, plan.values, plan.outputs, plan.series
    else:
        base, axis, values, outputs, series = PolaritonSpec(**FIG1), "V", None, (), (Series(""),)
    changes = {}
    for key, (name, conv) in SPEC_KEYS.items():
        if key in entries:
            try:
                changes[name] = conv(entries[key])
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}", EXIT_PARSE, key) from exc
    try:
        base = base.replace(**changes)
    except SpecError as exc:
        raise ConfigError(str(exc), EXIT_VALIDATION, exc.key) from exc
    # explicit keys beat the preset's per-series overrides
    series = tuple(Series(s.label, {k: v for k, v in s.overrides.items() if k not in changes}, s.axis)
                   for s in series)
    if "axis" in entries:
        axis = entries["axis"]
        series = tuple(Series(s.label, s.overrides) for s in series)
    if len(series) > 1 and len({tuple(sorted(s.overrides.items())) + (s.axis,) for s in series}) == 1:
        series = (Series("", series[0].overrides, series[0].axis),)
    if "values" in entries:
        try:
            values = parse_values(entries["values"])
        except ValueError as exc:
            raise ConfigError(f"values: {exc}", EXIT_PARSE, "values") from exc
    if values is None:
        # single point at the base value of the axis
        field_name = {"Gamma_P_linked": "Gamma_P", "alpha_X": "A_X", "alpha_P": "A_P"}.get(axis, axis)
        values = (float(np.real(getattr(base, field_name, 0.0))),)
    if "outputs" in entries:
        outputs = tuple(s.strip() for s in entries["outputs"].split(",") if s.strip())
    plan = SweepPlan(base, axis, tuple(values), tuple(outputs), preset, series)
    try:
        for *_, spec in plan.points():
            pass
    except SpecError as exc:
        raise ConfigError(str(exc), EXIT_VALIDATION, exc.key) from exc
    return plan


def load_config(path):
    return plan_from_entries(read_config(path))


# ---------------------------------------------------------------- running

def run_point(spec, oracle=False):
    """Stationary thermodynamics for one spec; failures become an error string."""
    row = {"error": ""}
    try:
        spec, result = converged_stationary_state(spec, m_max=M_MAX)
        rec = thermo_record(spec, result)
        row.update(rec.to_dict())
        row["stationary"] = result.stationary
        row["residual"] = result.residual
        row["m_o_used"] = spec.m_o
        row["edge_population"] = edge_population(spec, result)
        if oracle:
            e_direct = direct_stationary_energy(spec, result)
            row["E_total_direct"] = e_direct
            row["oracle_rel_diff"] = abs(e_direct - rec.E_total) / max(abs(rec.E_total), 1e-300)
    except (PositivityError, FloatingPointError, ValueError, np.linalg.LinAlgError) as exc:
        row.update(stationary=False, residual=math.nan, error=f"{type(exc).__name__}: {exc}")
    return row


def _run_point_star(args):
    return run_point(*args)


def spec_delta(spec, reference):
    a, b = asdict(spec), asdict(reference)
    return {k: v for k, v in a.items() if v != b[k]}


def run_sweep(plan, workers=1, oracle=False):
    """One row per sweep point, in plan order.  Raises RuntimeError if every point fails."""
    points = plan.points()
    jobs = [(spec, oracle) for *_, spec in points]
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_point_star, jobs))  # map keeps input order
    else:
        rows = [run_point(*j) for j in jobs]
    table = []
    for (label, axis, value, spec), row in zip(points, rows):
        row = dict(row)
        row.update(series=label, axis=axis, axis_value=value,
                   spec_delta=spec_delta(spec, plan.base))
        table.append(row)
    if table and all(r["error"] for r in table):
        raise RuntimeError("all sweep points failed; first error: " + table[0]["error"])
    return table


# ---------------------------------------------------------------- output

def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    if v is None:
        return ""
    return str(v)


def spec_hash(plan):
    payload = json.dumps({"base": asdict(plan.base), "axis": plan.axis,
                          "values": list(map(float, plan.values)),
                          "series": [asdict(s) for s in plan.series]},
                         sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()


def metadata(plan):
    return {
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "spec_hash": spec_hash(plan) if plan is not None else None,
        "sign_convention": SIGN_CONVENTION,
        "code_version": __version__,
        "preset": getattr(plan, "preset", None),
        "note": getattr(plan, "note", ""),
        "horizon_ps": inv_ev_to_ps(plan.base.t_final) if plan is not None else None,
        "units": {"energy": "eV", "rate": "eV^2 (eV per eV^-1); *_eV_per_fs columns in JSON"},
    }


def csv_columns(table):
    cols = list(CSV_COLUMNS)
    if any("E_total_direct" in r for r in table):
        cols[-1:-1] = ORACLE_COLUMNS
    return cols


def _json_safe(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if not math.isfinite(v):
            return repr(v)  # 'nan', 'inf'
        return v
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


def emit(table, fmt, path, plan=None):
    """Write the table (csv or json) and a ``<path>.meta.json`` sidecar."""
    path = Path(path)
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    try:
        if fmt == "csv":
            cols = csv_columns(table)
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(cols)
                for row in table:
                    w.writerow([_fmt(row.get(c)) for c in cols])
        else:
            with open(path, "w", encoding="utf-8") as fh:
                json.dump([_json_safe(r) for r in table], fh, indent=1)
                fh.write("\n")
        with open(str(path) + ".meta.json", "w", encoding="utf-8") as fh:
            json.dump(_json_safe(metadata(plan)), fh, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}", EXIT_IO) from exc


def load_json(path):
    """Read a JSON table written by :func:`emit`, restoring nan/inf."""
    def fix(v):
        if v in ("nan", "inf", "-inf"):
            return float(v)
        return v
    with open(path, encoding="utf-8") as fh:
        rows = json.load(fh)
    return [{k: fix(v) for k, v in r.items()} for r in rows]


def default_workers():
    return os.cpu_count() or 1
