"""Run configuration: JSON schema, full validation, and builders.

A run config is a single JSON object with sections model / grid / initial /
solver / diagnostics / transform / fits / inject / output plus a top-level
seed.  Validation is total: every problem is collected with its dotted field
path and reported in one ConfigError, so a bad file is fixed in one pass
rather than one message at a time.

The builders at the bottom turn a validated config into live objects
(ReactionSystem, Grid1D, initial SystemState); they cannot fail on input
that passed validation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import Field, Grid1D
from .models import (
    PolynomialSpec,
    QuadraticReversibleSpec,
    ReactionSystem,
    SkewLVSpec,
    instantiate_model,
)
from .solver import SolverConfig, SystemState

__all__ = ["RunConfig", "load_config", "validate_config", "build_initial_state"]

_BUILTINS = ("quadratic_reversible", "skew_lv")
_PROFILE_TYPES = ("constant", "gaussian", "piecewise")
_FIT_SERIES = ("mass_total", "sup_total", "distance_to_equilibrium")
_FIT_MODES = ("exponential", "polynomial")


@dataclass
class RunConfig:
    """Validated run configuration plus live model objects."""

    raw: dict
    system: ReactionSystem
    grid: Grid1D
    initial_profiles: list
    solver: SolverConfig
    diagnostics_enabled: bool
    diagnostics_d: float | None
    diagnostics_gammas: tuple
    augment: bool
    fits: list
    inject_z_offset: float
    inject_augmentation_offset: float
    csv_path: str | None
    report_path: str | None
    seed: int


class _Collector:
    def __init__(self):
        self.errors: list[str] = []

    def add(self, path: str, message: str) -> None:
        self.errors.append(f"{path}: {message}")

    def number(self, obj: dict, path: str, key: str, *, required=True, default=None,
               minimum=None, exclusive_minimum=None, maximum=None):
        label = f"{path}.{key}" if path else key
        if key not in obj:
            if required:
                self.add(label, "missing required value")
            return default
        val = obj[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.add(label, f"expected a number, got {val!r}")
            return default
        val = float(val)
        if not math.isfinite(val):
            self.add(label, f"must be finite, got {val}")
            return default
        if minimum is not None and val < minimum:
            self.add(label, f"must be >= {minimum}, got {val}")
            return default
        if exclusive_minimum is not None and val <= exclusive_minimum:
            self.add(label, f"must be > {exclusive_minimum}, got {val}")
            return default
        if maximum is not None and val > maximum:
            self.add(label, f"must be <= {maximum}, got {val}")
            return default
        return val

    def integer(self, obj: dict, path: str, key: str, *, required=True, default=None,
                minimum=None):
        label = f"{path}.{key}" if path else key
        if key not in obj:
            if required:
                self.add(label, "missing required value")
            return default
        val = obj[key]
        if isinstance(val, bool) or not isinstance(val, int):
            self.add(label, f"expected an integer, got {val!r}")
            return default
        if minimum is not None and val < minimum:
            self.add(label, f"must be >= {minimum}, got {val}")
            return default
        return val

    def section(self, obj: dict, key: str, *, required=True) -> dict | None:
        if key not in obj:
            if required:
                self.add(key, "missing required section")
            return None
        val = obj[key]
        if not isinstance(val, dict):
            self.add(key, f"expected an object, got {type(val).__name__}")
            return None
        return val


def _validate_model(col: _Collector, raw: dict) -> ReactionSystem | None:
    sec = col.section(raw, "model")
    if sec is None:
        return None
    has_builtin = "builtin" in sec
    has_custom = "custom" in sec
    if has_builtin == has_custom:
        col.add("model", "exactly one of 'builtin' or 'custom' is required")
        return None

    diffusion = sec.get("diffusion")
    if not isinstance(diffusion, list) or not diffusion:
        col.add("model.diffusion", "expected a nonempty list of coefficients")
        return None
    bad = False
    for i, v in enumerate(diffusion):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0:
            col.add(f"model.diffusion[{i}]", f"must be a finite number > 0, got {v!r}")
            bad = True
    if bad:
        return None

    if has_builtin:
        name = sec["builtin"]
        if name == "quadratic_reversible":
            if len(diffusion) != 4:
                col.add("model.diffusion", f"quadratic_reversible needs 4 coefficients, got {len(diffusion)}")
                return None
            return instantiate_model(QuadraticReversibleSpec(), diffusion)
        if name == "skew_lv":
            a = sec.get("interaction")
            tau = sec.get("decay")
            n = len(diffusion)
            if not isinstance(a, list) or len(a) != n or any(
                not isinstance(row, list) or len(row) != n for row in a
            ):
                col.add("model.interaction", f"expected an {n}x{n} matrix")
                return None
            if not isinstance(tau, list) or len(tau) != n:
                col.add("model.decay", f"expected a list of length {n}")
                return None
            try:
                return instantiate_model(SkewLVSpec(interaction=a, decay=tau), diffusion)
            except ValueError as exc:
                col.add("model", str(exc))
                return None
        col.add("model.builtin", f"unknown builtin {name!r}; choose from {_BUILTINS}")
        return None

    custom = sec["custom"]
    if not isinstance(custom, dict):
        col.add("model.custom", "expected an object")
        return None
    n = col.integer(custom, "model.custom", "n_species", minimum=1)
    k0 = col.number(custom, "model.custom", "k0", minimum=0.0)
    k1 = col.number(custom, "model.custom", "k1")
    k = col.number(custom, "model.custom", "k", exclusive_minimum=0.0)
    eps = col.number(custom, "model.custom", "eps", minimum=0.0)
    terms = custom.get("terms")
    if n is None or k0 is None or k1 is None or k is None or eps is None:
        return None
    if len(diffusion) != n:
        col.add("model.diffusion", f"needs {n} coefficients for n_species={n}, got {len(diffusion)}")
        return None
    if not isinstance(terms, list) or len(terms) != n:
        col.add("model.custom.terms", f"expected one monomial list per species ({n})")
        return None
    parsed = []
    for i, row in enumerate(terms):
        if not isinstance(row, list):
            col.add(f"model.custom.terms[{i}]", "expected a list of monomials")
            return None
        prow = []
        for j, mono in enumerate(row):
            path = f"model.custom.terms[{i}][{j}]"
            if not isinstance(mono, dict) or "coef" not in mono or "powers" not in mono:
                col.add(path, "expected an object with 'coef' and 'powers'")
                return None
            coef = mono["coef"]
            powers = mono["powers"]
            if isinstance(coef, bool) or not isinstance(coef, (int, float)) or not math.isfinite(coef):
                col.add(f"{path}.coef", f"must be a finite number, got {coef!r}")
                return None
            if (
                not isinstance(powers, list)
                or len(powers) != n
                or any(isinstance(p, bool) or not isinstance(p, int) or p < 0 for p in powers)
            ):
                col.add(f"{path}.powers", f"expected {n} nonnegative integers")
                return None
            prow.append((float(coef), tuple(powers)))
        parsed.append(prow)
    name = custom.get("name", "custom-polynomial")
    if not isinstance(name, str):
        col.add("model.custom.name", "expected a string")
        return None
    try:
        return instantiate_model(
            PolynomialSpec(
                n_species=n, terms=parsed, k0=k0, k1=k1, growth_k=k,
                growth_eps=eps, name=name,
            ),
            diffusion,
        )
    except ValueError as exc:
        col.add("model.custom", str(exc))
        return None


def _validate_grid(col: _Collector, raw: dict) -> Grid1D | None:
    sec = col.section(raw, "grid")
    if sec is None:
        return None
    n = col.integer(sec, "grid", "n_cells", minimum=2)
    length = col.number(sec, "grid", "length", required=False, default=1.0,
                        exclusive_minimum=0.0)
    if n is None or length is None:
        return None
    return Grid1D(n, length)


def _validate_profile(col: _Collector, path: str, prof, grid: Grid1D | None):
    if not isinstance(prof, dict) or "type" not in prof:
        col.add(path, "expected an object with a 'type'")
        return None
    kind = prof["type"]
    if kind == "constant":
        val = col.number(prof, path, "value", minimum=0.0)
        if val is None:
            return None
        return ("constant", val)
    if kind == "gaussian":
        center = col.number(prof, path, "center")
        width = col.number(prof, path, "width", exclusive_minimum=0.0)
        amp = col.number(prof, path, "amplitude", minimum=0.0)
        if center is None or width is None or amp is None:
            return None
        return ("gaussian", center, width, amp)
    if kind == "piecewise":
        values = prof.get("values")
        breaks = prof.get("breaks")
        if not isinstance(values, list) or not values:
            col.add(f"{path}.values", "expected a nonempty list")
            return None
        for i, v in enumerate(values):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                col.add(f"{path}.values[{i}]", f"must be a finite number >= 0, got {v!r}")
                return None
        if not isinstance(breaks, list) or len(breaks) != len(values) - 1:
            col.add(f"{path}.breaks", f"expected {len(values) - 1} interior breakpoints")
            return None
        prev = 0.0
        for i, b in enumerate(breaks):
            if isinstance(b, bool) or not isinstance(b, (int, float)) or not math.isfinite(b):
                col.add(f"{path}.breaks[{i}]", f"must be a finite number, got {b!r}")
                return None
            if b <= prev:
                col.add(f"{path}.breaks[{i}]", "breakpoints must be strictly increasing from 0")
                return None
            prev = float(b)
        if grid is not None and prev >= grid.length:
            col.add(f"{path}.breaks", f"breakpoints must lie inside (0, {grid.length})")
            return None
        return ("piecewise", tuple(float(v) for v in values), tuple(float(b) for b in breaks))
    col.add(f"{path}.type", f"unknown profile type {kind!r}; choose from {_PROFILE_TYPES}")
    return None


def validate_config(raw: dict) -> RunConfig:
    """Validate a parsed JSON object; raise ConfigError with every problem."""
    if not isinstance(raw, dict):
        raise ConfigError(["top level: expected a JSON object"])
    col = _Collector()

    system = _validate_model(col, raw)
    grid = _validate_grid(col, raw)

    profiles = None
    if "initial" not in raw:
        col.add("initial", "missing required section")
    elif not isinstance(raw["initial"], list):
        col.add("initial", "expected a list with one profile per species")
    else:
        profiles = []
        for i, prof in enumerate(raw["initial"]):
            parsed = _validate_profile(col, f"initial[{i}]", prof, grid)
            profiles.append(parsed)
        if any(p is None for p in profiles):
            profiles = None
    if system is not None and profiles is not None and len(profiles) != system.n_species:
        col.add(
            "initial",
            f"model has {system.n_species} species but {len(profiles)} profiles given",
        )
        profiles = None

    solver_cfg = None
    sec = col.section(raw, "solver")
    if sec is not None:
        dt = col.number(sec, "solver", "dt", exclusive_minimum=0.0)
        t_end = col.number(sec, "solver", "t_end", exclusive_minimum=0.0)
        record_every = col.integer(sec, "solver", "record_every", required=False,
                                   default=1, minimum=1)
        floor = col.number(sec, "solver", "positivity_floor", required=False,
                           default=-1e-12, maximum=0.0)
        halvings = col.integer(sec, "solver", "max_step_halvings", required=False,
                               default=20, minimum=0)
        if dt is not None and t_end is not None and dt > t_end:
            col.add("solver.dt", f"dt = {dt} exceeds t_end = {t_end}")
        elif None not in (dt, t_end, record_every, floor, halvings):
            solver_cfg = SolverConfig(
                dt=dt, t_end=t_end, positivity_floor=floor,
                max_step_halvings=halvings, record_every=record_every,
            )

    augment = False
    sec = col.section(raw, "transform", required=False)
    if sec is not None:
        augment = sec.get("augment", False)
        if not isinstance(augment, bool):
            col.add("transform.augment", f"expected true/false, got {augment!r}")
            augment = False

    diag_enabled = False
    diag_d = None
    diag_gammas = (0.25, 0.5)
    sec = col.section(raw, "diagnostics", required=False)
    if sec is not None:
        diag_enabled = sec.get("enabled", False)
        if not isinstance(diag_enabled, bool):
            col.add("diagnostics.enabled", f"expected true/false, got {diag_enabled!r}")
            diag_enabled = False
        if diag_enabled:
            diag_d = col.number(sec, "diagnostics", "d", exclusive_minimum=0.0)
            if diag_d is not None and system is not None:
                d_floor = float(np.max(system.diffusion))
                if augment:
                    d_floor = max(d_floor, 1.0)
                if diag_d <= d_floor:
                    col.add(
                        "diagnostics.d",
                        f"must strictly exceed every species diffusion "
                        f"(largest is {d_floor}), got {diag_d}",
                    )
                    diag_d = None
        gammas = sec.get("gammas")
        if gammas is not None:
            if not isinstance(gammas, list) or not gammas:
                col.add("diagnostics.gammas", "expected a nonempty list")
            else:
                ok = True
                for i, g in enumerate(gammas):
                    if isinstance(g, bool) or not isinstance(g, (int, float)) or not (
                        math.isfinite(g) and 0.0 <= g <= 1.0
                    ):
                        col.add(f"diagnostics.gammas[{i}]", f"must lie in [0, 1], got {g!r}")
                        ok = False
                if ok:
                    diag_gammas = tuple(float(g) for g in gammas)

    fits = []
    if "fits" in raw:
        if not isinstance(raw["fits"], list):
            col.add("fits", "expected a list")
        else:
            for i, f in enumerate(raw["fits"]):
                path = f"fits[{i}]"
                if not isinstance(f, dict):
                    col.add(path, "expected an object")
                    continue
                series = f.get("series")
                mode = f.get("mode", "exponential")
                window = f.get("window")
                bias = f.get("bias_correct", False)
                if series not in _FIT_SERIES:
                    col.add(f"{path}.series", f"choose from {_FIT_SERIES}, got {series!r}")
                    continue
                if mode not in _FIT_MODES:
                    col.add(f"{path}.mode", f"choose from {_FIT_MODES}, got {mode!r}")
                    continue
                if (
                    not isinstance(window, list)
                    or len(window) != 2
                    or any(isinstance(w, bool) or not isinstance(w, (int, float)) for w in window)
                    or not window[0] < window[1]
                ):
                    col.add(f"{path}.window", "expected [t_start, t_end] with t_start < t_end")
                    continue
                if not isinstance(bias, bool):
                    col.add(f"{path}.bias_correct", f"expected true/false, got {bias!r}")
                    continue
                fits.append(
                    {
                        "series": series,
                        "mode": mode,
                        "window": (float(window[0]), float(window[1])),
                        "bias_correct": bias,
                    }
                )

    z_offset = 0.0
    aug_offset = 0.0
    sec = col.section(raw, "inject", required=False)
    if sec is not None:
        z_offset = col.number(sec, "inject", "z_offset", required=False, default=0.0)
        aug_offset = col.number(sec, "inject", "augmentation_offset", required=False,
                                default=0.0)
        if z_offset is None:
            z_offset = 0.0
        if aug_offset is None:
            aug_offset = 0.0

    csv_path = None
    report_path = None
    sec = col.section(raw, "output", required=False)
    if sec is not None:
        csv_path = sec.get("csv")
        report_path = sec.get("report")
        if csv_path is not None and not isinstance(csv_path, str):
            col.add("output.csv", f"expected a path string, got {csv_path!r}")
            csv_path = None
        if report_path is not None and not isinstance(report_path, str):
            col.add("output.report", f"expected a path string, got {report_path!r}")
            report_path = None

    seed = col.integer(raw, "", "seed", required=False, default=0, minimum=0)
    if seed is None:
        seed = 0

    if col.errors:
        raise ConfigError(col.errors)
    return RunConfig(
        raw=raw,
        system=system,
        grid=grid,
        initial_profiles=profiles,
        solver=solver_cfg,
        diagnostics_enabled=diag_enabled,
        diagnostics_d=diag_d,
        diagnostics_gammas=diag_gammas,
        augment=augment,
        fits=fits,
        inject_z_offset=z_offset,
        inject_augmentation_offset=aug_offset,
        csv_path=csv_path,
        report_path=report_path,
        seed=seed,
    )


def load_config(path: str) -> RunConfig:
    """Read and validate a JSON run config from disk."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config {path} is not valid JSON: {exc}"]) from exc
    return validate_config(raw)


def _profile_values(profile, grid: Grid1D) -> np.ndarray:
    kind = profile[0]
    x = grid.centers
    if kind == "constant":
        return np.full(grid.n_cells, profile[1])
    if kind == "gaussian":
        _, center, width, amp = profile
        return amp * np.exp(-((x - center) ** 2) / (2.0 * width * width))
    _, values, breaks = profile
    idx = np.searchsorted(np.asarray(breaks), x, side="right")
    return np.asarray(values)[idx]


def build_initial_state(cfg: RunConfig, extra_zero_species: bool = False) -> SystemState:
    """Materialize the initial SystemState (optionally with the closure species)."""
    fields = [
        Field(cfg.grid, _profile_values(p, cfg.grid)) for p in cfg.initial_profiles
    ]
    if extra_zero_species:
        fields.append(Field.constant(cfg.grid, 0.0))
    return SystemState(0.0, fields)
