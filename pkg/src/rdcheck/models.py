"""Reaction systems and their structural assumptions.

A ReactionSystem packages the reaction vector field f together with the
declared structure the rest of the package relies on:

* quasi-positivity: f_i(u) >= 0 whenever u >= 0 and u_i = 0, which is what
  keeps the nonnegative orthant invariant;
* mass control: sum_i f_i(u) <= K0 + K1 * sum_i u_i on the orthant, with
  K0 >= 0 and K1 of either sign (K1 < 0 means uniform mass decay);
* polynomial growth: |f_i(u)| <= K (1 + |u|^{2+eps}) with K > 0, eps >= 0.

Declared constants are never trusted: check_structure probes all three
inequalities on randomized orthant samples and returns the first violating
witness, which is how hand-broken models are caught at verify time.

Two families are built in.  The reversible exchange model (four species,
rate u1 u2 - u3 u4 both ways) conserves three independent linear masses and
dissipates the entropy sum f_i log u_i.  The skew Lotka-Volterra family
f_i = (-tau_i + (A u)_i) u_i with A + A^T = 0 has sum_i f_i = -sum_i tau_i
u_i, hence exact geometric mass decay under equal tau.  Custom polynomial
right-hand sides carry user-declared constants.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "NEGATIVE_CLAMP_FLOOR",
    "ReactionSystem",
    "QuadraticReversibleSpec",
    "SkewLVSpec",
    "PolynomialSpec",
    "instantiate_model",
    "eval_reaction",
    "CheckOutcome",
    "StructureVerdict",
    "check_structure",
    "entropy_dissipation",
]

# Values in [NEGATIVE_CLAMP_FLOOR, 0) are treated as exact zeros before a
# reaction evaluation; anything below is a genuine domain violation.
NEGATIVE_CLAMP_FLOOR = -1e-12

# Orthant sampling range for structure probes (log-uniform).
_SAMPLE_LOG_LO = -6.0
_SAMPLE_LOG_HI = 3.0

_QP_TOL = 1e-12
_MASS_TOL = 1e-9
_GROWTH_TOL = 1e-12


@dataclass(frozen=True)
class ReactionSystem:
    """A reaction vector field with declared structure constants.

    Attributes:
        name: human-readable family name.
        n_species: number of species N.
        diffusion: per-species diffusion coefficients, all > 0.
        k0, k1: mass-control constants (sum f <= k0 + k1 sum u).
        growth_k, growth_eps: growth-bound constants.
        evaluator: callable (u, t) -> f(u, t); u has shape (N,) or
            (N, M) with broadcasting over the trailing axis.  Built-in
            families ignore t; time-rescaled systems do not.
        time_dependent: whether the evaluator genuinely uses t.
        k0_decay: the mass source is k0 * exp(-k0_decay * t); zero for the
            constant-source case.
        conservation_laws: tuple of (label, weight-vector) linear invariants
            of the reaction (empty if none are declared).
        entropy_nonpositive: whether sum f_i log u_i <= 0 is guaranteed for
            this family (asserted at verify time only if True).
        uniform_decay_rate: tau when sum f = -tau * sum u holds exactly
            (equal-tau skew Lotka-Volterra), else None.
    """

    name: str
    n_species: int
    diffusion: np.ndarray
    k0: float
    k1: float
    growth_k: float
    growth_eps: float
    evaluator: Callable[[np.ndarray, float], np.ndarray]
    time_dependent: bool = False
    k0_decay: float = 0.0
    conservation_laws: tuple = ()
    entropy_nonpositive: bool = False
    uniform_decay_rate: float | None = None

    def mass_source_rate(self, t: float) -> float:
        """Mass-control source K0(t) = k0 * exp(-k0_decay * t)."""
        if self.k0 == 0.0:
            return 0.0
        if self.k0_decay == 0.0:
            return self.k0
        return self.k0 * float(np.exp(-self.k0_decay * t))

    def mass_source_integral(self, t: float) -> float:
        """Closed-form integral of the mass source over [0, t]."""
        if self.k0 == 0.0:
            return 0.0
        if self.k0_decay == 0.0:
            return self.k0 * t
        return self.k0 * (1.0 - float(np.exp(-self.k0_decay * t))) / self.k0_decay


@dataclass(frozen=True)
class QuadraticReversibleSpec:
    """Reversible exchange model u1 + u2 <-> u3 + u4, both rates one."""


@dataclass(frozen=True)
class SkewLVSpec:
    """Skew Lotka-Volterra family f_i = (-tau_i + (A u)_i) u_i.

    The interaction matrix must be exactly skew (A + A^T identically zero,
    tolerance zero): the cancellation u . A u = 0 is what makes the mass
    decay identity exact, and a nearly-skew matrix would silently break it.
    """

    interaction: Sequence[Sequence[float]]
    decay: Sequence[float]


@dataclass(frozen=True)
class PolynomialSpec:
    """Custom polynomial right-hand side with user-declared constants.

    terms[i] is the list of monomials of f_i, each a (coefficient, powers)
    pair with one nonnegative integer power per species.
    """

    n_species: int
    terms: Sequence[Sequence[tuple]]
    k0: float
    k1: float
    growth_k: float
    growth_eps: float
    name: str = "custom-polynomial"


def _check_diffusion(diffusion, n_species: int) -> np.ndarray:
    d = np.asarray(diffusion, dtype=np.float64)
    if d.shape != (n_species,):
        raise ValueError(
            f"diffusion must have one coefficient per species "
            f"({n_species}), got shape {d.shape}"
        )
    if not np.all(np.isfinite(d)) or np.any(d <= 0.0):
        raise ValueError(f"diffusion coefficients must be finite and > 0, got {d}")
    return d


def _quad_evaluator(u: np.ndarray, t: float) -> np.ndarray:
    # Single shared rate keeps f1 + f3 = 0 exact in floating point.
    rate = u[0] * u[1] - u[2] * u[3]
    return np.stack((-rate, -rate, rate, rate))


def _make_skew_evaluator(a: np.ndarray, tau: np.ndarray):
    def evaluate(u: np.ndarray, t: float) -> np.ndarray:
        lin = a @ u
        if u.ndim == 2:
            return (lin - tau[:, None]) * u
        return (lin - tau) * u

    return evaluate


def _make_polynomial_evaluator(terms):
    def evaluate(u: np.ndarray, t: float) -> np.ndarray:
        out = np.zeros_like(u)
        for i, monomials in enumerate(terms):
            acc = np.zeros_like(u[0])
            for coef, powers in monomials:
                term = np.full_like(u[0], coef)
                for j, p in enumerate(powers):
                    if p == 1:
                        term = term * u[j]
                    elif p > 1:
                        term = term * u[j] ** p
                acc = acc + term
            out[i] = acc
        return out

    return evaluate


def instantiate_model(spec, diffusion) -> ReactionSystem:
    """Build a ReactionSystem from a family spec and diffusion coefficients.

    Structure constants are derived for the built-in families (reversible
    exchange: K0 = K1 = 0, K = 1, eps = 0; skew Lotka-Volterra: K0 = 0,
    K1 = -min tau, quadratic growth) and copied from the PolynomialSpec
    fields for custom polynomials.

    Raises:
        ValueError: on malformed diffusion, a non-skew interaction matrix,
            or inconsistent polynomial term shapes.
    """
    if isinstance(spec, QuadraticReversibleSpec):
        d = _check_diffusion(diffusion, 4)
        laws = (
            ("u1+u3", np.array([1.0, 0.0, 1.0, 0.0])),
            ("u2+u3", np.array([0.0, 1.0, 1.0, 0.0])),
            ("u2+u4", np.array([0.0, 1.0, 0.0, 1.0])),
        )
        return ReactionSystem(
            name="quadratic-reversible",
            n_species=4,
            diffusion=d,
            k0=0.0,
            k1=0.0,
            growth_k=1.0,
            growth_eps=0.0,
            evaluator=_quad_evaluator,
            conservation_laws=laws,
            entropy_nonpositive=True,
            uniform_decay_rate=None,
        )
    if isinstance(spec, SkewLVSpec):
        a = np.asarray(spec.interaction, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"interaction matrix must be square, got shape {a.shape}")
        n = a.shape[0]
        if not np.all(np.isfinite(a)):
            raise ValueError("interaction matrix must be finite")
        if np.any(a + a.T != 0.0):
            raise ValueError("interaction matrix must be exactly skew (A + A^T = 0)")
        tau = np.asarray(spec.decay, dtype=np.float64)
        if tau.shape != (n,) or not np.all(np.isfinite(tau)):
            raise ValueError(f"decay vector must be finite with length {n}")
        d = _check_diffusion(diffusion, n)
        # |f_i| <= (max|tau| + max row norm)(1 + |u|^2)
        growth_k = float(np.max(np.abs(tau)) if n else 0.0) + float(
            np.max(np.sqrt(np.sum(a * a, axis=1)))
        )
        growth_k = max(growth_k, 1.0)
        uniform = float(tau[0]) if np.all(tau == tau[0]) else None
        return ReactionSystem(
            name="skew-lotka-volterra",
            n_species=n,
            diffusion=d,
            k0=0.0,
            k1=float(-np.min(tau)),
            growth_k=growth_k,
            growth_eps=0.0,
            evaluator=_make_skew_evaluator(a, tau),
            uniform_decay_rate=uniform,
        )
    if isinstance(spec, PolynomialSpec):
        n = int(spec.n_species)
        if n < 1:
            raise ValueError(f"n_species must be >= 1, got {spec.n_species}")
        if len(spec.terms) != n:
            raise ValueError(
                f"terms must list monomials for each of {n} species, "
                f"got {len(spec.terms)} lists"
            )
        cleaned = []
        for i, monomials in enumerate(spec.terms):
            row = []
            for coef, powers in monomials:
                coef = float(coef)
                powers = tuple(int(p) for p in powers)
                if len(powers) != n or any(p < 0 for p in powers):
                    raise ValueError(
                        f"species {i + 1}: each monomial needs {n} nonnegative "
                        f"integer powers, got {powers}"
                    )
                row.append((coef, powers))
            cleaned.append(tuple(row))
        if spec.k0 < 0.0:
            raise ValueError(f"k0 must be >= 0, got {spec.k0}")
        if spec.growth_k <= 0.0:
            raise ValueError(f"growth constant must be > 0, got {spec.growth_k}")
        if spec.growth_eps < 0.0:
            raise ValueError(f"growth exponent shift must be >= 0, got {spec.growth_eps}")
        d = _check_diffusion(diffusion, n)
        return ReactionSystem(
            name=spec.name,
            n_species=n,
            diffusion=d,
            k0=float(spec.k0),
            k1=float(spec.k1),
            growth_k=float(spec.growth_k),
            growth_eps=float(spec.growth_eps),
            evaluator=_make_polynomial_evaluator(tuple(cleaned)),
        )
    raise TypeError(f"unknown model spec {type(spec).__name__}")


def _clamp_point(sys: ReactionSystem, u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (sys.n_species,):
        raise ValueError(
            f"state must have length {sys.n_species}, got shape {u.shape}"
        )
    if not np.all(np.isfinite(u)):
        raise ValueError("state must be finite")
    low = np.min(u)
    if low < NEGATIVE_CLAMP_FLOOR:
        i = int(np.argmin(u))
        raise ValueError(
            f"species {i + 1} is negative beyond the clamp floor: {low}"
        )
    if low < 0.0:
        u = np.where(u < 0.0, 0.0, u)
    return u


def eval_reaction(sys: ReactionSystem, u, t: float = 0.0) -> np.ndarray:
    """Evaluate f(u) at a single state point.

    Components in [-1e-12, 0) are clamped to exact zero first; anything
    below that floor raises a domain error naming the species.
    """
    return np.asarray(sys.evaluator(_clamp_point(sys, u), float(t)), dtype=np.float64)


@dataclass(frozen=True)
class CheckOutcome:
    """Outcome of one sampled structure probe.

    `worst` is the extremal margin or ratio seen (check-specific sign
    convention documented at the call site); `witness` is the first
    violating sample, or None when the check passed.
    """

    passed: bool
    worst: float
    witness: tuple | None = None


@dataclass(frozen=True)
class StructureVerdict:
    """Joint verdict of the three structural probes."""

    quasi_positive: CheckOutcome
    mass_control: CheckOutcome
    growth: CheckOutcome
    samples_used: int

    @property
    def passed(self) -> bool:
        return (
            self.quasi_positive.passed
            and self.mass_control.passed
            and self.growth.passed
        )


def _log_uniform(rng: np.random.Generator, size) -> np.ndarray:
    return 10.0 ** rng.uniform(_SAMPLE_LOG_LO, _SAMPLE_LOG_HI, size=size)


def check_structure(
    sys: ReactionSystem, rng: np.random.Generator, n_samples: int = 10_000
) -> StructureVerdict:
    """Probe quasi-positivity, mass control and growth on random samples.

    Quasi-positivity is sampled on each boundary face u_i = 0 with the other
    components log-uniform in [1e-6, 1e3]; the other two checks use full
    orthant samples from the same range.  Time-dependent systems are probed
    at t = 0.

    Returns:
        StructureVerdict carrying, per check, the worst margin/ratio and the
        first violating witness if any.  Sampling never proves the
        inequalities; it can only falsify them.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    n = sys.n_species

    # Quasi-positivity on the N boundary faces.
    qp_passed = True
    qp_worst = np.inf
    qp_witness = None
    per_face = max(1, n_samples // max(n, 1))
    for i in range(n):
        pts = _log_uniform(rng, (n, per_face))
        pts[i, :] = 0.0
        vals = np.asarray(sys.evaluator(pts, 0.0), dtype=np.float64)[i, :]
        lo = float(np.min(vals))
        if lo < qp_worst:
            qp_worst = lo
        if lo < -_QP_TOL and qp_witness is None:
            j = int(np.argmin(vals))
            qp_passed = False
            qp_witness = (i + 1, pts[:, j].copy(), lo)

    # Mass control and growth on shared orthant samples.
    pts = _log_uniform(rng, (n, n_samples))
    fvals = np.asarray(sys.evaluator(pts, 0.0), dtype=np.float64)
    total_u = np.sum(pts, axis=0)
    total_f = np.sum(fvals, axis=0)
    allowance = sys.k0 + sys.k1 * total_u + _MASS_TOL * (1.0 + total_u)
    margin = total_f - allowance
    mc_worst = float(np.max(margin))
    mc_passed = mc_worst <= 0.0
    mc_witness = None
    if not mc_passed:
        j = int(np.argmax(margin))
        mc_witness = (pts[:, j].copy(), float(total_f[j]), float(allowance[j]))

    norms = np.sqrt(np.sum(pts * pts, axis=0))
    envelope = sys.growth_k * (1.0 + norms ** (2.0 + sys.growth_eps))
    ratio = np.max(np.abs(fvals), axis=0) / envelope
    gr_worst = float(np.max(ratio))
    gr_passed = gr_worst <= 1.0 + _GROWTH_TOL
    gr_witness = None
    if not gr_passed:
        j = int(np.argmax(ratio))
        gr_witness = (pts[:, j].copy(), float(np.max(np.abs(fvals[:, j]))), float(envelope[j]))

    return StructureVerdict(
        quasi_positive=CheckOutcome(qp_passed, qp_worst, qp_witness),
        mass_control=CheckOutcome(mc_passed, mc_worst, mc_witness),
        growth=CheckOutcome(gr_passed, gr_worst, gr_witness),
        samples_used=n * per_face + n_samples,
    )


def entropy_dissipation(sys: ReactionSystem, u, t: float = 0.0) -> float:
    """sum_i f_i(u) log(u_i) at a strictly positive state point.

    Raises:
        ValueError: if any component is not strictly positive.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (sys.n_species,):
        raise ValueError(f"state must have length {sys.n_species}, got shape {u.shape}")
    if not np.all(np.isfinite(u)) or np.any(u <= 0.0):
        raise ValueError("entropy dissipation requires strictly positive components")
    f = np.asarray(sys.evaluator(u, float(t)), dtype=np.float64)
    return float(np.dot(f, np.log(u)))
