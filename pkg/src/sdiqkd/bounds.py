"""Eavesdropper bound curves and critical detection efficiencies.

Three computation paths produce the maximal post-selected guessing
probability P_E^max as a function of the blinding parameter eta (or the
observed efficiency eta_avg):

  * closed forms for the 2->1 curve, the 3->1 fixed-encoding curve, and
    the piecewise 3->1 curve when the eavesdropper also controls the
    encoding;
  * a multi-start Nelder-Mead search over the parameterized attack
    families (intercept/resend and delayed-measurement);
  * a bisection solver for the efficiency at which a curve drops to a
    target success probability.

Optimizer parameter vectors are laid out as consecutive (alpha, beta)
angle pairs; see the factory functions for the exact order.  Angles are
evaluated through sines and cosines directly, so the search is smooth
and unconstrained, and results are wrapped into the canonical ranges
only when reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from ._seeds import generator_for
from .attack import IrAttack, DmAttack, postselection_weights
from .protocol import (
    EncodingParams,
    Fixed2to1,
    Fixed3to1,
    GeneralEncoding,
    build_states,
    input_tuples,
)
from .qmath import (
    BlochAngles,
    DensityOperator,
    generator_from_hermitian,
    projector_pair_from_bloch,
    state_from_bloch,
    unitary_from_generator,
)

__all__ = [
    "ETA_AVG_MIN",
    "TAMPERED_PLATEAU_ETA",
    "TAMPERED_PLATEAU_EDGE",
    "TargetUnreachableError",
    "CurveSpec",
    "CurvePoint",
    "OptimizerMeta",
    "OptimizerConfig",
    "eta_from_avg",
    "eta_avg_from_eta",
    "default_grid",
    "analytic_pe_max_2to1",
    "analytic_pe_max_3to1_fixed",
    "analytic_pe_max_3to1_tampered",
    "analytic_pe_max",
    "pe_max_at_eta_avg",
    "analytic_curve",
    "beta_symmetry_3to1",
    "ir_param_count",
    "dm_param_count",
    "ir_attack_from_params",
    "dm_attack_from_params",
    "optimize_ir",
    "optimize_dm",
    "critical_efficiency",
    "sits_on_plateau",
]

# Observed-efficiency domain lower edges, reached at eta = 0.
ETA_AVG_MIN = {2: 0.5, 3: 1.0 / 3.0}

# Blinding strength at which the tampered 3->1 curve flattens to 3/4,
# and the corresponding observed efficiency.
TAMPERED_PLATEAU_ETA = (3.0 * math.sqrt(2.0) - 4.0) / 2.0
TAMPERED_PLATEAU_EDGE = math.sqrt(2.0) - 1.0

_ARCCOS_SLACK = 1e-12


class TargetUnreachableError(ValueError):
    """The bound curve exceeds the target on its whole domain."""


# ---------------------------------------------------------------------------
# Domain helpers


def _check_eta(eta: float) -> float:
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta {eta} outside [0, 1]")
    return float(eta)


def eta_avg_from_eta(n: int, eta: float) -> float:
    """Observed efficiency (1 + (n-1) eta) / n."""
    if n not in (2, 3):
        raise ValueError(f"n must be 2 or 3, got {n}")
    return (1.0 + (n - 1) * _check_eta(eta)) / n


def eta_from_avg(n: int, eta_avg: float) -> float:
    """Inverse of eta_avg_from_eta, with rounding slack at the domain edges."""
    if n not in (2, 3):
        raise ValueError(f"n must be 2 or 3, got {n}")
    lo = ETA_AVG_MIN[n]
    if not lo - 1e-12 <= eta_avg <= 1.0 + 1e-12:
        raise ValueError(f"eta_avg {eta_avg} outside [{lo}, 1]")
    eta = (n * eta_avg - 1.0) / (n - 1)
    return min(max(eta, 0.0), 1.0)


def default_grid(n: int, size: int = 101) -> tuple[float, ...]:
    """Uniform eta_avg sample points over the curve's domain."""
    if size < 2:
        raise ValueError("grid needs at least 2 points")
    return tuple(float(v) for v in np.linspace(ETA_AVG_MIN[n], 1.0, size))


# ---------------------------------------------------------------------------
# Closed forms


def analytic_pe_max_2to1(eta: float) -> float:
    """Maximal 2->1 guessing probability; (2 + sqrt(1 + s^2))/4 with s = (1-eta)/(1+eta)."""
    eta = _check_eta(eta)
    s = (1.0 - eta) / (1.0 + eta)
    angle = math.atan(s)
    return (2.0 + math.cos(angle) + s * math.sin(angle)) / 4.0


def analytic_pe_max_3to1_fixed(eta: float) -> float:
    """Maximal 3->1 guessing probability against the fixed tetrahedral encoding."""
    eta = _check_eta(eta)
    t = math.sqrt(2.0) * (1.0 - eta) / (1.0 + 2.0 * eta)
    angle = math.atan(t)
    return (3.0 + math.cos(angle) + t * math.sin(angle)) / 6.0


def _tampered_steep_branch(eta: float) -> float:
    big_n = 2.0 * (1.0 - eta) / (1.0 + 2.0 * eta)
    x = 1.0 / (big_n * big_n - 1.0)
    if abs(x) > 1.0 + _ARCCOS_SLACK:
        raise ValueError(f"arccos argument {x} indicates evaluation beyond the branch point")
    alpha = math.acos(min(max(x, -1.0), 1.0))
    beta = math.atan(math.tan(alpha) / big_n)
    return (4.0 + (1.0 + math.cos(alpha)) * math.cos(beta) + big_n * math.sin(alpha) * math.sin(beta)) / 8.0


def analytic_pe_max_3to1_tampered(eta: float) -> float:
    """Maximal 3->1 guessing probability when the encoding is also adversarial.

    Piecewise: a closed-form arc below eta = (3 sqrt(2) - 4)/2, a constant
    3/4 plateau above it.  At the break both branches are evaluated and
    must agree within 1e-9.
    """
    eta = _check_eta(eta)
    edge = TAMPERED_PLATEAU_ETA
    if eta < edge - 1e-12:
        return _tampered_steep_branch(eta)
    if eta <= edge + 1e-12:
        steep = _tampered_steep_branch(min(eta, edge))
        if abs(steep - 0.75) > 1e-9:
            raise AssertionError(f"branch mismatch at the plateau edge: {steep} vs 0.75")
        return 0.75
    return 0.75


def analytic_pe_max(n: int, tamper: str, eta: float) -> float:
    """Closed-form P_E^max for a curve configuration.

    For n = 2 the adversarial-encoding search provably gains nothing, so
    both tamper settings share one curve.  The closed forms describe
    intercept/resend strategies; memory attacks reach the same values
    except against the fixed 3-bit encoding, where they sit strictly
    higher and only the optimizer bounds them.
    """
    _check_tamper(tamper)
    if n == 2:
        return analytic_pe_max_2to1(eta)
    if n == 3:
        if tamper == "fixed":
            return analytic_pe_max_3to1_fixed(eta)
        return analytic_pe_max_3to1_tampered(eta)
    raise ValueError(f"n must be 2 or 3, got {n}")


def pe_max_at_eta_avg(n: int, tamper: str, eta_avg: float) -> float:
    """Closed-form P_E^max parameterized by the observed efficiency."""
    return analytic_pe_max(n, tamper, eta_from_avg(n, eta_avg))


def beta_symmetry_3to1() -> tuple[float, float, float]:
    """Optimal interception azimuths against the tetrahedral encoding.

    These are independent of the blinding strength; only the shared
    polar angle moves with eta.
    """
    return (math.pi / 3.0, -math.pi / 3.0, math.pi)


# ---------------------------------------------------------------------------
# Curve and optimizer descriptions


def _check_tamper(tamper: str) -> str:
    if tamper not in ("fixed", "eve"):
        raise ValueError(f"tamper must be 'fixed' or 'eve', got {tamper!r}")
    return tamper


def _check_attack_kind(kind: str) -> str:
    if kind not in ("ir", "dm"):
        raise ValueError(f"attack_kind must be 'ir' or 'dm', got {kind!r}")
    return kind


@dataclass(frozen=True)
class CurveSpec:
    """What to compute: protocol size, attack class, tamper scope, sample grid."""

    n: int
    attack_kind: str
    tamper: str
    grid: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.n not in (2, 3):
            raise ValueError(f"n must be 2 or 3, got {self.n}")
        _check_attack_kind(self.attack_kind)
        _check_tamper(self.tamper)
        grid = tuple(float(v) for v in self.grid)
        if not grid:
            raise ValueError("grid must contain at least one point")
        lo = ETA_AVG_MIN[self.n]
        for v in grid:
            if not lo - 1e-12 <= v <= 1.0 + 1e-12:
                raise ValueError(f"grid point {v} outside [{lo}, 1]")
        object.__setattr__(self, "grid", grid)


@dataclass(frozen=True)
class OptimizerMeta:
    """Diagnostics of one optimized curve point."""

    restarts_used: int
    best_objective: float
    converged: bool
    best_params: tuple[float, ...]


@dataclass(frozen=True)
class CurvePoint:
    """One (eta_avg, P_E^max) sample of a bound curve."""

    eta_avg: float
    pe_max: float
    source: str
    optimizer_meta: OptimizerMeta | None = None

    def __post_init__(self) -> None:
        if self.source not in ("analytic", "optimized"):
            raise ValueError(f"source must be 'analytic' or 'optimized', got {self.source!r}")
        if not 0.5 - 1e-9 <= self.pe_max <= 1.0 + 1e-9:
            raise ValueError(f"pe_max {self.pe_max} outside [1/2, 1]")


@dataclass(frozen=True)
class OptimizerConfig:
    """Multi-start search settings; restarts=None picks the family default
    (32 for searches up to 12 parameters, 128 for larger ones)."""

    restarts: int | None = None
    max_iterations: int | None = None
    xatol: float = 1e-6
    fatol: float = 1e-10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.restarts is not None and self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


def analytic_curve(spec: CurveSpec) -> list[CurvePoint]:
    """Closed-form interception curve sampled on the grid.

    The closed forms describe intercept/resend strategies.  For n = 3
    with fixed encodings the memory-attack bound sits strictly above
    them between the domain edge and perfect efficiency; that
    configuration has no closed form and needs the optimizer.
    """
    return [
        CurvePoint(eta_avg=v, pe_max=pe_max_at_eta_avg(spec.n, spec.tamper, v), source="analytic")
        for v in spec.grid
    ]


# ---------------------------------------------------------------------------
# Shared geometry kernels (unit-speed path: Bloch vectors, no matrices)


def _sign_matrix(n: int) -> np.ndarray:
    xs = input_tuples(n)
    return np.array([[1.0 if x[b] == 0 else -1.0 for x in xs] for b in range(n)])


def _dirs_from_angles(pairs: np.ndarray) -> np.ndarray:
    """Rows of unit vectors from an (k, 2) array of raw (alpha, beta) pairs."""
    alpha = pairs[:, 0]
    beta = pairs[:, 1]
    sin_a = np.sin(alpha)
    return np.stack([sin_a * np.cos(beta), sin_a * np.sin(beta), np.cos(alpha)], axis=1)


def _fixed_state_bloch(n: int) -> np.ndarray:
    encoding: EncodingParams = Fixed2to1() if n == 2 else Fixed3to1()
    states = build_states(encoding)
    return np.array([states[x].bloch_vector() for x in input_tuples(n)])


def _angles_from_dirs(dirs: np.ndarray) -> np.ndarray:
    """Canonical (alpha, beta) rows for unit-direction rows."""
    z = np.clip(dirs[:, 2], -1.0, 1.0)
    alpha = np.arccos(z)
    beta = np.arctan2(dirs[:, 1], dirs[:, 0])
    return np.stack([alpha, beta], axis=1)


def ir_param_count(n: int, tamper: str) -> int:
    """Search-space size: one (alpha, beta) pair per interception basis,
    plus one pair per encoded state when the encoding is adversarial."""
    _check_tamper(tamper)
    if n not in (2, 3):
        raise ValueError(f"n must be 2 or 3, got {n}")
    count = 2 * n
    if tamper == "eve":
        count += 2 * 2**n
    return count


def dm_param_count(n: int, tamper: str) -> int:
    """16 generator parameters per unitary plus (alpha, beta) pairs for the
    n x n eavesdropper and receiver measurement grids, plus state pairs
    when the encoding is adversarial."""
    _check_tamper(tamper)
    if n not in (2, 3):
        raise ValueError(f"n must be 2 or 3, got {n}")
    count = 16 * n + 2 * n * n + 2 * n * n
    if tamper == "eve":
        count += 2 * 2**n
    return count


class _IrFamily:
    """Guessing-probability objective for intercept/resend searches.

    Parameter layout: [state pairs in input order (eve tamper only)] then
    [interception pairs indexed by e].
    """

    def __init__(self, n: int, tamper: str, eta: float):
        self.n = n
        self.tamper = tamper
        self.signs = _sign_matrix(n)
        self.weights = postselection_weights(n, eta)
        self.scale = 1.0 / 2 ** (n + 1)
        self.n_states = 2**n
        self.fixed_bloch = None if tamper == "eve" else _fixed_state_bloch(n)
        self.dim = ir_param_count(n, tamper)

    def split(self, params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(state pairs, measurement pairs); state part empty for fixed tamper."""
        x = np.asarray(params, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} parameters, got shape {x.shape}")
        cut = 0 if self.tamper == "fixed" else 2 * self.n_states
        return x[:cut].reshape(-1, 2), x[cut:].reshape(self.n, 2)

    def _state_bloch(self, state_pairs: np.ndarray) -> np.ndarray:
        if self.tamper == "fixed":
            return self.fixed_bloch
        return _dirs_from_angles(state_pairs)

    def value(self, params: np.ndarray) -> float:
        state_pairs, meas_pairs = self.split(params)
        axes = _dirs_from_angles(meas_pairs)
        combined = self.weights @ (self.signs @ self._state_bloch(state_pairs))
        return 0.5 + self.scale * float(np.sum(axes * combined))

    def negative(self, params: np.ndarray) -> float:
        return -self.value(params)

    def align_measurements(self, params: np.ndarray) -> np.ndarray:
        """Replace measurement pairs by their conditional optimum.

        Given the states, each interception axis enters the objective
        through one dot product, so the best axis is the normalized
        weighted combination it multiplies.
        """
        state_pairs, meas_pairs = self.split(params)
        combined = self.weights @ (self.signs @ self._state_bloch(state_pairs))
        norms = np.linalg.norm(combined, axis=1)
        axes = _dirs_from_angles(meas_pairs)
        safe = norms > 1e-15
        axes[safe] = combined[safe] / norms[safe, None]
        out = np.asarray(params, dtype=float).copy()
        cut = 0 if self.tamper == "fixed" else 2 * self.n_states
        out[cut:] = _angles_from_dirs(axes).ravel()
        return out

    def random_start(self, rng: np.random.Generator) -> np.ndarray:
        return _random_angle_pairs(rng, self.dim // 2).ravel()

    def structured_starts(self) -> list[np.ndarray]:
        starts = []
        if self.tamper == "eve":
            fixed_pairs = _angles_from_dirs(_fixed_state_bloch(self.n))
            base = np.concatenate([fixed_pairs.ravel(), np.zeros(2 * self.n)])
            starts.append(self.align_measurements(base))
            if self.n == 3:
                # Majority collapse: both poles, which feeds the plateau branch.
                dirs = np.array(
                    [[0.0, 0.0, 1.0] if sum(x) <= 1 else [0.0, 0.0, -1.0] for x in input_tuples(3)]
                )
                collapsed = np.concatenate([_angles_from_dirs(dirs).ravel(), np.zeros(6)])
                starts.append(self.align_measurements(collapsed))
        else:
            starts.append(self.align_measurements(np.zeros(self.dim)))
        return starts


class _DmFamily:
    """Guessing-probability objective for delayed-measurement searches.

    Parameter layout: [16 generator parameters per unitary, by e] then
    [eavesdropper pairs, (e, b) row-major] then [receiver pairs, same
    order] then [state pairs (eve tamper only)].

    The objective is the smaller of the two post-selected success rates.
    The eavesdropper's raw rate alone is the wrong target: banking the
    whole qubit in memory (a swap unitary) pushes it to the quantum
    maximum at every efficiency while the receiver, left with the blank,
    scores a coin flip, and the users watch the receiver's rate.  A
    strategy only pays off up to the success rate it leaves on the
    receiver's side, so the search maximizes min(p_b, p_e); the
    intercept/resend optimum, where the receiver echoes the interception
    basis, sits exactly on the p_b = p_e boundary.
    """

    def __init__(self, n: int, tamper: str, eta: float):
        self.n = n
        self.tamper = tamper
        self.signs = _sign_matrix(n)
        self.weights = postselection_weights(n, eta)
        self.scale = 1.0 / 2 ** (n + 1)
        self.n_states = 2**n
        self.dim = dm_param_count(n, tamper)
        self.gen_end = 16 * n
        self.eve_end = self.gen_end + 2 * n * n
        self.bob_end = self.eve_end + 2 * n * n
        self.fixed_joint = None if tamper == "eve" else _embed_with_blank(_fixed_state_matrices(n))

    def split(self, params: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        x = np.asarray(params, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} parameters, got shape {x.shape}")
        gens = x[: self.gen_end].reshape(self.n, 16)
        eve = x[self.gen_end : self.eve_end].reshape(self.n, self.n, 2)
        bob = x[self.eve_end : self.bob_end].reshape(self.n, self.n, 2)
        states = x[self.bob_end :].reshape(-1, 2)
        return gens, eve, bob, states

    def _joint_stack(self, state_pairs: np.ndarray) -> np.ndarray:
        if self.tamper == "fixed":
            return self.fixed_joint
        return _embed_with_blank(_pure_state_matrices(state_pairs))

    def _signed_combos(self, gens: np.ndarray, state_pairs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """For each e, the weighted signed sums of Bloch vectors on the
        memory qubit and on the forwarded qubit."""
        joint = self._joint_stack(state_pairs)
        memory_combos = np.empty((self.n, self.n, 3))
        forwarded_combos = np.empty((self.n, self.n, 3))
        for e in range(self.n):
            u = unitary_from_generator(gens[e])
            evolved = (u @ joint) @ u.conj().T
            t = evolved.reshape(-1, 2, 2, 2, 2)
            memory = t[:, 0, :, 0, :] + t[:, 1, :, 1, :]  # trace out the forwarded qubit
            forwarded = t[:, :, 0, :, 0] + t[:, :, 1, :, 1]  # trace out the memory qubit
            memory_combos[e] = self.signs @ _bloch_of_stack(memory)
            forwarded_combos[e] = self.signs @ _bloch_of_stack(forwarded)
        return memory_combos, forwarded_combos

    def _rate(self, pairs: np.ndarray, combos: np.ndarray) -> float:
        total = 0.0
        for e in range(self.n):
            axes = _dirs_from_angles(pairs[e])
            cells = 0.5 + self.scale * np.sum(axes * combos[e], axis=1)
            total += float(self.weights[e] @ cells)
        return total

    def value(self, params: np.ndarray) -> float:
        gens, eve, bob, state_pairs = self.split(params)
        memory_combos, forwarded_combos = self._signed_combos(gens, state_pairs)
        p_e = self._rate(eve, memory_combos)
        p_b = self._rate(bob, forwarded_combos)
        return min(p_e, p_b)

    def negative(self, params: np.ndarray) -> float:
        return -self.value(params)

    def align_measurements(self, params: np.ndarray) -> np.ndarray:
        """Point every measurement along its conditional optimum.

        Each block's axes enter only its own rate through one dot
        product apiece, so aligning both blocks raises (or keeps) both
        rates, hence their minimum.
        """
        gens, eve, bob, state_pairs = self.split(params)
        memory_combos, forwarded_combos = self._signed_combos(gens, state_pairs)
        out = np.asarray(params, dtype=float).copy()
        out[self.gen_end : self.eve_end] = _aligned_pairs(eve, memory_combos).ravel()
        out[self.eve_end : self.bob_end] = _aligned_pairs(bob, forwarded_combos).ravel()
        return out

    def random_start(self, rng: np.random.Generator) -> np.ndarray:
        gens = rng.uniform(-math.pi, math.pi, size=self.gen_end)
        n_pairs = (self.dim - self.gen_end) // 2
        return np.concatenate([gens, _random_angle_pairs(rng, n_pairs).ravel()])

    def structured_starts(self) -> list[np.ndarray]:
        return []


def _bloch_of_stack(rho_stack: np.ndarray) -> np.ndarray:
    """Bloch vectors for a stack of 2x2 density matrices."""
    return np.stack(
        [
            2.0 * rho_stack[:, 0, 1].real,
            -2.0 * rho_stack[:, 0, 1].imag,
            (rho_stack[:, 0, 0] - rho_stack[:, 1, 1]).real,
        ],
        axis=1,
    )


def _aligned_pairs(pairs: np.ndarray, combos: np.ndarray) -> np.ndarray:
    """Angle pairs pointing along the signed combinations they multiply.

    Rows with a vanishing combination keep their current direction; any
    axis is conditionally optimal there.
    """
    n = pairs.shape[0]
    aligned = np.empty((n, n, 2))
    for e in range(n):
        axes = _dirs_from_angles(pairs[e])
        norms = np.linalg.norm(combos[e], axis=1)
        safe = norms > 1e-15
        axes[safe] = combos[e][safe] / norms[safe, None]
        aligned[e] = _angles_from_dirs(axes)
    return aligned


def _random_angle_pairs(rng: np.random.Generator, count: int) -> np.ndarray:
    alpha = rng.uniform(0.0, math.pi, size=count)
    beta = rng.uniform(-math.pi, math.pi, size=count)
    return np.stack([alpha, beta], axis=1)


def _fixed_state_matrices(n: int) -> np.ndarray:
    encoding: EncodingParams = Fixed2to1() if n == 2 else Fixed3to1()
    states = build_states(encoding)
    return np.array([states[x].matrix for x in input_tuples(n)])


def _pure_state_matrices(pairs: np.ndarray) -> np.ndarray:
    half = 0.5 * pairs[:, 0]
    phase = np.exp(1j * pairs[:, 1])
    psi = np.stack([np.cos(half), phase * np.sin(half)], axis=1)
    return psi[:, :, None] * psi.conj()[:, None, :]


def _embed_with_blank(rho_stack: np.ndarray) -> np.ndarray:
    """rho (x) |0><0| for a stack of qubit states."""
    out = np.zeros((rho_stack.shape[0], 4, 4), dtype=complex)
    out[:, ::2, ::2] = rho_stack
    return out


# ---------------------------------------------------------------------------
# Multi-start driver


def _resolved_restarts(config: OptimizerConfig, dim: int, kind: str) -> int:
    if config.restarts is not None:
        return config.restarts
    if kind == "dm" or dim > 12:
        return 128
    return 32


def _minimize(family, x0: np.ndarray, config: OptimizerConfig):
    maxiter = config.max_iterations
    if maxiter is None:
        if family.dim <= 12:
            maxiter = 200 * family.dim
        elif family.dim <= 22:
            maxiter = 400 * family.dim
        else:
            maxiter = 120 * family.dim
    return minimize(
        family.negative,
        x0,
        method="Nelder-Mead",
        options={
            "maxiter": maxiter,
            "maxfev": maxiter,
            "xatol": config.xatol,
            "fatol": config.fatol,
            "adaptive": True,
        },
    )


def _search_point(
    family,
    config: OptimizerConfig,
    point_index: int,
    extra_starts: list[np.ndarray],
    restarts: int,
) -> tuple[float, np.ndarray, bool]:
    """Best value, parameters, and convergence flag over all restarts.

    Ties keep the earliest restart, so the reduction is deterministic
    regardless of evaluation order.  The flag reports whether any
    restart whose local search converged reached the best value.
    """
    starts = list(extra_starts) + family.structured_starts()
    best_value = -math.inf
    best_x: np.ndarray | None = None
    outcomes: list[tuple[float, bool]] = []
    for restart in range(restarts):
        if restart < len(starts):
            x0 = np.asarray(starts[restart], dtype=float)
        else:
            x0 = family.random_start(generator_for(config.seed, point_index, restart))
        result = _minimize(family, x0, config)
        x, converged = result.x, bool(result.success)
        # Conditional-optimum polish: realign measurements, then let the
        # local search continue from the aligned point if it helped.
        for _ in range(2):
            aligned = family.align_measurements(x)
            if family.value(aligned) <= family.value(x) + 1e-13:
                x = aligned if family.value(aligned) > family.value(x) else x
                break
            again = _minimize(family, aligned, config)
            x, converged = again.x, bool(again.success)
        value = family.value(x)
        outcomes.append((value, converged))
        if value > best_value:
            best_value, best_x = value, x
    assert best_x is not None
    best_converged = any(c for v, c in outcomes if v >= best_value - 1e-9)
    return best_value, best_x, best_converged


def _canonical_params(family, params: np.ndarray) -> np.ndarray:
    """Wrap every angle pair into alpha in [0, pi], beta in [-pi, pi)."""
    x = np.asarray(params, dtype=float).copy()
    if isinstance(family, _IrFamily):
        pair_block = x
        offset = 0
    else:
        offset = family.gen_end
        pair_block = x[offset:]
    pairs = pair_block.reshape(-1, 2)
    x[offset:] = _angles_from_dirs(_dirs_from_angles(pairs)).ravel()
    return x


def optimize_ir(spec: CurveSpec, config: OptimizerConfig) -> list[CurvePoint]:
    """Maximize the post-selected guessing probability of intercept/resend
    strategies at every grid point.

    Deterministic for a fixed config seed.  Points that fail the local
    search's convergence test are still reported, flagged in their
    metadata.
    """
    if spec.attack_kind != "ir":
        raise ValueError("optimize_ir requires an intercept/resend curve description")
    points = []
    for index, avg in enumerate(spec.grid):
        family = _IrFamily(spec.n, spec.tamper, eta_from_avg(spec.n, avg))
        restarts = _resolved_restarts(config, family.dim, "ir")
        value, params, converged = _search_point(family, config, index, [], restarts)
        canonical = _canonical_params(family, params)
        points.append(
            CurvePoint(
                eta_avg=float(avg),
                pe_max=family.value(canonical),
                source="optimized",
                optimizer_meta=OptimizerMeta(
                    restarts_used=restarts,
                    best_objective=value,
                    converged=converged,
                    best_params=tuple(float(v) for v in canonical),
                ),
            )
        )
    return points


def optimize_dm(spec: CurveSpec, config: OptimizerConfig) -> list[CurvePoint]:
    """Maximize the post-selected guessing probability of delayed-measurement
    strategies at every grid point, restricted to strategies that keep
    the receiver's observed rate at or above the eavesdropper's.

    The restriction is enforced by maximizing min(p_b, p_e): knowledge
    beyond the receiver's rate is unusable, because the users compare
    that rate against the bound curve and abort below it.  Restart 0 is
    seeded with the embedding of the best intercept/resend strategy
    found at the same point, since the delayed class contains every
    intercept/resend strategy; remaining restarts are random.
    """
    if spec.attack_kind != "dm":
        raise ValueError("optimize_dm requires a delayed-measurement curve description")
    ir_spec = CurveSpec(n=spec.n, attack_kind="ir", tamper=spec.tamper, grid=spec.grid)
    ir_points = optimize_ir(ir_spec, config)
    points = []
    for index, (avg, ir_point) in enumerate(zip(spec.grid, ir_points)):
        family = _DmFamily(spec.n, spec.tamper, eta_from_avg(spec.n, avg))
        restarts = _resolved_restarts(config, family.dim, "dm")
        assert ir_point.optimizer_meta is not None
        seed_start = _dm_params_from_ir_params(
            spec.n, spec.tamper, np.asarray(ir_point.optimizer_meta.best_params)
        )
        value, params, converged = _search_point(family, config, index, [seed_start], restarts)
        canonical = _canonical_params(family, params)
        points.append(
            CurvePoint(
                eta_avg=float(avg),
                pe_max=family.value(canonical),
                source="optimized",
                optimizer_meta=OptimizerMeta(
                    restarts_used=restarts,
                    best_objective=value,
                    converged=converged,
                    best_params=tuple(float(v) for v in canonical),
                ),
            )
        )
    return points


# ---------------------------------------------------------------------------
# Parameter vectors to attack descriptions


def _encoding_from_pairs(n: int, tamper: str, state_pairs: np.ndarray) -> EncodingParams:
    if tamper == "fixed":
        return Fixed2to1() if n == 2 else Fixed3to1()
    angles = tuple(BlochAngles(float(a), float(b)) for a, b in _canonical_pairs(state_pairs))
    return GeneralEncoding(angles)


def _canonical_pairs(pairs: np.ndarray) -> np.ndarray:
    return _angles_from_dirs(_dirs_from_angles(np.asarray(pairs, dtype=float)))


def ir_attack_from_params(n: int, tamper: str, params: np.ndarray) -> IrAttack:
    """Concrete intercept/resend attack for an optimizer parameter vector.

    The tampered receiver re-measures in the interception basis, so his
    outcome echoes the intercept; that is the click-faking strategy the
    efficiency split models.
    """
    family = _IrFamily(n, _check_tamper(tamper), eta=0.0)
    state_pairs, meas_pairs = family.split(np.asarray(params, dtype=float))
    eve_pairs = tuple(
        projector_pair_from_bloch(BlochAngles(float(a), float(b)))
        for a, b in _canonical_pairs(meas_pairs)
    )
    bob_grid = tuple(tuple(eve_pairs[e] for _ in range(n)) for e in range(n))
    return IrAttack(
        eve_measurements=eve_pairs,
        bob_measurements=bob_grid,
        encoding=_encoding_from_pairs(n, tamper, state_pairs),
    )


def dm_attack_from_params(n: int, tamper: str, params: np.ndarray) -> DmAttack:
    """Concrete delayed-measurement attack for an optimizer parameter vector."""
    family = _DmFamily(n, _check_tamper(tamper), eta=0.0)
    gens, eve, bob, state_pairs = family.split(np.asarray(params, dtype=float))
    unitaries = tuple(unitary_from_generator(gens[e]) for e in range(n))

    def grid(pairs: np.ndarray) -> tuple[tuple, ...]:
        canonical = _canonical_pairs(pairs.reshape(-1, 2)).reshape(n, n, 2)
        return tuple(
            tuple(
                projector_pair_from_bloch(BlochAngles(float(a), float(b)))
                for a, b in canonical[e]
            )
            for e in range(n)
        )

    return DmAttack(
        unitaries=unitaries,
        eve_measurements=grid(eve),
        bob_measurements=grid(bob),
        blank=state_from_bloch(BlochAngles(0.0, 0.0)),
        encoding=_encoding_from_pairs(n, tamper, state_pairs),
    )


def _dm_params_from_ir_params(n: int, tamper: str, ir_params: np.ndarray) -> np.ndarray:
    """Delayed-measurement start point embedding an intercept/resend strategy.

    The unitary is exp(i pi P1 (x) |-><-|), the controlled flip that
    copies the interception outcome into the memory qubit; the memory is
    then read in the computational basis and the receiver echoes the
    interception basis.
    """
    ir_family = _IrFamily(n, tamper, eta=0.0)
    state_pairs, meas_pairs = ir_family.split(np.asarray(ir_params, dtype=float))
    minus = 0.5 * np.array([[1.0, -1.0], [-1.0, 1.0]], dtype=complex)
    gens = []
    for a, b in meas_pairs:
        p1 = np.eye(2) - state_from_bloch(BlochAngles.from_vector(
            _dirs_from_angles(np.array([[a, b]]))[0]
        )).matrix
        gens.append(generator_from_hermitian(math.pi * np.kron(p1, minus)))
    eve_block = np.zeros((n, n, 2))
    bob_block = np.broadcast_to(
        _canonical_pairs(meas_pairs)[:, None, :], (n, n, 2)
    )
    parts = [np.concatenate(gens), eve_block.ravel(), np.asarray(bob_block).ravel()]
    if tamper == "eve":
        parts.append(np.asarray(state_pairs, dtype=float).ravel())
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# Critical efficiency


def critical_efficiency(n: int, tamper: str, pb_target: float, attack_kind: str = "ir") -> float:
    """Smallest observed efficiency at which P_E^max drops to pb_target.

    Bisection on the non-increasing closed-form curve, absolute
    tolerance 1e-6.  Returns the domain's left edge when the curve never
    exceeds the target there; raises TargetUnreachableError when the
    curve exceeds the target on the whole domain.  Thresholds always
    come from the interception closed forms; against the fixed 3-bit
    encoding a memory-equipped adversary exceeds those forms, so the
    threshold for that configuration is tight only for interception.
    """
    _check_attack_kind(attack_kind)
    _check_tamper(tamper)
    if not 0.5 < pb_target <= 1.0:
        raise ValueError(f"pb_target {pb_target} outside (1/2, 1]")
    slack = 1e-12

    def curve(avg: float) -> float:
        return pe_max_at_eta_avg(n, tamper, avg)

    lo = ETA_AVG_MIN[n]
    if curve(lo) <= pb_target + slack:
        return lo
    if curve(1.0) > pb_target + slack:
        raise TargetUnreachableError(
            f"P_E^max exceeds {pb_target} on the whole efficiency domain; no secure region"
        )
    a, b = lo, 1.0
    while b - a > 1e-6:
        mid = 0.5 * (a + b)
        if curve(mid) <= pb_target + slack:
            b = mid
        else:
            a = mid
    return b


def sits_on_plateau(n: int, tamper: str, eta_avg_star: float, pb_target: float) -> bool:
    """Whether a critical efficiency lies on a flat stretch of the curve.

    On a plateau the curve equals the target exactly at and beyond the
    returned point, so the value is an infimum edge rather than a
    crossing.
    """
    probe = min(eta_avg_star + 1e-4, 1.0)
    at_star = pe_max_at_eta_avg(n, tamper, eta_avg_star)
    return (
        abs(at_star - pb_target) <= 1e-9
        and abs(pe_max_at_eta_avg(n, tamper, probe) - at_star) <= 1e-12
        and probe > eta_avg_star
    )
