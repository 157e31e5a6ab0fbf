"""Linear stability analysis on the harmonic oscillator  q' = p, p' = -omega^2 q.

One step of the additive method with F1 = 0 acts on the scaled variables
(q, p/omega) as a 2x2 matrix

    M(mu) = I_2 + mu * W * S(mu)^{-1} * E,        mu = omega h,

with S(mu) the (s2+s1) stage block [[I, -mu*At], [mu*AtH, I]], E stacking the
all-ones vectors of both blocks and W holding the quadrature weights.  The
methods are symplectic, so det M = 1 and the eigenvalues stay on the unit
circle exactly when |tr M| <= 2.  Where the method is stable it acts as a
rotation by the modified frequency  mu_tilde = arccos(tr M / 2), and on
q'' = -omega^2 q + f(q) it admits a two-step trigonometric form with filter
weights  psi_i = b^T (I + mu^2 AtH At)^{-1} ahat_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from symparc.integrator import (
    ArkStepper,
    PhaseState,
    SingularStageSystemError,
    SplitForceSystem,
    StageSolveConfig,
)
from symparc.tableaux import ArkScheme

__all__ = [
    "NotStableError",
    "StabilityMatrix",
    "Resonance",
    "StabilityReport",
    "FilterEvaluation",
    "M11M22Check",
    "stability_matrix",
    "stability_matrix_samples",
    "half_trace",
    "half_trace_samples",
    "check_m11_equals_m22",
    "stability_intervals",
    "modified_frequency",
    "filter_functions",
    "trig_form_step_check",
]

# |half trace| may exceed 1 by roundoff at tangency points
_STABLE_SLACK = 1e-12


class NotStableError(RuntimeError):
    """The method is not stable at the requested mu."""


@dataclass(frozen=True)
class StabilityMatrix:
    """The 2x2 propagation matrix on scaled phase space at one mu."""

    m: np.ndarray
    mu: float

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.shape != (2, 2):
            raise ValueError("m must be 2x2")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @property
    def half_trace(self) -> float:
        return 0.5 * float(self.m[0, 0] + self.m[1, 1])

    @property
    def det(self) -> float:
        return float(self.m[0, 0] * self.m[1, 1] - self.m[0, 1] * self.m[1, 0])

    @property
    def stable(self) -> bool:
        return abs(self.half_trace) <= 1.0 + _STABLE_SLACK


@dataclass(frozen=True)
class Resonance:
    """A mu with half trace equal to +-1; tangent points touch without crossing."""

    mu: float
    sign: int
    tangent: bool


@dataclass(frozen=True)
class StabilityReport:
    scheme_id: str
    mu_grid: np.ndarray
    half_trace: np.ndarray
    p_stable: bool
    intervals: tuple
    resonance_points: tuple


@dataclass(frozen=True)
class FilterEvaluation:
    """Filter weights psi_i and modified frequency at one mu.

    ``modified_mu`` is NaN where the method is unstable.  For a Lobatto
    primary the last filter vanishes identically (last column of a_hat).
    """

    mu: float
    psi: np.ndarray
    modified_mu: float


@dataclass(frozen=True)
class M11M22Check:
    """Sampled diagonal agreement and the coupled moment identities.

    ``lhs[k] = b (AtH At)^k c`` and ``rhs[k] = bt (At AtH)^k ct`` for
    k = 0..min(s1,s2)-1; equality of all of them forces M11 = M22.
    """

    max_deviation: float
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def condition_residuals(self) -> np.ndarray:
        return np.abs(self.lhs - self.rhs)


def _blocks(scheme: ArkScheme):
    s1, s2 = scheme.s1, scheme.s2
    n = s1 + s2
    T = np.zeros((n, n))
    T[:s2, s2:] = -scheme.a_tilde
    T[s2:, :s2] = scheme.a_tilde_hat
    E = np.zeros((n, 2))
    E[:s2, 0] = 1.0
    E[s2:, 1] = 1.0
    W = np.zeros((2, n))
    W[0, s2:] = scheme.b
    W[1, :s2] = -scheme.b_tilde
    return T, E, W


def stability_matrix_samples(scheme: ArkScheme, mus, chunk: int = 65536) -> np.ndarray:
    """M(mu) for an array of mu values; returns shape (len(mus), 2, 2)."""
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    T, E, W = _blocks(scheme)
    n = T.shape[0]
    eye = np.eye(n)
    out = np.empty((len(mus), 2, 2))
    for start in range(0, len(mus), chunk):
        m = mus[start:start + chunk]
        S = eye + m[:, None, None] * T
        try:
            X = np.linalg.solve(S, np.broadcast_to(E, (len(m), n, 2)))
        except np.linalg.LinAlgError as exc:
            raise SingularStageSystemError(
                "stage block singular inside the sampled mu range") from exc
        out[start:start + chunk] = np.eye(2) + m[:, None, None] * (W @ X)
    return out


def stability_matrix(scheme: ArkScheme, mu: float) -> StabilityMatrix:
    """The 2x2 stability matrix at one mu = omega*h."""
    m = stability_matrix_samples(scheme, [mu])[0]
    return StabilityMatrix(m=m, mu=float(mu))


def half_trace_samples(scheme: ArkScheme, mus, chunk: int = 65536) -> np.ndarray:
    """tr M(mu) / 2 on an array of mu values (the stability function up to sign)."""
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    T, E, W = _blocks(scheme)
    n = T.shape[0]
    eye = np.eye(n)
    out = np.empty(len(mus))
    for start in range(0, len(mus), chunk):
        m = mus[start:start + chunk]
        S = eye + m[:, None, None] * T
        X = np.linalg.solve(S, np.broadcast_to(E, (len(m), n, 2)))
        MM = W @ X
        out[start:start + chunk] = 1.0 + 0.5 * m * (MM[:, 0, 0] + MM[:, 1, 1])
    return out


def half_trace(scheme: ArkScheme, mu: float) -> float:
    return float(half_trace_samples(scheme, [mu])[0])


def check_m11_equals_m22(scheme: ArkScheme, mu_samples) -> M11M22Check:
    """Max |M11 - M22| over the samples plus the moment identities behind it."""
    M = stability_matrix_samples(scheme, mu_samples)
    deviation = float(np.max(np.abs(M[:, 0, 0] - M[:, 1, 1]))) if len(M) else 0.0
    k_max = min(scheme.s1, scheme.s2)
    lhs = np.empty(k_max)
    rhs = np.empty(k_max)
    u = scheme.c.copy()
    v = scheme.c_tilde.copy()
    for k in range(k_max):
        lhs[k] = scheme.b @ u
        rhs[k] = scheme.b_tilde @ v
        u = scheme.a_tilde_hat @ (scheme.a_tilde @ u)
        v = scheme.a_tilde @ (scheme.a_tilde_hat @ v)
    return M11M22Check(max_deviation=deviation, lhs=lhs, rhs=rhs)


def modified_frequency(scheme: ArkScheme, mu: float) -> float:
    """mu_tilde = arccos(half trace) in [0, pi]; raises where unstable."""
    ht = half_trace(scheme, mu)
    if abs(ht) > 1.0 + _STABLE_SLACK:
        raise NotStableError(f"|half trace| = {abs(ht):.6g} > 1 at mu = {mu:g}")
    return math.acos(min(1.0, max(-1.0, ht)))


def filter_functions(scheme: ArkScheme, mu: float) -> FilterEvaluation:
    """psi_i(mu) = b^T (I + mu^2 AtH At)^{-1} ahat_i for each column of a_hat."""
    mu = float(mu)
    K = np.eye(scheme.s1) + mu * mu * (scheme.a_tilde_hat @ scheme.a_tilde)
    try:
        v = np.linalg.solve(K.T, scheme.b)
    except np.linalg.LinAlgError as exc:
        raise SingularStageSystemError(f"I + mu^2 AtH At singular at mu = {mu:g}") from exc
    psi = scheme.a_hat.T @ v
    ht = half_trace(scheme, mu)
    if abs(ht) <= 1.0 + _STABLE_SLACK:
        mu_tilde = math.acos(min(1.0, max(-1.0, ht)))
    else:
        mu_tilde = math.nan
    return FilterEvaluation(mu=mu, psi=psi, modified_mu=mu_tilde)


# ---------------------------------------------------------------------------
# Stability intervals and resonances
# ---------------------------------------------------------------------------

def _bisect(fn, lo, hi, f_lo, f_hi, tol=1e-10, max_iter=200):
    """Root of a scalar function given a sign-changing bracket."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol:
            return mid
        f_mid = fn(mid)
        if f_mid == 0.0:
            return mid
        if (f_lo < 0.0) != (f_mid < 0.0):
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def _refine_extremum(fn, lo, hi, tol=1e-10):
    """Stationary point inside (lo, hi) by bisection on a central difference."""
    fd_step = 1e-6

    def deriv(x):
        return fn(x + fd_step) - fn(x - fd_step)

    d_lo, d_hi = deriv(lo), deriv(hi)
    if (d_lo < 0.0) == (d_hi < 0.0):
        return 0.5 * (lo + hi)
    return _bisect(deriv, lo, hi, d_lo, d_hi, tol=tol)


# sampled |half trace| within this slack of 1 still counts as stable, so a
# tangency evaluated a hair beyond 1 does not split the interval
_TANGENCY_SLACK = 1e-9


def stability_intervals(scheme: ArkScheme, mu_max: float,
                        grid_step: float = 1e-3) -> StabilityReport:
    """Sample the stability function on [0, mu_max] and locate its structure.

    Sign changes of half-trace -+ 1 are refined by bisection to 1e-10 and
    become interval boundaries; interior extrema touching +-1 (to within
    1e-7) are reported as tangent resonances.  ``p_stable`` holds when the
    single interval covers [0, mu_max] and every resonance point carries two
    independent eigenvectors (M = +-I there).
    """
    if not mu_max > 0.0:
        raise ValueError("mu_max must be positive")
    n = int(math.ceil(mu_max / grid_step)) + 1
    mus = np.linspace(0.0, mu_max, n)
    f = half_trace_samples(scheme, mus)

    def f_at(x):
        return half_trace(scheme, x)

    stable = np.abs(f) <= 1.0 + _TANGENCY_SLACK

    boundaries = []          # (mu, sign at the boundary)
    for i in range(n - 1):
        if stable[i] == stable[i + 1]:
            continue
        # the crossing is through +1 or -1 depending on the local values
        target = 1.0 if max(f[i], f[i + 1]) > 1.0 or min(f[i], f[i + 1]) > 0.0 else -1.0
        g = (lambda x, t=target: f_at(x) - t)
        g_lo, g_hi = f[i] - target, f[i + 1] - target
        if (g_lo < 0.0) == (g_hi < 0.0):
            # kinked bracket (|f|-1 changes via the other branch); fall back
            target = -target
            g = (lambda x, t=target: f_at(x) - t)
            g_lo, g_hi = f[i] - target, f[i + 1] - target
        root = _bisect(g, mus[i], mus[i + 1], g_lo, g_hi)
        boundaries.append((root, int(target)))

    intervals = []
    resonances = [Resonance(mu=b, sign=s, tangent=False) for b, s in boundaries]
    edges = [0.0] + [b for b, _ in boundaries] + [mu_max]
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        mid = 0.5 * (lo + hi)
        idx = min(n - 1, int(round(mid / mu_max * (n - 1))))
        if stable[idx]:
            intervals.append((lo, hi))

    # interior extrema that touch the lines +-1 without crossing
    df = np.diff(f)
    for i in range(1, n - 2):
        if (df[i - 1] > 0.0) == (df[i] > 0.0):
            continue
        mu_star = _refine_extremum(f_at, mus[i - 1], mus[i + 1])
        val = f_at(mu_star)
        for sign in (1, -1):
            if abs(val - sign) < 1e-7 and not any(
                    abs(mu_star - r.mu) < 10.0 * grid_step for r in resonances):
                resonances.append(Resonance(mu=mu_star, sign=sign, tangent=True))

    resonances.sort(key=lambda r: r.mu)

    covered = (len(intervals) == 1
               and intervals[0][0] <= grid_step and intervals[0][1] >= mu_max - grid_step)
    non_defective = True
    for r in resonances:
        m = stability_matrix(scheme, r.mu).m
        if np.max(np.abs(m - r.sign * np.eye(2))) > 1e-6:
            non_defective = False
    p_stable = bool(covered and non_defective)

    return StabilityReport(
        scheme_id=scheme.name,
        mu_grid=mus,
        half_trace=f,
        p_stable=p_stable,
        intervals=tuple(intervals),
        resonance_points=tuple(resonances),
    )


# ---------------------------------------------------------------------------
# Two-step trigonometric form
# ---------------------------------------------------------------------------

def trig_form_step_check(scheme: ArkScheme, system: SplitForceSystem,
                         state: PhaseState, h: float,
                         config: StageSolveConfig | None = None) -> float:
    """Residual of the two-step trigonometric identities at (state, h).

    Steps once with +h and once with -h, then checks

        q1 - 2 cos(mu_t) q0 + q_-1 = h^2 sum_i psi_i (f(Q_i^+) + f(Q_i^-))
        2 h sin(mu_t)/mu p0        = q1 - q_-1 - h^2 sum_i psi_i (f(Q_i^+) - f(Q_i^-))

    with mu = omega h, mu_t the modified frequency, f the slow force and
    Q_i^+- the primary stages of the two steps.  Returns the larger max-norm
    residual.  Requires a linear fast part with a single frequency.
    """
    if system.omega_sq is None:
        raise ValueError("trig form check needs the linear fast part")
    w2 = np.unique(system.omega_sq)
    if len(w2) != 1:
        raise ValueError("trig form check needs a single fast frequency")
    omega = math.sqrt(float(w2[0]))
    mu = omega * h

    ht = half_trace(scheme, abs(mu))
    if abs(ht) > 1.0 + _STABLE_SLACK:
        raise NotStableError(f"method unstable at mu = {mu:g}")
    mu_tilde = math.acos(min(1.0, max(-1.0, ht)))
    psi = filter_functions(scheme, abs(mu)).psi

    if config is None:
        config = StageSolveConfig(tolerance=1e-14, max_iterations=200)
    stepper = ArkStepper(scheme, system, config)

    q0, p0 = state.q, state.p
    out = []
    for sgn in (+1.0, -1.0):
        Q, P, _, _ = stepper.solve_stages(state, sgn * h)
        q_end = q0 + sgn * h * (scheme.b @ P)
        out.append((q_end, system.slow_force(Q)))
    (q_plus, f_plus), (q_minus, f_minus) = out

    res_q = q_plus - 2.0 * math.cos(mu_tilde) * q0 + q_minus \
        - h * h * (psi @ (f_plus + f_minus))
    sin_term = 2.0 * h * (math.sin(mu_tilde) / mu) * p0 if mu != 0.0 else 2.0 * h * p0
    res_p = sin_term - (q_plus - q_minus) + h * h * (psi @ (f_plus - f_minus))
    return max(float(np.max(np.abs(res_q))), float(np.max(np.abs(res_p))))
