"""Weight functions and the quantities derived from their birth process.

A weight function maps a child count ``k`` to a positive attachment rate.
It is stored as an explicit prefix ``w(0), ..., w(N0-1)`` plus a tail rule
for ``k >= N0``:

* ``ConstantTail(c)``: ``w(k) = c``
* ``LinearTail(a, b)``: ``w(k) = a*k + b``
* ``DominatedLinearTail(a, b, fn)``: ``w(k) = fn(k) <= a*k + b``
* ``UnboundedTail(fn)``: explicit values with no growth guarantee; only
  :func:`check_condition_m` accepts these.

The tail rule is what makes series truncation certifiable.  For exact
linear/constant tails every series used here has a closed-form remainder,
so the results carry rounding error only.

The Laplace transform of the birth point process is

    rho_hat(lam) = sum_{n>=1} prod_{i<n} w(i) / (lam + w(i)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Union

import numpy as np
from scipy.optimize import brentq

from .errors import BracketingFailed, InvalidWeight, NonConvergent

EPS = np.finfo(float).eps
MAX_TERMS = 1 << 24


@dataclass(frozen=True)
class ConstantTail:
    c: float


@dataclass(frozen=True)
class LinearTail:
    a: float
    b: float


@dataclass(frozen=True)
class DominatedLinearTail:
    a: float
    b: float
    fn: Callable[[int], float] = field(compare=False)


@dataclass(frozen=True)
class UnboundedTail:
    fn: Callable[[int], float] = field(compare=False)


Tail = Union[ConstantTail, LinearTail, DominatedLinearTail, UnboundedTail]


def _fmt(x: float) -> str:
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def _parse_tail(text: str, spec: str):
    kind, _, args = text.partition(":")
    vals = [float(v) for v in args.split(",")]
    if kind == "linear" and len(vals) == 2:
        # zero slope is the constant tail
        return LinearTail(*vals) if vals[0] != 0 else ConstantTail(vals[1])
    if kind == "const" and len(vals) == 1:
        return ConstantTail(*vals)
    raise InvalidWeight(f"cannot parse weight spec {spec!r}")


@dataclass(frozen=True)
class WeightFunction:
    prefix: tuple[float, ...]
    tail: Tail

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(float(v) for v in self.prefix))
        for k, v in enumerate(self.prefix):
            if not v > 0 or not math.isfinite(v):
                raise InvalidWeight(f"w({k}) = {v} must be positive and finite")
        n0 = len(self.prefix)
        t = self.tail
        if isinstance(t, ConstantTail):
            if not t.c > 0:
                raise InvalidWeight(f"constant tail must be positive, got {t.c}")
        elif isinstance(t, LinearTail):
            if not t.a > 0:
                raise InvalidWeight(f"linear tail slope must be positive, got {t.a}")
            if not t.a * n0 + t.b > 0:
                raise InvalidWeight(f"linear tail gives w({n0}) = {t.a * n0 + t.b} <= 0")
        elif isinstance(t, DominatedLinearTail):
            if not t.a > 0 or t.b < 0:
                raise InvalidWeight("dominating line needs a > 0 and b >= 0")
        elif not isinstance(t, UnboundedTail):
            raise InvalidWeight(f"unknown tail {t!r}")
        # explicit tail values computed so far, grown on demand
        object.__setattr__(self, "_cache", np.asarray(self.prefix, dtype=float))

    # -- constructors ---------------------------------------------------
    @classmethod
    def linear(cls, a: float, b: float) -> "WeightFunction":
        return cls((), LinearTail(float(a), float(b)))

    @classmethod
    def constant(cls, c: float) -> "WeightFunction":
        return cls((), ConstantTail(float(c)))

    @classmethod
    def from_spec(cls, spec: str) -> "WeightFunction":
        """Parse ``linear:a,b``, ``const:c`` or ``table:w0,...;tail=<linear|const>``."""
        try:
            if spec.startswith("table:"):
                body, sep, tail = spec[len("table:"):].partition(";tail=")
                if not sep:
                    raise ValueError("table spec needs ';tail=...'")
                prefix = tuple(float(v) for v in body.split(","))
                return cls(prefix, _parse_tail(tail, spec))
            return cls((), _parse_tail(spec, spec))
        except ValueError as exc:
            if isinstance(exc, InvalidWeight):
                raise
            raise InvalidWeight(f"cannot parse weight spec {spec!r}: {exc}") from None

    def to_spec(self) -> str:
        t = self.tail
        if isinstance(t, LinearTail):
            tail = f"linear:{_fmt(t.a)},{_fmt(t.b)}"
        elif isinstance(t, ConstantTail):
            tail = f"const:{_fmt(t.c)}"
        else:
            raise ValueError("only linear/constant tails have a spec string")
        if not self.prefix:
            return tail
        return "table:" + ",".join(_fmt(v) for v in self.prefix) + ";tail=" + tail

    def scaled(self, c: float) -> "WeightFunction":
        t = self.tail
        if isinstance(t, LinearTail):
            tail = LinearTail(c * t.a, c * t.b)
        elif isinstance(t, ConstantTail):
            tail = ConstantTail(c * t.c)
        elif isinstance(t, DominatedLinearTail):
            tail = DominatedLinearTail(c * t.a, c * t.b, lambda k, f=t.fn: c * f(k))
        else:
            tail = UnboundedTail(lambda k, f=t.fn: c * f(k))
        return WeightFunction(tuple(c * v for v in self.prefix), tail)

    # -- evaluation -----------------------------------------------------
    @property
    def n0(self) -> int:
        return len(self.prefix)

    @property
    def is_affine(self) -> bool:
        """True when ``w(k) = a*k + b`` for every ``k``, prefix included."""
        t = self.tail
        if not isinstance(t, LinearTail):
            return False
        return all(math.isclose(v, t.a * k + t.b, rel_tol=1e-15)
                   for k, v in enumerate(self.prefix))

    def tail_line(self) -> tuple[float, float, bool] | None:
        """``(a, b, exact)`` such that ``w(k) <= a*k + b`` for ``k >= n0``."""
        t = self.tail
        if isinstance(t, LinearTail):
            return t.a, t.b, True
        if isinstance(t, ConstantTail):
            return 0.0, t.c, True
        if isinstance(t, DominatedLinearTail):
            return t.a, t.b, False
        return None

    def __call__(self, k: int) -> float:
        if k < 0:
            raise IndexError(k)
        if k < self.n0:
            return self.prefix[k]
        t = self.tail
        if isinstance(t, LinearTail):
            return t.a * k + t.b
        if isinstance(t, ConstantTail):
            return t.c
        try:
            v = float(t.fn(k))
        except OverflowError:
            v = math.inf
        if not v > 0:
            raise InvalidWeight(f"w({k}) = {v} must be positive")
        if isinstance(t, DominatedLinearTail) and v > (t.a * k + t.b) * (1 + 1e-12):
            raise InvalidWeight(f"w({k}) = {v} exceeds declared bound {t.a}*k+{t.b}")
        return v

    def values(self, stop: int, start: int = 0) -> np.ndarray:
        """Array ``w(start), ..., w(stop-1)``."""
        k = np.arange(start, stop)
        t = self.tail
        if isinstance(t, LinearTail):
            out = t.a * k + t.b
        elif isinstance(t, ConstantTail):
            out = np.full(k.shape, t.c)
        else:
            cache = self._cache
            if len(cache) < stop:
                extra = np.fromiter((self(i) for i in range(len(cache), stop)), float,
                                    stop - len(cache))
                cache = np.concatenate((cache, extra))
                object.__setattr__(self, "_cache", cache)
            return cache[start:stop].copy()
        head = k < self.n0
        if head.any():
            out[head] = np.asarray(self.prefix)[k[head]]
        return out.astype(float)


class RhoHat(NamedTuple):
    value: float
    error_bound: float


class ConditionM(NamedTuple):
    holds: bool
    diagnostic: str


@dataclass(frozen=True)
class MalthusResult:
    lambda_star: float
    lambda_under: float
    rho_hat_residual: float
    iterations: int
    # False when lambda_under is only the guaranteed threshold of a dominating line
    lambda_under_exact: bool = True


@dataclass(frozen=True)
class DegreeDistribution:
    masses: np.ndarray
    tail_mass: float
    lambda_star: float

    @property
    def kmax(self) -> int:
        return len(self.masses) - 1

    def as_table(self) -> dict:
        table = {k: float(p) for k, p in enumerate(self.masses)}
        table["OTHER"] = float(self.tail_mass)
        return table


# ---------------------------------------------------------------------------
# thresholds and the rho_hat series


def lambda_underline(w: WeightFunction) -> float:
    """Finiteness threshold of rho_hat.

    Exact for linear and constant tails.  For a dominated tail the slope of
    the dominating line is returned, which is only an upper bound for the
    true threshold.
    """
    line = w.tail_line()
    if line is None:
        raise NonConvergent("unbounded tail: no finiteness threshold can be certified")
    return line[0]


def _check_lambda(w, lam):
    thr = lambda_underline(w)
    if not lam > thr:
        raise NonConvergent(
            f"rho_hat({lam}) is not certifiably finite: need lambda > {thr}")
    return thr


def _ratios(w: WeightFunction, lam: float, stop: int, start: int = 0) -> np.ndarray:
    om = w.values(stop, start)
    return om / (lam + om)


def _backward_R(r: np.ndarray, r_end: float) -> np.ndarray:
    """R_J = r_J (1 + R_{J+1}) for J = len(r)-1 .. 0, given R_N = r_end."""
    out = np.empty(len(r) + 1)
    out[-1] = r_end
    for j in range(len(r) - 1, -1, -1):
        out[j] = r[j] * (1.0 + out[j + 1])
    return out


def _forward_terms(w, lam, stop, start, t_start):
    """t_{start+1} .. t_stop from t_start."""
    return t_start * np.cumprod(_ratios(w, lam, stop, start))


def eval_rho_hat(w: WeightFunction, lam: float, tol: float = 1e-12) -> RhoHat:
    """Evaluate rho_hat(lam) with a certified error bound ``<= tol``."""
    _check_lambda(w, lam)
    a, b, exact = w.tail_line()
    if exact:
        n = w.n0
        r = _ratios(w, lam, n)
        value = float(_backward_R(r, (a * n + b) / (lam - a))[0])
        return RhoHat(value, float(4 * (n + 4) * EPS * value))
    total, t_n, n = 0.0, 1.0, 0
    chunk = max(w.n0, 256)
    while True:
        terms = _forward_terms(w, lam, n + chunk, n, t_n)
        total += math.fsum(terms)
        n += chunk
        t_n = float(terms[-1])
        half = 0.5 * t_n * (a * n + b) / (lam - a)
        rounding = 4 * n * EPS * total
        if half + rounding <= tol:
            return RhoHat(total + half, half + rounding)
        if n >= MAX_TERMS:
            raise NonConvergent(
                f"rho_hat({lam}) tail bound {2 * half:.3g} still above tol after {n} terms")
        chunk = n


def _rho_exceeds_one(w, lam, max_terms=1 << 22):
    """Decide rho_hat(lam) > 1 using certified lower/upper bounds; None if undecided."""
    a, b, exact = w.tail_line()
    if exact:
        return eval_rho_hat(w, lam).value > 1.0
    total, t_n, n, chunk = 0.0, 1.0, 0, max(w.n0, 256)
    while n < max_terms:
        terms = _forward_terms(w, lam, n + chunk, n, t_n)
        total += math.fsum(terms)
        n += chunk
        t_n = float(terms[-1])
        if total > 1.0:
            return True
        if total + t_n * (a * n + b) / (lam - a) < 1.0:
            return False
        chunk = n
    return None


# ---------------------------------------------------------------------------
# condition (M) and the Malthusian parameter


def _terms_vanish(w: WeightFunction, probe: int = 1 << 16) -> bool:
    # t_n -> 0 iff sum 1/w(k) diverges
    inv = 1.0 / w.values(probe)
    s_mid, s_end = inv[: probe // 16].sum(), inv.sum()
    return not (s_end - s_mid <= 1e-9 * s_end)


def _growth_exponent(w: WeightFunction, probe: int = 1 << 16) -> float:
    """Local power-law exponent of ``w`` between ``probe/2`` and ``probe``."""
    hi, lo = w(probe), w(probe // 2)
    return math.log(hi / lo, 2) if math.isfinite(hi) else math.inf


def check_condition_m(w: WeightFunction, probe_eps: float = 1e-6) -> ConditionM:
    """Check that rho_hat exceeds 1 just above its finiteness threshold."""
    if isinstance(w.tail, UnboundedTail):
        if not _terms_vanish(w):
            return ConditionM(False, "terms do not vanish: sum of 1/w(k) converges, so "
                              "rho_hat is infinite for every lambda (dominant-vertex regime)")
        p = _growth_exponent(w)
        if p > 1.01:
            return ConditionM(False, f"weights grow superlinearly (local exponent {p:.3g}): "
                              "rho_hat is infinite for every lambda")
        return ConditionM(False, "unbounded tail: no certified tail bound, cannot decide")
    thr = lambda_underline(w)
    if w.tail_line()[2]:
        return ConditionM(True, "exact tail: the remainder (a*N+b)/(lam-a) makes rho_hat "
                          f"diverge as lam decreases to {thr:g}")
    lam = thr + probe_eps
    verdict = _rho_exceeds_one(w, lam)
    if verdict:
        return ConditionM(True, f"rho_hat({lam:.6g}) > 1")
    if verdict is None:
        return ConditionM(False, f"undetermined: rho_hat({lam:.6g}) could not be bounded "
                          f"away from 1 within {MAX_TERMS} terms")
    note = "" if w.tail_line()[2] else " (threshold is only the dominating slope)"
    return ConditionM(False, f"rho_hat({lam:.6g}) <= 1 near the threshold{note}")


def _straddles_one(w, root) -> bool:
    """True when rho_hat - 1 changes sign across the floats adjacent to ``root``."""
    below, above = np.nextafter(root, -np.inf), np.nextafter(root, np.inf)
    try:
        return bool(_rho_exceeds_one(w, below)) and _rho_exceeds_one(w, above) is False
    except NonConvergent:
        return False


def solve_malthus(w: WeightFunction, tol: float = 1e-12) -> MalthusResult:
    """Find the unique root of rho_hat(lam) = 1.

    The root is bracketed from above by doubling and from below by halving the
    gap to the threshold.  Exact tails are refined with Brent's method
    (bisection with secant/inverse quadratic steps); dominated tails use
    bisection on certified sign tests, since each evaluation near the
    threshold is expensive.
    """
    lam_u = lambda_underline(w)
    exact = w.tail_line()[2]
    # exact tails diverge at the threshold, so the root can only be lost to
    # rounding; dominated tails stop where certification becomes hopeless
    delta = 4 * EPS * (1 + lam_u) if exact else max(tol, 1e-6 * (1 + lam_u))

    def above_one(x):
        try:
            return _rho_exceeds_one(w, x)
        except NonConvergent:
            return None

    hi = lam_u + max(1.0, lam_u)
    while above_one(hi) is not False:
        hi = lam_u + 2 * (hi - lam_u)
        if hi > 1e300:
            raise BracketingFailed("rho_hat does not drop below 1")
    lo = hi
    while True:
        lo = lam_u + (lo - lam_u) / 2
        if lo - lam_u < delta:
            if exact:
                raise BracketingFailed(
                    f"root lies within {delta:.3g} of the threshold {lam_u:g}, "
                    "below double-precision resolution")
            raise BracketingFailed(
                f"rho_hat stays <= 1 down to lambda = {lo:.6g}: condition (M) "
                "violated or not certifiable")
        verdict = above_one(lo)
        if verdict:
            break
        if verdict is None:
            raise BracketingFailed(f"cannot certify rho_hat near lambda = {lo:.6g}")
        hi = lo

    if exact:
        def f(x):
            return eval_rho_hat(w, x).value - 1.0
        if f(hi) == 0.0:
            root, iterations = hi, 0
        else:
            root, info = brentq(f, lo, hi, xtol=1e-300, rtol=4 * EPS,
                                maxiter=200, full_output=True)
            iterations = info.iterations
    else:
        iterations = 0
        while hi - lo > 4 * EPS * hi and iterations < 200:
            mid = 0.5 * (lo + hi)
            verdict = above_one(mid)
            iterations += 1
            if verdict is None:
                lo = hi = mid
            elif verdict:
                lo = mid
            else:
                hi = mid
        root = 0.5 * (lo + hi)
    val = eval_rho_hat(w, root, tol / 4)
    residual = abs(val.value - 1.0) + val.error_bound
    if residual > tol and not _straddles_one(w, root):
        raise NonConvergent(f"root residual {residual:.3g} exceeds tol {tol:.3g}")
    return MalthusResult(float(root), float(lam_u), float(residual), int(iterations), exact)


# ---------------------------------------------------------------------------
# degree law


def degree_dist(w: WeightFunction, kmax: int, tol: float = 1e-12,
                lambda_star: float | None = None) -> DegreeDistribution:
    """Limiting fraction of vertices with ``k`` children, ``k <= kmax``.

    ``p(k) = t_k - t_{k+1}`` with ``t_k = prod_{i<k} w(i)/(lam+w(i))``, so the
    mass above ``kmax`` is exactly ``t_{kmax+1}``.
    """
    lam = solve_malthus(w, tol).lambda_star if lambda_star is None else lambda_star
    om = w.values(kmax + 1)
    t = np.concatenate(([1.0], np.cumprod(om / (lam + om))))
    masses = t[:-1] * lam / (lam + om)
    return DegreeDistribution(masses, float(t[-1]), lam)


def falling_factorial_log(x: float, k: int) -> float:
    """log of x (x-1) ... (x-k+1) for x - k + 1 > 0."""
    return math.lgamma(x + 1) - math.lgamma(x - k + 1)


def degree_dist_linear(alpha: float, beta: float, k: int) -> float:
    """Closed-form degree law for ``w(k) = alpha*k + beta``."""
    bp = beta / alpha
    return (1 + bp) * math.exp(falling_factorial_log(k - 1 + bp, k)
                               - falling_factorial_log(k + 1 + 2 * bp, k + 1))


# ---------------------------------------------------------------------------
# kappa and the second moment of xi_hat(lambda*)


def kappa(w: WeightFunction, lambda_star: float, tol: float = 1e-10) -> float:
    """``-d rho_hat / d lam`` at ``lambda_star`` (mean age at childbearing)."""
    lam = lambda_star
    _check_lambda(w, lam)
    a, b, exact = w.tail_line()
    if exact:
        n = w.n0
        om = w.values(n)
        r = om / (lam + om)
        dr = -om / (lam + om) ** 2
        R = _backward_R(r, (a * n + b) / (lam - a))
        dR = -(a * n + b) / (lam - a) ** 2
        for j in range(n - 1, -1, -1):
            dR = dr[j] * (1.0 + R[j + 1]) + r[j] * dR
        return float(-dR)
    if not lam > 2 * a:
        raise NonConvergent("kappa tail bound needs lambda* > 2a for a dominated tail")
    total, t_n, s_n, n, chunk = 0.0, 1.0, 0.0, 0, max(w.n0, 256)
    while n < MAX_TERMS:
        om = w.values(n + chunk, n)
        t = t_n * np.cumprod(om / (lam + om))
        s = s_n + np.cumsum(1.0 / (lam + om))
        total += math.fsum(t * s)
        n += chunk
        t_n, s_n = float(t[-1]), float(s[-1])
        x = a * n + b
        t_next = t_n * x / (lam - a)
        bound = s_n * t_next + t_n * x * (x + a) / (lam - 2 * a) / (a * lam)
        if bound <= tol:
            return total + bound / 2
        chunk = n
    raise NonConvergent("kappa series did not reach tolerance")


def _second_moment_parts(w, lam, n, r_end_hi):
    """Lower value and the coefficient multiplying R_N, for prefix length n >= 1."""
    mu = 2 * lam
    om = w.values(n)
    t_mu = np.concatenate(([1.0], np.cumprod(om / (mu + om))))
    r = om / (lam + om)
    R = _backward_R(r, r_end_hi)
    body = t_mu[1:n] * (1.0 + 2.0 * R[1:n])
    return math.fsum(body), float(t_mu[n])


def _linear_tail_sum(t_n, n, a, b, lam):
    """sum_{J>=n} t_J(2 lam) (1 + 2 (aJ+b)/(lam-a)) for exact line a*k+b."""
    mu = 2 * lam
    x = a * n + b
    T = t_n * (mu - a + x) / (mu - a)
    F = t_n * x * (1.0 + (x + a) / (mu - 2 * a))
    return T + 2.0 * F / (lam - a)


def xhat_second_moment(w: WeightFunction, lambda_star: float, tol: float = 1e-10) -> float:
    """``E[(sum_k exp(-lam sigma_k))^2]`` where sigma_k are the root's birth times.

    Summed as ``sum_{J>=1} t_J(2 lam) (1 + 2 R_J(lam))`` where ``R_J`` is the
    transform of the birth process restarted after ``J`` births; this is the
    same double series as ``-rho_hat(2 lam) + 2 sum_i sum_{j<=i} ...``.
    """
    lam = lambda_star
    _check_lambda(w, lam)
    a, b, exact = w.tail_line()
    if exact:
        n = max(w.n0, 1)
        body, t_n = _second_moment_parts(w, lam, n, (a * n + b) / (lam - a))
        return body + _linear_tail_sum(t_n, n, a, b, lam)
    n = max(w.n0, 256)
    while n <= MAX_TERMS:
        lo, _ = _second_moment_parts(w, lam, n, 0.0)
        hi, t_n = _second_moment_parts(w, lam, n, (a * n + b) / (lam - a))
        hi += _linear_tail_sum(t_n, n, a, b, lam)
        if (hi - lo) / 2 <= tol:
            return (hi + lo) / 2
        n *= 2
    raise NonConvergent("second-moment tail bound did not reach tolerance")
