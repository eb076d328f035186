"""Time-steppers for Caputo fractional initial value problems.

Two schemes over the commensurate system D^alpha x = f(t, x), 0 < alpha <= 1:

* ``solve_gl``  -- explicit Grunwald-Letnikov scheme applied to x - x0 (the
  shift makes it a Caputo discretization), first-order accurate, with an
  optional finite memory window;
* ``solve_abm`` -- Adams-Bashforth-Moulton predictor-corrector on the
  Volterra integral form, order ~ 1 + alpha.

Both reduce to their classical counterparts (Euler, Heun/trapezoid) at
alpha = 1.  ``multi_term_to_system`` rewrites a scalar equation with several
derivative orders as a commensurate first-order-in-D^alpha chain.

Per-step cost is one BLAS dot of the reversed-weight vector against the
contiguous block of stored history, so a full-memory run over N steps costs
O(N^2 * dim) flops in vectorized form.
"""

import io
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from math import gamma, gcd, isfinite
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DivergenceError, IncommensurableOrdersError


@dataclass(frozen=True)
class SystemSpec:
    """A first-order (in D^alpha) autonomous-or-forced vector field."""

    name: str
    dim: int
    field: Callable[[float, np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    params: dict = None
    # coordinates carrying the physical state when the system is a
    # commensurate lift of a higher-order equation (None: all of them)
    observables: Optional[tuple] = None

    def __post_init__(self):
        if self.params is None:
            object.__setattr__(self, "params", {})
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")


@dataclass(frozen=True)
class SolverConfig:
    alpha: float
    h: float
    t_end: float
    x0: np.ndarray
    t0: float = 0.0
    scheme: str = "gl"
    memory_window: Optional[int] = None
    corrector_iters: int = 1
    diverge_bound: float = 1e10

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ConfigError(f"alpha must be in (0, 1], got {self.alpha}")
        if not (self.h > 0.0 and isfinite(self.h)):
            raise ConfigError(f"h must be positive and finite, got {self.h}")
        if not (self.t_end > self.t0):
            raise ConfigError(
                f"t_end ({self.t_end}) must exceed t0 ({self.t0})")
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if x0.ndim != 1 or not np.all(np.isfinite(x0)):
            raise ConfigError("x0 must be a finite 1-d array")
        object.__setattr__(self, "x0", x0)
        if self.scheme not in ("gl", "abm"):
            raise ConfigError(
                f"scheme must be 'gl' or 'abm', got {self.scheme!r}")
        if self.memory_window is not None and self.memory_window < 1:
            raise ConfigError(
                f"memory_window must be >= 1, got {self.memory_window}")
        if self.corrector_iters < 1:
            raise ConfigError(
                f"corrector_iters must be >= 1, got {self.corrector_iters}")
        if not (self.diverge_bound > 0):
            raise ConfigError("diverge_bound must be positive")

    @property
    def n_steps(self) -> int:
        return int(round((self.t_end - self.t0) / self.h))


@dataclass
class Trajectory:
    t: np.ndarray           # (N+1,)
    x: np.ndarray           # (N+1, dim)
    alpha: float
    h: float
    system_name: str
    scheme: str
    memory_window: Optional[int] = None


def gl_weights(alpha: float, count: int) -> np.ndarray:
    """First `count` history weights c_k = (-1)^k binom(alpha, k).

    Computed by the stable recurrence c_0 = 1,
    c_k = c_{k-1} * (1 - (alpha + 1)/k).
    """
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(f"alpha must lie in (0, 1], got {alpha}")
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    c = np.empty(count)
    c[0] = 1.0
    if count == 1:
        return c
    k = np.arange(1, count, dtype=float)
    np.cumprod(1.0 - (alpha + 1.0) / k, out=c[1:])
    return c


def _check_state(x, step, t, bound):
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > bound:
        raise DivergenceError(
            f"state left the trust region at step {step} (t = {t:.6g})",
            step=step, t=t)


def _check_dims(system, config):
    if config.x0.shape[0] != system.dim:
        raise ConfigError(
            f"x0 has dim {config.x0.shape[0]}, "
            f"system {system.name!r} has {system.dim}")
    n_steps = config.n_steps
    if n_steps < 1:
        raise ConfigError("t_end - t0 must cover at least one step")
    return n_steps


def solve_gl(system: SystemSpec, config: SolverConfig) -> Trajectory:
    """Integrate D^alpha x = f(t, x) with the explicit GL scheme.

    Update, in deviations d_j = x_j - x0 (the shift realizes the Caputo
    initial condition):

        d_m = h^alpha * f(t_{m-1}, x_{m-1}) - sum_{k=1}^{min(m-1,L)} c_k d_{m-k}

    With ``memory_window`` L the tail of the convolution is dropped
    (short-memory principle); None keeps the exact full-memory sum.
    """
    n_steps = _check_dims(system, config)
    x0 = config.x0
    h, alpha = config.h, config.alpha
    window = n_steps if config.memory_window is None else min(
        config.memory_window, n_steps)

    c = gl_weights(alpha, window + 1)
    # drop trailing zero weights: at alpha = 1 only c_1 = -1 survives and
    # the update collapses to the classical Euler step automatically
    nz = np.nonzero(c[1:])[0]
    window = int(nz[-1]) + 1 if len(nz) else 0
    cr = np.ascontiguousarray(c[window:0:-1])  # [c_window, ..., c_1]

    ha = h ** alpha
    t = config.t0 + h * np.arange(n_steps + 1)
    dev = np.zeros((n_steps + 1, system.dim))
    f = system.field
    x_prev = x0.copy()
    bound = config.diverge_bound
    for m in range(1, n_steps + 1):
        d = ha * np.asarray(f(t[m - 1], x_prev), dtype=float)
        w = min(m - 1, window)  # d_0 = 0, so lag m contributes nothing
        if w > 0:
            d -= cr[window - w:] @ dev[m - w:m]
        dev[m] = d
        x_prev = x0 + d
        _check_state(x_prev, m, t[m], bound)
    return Trajectory(t=t, x=dev + x0, alpha=alpha, h=h,
                      system_name=system.name, scheme="gl",
                      memory_window=config.memory_window)


def solve_abm(system: SystemSpec, config: SolverConfig) -> Trajectory:
    """Integrate D^alpha x = f(t, x) with the Adams predictor-corrector.

    One predict-evaluate-correct-evaluate sweep per step on the Volterra
    form x(t) = x0 + I^alpha f: fractional product-rectangle predictor,
    product-trapezoid corrector.  ``memory_window`` truncates both
    convolution sums by lag.
    """
    n_steps = _check_dims(system, config)
    x0 = config.x0
    h, alpha = config.h, config.alpha
    window = n_steps if config.memory_window is None else min(
        config.memory_window, n_steps)

    r = np.arange(n_steps + 2, dtype=float)
    pw = r ** alpha
    pw1 = r ** (alpha + 1.0)
    b = pw[1:] - pw[:-1]                      # b_r = (r+1)^a - r^a, r >= 0
    a = pw1[2:] - 2.0 * pw1[1:-1] + pw1[:-2]  # a_r for r >= 1
    br = np.ascontiguousarray(b[window - 1::-1])  # [b_{window-1}, ..., b_0]
    ar = np.ascontiguousarray(a[window - 1::-1])  # [a_window, ..., a_1]

    cp = h ** alpha / gamma(alpha + 1.0)      # predictor scale
    cc = h ** alpha / gamma(alpha + 2.0)      # corrector scale

    t = config.t0 + h * np.arange(n_steps + 1)
    x = np.empty((n_steps + 1, system.dim))
    fx = np.empty((n_steps + 1, system.dim))
    x[0] = x0
    f = system.field
    fx[0] = np.asarray(f(t[0], x0), dtype=float)
    bound = config.diverge_bound
    for m in range(1, n_steps + 1):
        # predictor: lags 1..w over f_{m-w} .. f_{m-1}
        w = min(m, window)
        pred = x0 + cp * (br[window - w:] @ fx[m - w:m])
        # corrector history: interior weights plus boundary weight of f_0
        w2 = min(m - 1, window)
        hist = ar[window - w2:] @ fx[m - w2:m] if w2 > 0 else 0.0
        if m <= window:
            # weight of f_0: (m-1)^{a+1} - (m-1-a) m^a
            hist = hist + ((m - 1.0) ** (alpha + 1.0)
                           - (m - 1.0 - alpha) * m ** alpha) * fx[0]
        cur = pred
        for _ in range(config.corrector_iters):
            cur = x0 + cc * (hist + np.asarray(f(t[m], cur), dtype=float))
        x[m] = cur
        fx[m] = np.asarray(f(t[m], x[m]), dtype=float)
        _check_state(x[m], m, t[m], bound)
    return Trajectory(t=t, x=x, alpha=alpha, h=h, system_name=system.name,
                      scheme="abm", memory_window=config.memory_window)


def solve(system: SystemSpec, config: SolverConfig) -> Trajectory:
    """Integrate with the scheme named in ``config.scheme``."""
    if config.scheme == "abm":
        return solve_abm(system, config)
    return solve_gl(system, config)


@dataclass(frozen=True)
class MultiTermSpec:
    """Scalar equation with several Caputo derivative orders:

        sum_j coeffs[j] * D^{orders[j]} x  =  rhs(t, x)

    All orders lie in (0, 1]; the leading (largest-order) coefficient must
    be nonzero.  ``x0`` is the initial value of x.
    """

    orders: tuple
    coeffs: tuple
    rhs: Callable[[float, float], float]
    x0: float = 0.0
    name: str = "multi_term"
    # d(rhs)/dx, needed only when the chain should expose a Jacobian
    rhs_dx: Optional[Callable[[float, float], float]] = None

    def __post_init__(self):
        if len(self.orders) != len(self.coeffs) or not self.orders:
            raise ConfigError("orders and coeffs must be equal-length, non-empty")
        if any(not (0.0 < o <= 1.0) for o in self.orders):
            raise ConfigError(f"orders must lie in (0, 1], got {self.orders}")
        if self.coeffs[int(np.argmax(self.orders))] == 0.0:
            raise ConfigError("the leading-order coefficient must be nonzero")


def commensurate_order(orders, tol: float = 1e-9) -> float:
    """Largest base order q such that every order is an integer multiple.

    Orders are rationalized with denominators up to 1000; raises
    ``IncommensurableOrdersError`` when no common base exists within
    ``tol``.
    """
    fracs = []
    for o in orders:
        fr = Fraction(o).limit_denominator(1000)
        if abs(float(fr) - o) > tol:
            raise IncommensurableOrdersError(
                f"order {o} is not a ratio of small integers")
        fracs.append(fr)
    base = fracs[0]
    for fr in fracs[1:]:
        # gcd of fractions: gcd of numerators / lcm of denominators
        base = Fraction(gcd(base.numerator * fr.denominator,
                            fr.numerator * base.denominator),
                        base.denominator * fr.denominator)
    q = float(base)
    for o in orders:
        if abs(round(o / q) - o / q) > tol / q:
            raise IncommensurableOrdersError(
                f"order {o} is not an integer multiple of base {q}")
    return q


def multi_term_to_system(spec: MultiTermSpec):
    """Rewrite a multi-term scalar equation as a commensurate chain.

    With base order q = commensurate_order(orders) and n = max(orders)/q,
    the chain variables are y_i = D^{i*q} x, i = 0..n-1, obeying

        D^q y_i     = y_{i+1}                      (i < n-1)
        D^q y_{n-1} = (rhs(t, y_0) - sum_{j<lead} coeffs[j] y_{r_j}) / lead

    where r_j = orders[j]/q.  Returns (SystemSpec, x0_chain); the chain's
    initial state is (x0, 0, ..., 0) and its ``observables`` mark y_0 (the
    original unknown) and y_{n-1} (its highest sub-derivative).
    """
    q = commensurate_order(spec.orders)
    idx = [int(round(o / q)) for o in spec.orders]
    n = max(idx)
    lead_pos = int(np.argmax(spec.orders))
    lead = float(spec.coeffs[lead_pos])
    lower = [(i, float(cf)) for i, cf in enumerate(spec.coeffs)
             if i != lead_pos and cf != 0.0]
    # only strictly lower orders can move to the right-hand side
    for i, _ in lower:
        if idx[i] >= n:
            raise ConfigError("duplicate leading order in multi-term spec")
    lower_rows = np.array([idx[i] for i, _ in lower], dtype=int) \
        if lower else np.empty(0, dtype=int)
    lower_coeff = np.array([cf for _, cf in lower])
    rhs = spec.rhs

    def chain_field(t, y):
        dy = np.empty_like(y)
        dy[:-1] = y[1:]
        acc = rhs(t, y[0])
        if lower_rows.size:
            acc = acc - lower_coeff @ y[lower_rows]
        dy[-1] = acc / lead
        return dy

    chain_jacobian = None
    if spec.rhs_dx is not None:
        rhs_dx = spec.rhs_dx
        base_jac = np.zeros((n, n))
        for i in range(n - 1):
            base_jac[i, i + 1] = 1.0
        for row, cf in zip(lower_rows, lower_coeff):
            base_jac[n - 1, row] = -cf / lead

        def chain_jacobian(t, y):
            jac = base_jac.copy()
            jac[n - 1, 0] += rhs_dx(t, y[0]) / lead
            return jac

    system = SystemSpec(
        name=f"{spec.name}_chain",
        dim=n,
        field=chain_field,
        jacobian=chain_jacobian,
        params={"base_order": q, "orders": tuple(spec.orders),
                "coeffs": tuple(spec.coeffs)},
        observables=(0, n - 1) if n >= 2 else (0,),
    )
    x0_chain = np.zeros(n)
    x0_chain[0] = spec.x0
    return system, x0_chain


# ---------------------------------------------------------------------------
# trajectory serialization

def write_trajectory_csv(traj: Trajectory, path: str) -> None:
    """Write a trajectory as CSV, losslessly (%.17g) and atomically.

    Metadata rides in '#'-prefixed header lines so a written file can be
    read back into an identical Trajectory.
    """
    dim = traj.x.shape[1]
    buf = io.StringIO()
    buf.write(f"# system={traj.system_name}\n")
    buf.write(f"# scheme={traj.scheme}\n")
    buf.write(f"# alpha={traj.alpha!r}\n")
    buf.write(f"# h={traj.h!r}\n")
    mw = "" if traj.memory_window is None else str(traj.memory_window)
    buf.write(f"# memory_window={mw}\n")
    buf.write("t," + ",".join(f"x{i}" for i in range(dim)) + "\n")
    for ti, row in zip(traj.t, traj.x):
        buf.write("%.17g," % ti)
        buf.write(",".join("%.17g" % v for v in row))
        buf.write("\n")
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)),
                               suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(buf.getvalue())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_trajectory_csv(path: str) -> Trajectory:
    """Read a trajectory written by ``write_trajectory_csv``."""
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
    data = np.loadtxt(path, delimiter=",", skiprows=len(meta) + 1, ndmin=2)
    mw = meta.get("memory_window", "")
    return Trajectory(
        t=data[:, 0],
        x=data[:, 1:],
        alpha=float(meta["alpha"]),
        h=float(meta["h"]),
        system_name=meta.get("system", ""),
        scheme=meta.get("scheme", ""),
        memory_window=int(mw) if mw else None,
    )
