"""Catalog of five benchmark chaotic systems and equilibrium analysis.

Parameters default to the published values for each model.  All fields and
Jacobians are hand-coded; ``find_equilibria`` runs a damped Newton iteration
from a guess lattice and returns equilibria together with the spectrum of
the Jacobian there.

The Duffing oscillator is a scalar equation with two derivative orders
    D^alpha x + delta * D^order_beta x + gamma * x + cubic_coeff * x^3
        = forcing_amp * cos(forcing_freq * t)
and is returned pre-commensurized as a chain of order-0.1 stages.  (Its
published form reuses one symbol for both the second derivative order and
the cubic coefficient; here they are named `order_beta` and `cubic_coeff`.)
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .solvers import MultiTermSpec, SystemSpec, multi_term_to_system

logger = logging.getLogger(__name__)

BENCHMARK_NAMES = ("lorenz", "duffing", "chen", "rossler", "chua")

_DEFAULT_PARAMS = {
    "lorenz": {"sigma": 10.0, "rho": 28.0, "beta": 8.0 / 3.0},
    "duffing": {"delta": 0.2, "gamma": 1.0, "cubic_coeff": 5.0,
                "forcing_amp": 0.3, "forcing_freq": 1.2},
    "chen": {"a": 35.0, "b": 3.0, "c": 28.0},
    "rossler": {"a": 0.2, "b": 0.2, "c": 5.7},
    "chua": {"a": 9.8, "b": 14.87, "m0": -1.27, "m1": -0.68},
}

# fractional order(s) used when the caller does not pick one; Duffing's pair
# is (alpha, order_beta) from its published chaotic regime
_DEFAULT_ALPHA = {
    "lorenz": 0.995,
    "duffing": (0.9, 0.8),
    "chen": 0.9,
    "rossler": 0.9,
    "chua": 0.98,
}

_DEFAULT_X0 = {
    "lorenz": (1.0, 1.0, 1.0),
    "duffing": (0.1,),          # x(0); the chain pads with zeros
    "chen": (-9.0, -5.0, 14.0),
    "rossler": (1.0, 1.0, 0.0),
    "chua": (0.7, 0.0, 0.0),
}


@dataclass(frozen=True)
class BenchmarkId:
    """Identifies a catalog system plus its parameter values and order(s)."""

    name: str
    params: dict = None
    alpha: object = None  # float, or (alpha, order_beta) for duffing

    def __post_init__(self):
        if self.name not in BENCHMARK_NAMES:
            raise ConfigError(
                f"unknown system {self.name!r}; "
                f"known: {', '.join(BENCHMARK_NAMES)}")
        merged = dict(_DEFAULT_PARAMS[self.name])
        if self.params:
            unknown = set(self.params) - set(merged)
            if unknown:
                raise ConfigError(
                    f"unknown parameter(s) for {self.name}: {sorted(unknown)}")
            merged.update({k: float(v) for k, v in self.params.items()})
        if any(not math.isfinite(v) for v in merged.values()):
            raise ConfigError(f"non-finite parameter in {merged}")
        object.__setattr__(self, "params", merged)
        alpha = self.alpha if self.alpha is not None else _DEFAULT_ALPHA[self.name]
        if self.name == "duffing":
            if np.isscalar(alpha):
                alpha = (float(alpha), _DEFAULT_ALPHA["duffing"][1])
            alpha = (float(alpha[0]), float(alpha[1]))
            if not all(0.0 < o <= 1.0 for o in alpha):
                raise ConfigError(f"orders must lie in (0, 1], got {alpha}")
        else:
            alpha = float(alpha)
            if not (0.0 < alpha <= 1.0):
                raise ConfigError(f"alpha must lie in (0, 1], got {alpha}")
        object.__setattr__(self, "alpha", alpha)
        # domain guards beyond finiteness
        if self.name == "lorenz" and merged["beta"] == 0.0:
            raise ConfigError("lorenz requires beta != 0")
        if self.name == "chen" and merged["b"] == 0.0:
            raise ConfigError("chen requires b != 0")


def default_initial_state(name: str) -> np.ndarray:
    """Catalog default initial condition (chain-padded for duffing)."""
    if name not in BENCHMARK_NAMES:
        raise ConfigError(f"unknown system {name!r}")
    if name == "duffing":
        x0 = np.zeros(9)
        x0[0] = _DEFAULT_X0["duffing"][0]
        return x0
    return np.array(_DEFAULT_X0[name])


def _lorenz(p):
    sigma, rho, beta = p["sigma"], p["rho"], p["beta"]

    def field(t, x):
        return np.array([
            sigma * (x[1] - x[0]),
            x[0] * (rho - x[2]) - x[1],
            x[0] * x[1] - beta * x[2],
        ])

    def jacobian(t, x):
        return np.array([
            [-sigma, sigma, 0.0],
            [rho - x[2], -1.0, -x[0]],
            [x[1], x[0], -beta],
        ])

    return field, jacobian


def _chen(p):
    a, b, c = p["a"], p["b"], p["c"]

    def field(t, x):
        return np.array([
            a * (x[1] - x[0]),
            (c - a) * x[0] - x[0] * x[2] + c * x[1],
            x[0] * x[1] - b * x[2],
        ])

    def jacobian(t, x):
        return np.array([
            [-a, a, 0.0],
            [c - a - x[2], c, -x[0]],
            [x[1], x[0], -b],
        ])

    return field, jacobian


def _rossler(p):
    a, b, c = p["a"], p["b"], p["c"]

    def field(t, x):
        return np.array([
            -x[1] - x[2],
            x[0] + a * x[1],
            b + x[2] * (x[0] - c),
        ])

    def jacobian(t, x):
        return np.array([
            [0.0, -1.0, -1.0],
            [1.0, a, 0.0],
            [x[2], 0.0, x[0] - c],
        ])

    return field, jacobian


def chua_nonlinearity(x, m0=-1.27, m1=-0.68):
    """Piecewise-linear diode characteristic m1*x + (m0-m1)*(|x+1|-|x-1|)/2."""
    return m1 * x + 0.5 * (m0 - m1) * (abs(x + 1.0) - abs(x - 1.0))


def _chua(p):
    a, b, m0, m1 = p["a"], p["b"], p["m0"], p["m1"]

    def h(x):
        return chua_nonlinearity(x, m0, m1)

    def hprime(x):
        # one-sided slope at the |x| = 1 kinks (outer branch)
        return m0 if abs(x) < 1.0 else m1

    def field(t, x):
        return np.array([
            a * (x[1] - h(x[0])),
            x[0] - x[1] + x[2],
            -b * x[1],
        ])

    def jacobian(t, x):
        return np.array([
            [-a * hprime(x[0]), a, 0.0],
            [1.0, -1.0, 1.0],
            [0.0, -b, 0.0],
        ])

    return field, jacobian


def make_system(bid: BenchmarkId) -> SystemSpec:
    """Build the SystemSpec for a catalog system.

    Duffing comes back as its 9-stage commensurate chain (base order 0.1
    for the default orders), with ``observables`` marking the two physical
    coordinates (x, D^order_beta x); everything else is a plain 3-d field.
    """
    if isinstance(bid, str):
        bid = BenchmarkId(name=bid)
    p = bid.params
    name = bid.name
    if name == "duffing":
        delta, gam = p["delta"], p["gamma"]
        cubic, famp, freq = p["cubic_coeff"], p["forcing_amp"], p["forcing_freq"]

        def rhs(t, x):
            return famp * math.cos(freq * t) - gam * x - cubic * x ** 3

        def rhs_dx(t, x):
            return -gam - 3.0 * cubic * x * x

        mt = MultiTermSpec(orders=bid.alpha, coeffs=(1.0, delta), rhs=rhs,
                           x0=_DEFAULT_X0["duffing"][0], name="duffing",
                           rhs_dx=rhs_dx)
        system, x0_chain = multi_term_to_system(mt)
        params = dict(p)
        params.update(system.params)
        params["default_x0"] = tuple(x0_chain)
        params["default_alpha"] = system.params["base_order"]
        return SystemSpec(name="duffing", dim=system.dim, field=system.field,
                          jacobian=system.jacobian, params=params,
                          observables=system.observables)

    builders = {"lorenz": _lorenz, "chen": _chen, "rossler": _rossler,
                "chua": _chua}
    field, jacobian = builders[name](p)
    params = dict(p)
    params["default_x0"] = _DEFAULT_X0[name]
    params["default_alpha"] = bid.alpha
    if name == "chua":
        # coordinate 0 has slope discontinuities at +-1: Newton steps are
        # nudged off them so the one-sided Jacobian stays meaningful
        params["kinks"] = (0, (-1.0, 1.0))
    return SystemSpec(name=name, dim=3, field=field, jacobian=jacobian,
                      params=params)


@dataclass(frozen=True)
class Equilibrium:
    point: np.ndarray
    eigenvalues: np.ndarray  # complex, sorted by descending real part
    residual: float


def default_guesses(dim: int) -> np.ndarray:
    """Guess lattice for equilibrium search.

    3-dim systems get the 27-point lattice {-20, 0, 20}^3; other dimensions
    get the origin plus +-20 along each axis.
    """
    if dim == 3:
        g = np.array(np.meshgrid(*[[-20.0, 0.0, 20.0]] * 3)).reshape(3, -1).T
        return g
    pts = [np.zeros(dim)]
    for i in range(dim):
        for s in (-20.0, 20.0):
            v = np.zeros(dim)
            v[i] = s
            pts.append(v)
    return np.array(pts)


def jacobian_eigenvalues(system: SystemSpec, point, t: float = 0.0) -> np.ndarray:
    """Spectrum of the Jacobian at a point, sorted by descending real part."""
    if system.jacobian is None:
        raise ConfigError(f"system {system.name!r} has no Jacobian")
    jac = np.asarray(system.jacobian(t, np.asarray(point, dtype=float)))
    eig = np.linalg.eigvals(jac)
    order = np.lexsort((-eig.imag, -eig.real))
    return eig[order]


def find_equilibria(system: SystemSpec, guesses=None, t: float = 0.0,
                    tol: float = 1e-12, max_iter: int = 100):
    """Damped-Newton equilibrium search from each guess.

    Solves field(t, x) = 0 (forced systems are frozen at time ``t``).
    Newton steps are halved until the residual norm decreases; guesses that
    fail to converge are dropped.  Converged roots are de-duplicated at
    pairwise distance 1e-6 and returned as ``Equilibrium`` records with the
    eigenvalues of the analytic Jacobian, sorted by descending real part.
    """
    if system.jacobian is None:
        raise ConfigError(f"system {system.name!r} has no Jacobian")
    if guesses is None:
        guesses = default_guesses(system.dim)
    guesses = np.atleast_2d(np.asarray(guesses, dtype=float))
    kink = system.params.get("kinks")
    found = []
    dropped = 0
    for g in guesses:
        x = g.copy()
        converged = False
        fx = np.asarray(system.field(t, x), dtype=float)
        for _ in range(max_iter):
            res = np.linalg.norm(fx)
            if res < tol:
                converged = True
                break
            try:
                step = np.linalg.solve(system.jacobian(t, x), -fx)
            except np.linalg.LinAlgError:
                break
            lam = 1.0
            for _ in range(30):
                x_new = x + lam * step
                if kink is not None:
                    coord, locs = kink
                    for k in locs:
                        if abs(x_new[coord] - k) < 1e-9:
                            x_new[coord] += 1e-8
                f_new = np.asarray(system.field(t, x_new), dtype=float)
                if np.linalg.norm(f_new) < res:
                    break
                lam *= 0.5
            else:
                break  # no damping factor reduced the residual
            x, fx = x_new, f_new
        else:
            converged = np.linalg.norm(fx) < tol
        if not converged:
            dropped += 1
            continue
        if any(np.linalg.norm(x - e.point) <= 1e-6 for e in found):
            continue
        found.append(Equilibrium(
            point=x,
            eigenvalues=jacobian_eigenvalues(system, x, t=t),
            residual=float(np.linalg.norm(np.asarray(system.field(t, x)))),
        ))
    if dropped:
        logger.info("find_equilibria: %d of %d guesses did not converge",
                    dropped, len(guesses))
    return found
