"""Test problems: manufactured solutions and a Ricker point source.

Closures take coordinate arrays ``x, y`` (same shape) and a time ``t``.
Scalar closures return an array of that shape, vector closures a length-2
sequence of such arrays, gradients of vectors a 2x2 nested sequence
``g[i][j] = d u_i / d x_j``.
"""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import erf

from .assembly import Material

SQRT2PI = math.sqrt(2.0) * math.pi


@dataclass(frozen=True)
class PointSource:
    x0: float
    y0: float
    t0: float
    a: float
    sigma: float = 0.025

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("mollifier width must be positive")

    def time(self, t):
        """Ricker wavelet -2 pi a (1 - 2 pi a s^2) exp(-pi a s^2), s = t - t0."""
        s2 = (np.asarray(t) - self.t0) ** 2
        return -2 * math.pi * self.a * (1 - 2 * math.pi * self.a * s2) * np.exp(-math.pi * self.a * s2)

    def spatial(self, x, y):
        """Unit-mass Gaussian mollifier of the Dirac mass at (x0, y0)."""
        r2 = (np.asarray(x) - self.x0) ** 2 + (np.asarray(y) - self.y0) ** 2
        return np.exp(-0.5 * r2 / self.sigma ** 2) / (2 * math.pi * self.sigma ** 2)

    def mass_in_box(self, box) -> float:
        x0, x1, y0, y1 = box
        s = self.sigma * math.sqrt(2.0)

        def frac(lo, hi, c):
            return 0.5 * (erf((hi - c) / s) - erf((lo - c) / s))

        return frac(x0, x1, self.x0) * frac(y0, y1, self.y0)


@dataclass
class Scenario:
    name: str
    material: Material
    T: float
    dt: float
    f_e: Callable | None = None
    f_a: Callable | None = None
    g_e: Callable | None = None
    g_a: Callable | None = None
    u0: Callable | None = None
    u1: Callable | None = None
    phi0: Callable | None = None
    phi1: Callable | None = None
    exact_u: Callable | None = None
    exact_du: Callable | None = None
    exact_ddu: Callable | None = None
    exact_grad_u: Callable | None = None
    exact_hess_u: Callable | None = None  # h[i][j][k] = d2 u_i / dx_j dx_k
    exact_phi: Callable | None = None
    exact_dphi: Callable | None = None
    exact_ddphi: Callable | None = None
    exact_grad_phi: Callable | None = None
    exact_hess_phi: Callable | None = None
    point_sources: list[PointSource] = field(default_factory=list)
    box: tuple = (-1.0, 1.0, 0.0, 1.0)
    interface_x: float = 0.0

    @property
    def has_exact(self) -> bool:
        return self.exact_u is not None and self.exact_phi is not None


# --------------------------------------------------------------------------- strong-form residuals

def strong_residual(sc: Scenario, x, y, t) -> tuple[np.ndarray, np.ndarray]:
    """(f_e - L_e u, f_a - L_a phi) evaluated with the closed-form derivatives."""
    m = sc.material
    rho, lam, mu, zeta = (float(np.asarray(getattr(m, n)).ravel()[0]) for n in ("rho_e", "lam", "mu", "zeta"))
    c = float(np.asarray(m.c).ravel()[0])
    u, du, ddu = (np.asarray(f(x, y, t)) for f in (sc.exact_u, sc.exact_du, sc.exact_ddu))
    H = np.asarray(sc.exact_hess_u(x, y, t))
    div_sigma = np.stack([
        (lam + 2 * mu) * H[0][0][0] + mu * H[0][1][1] + (lam + mu) * H[1][0][1],
        mu * H[1][0][0] + (lam + 2 * mu) * H[1][1][1] + (lam + mu) * H[0][0][1],
    ])
    le = rho * (ddu + 2 * zeta * du + zeta ** 2 * u) - div_sigma
    fe = np.asarray(sc.f_e(x, y, t)) if sc.f_e is not None else 0.0
    Hp = np.asarray(sc.exact_hess_phi(x, y, t))
    la = np.asarray(sc.exact_ddphi(x, y, t)) / c ** 2 - (Hp[0][0] + Hp[1][1])
    fa = np.asarray(sc.f_a(x, y, t)) if sc.f_a is not None else 0.0
    return fe - le, fa - la


def _d2(f, x, y, t, h, axis):
    """Sixth-order central second derivative along x (0), y (1) or t (2)."""
    c = (2 / 180, -27 / 180, 270 / 180, -490 / 180, 270 / 180, -27 / 180, 2 / 180)
    out = 0.0
    for s, w in zip(range(-3, 4), c):
        args = [x, y, t]
        args[axis] = args[axis] + s * h
        out = out + w * np.asarray(f(*args))
    return out / h ** 2


def _dxy(f, x, y, t, h):
    c = (-1 / 60, 9 / 60, -45 / 60, 0.0, 45 / 60, -9 / 60, 1 / 60)
    out = 0.0
    for i, wi in zip(range(-3, 4), c):
        if wi == 0.0:
            continue
        for j, wj in zip(range(-3, 4), c):
            if wj == 0.0:
                continue
            out = out + wi * wj * np.asarray(f(x + i * h, y + j * h, t))
    return out / h ** 2


def _d1(f, x, y, t, h, axis):
    c = (-1 / 60, 9 / 60, -45 / 60, 0.0, 45 / 60, -9 / 60, 1 / 60)
    out = 0.0
    for s, w in zip(range(-3, 4), c):
        if w == 0.0:
            continue
        args = [x, y, t]
        args[axis] = args[axis] + s * h
        out = out + w * np.asarray(f(*args))
    return out / h


def fd_strong_residual(sc: Scenario, n_samples: int = 20, seed: int = 12345, h: float = 1e-3) -> float:
    """Relative mismatch between the stored forcings and a finite-difference
    application of the strong operators to the exact solution.

    Samples lie in the interior of each subdomain and in (0, T].
    """
    rng = np.random.default_rng(seed)
    x0, x1, y0, y1 = sc.box
    xi = sc.interface_x
    m = sc.material
    rho, lam, mu, zeta = (float(np.asarray(getattr(m, n)).ravel()[0]) for n in ("rho_e", "lam", "mu", "zeta"))
    c = float(np.asarray(m.c).ravel()[0])
    t = rng.uniform(0.05, 1.0, n_samples) * sc.T
    y = rng.uniform(y0 + 0.05, y1 - 0.05, n_samples)
    xe = rng.uniform(x0 + 0.05, xi - 0.05, n_samples)
    xa = rng.uniform(xi + 0.05, x1 - 0.05, n_samples)

    def comp(i):
        return lambda x, y, t: np.asarray(sc.exact_u(x, y, t))[i]

    ux, uy = comp(0), comp(1)
    u = np.asarray(sc.exact_u(xe, y, t))
    du = np.stack([_d1(ux, xe, y, t, h, 2), _d1(uy, xe, y, t, h, 2)])
    ddu = np.stack([_d2(ux, xe, y, t, h, 2), _d2(uy, xe, y, t, h, 2)])
    uxx = [_d2(f, xe, y, t, h, 0) for f in (ux, uy)]
    uyy = [_d2(f, xe, y, t, h, 1) for f in (ux, uy)]
    uxy = [_dxy(f, xe, y, t, h) for f in (ux, uy)]
    inertia = rho * (ddu + 2 * zeta * du + zeta ** 2 * u)
    div_sigma = np.stack([
        (lam + 2 * mu) * uxx[0] + mu * uyy[0] + (lam + mu) * uxy[1],
        mu * uxx[1] + (lam + 2 * mu) * uyy[1] + (lam + mu) * uxy[0],
    ])
    fe = np.asarray(sc.f_e(xe, y, t)) if sc.f_e is not None else np.zeros_like(u)
    scale_e = max(np.abs(inertia).max(), np.abs(div_sigma).max(), 1e-300)
    res_e = np.abs(fe - (inertia - div_sigma)).max() / scale_e

    phi = sc.exact_phi
    ddphi = _d2(phi, xa, y, t, h, 2)
    lap = _d2(phi, xa, y, t, h, 0) + _d2(phi, xa, y, t, h, 1)
    fa = np.asarray(sc.f_a(xa, y, t)) if sc.f_a is not None else np.zeros_like(xa)
    scale_a = max(np.abs(ddphi / c ** 2).max(), np.abs(lap).max(), 1e-300)
    res_a = np.abs(fa - (ddphi / c ** 2 - lap)).max() / scale_a
    return float(max(res_e, res_a))


def transmission_residual(sc: Scenario, n_samples: int = 20, seed: int = 7) -> tuple[float, float]:
    """Max |sigma(u) n_e + rho_a phi_t n_e| and |d phi/d n_a + u_t . n_a| on the interface."""
    rng = np.random.default_rng(seed)
    y = rng.uniform(sc.box[2], sc.box[3], n_samples)
    t = rng.uniform(0.0, sc.T, n_samples)
    x = np.full_like(y, sc.interface_x)
    m = sc.material
    lam, mu, rho_a = (float(np.asarray(getattr(m, n)).ravel()[0]) for n in ("lam", "mu", "rho_a"))
    G = np.asarray(sc.exact_grad_u(x, y, t))
    div = G[0][0] + G[1][1]
    sxx = 2 * mu * G[0][0] + lam * div
    sxy = mu * (G[0][1] + G[1][0])
    dphi = np.asarray(sc.exact_dphi(x, y, t))
    traction = np.hypot(sxx + rho_a * dphi, sxy).max()  # n_e = (1, 0)
    gp = np.asarray(sc.exact_grad_phi(x, y, t))
    du = np.asarray(sc.exact_du(x, y, t))
    normal = np.abs(-gp[0] - du[0]).max()  # n_a = (-1, 0)
    return float(traction), float(normal)


def _finish(sc: Scenario, check: bool) -> Scenario:
    if check and sc.has_exact:
        res = fd_strong_residual(sc)
        if res > 1e-8:
            raise ValueError(f"scenario {sc.name}: forcing inconsistent with exact solution (residual {res:.2e})")
    return sc


# --------------------------------------------------------------------------- test case 1

def test_case_1(check: bool = True) -> Scenario:
    """Homogeneous Dirichlet data; both sides of the transmission conditions vanish.

    u = x^2 cos(sqrt2 pi t) cos(pi x / 2) sin(pi y) (1, 1),
    phi = x^2 sin(sqrt2 pi t) sin(pi x) sin(pi y).
    """
    mat = Material(rho_e=2.7, lam=51.20, mu=26.29, zeta=0.0, rho_a=1.0, c=1.0)
    pi = math.pi
    lam, mu, rho, c = 51.20, 26.29, 2.7, 1.0

    def g(x):
        return x ** 2 * np.cos(pi * x / 2)

    def g1(x):
        return 2 * x * np.cos(pi * x / 2) - 0.5 * pi * x ** 2 * np.sin(pi * x / 2)

    def g2(x):
        return (2 * np.cos(pi * x / 2) - 2 * pi * x * np.sin(pi * x / 2)
                - 0.25 * pi ** 2 * x ** 2 * np.cos(pi * x / 2))

    def h(x):
        return x ** 2 * np.sin(pi * x)

    def h1(x):
        return 2 * x * np.sin(pi * x) + pi * x ** 2 * np.cos(pi * x)

    def h2(x):
        return 2 * np.sin(pi * x) + 4 * pi * x * np.cos(pi * x) - pi ** 2 * x ** 2 * np.sin(pi * x)

    def w(x, y, t):
        return g(x) * np.sin(pi * y) * np.cos(SQRT2PI * t)

    def u(x, y, t):
        v = w(x, y, t)
        return np.stack([v, v])

    def du(x, y, t):
        v = -SQRT2PI * g(x) * np.sin(pi * y) * np.sin(SQRT2PI * t)
        return np.stack([v, v])

    def ddu(x, y, t):
        v = -2 * pi ** 2 * w(x, y, t)
        return np.stack([v, v])

    def grad_u(x, y, t):
        ct = np.cos(SQRT2PI * t)
        wx = g1(x) * np.sin(pi * y) * ct
        wy = pi * g(x) * np.cos(pi * y) * ct
        return np.array([[wx, wy], [wx, wy]])

    def hess_u(x, y, t):
        ct = np.cos(SQRT2PI * t)
        wxx = g2(x) * np.sin(pi * y) * ct
        wxy = pi * g1(x) * np.cos(pi * y) * ct
        wyy = -pi ** 2 * g(x) * np.sin(pi * y) * ct
        H = np.array([[wxx, wxy], [wxy, wyy]])
        return np.array([H, H])

    def f_e(x, y, t):
        ct = np.cos(SQRT2PI * t)
        s, cy = np.sin(pi * y), np.cos(pi * y)
        wxx = g2(x) * s * ct
        wyy = -pi ** 2 * g(x) * s * ct
        wxy = pi * g1(x) * cy * ct
        acc = -2 * pi ** 2 * rho * g(x) * s * ct
        fx = acc - ((lam + 2 * mu) * wxx + mu * wyy + (lam + mu) * wxy)
        fy = acc - (mu * wxx + (lam + 2 * mu) * wyy + (lam + mu) * wxy)
        return np.stack([fx, fy])

    def phi(x, y, t):
        return h(x) * np.sin(pi * y) * np.sin(SQRT2PI * t)

    def dphi(x, y, t):
        return SQRT2PI * h(x) * np.sin(pi * y) * np.cos(SQRT2PI * t)

    def ddphi(x, y, t):
        return -2 * pi ** 2 * phi(x, y, t)

    def grad_phi(x, y, t):
        st = np.sin(SQRT2PI * t)
        return np.array([h1(x) * np.sin(pi * y) * st, pi * h(x) * np.cos(pi * y) * st])

    def hess_phi(x, y, t):
        st = np.sin(SQRT2PI * t)
        pxx = h2(x) * np.sin(pi * y) * st
        pxy = pi * h1(x) * np.cos(pi * y) * st
        pyy = -pi ** 2 * h(x) * np.sin(pi * y) * st
        return np.array([[pxx, pxy], [pxy, pyy]])

    def f_a(x, y, t):
        st = np.sin(SQRT2PI * t)
        s = np.sin(pi * y)
        lap = (h2(x) - pi ** 2 * h(x)) * s * st
        return -2 * pi ** 2 * h(x) * s * st / c ** 2 - lap

    sc = Scenario(
        name="test1", material=mat, T=1.0, dt=1e-4,
        f_e=f_e, f_a=f_a,
        u0=lambda x, y: u(x, y, 0.0), u1=lambda x, y: du(x, y, 0.0),
        phi0=lambda x, y: phi(x, y, 0.0), phi1=lambda x, y: dphi(x, y, 0.0),
        exact_u=u, exact_du=du, exact_ddu=ddu, exact_grad_u=grad_u, exact_hess_u=hess_u,
        exact_phi=phi, exact_dphi=dphi, exact_ddphi=ddphi, exact_grad_phi=grad_phi, exact_hess_phi=hess_phi,
    )
    return _finish(sc, check)


# --------------------------------------------------------------------------- test case 2

def wave_speeds(material: Material) -> tuple[float, float]:
    lam, mu, rho = (float(np.asarray(getattr(material, n)).ravel()[0]) for n in ("lam", "mu", "rho_e"))
    return math.sqrt((lam + 2 * mu) / rho), math.sqrt(mu / rho)


def test_case_2(check: bool = True) -> Scenario:
    """Plane waves with non-homogeneous Dirichlet data.

    u = (cos(4 pi x / c_p), cos(4 pi x / c_s)) cos(4 pi t), phi = sin(4 pi x) sin(4 pi t).
    Both strong equations hold with zero forcing.
    """
    mat = Material(rho_e=2.7, lam=51.20, mu=26.29, zeta=0.0, rho_a=1.0, c=1.0)
    cp, cs = wave_speeds(mat)
    om = 4 * math.pi
    kp, ks = om / cp, om / cs

    def u(x, y, t):
        ct = np.cos(om * t)
        return np.stack([np.cos(kp * x) * ct + 0 * y, np.cos(ks * x) * ct + 0 * y])

    def du(x, y, t):
        st = np.sin(om * t)
        return np.stack([-om * np.cos(kp * x) * st + 0 * y, -om * np.cos(ks * x) * st + 0 * y])

    def ddu(x, y, t):
        return -om ** 2 * u(x, y, t)

    def grad_u(x, y, t):
        ct = np.cos(om * t)
        z = 0 * x * y
        return np.array([[-kp * np.sin(kp * x) * ct + z, z], [-ks * np.sin(ks * x) * ct + z, z]])

    def hess_u(x, y, t):
        ct = np.cos(om * t)
        z = 0 * x * y
        return np.array([[[-kp ** 2 * np.cos(kp * x) * ct + z, z], [z, z]],
                         [[-ks ** 2 * np.cos(ks * x) * ct + z, z], [z, z]]])

    def phi(x, y, t):
        return np.sin(om * x) * np.sin(om * t) + 0 * y

    def dphi(x, y, t):
        return om * np.sin(om * x) * np.cos(om * t) + 0 * y

    def ddphi(x, y, t):
        return -om ** 2 * phi(x, y, t)

    def grad_phi(x, y, t):
        return np.array([om * np.cos(om * x) * np.sin(om * t) + 0 * y, 0 * x * y])

    def hess_phi(x, y, t):
        z = 0 * x * y
        return np.array([[-om ** 2 * np.sin(om * x) * np.sin(om * t) + z, z], [z, z]])

    sc = Scenario(
        name="test2", material=mat, T=0.8, dt=1e-4,
        f_e=None, f_a=None, g_e=u, g_a=phi,
        u0=lambda x, y: u(x, y, 0.0), u1=lambda x, y: du(x, y, 0.0),
        phi0=lambda x, y: phi(x, y, 0.0), phi1=lambda x, y: dphi(x, y, 0.0),
        exact_u=u, exact_du=du, exact_ddu=ddu, exact_grad_u=grad_u, exact_hess_u=hess_u,
        exact_phi=phi, exact_dphi=dphi, exact_ddphi=ddphi, exact_grad_phi=grad_phi, exact_hess_phi=hess_phi,
    )
    return _finish(sc, check)


# --------------------------------------------------------------------------- test case 3

def test_case_3(sigma: float = 0.025, T: float = 1.0) -> Scenario:
    """Acoustic Ricker point source at (0.2, 0.5); zero initial data and body force."""
    mat = Material(rho_e=2.5, lam=20.0, mu=10.0, zeta=0.0, rho_a=1.0, c=1.5)
    src = PointSource(x0=0.2, y0=0.5, t0=0.1, a=576.0, sigma=sigma)
    box = (-1.0, 1.0, 0.0, 1.0)
    mass = src.mass_in_box((0.0, 1.0, 0.0, 1.0))
    if mass < 0.999:
        warnings.warn(f"Gaussian source retains only {mass:.4f} of its mass inside the acoustic domain",
                      stacklevel=2)
    zero_v = lambda x, y: np.zeros((2,) + np.shape(x))  # noqa: E731
    zero_s = lambda x, y: np.zeros(np.shape(x))  # noqa: E731
    return Scenario(
        name="test3", material=mat, T=T, dt=1e-5,
        u0=zero_v, u1=zero_v, phi0=zero_s, phi1=zero_s,
        point_sources=[src], box=box,
    )


# --------------------------------------------------------------------------- custom term lists

_FACTOR = re.compile(r"^(x|y|t):(pow|sin|cos)([-+0-9.eE]+)$")


@dataclass(frozen=True)
class Term:
    """coef * prod_x(...) * prod_y(...) * prod_t(...) with factors pow n, sin w, cos w."""
    coef: float
    factors: tuple[tuple[str, str, float], ...]

    @staticmethod
    def parse(text: str) -> Term:
        parts = text.split()
        if not parts:
            raise ValueError("empty term")
        coef = float(parts[0])
        factors = []
        for tok in parts[1:]:
            m = _FACTOR.match(tok)
            if not m:
                raise ValueError(f"bad factor {tok!r}; expected var:kind<number>, e.g. x:pow2 or t:cos4.44")
            var, kind, num = m.groups()
            if kind == "pow" and (float(num) < 0 or float(num) != int(float(num))):
                raise ValueError(f"pow exponent must be a non-negative integer in {tok!r}")
            factors.append((var, kind, float(num)))
        return Term(coef, tuple(factors))


def _factor_derivs(kind: str, a: float, s) -> tuple:
    if kind == "pow":
        n = int(a)
        v = s ** n
        d1 = n * s ** (n - 1) if n >= 1 else 0 * s
        d2 = n * (n - 1) * s ** (n - 2) if n >= 2 else 0 * s
        return v, d1, d2
    if kind == "sin":
        return np.sin(a * s), a * np.cos(a * s), -a * a * np.sin(a * s)
    return np.cos(a * s), -a * np.sin(a * s), -a * a * np.cos(a * s)


def _product(factors, var, s):
    """Value and first two derivatives of the product of ``var`` factors."""
    v, d1, d2 = 1.0 + 0 * s, 0 * s, 0 * s
    for fv, kind, a in factors:
        if fv != var:
            continue
        f0, f1, f2 = _factor_derivs(kind, a, s)
        v, d1, d2 = v * f0, d1 * f0 + v * f1, d2 * f0 + 2 * d1 * f1 + v * f2
    return v, d1, d2


class TermField:
    """Scalar field given as a sum of separable terms."""

    def __init__(self, terms: list[Term]):
        self.terms = terms

    @classmethod
    def parse(cls, text: str) -> TermField:
        return cls([Term.parse(t) for t in text.split(";") if t.strip()])

    def derivs(self, x, y, t):
        """Dict of value and derivatives keyed by '', 't', 'tt', 'x', 'y', 'xx', 'xy', 'yy'."""
        x, y = np.asarray(x, float), np.asarray(y, float)
        t = np.asarray(t, float)
        out = {k: np.zeros(np.broadcast(x, y, t).shape) for k in ("", "t", "tt", "x", "y", "xx", "xy", "yy")}
        for term in self.terms:
            X = _product(term.factors, "x", x)
            Y = _product(term.factors, "y", y)
            Tt = _product(term.factors, "t", t)
            c = term.coef
            out[""] += c * X[0] * Y[0] * Tt[0]
            out["t"] += c * X[0] * Y[0] * Tt[1]
            out["tt"] += c * X[0] * Y[0] * Tt[2]
            out["x"] += c * X[1] * Y[0] * Tt[0]
            out["y"] += c * X[0] * Y[1] * Tt[0]
            out["xx"] += c * X[2] * Y[0] * Tt[0]
            out["xy"] += c * X[1] * Y[1] * Tt[0]
            out["yy"] += c * X[0] * Y[2] * Tt[0]
        return out


def custom_scenario(u_x: str, u_y: str, phi: str, material: Material, T: float = 1.0, dt: float = 1e-4,
                    check: bool = True) -> Scenario:
    """Manufactured solution from term lists; forcings and Dirichlet data derived.

    Term syntax: terms separated by ``;``, each ``coef var:kind<number> ...``
    with ``kind`` in ``pow`` (integer power), ``sin``, ``cos`` (frequency),
    e.g. ``"1.0 x:pow2 x:cos1.5707963267948966 y:sin3.141592653589793 t:cos4.442882938158366"``.
    The caller is responsible for the transmission conditions on the interface.
    """
    fx, fy, fp = TermField.parse(u_x), TermField.parse(u_y), TermField.parse(phi)
    lam = float(np.asarray(material.lam).ravel()[0])
    mu = float(np.asarray(material.mu).ravel()[0])
    rho = float(np.asarray(material.rho_e).ravel()[0])
    zeta = float(np.asarray(material.zeta).ravel()[0])
    c = float(np.asarray(material.c).ravel()[0])

    def vec(key):
        return lambda x, y, t: np.stack([fx.derivs(x, y, t)[key], fy.derivs(x, y, t)[key]])

    def grad_u(x, y, t):
        a, b = fx.derivs(x, y, t), fy.derivs(x, y, t)
        return np.array([[a["x"], a["y"]], [b["x"], b["y"]]])

    def hess_u(x, y, t):
        a, b = fx.derivs(x, y, t), fy.derivs(x, y, t)
        return np.array([[[a["xx"], a["xy"]], [a["xy"], a["yy"]]], [[b["xx"], b["xy"]], [b["xy"], b["yy"]]]])

    def f_e(x, y, t):
        a, b = fx.derivs(x, y, t), fy.derivs(x, y, t)
        inert = [rho * (d["tt"] + 2 * zeta * d["t"] + zeta ** 2 * d[""]) for d in (a, b)]
        return np.stack([
            inert[0] - ((lam + 2 * mu) * a["xx"] + mu * a["yy"] + (lam + mu) * b["xy"]),
            inert[1] - (mu * b["xx"] + (lam + 2 * mu) * b["yy"] + (lam + mu) * a["xy"]),
        ])

    def f_a(x, y, t):
        d = fp.derivs(x, y, t)
        return d["tt"] / c ** 2 - d["xx"] - d["yy"]

    def sc_(key):
        return lambda x, y, t: fp.derivs(x, y, t)[key]

    u = vec("")
    du = vec("t")
    p = sc_("")
    dp = sc_("t")
    sc = Scenario(
        name="custom", material=material, T=T, dt=dt, f_e=f_e, f_a=f_a, g_e=u, g_a=p,
        u0=lambda x, y: u(x, y, 0.0), u1=lambda x, y: du(x, y, 0.0),
        phi0=lambda x, y: p(x, y, 0.0), phi1=lambda x, y: dp(x, y, 0.0),
        exact_u=u, exact_du=du, exact_ddu=vec("tt"), exact_grad_u=grad_u, exact_hess_u=hess_u,
        exact_phi=p, exact_dphi=dp, exact_ddphi=sc_("tt"),
        exact_grad_phi=lambda x, y, t: np.stack([fp.derivs(x, y, t)["x"], fp.derivs(x, y, t)["y"]]),
        exact_hess_phi=lambda x, y, t: (lambda d: np.array([[d["xx"], d["xy"]], [d["xy"], d["yy"]]]))(
            fp.derivs(x, y, t)),
    )
    return _finish(sc, check)


def get_scenario(name: str, **kwargs) -> Scenario:
    makers = {"test1": test_case_1, "test2": test_case_2, "test3": test_case_3}
    if name not in makers:
        raise KeyError(f"unknown scenario {name!r}; expected one of {sorted(makers)} or 'custom'")
    return makers[name](**kwargs)


def random_smooth_scenario(material: Material | None = None, seed: int = 0, modes: int = 3,
                           T: float = 1.0, dt: float = 1e-4) -> Scenario:
    """Unforced problem with random smooth initial data vanishing on the outer boundary.

    Each initial field is a random combination of sin(k pi s) sin(l pi y),
    k, l <= ``modes``, with ``s`` the local x coordinate of its subdomain.
    """
    material = material or Material(rho_e=2.7, lam=51.20, mu=26.29, zeta=0.0, rho_a=1.0, c=1.0)
    rng = np.random.default_rng(seed)
    kk = np.arange(1, modes + 1)

    def field_(shift):
        a = rng.standard_normal((modes, modes)) / np.add.outer(kk, kk) ** 2

        def f(x, y):
            sx = np.sin(np.multiply.outer(np.asarray(x) - shift, kk) * math.pi)
            sy = np.sin(np.multiply.outer(np.asarray(y), kk) * math.pi)
            return np.einsum("...k,kl,...l->...", sx, a, sy)
        return f

    ux0, uy0, ux1, uy1 = (field_(-1.0) for _ in range(4))
    p0, p1 = field_(0.0), field_(0.0)
    return Scenario(
        name="random", material=material, T=T, dt=dt,
        u0=lambda x, y: np.stack([ux0(x, y), uy0(x, y)]),
        u1=lambda x, y: np.stack([ux1(x, y), uy1(x, y)]),
        phi0=p0, phi1=p1,
    )
