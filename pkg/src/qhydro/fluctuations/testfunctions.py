"""Smooth test functions on the unit interval.

Two families: compactly supported bumps s * phi((x - c) / w) with
phi(u) = exp(-1 / (1 - u^2)) on |u| < 1, and Dirichlet sine modes
s * sin(k pi x).  Both come with closed-form first and second derivatives.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

BUMP = "bump"
SINE = "sine"


def _phi(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    v = 1.0 - u[inside] ** 2
    out[inside] = np.exp(-1.0 / v)
    return out


def _phi_d1(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    ui = u[inside]
    v = 1.0 - ui**2
    out[inside] = np.exp(-1.0 / v) * (-2.0 * ui / v**2)
    return out


def _phi_d2(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    ui = u[inside]
    v = 1.0 - ui**2
    out[inside] = np.exp(-1.0 / v) * (4.0 * ui**2 / v**4 - (2.0 + 6.0 * ui**2) / v**3)
    return out


@dataclass(frozen=True)
class TestFunction:
    """Closed-form test function with id, support and derivatives.

    For bumps ``center`` and ``width`` place the support at
    [center - width, center + width]; for sines ``mode`` is k.
    """

    __test__ = False  # not a pytest class

    id: str
    kind: str
    center: float = 0.5
    width: float = 0.5
    scale: float = 1.0
    mode: int = 1

    def __post_init__(self):
        if self.kind not in (BUMP, SINE):
            raise ValueError(f"unknown test-function kind {self.kind!r}")
        if self.kind == BUMP and self.width <= 0:
            raise ValueError("bump width must be positive")

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == SINE:
            return 0.0, 1.0
        return self.center - self.width, self.center + self.width

    def _u(self, x):
        return (np.asarray(x, dtype=float) - self.center) / self.width

    def __call__(self, x):
        if self.kind == BUMP:
            return self.scale * _phi(self._u(x))
        return self.scale * np.sin(self.mode * np.pi * np.asarray(x, dtype=float))

    def d1(self, x):
        if self.kind == BUMP:
            return self.scale / self.width * _phi_d1(self._u(x))
        k = self.mode * np.pi
        return self.scale * k * np.cos(k * np.asarray(x, dtype=float))

    def d2(self, x):
        if self.kind == BUMP:
            return self.scale / self.width**2 * _phi_d2(self._u(x))
        k = self.mode * np.pi
        return -self.scale * k**2 * np.sin(k * np.asarray(x, dtype=float))

    def rescaled(self, x0: float, eps: float, new_id: str | None = None) -> "TestFunction":
        """f_{x0, eps}(x) = eps^{-1/2} f((x - x0) / eps) for a bump centred at 0.

        The base bump is read relative to its own centre, so any bump in the
        catalogue can be used as the profile f.
        """
        if self.kind != BUMP:
            raise ValueError("only bumps can be rescaled")
        if eps <= 0:
            raise ValueError("eps must be positive")
        return replace(self, id=new_id or f"{self.id}@{x0:g},{eps:g}", center=x0,
                       width=self.width * eps, scale=self.scale / np.sqrt(eps))

    def on_lattice(self, geom) -> np.ndarray:
        """Values at the macroscopic coordinates y / L_N of the lattice sites."""
        x = geom.macro_coordinates()
        if x.shape[1] != 1:
            raise ValueError("test functions are one-dimensional")
        return self(x[:, 0])

    def on_grid(self, grid) -> np.ndarray:
        return self(grid.interior)

    def describe(self) -> dict:
        return {"id": self.id, "kind": self.kind, "center": self.center, "width": self.width,
                "scale": self.scale, "mode": self.mode, "support": list(self.support)}


def bump(center: float, width: float, scale: float = 1.0, id: str | None = None) -> TestFunction:
    lo, hi = center - width, center + width
    if lo < 0 or hi > 1:
        raise ValueError(f"bump support [{lo}, {hi}] leaves the unit interval")
    return TestFunction(id or f"bump-{center:g}-{width:g}", BUMP, center, width, scale)


def sine(mode: int, scale: float = 1.0, id: str | None = None) -> TestFunction:
    return TestFunction(id or f"sine-{mode}", SINE, mode=int(mode), scale=scale)


def normalized_bump(center: float, width: float, id: str | None = None) -> TestFunction:
    """Bump with unit integral (a local averaging kernel)."""
    return bump(center, width, 1.0 / (width * BUMP_MASS), id)


def quad(fn, lo: float = 0.0, hi: float = 1.0, points=None) -> float:
    val, _ = integrate.quad(fn, lo, hi, limit=400, points=points, epsabs=1e-13, epsrel=1e-12)
    return float(val)


# ∫ phi over (-1, 1)
BUMP_MASS = quad(lambda u: float(_phi(np.array([u]))[0]), -1.0, 1.0)


def inner(f: TestFunction, g: TestFunction, weight=None, derivative: int = 0) -> float:
    """∫ w(x) D^k f D^k g dx over the intersection of supports."""
    lo = max(f.support[0], g.support[0])
    hi = min(f.support[1], g.support[1])
    if hi <= lo:
        return 0.0
    df = (f, f.d1, f.d2)[derivative]
    dg = (g, g.d1, g.d2)[derivative]
    w = weight if weight is not None else (lambda x: 1.0)

    def integrand(x):
        xa = np.array([x])
        return float(np.asarray(w(xa)).ravel()[0] * df(xa)[0] * dg(xa)[0])

    return quad(integrand, lo, hi)


def catalogue() -> dict[str, TestFunction]:
    """Frozen test-function catalogue, keyed by id."""
    fns = [
        bump(0.25, 0.15), bump(0.5, 0.15), bump(0.75, 0.15),
        bump(0.3, 0.2), bump(0.5, 0.2), bump(0.7, 0.2),
        bump(0.2, 0.1), bump(0.4, 0.1), bump(0.6, 0.1), bump(0.8, 0.1),
        bump(0.5, 0.4), bump(0.5, 0.5),
        sine(1), sine(2), sine(3),
    ]
    return {f.id: f for f in fns}


def get(id: str) -> TestFunction:
    cat = catalogue()
    if id not in cat:
        raise KeyError(f"unknown test function {id!r}; known: {sorted(cat)}")
    return cat[id]
