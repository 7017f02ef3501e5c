"""Compactly supported kernels on [-1, 1]."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


def _epanechnikov(x: np.ndarray) -> np.ndarray:
    return np.where(np.abs(x) <= 1.0, 0.75 * (1.0 - x * x), 0.0)


def _uniform(x: np.ndarray) -> np.ndarray:
    return np.where(np.abs(x) <= 1.0, 0.5, 0.0)


@dataclass(frozen=True)
class KernelSpec:
    """A kernel function together with its closed-form constants.

    Attributes
    ----------
    name : str
        Registry key (``"epanechnikov"`` or ``"uniform"``).
    func : callable
        Vectorised density, zero outside ``[-1, 1]``.
    l2 : float
        Analytic value of the integral of ``K(x)**2`` over ``[-1, 1]``.
    lipschitz : float
        Lipschitz constant of ``func`` on the interior of the support.
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    l2: float
    lipschitz: float

    def __call__(self, x):
        return evaluate(self, x)


EPANECHNIKOV = KernelSpec("epanechnikov", _epanechnikov, 0.6, 1.5)
UNIFORM = KernelSpec("uniform", _uniform, 0.5, 0.0)

KERNELS: dict[str, KernelSpec] = {k.name: k for k in (EPANECHNIKOV, UNIFORM)}


def get_kernel(kernel: str | KernelSpec) -> KernelSpec:
    """Look up a kernel by name; ``KernelSpec`` instances pass through."""
    if isinstance(kernel, KernelSpec):
        return kernel
    try:
        return KERNELS[str(kernel).lower()]
    except KeyError:
        from .errors import ConfigError

        raise ConfigError(
            f"unknown kernel {kernel!r}; expected one of {sorted(KERNELS)}"
        ) from None


def evaluate(kernel: str | KernelSpec, x):
    """Evaluate ``K(x)``; returns a float for scalar input."""
    k = get_kernel(kernel)
    arr = np.asarray(x, dtype=float)
    out = k.func(arr)
    if arr.ndim == 0:
        return float(out)
    return out


def simpson_integral(f: Callable[[np.ndarray], np.ndarray], n: int = 2**14) -> float:
    """Composite Simpson rule for ``f`` over ``[-1, 1]`` with ``n`` intervals."""
    if n % 2:
        n += 1
    x = np.linspace(-1.0, 1.0, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float((2.0 / n) / 3.0 * np.dot(w, f(x)))


def l2_norm_squared(kernel: str | KernelSpec, check: bool = False) -> float:
    """Return the integral of ``K(x)**2`` over the support.

    With ``check=True`` the closed form is compared against Simpson quadrature
    and an ``AssertionError`` is raised if they disagree beyond 1e-8.
    """
    k = get_kernel(kernel)
    if check:
        quad = simpson_integral(lambda x: k.func(x) ** 2)
        if abs(quad - k.l2) > 1e-8:
            raise AssertionError(f"{k.name}: quadrature {quad} != analytic {k.l2}")
    return k.l2
