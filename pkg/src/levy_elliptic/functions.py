"""Function descriptors: the closed set of integrands the package accepts.

Descriptors exist so that pairing, Fourier analysis, and integrability
checks can dispatch to closed forms when they exist and fall back to
tensor Gauss quadrature otherwise.  A bare callable can be wrapped in
``CallableFunction``, but consumers that need analytic finiteness
information (integrability verdicts, noise pairing) refuse it unless the
caller certifies integrability explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .domain import (
    EigenSystem,
    HyperBox,
    QuadratureError,
    adaptive_tensor_quad,
    box_integral,
    constant_fourier,
    eigen_matrix,
    gauss_nodes,
)


class UncertifiedFunctionError(ValueError):
    """Raised when an operation needs integrability facts a descriptor lacks."""


@dataclass(frozen=True)
class Constant:
    value: float

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return np.full(len(np.atleast_2d(points)), float(self.value))


@dataclass(frozen=True)
class Eigenfunction:
    """One Dirichlet eigenfunction of the box, as a reusable integrand."""

    box: HyperBox
    index: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "index", tuple(int(k) for k in np.atleast_1d(self.index)))
        if len(self.index) != self.box.dim or any(k < 1 for k in self.index):
            raise ValueError(f"index {self.index} invalid for dim-{self.box.dim} box")

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        idx = np.asarray(self.index, dtype=np.int64)[None, :]
        from .domain import eigenvalues_of

        sys1 = EigenSystem(self.box, idx, eigenvalues_of(self.box, idx), ("count", 1))
        return eigen_matrix(sys1, points)[0]


@dataclass(frozen=True)
class Indicator:
    """Indicator of a disjoint union of boxes (half-open on each axis).

    Membership uses lower <= x < upper so adjacent members partition their
    union without double counting on shared faces.
    """

    boxes: tuple[HyperBox, ...]

    def __post_init__(self):
        boxes = tuple(self.boxes)
        object.__setattr__(self, "boxes", boxes)
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                if _interiors_overlap(boxes[i], boxes[j]):
                    raise ValueError("indicator members must have disjoint interiors")

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(len(pts))
        for bx in self.boxes:
            inside = np.all((pts >= bx.lower) & (pts < bx.upper), axis=1)
            out = np.where(inside, 1.0, out)
        return out


def _interiors_overlap(a: HyperBox, b: HyperBox) -> bool:
    return bool(np.all(np.maximum(a.lower, b.lower) < np.minimum(a.upper, b.upper)))


@dataclass(frozen=True)
class AxisPower:
    """f(x) = (x_axis - offset)^exponent, possibly singular at the offset."""

    exponent: float
    axis: int = 0
    offset: float = 0.0

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (pts[:, self.axis] - self.offset) ** self.exponent


@dataclass(frozen=True)
class Polynomial:
    """Polynomial in one coordinate: sum_j coeffs[j] * x_axis^j."""

    coeffs: tuple[float, ...]
    axis: int = 0

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.polynomial.polynomial.polyval(pts[:, self.axis], np.asarray(self.coeffs))


@dataclass(frozen=True)
class GridFunction:
    """Multilinear interpolant of values sampled on a tensor grid."""

    box: HyperBox
    axes: tuple[np.ndarray, ...]
    values: np.ndarray

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        interp = RegularGridInterpolator(
            self.axes, self.values, method="linear", bounds_error=False, fill_value=None
        )
        return np.asarray(interp(np.atleast_2d(np.asarray(points, dtype=float))))


@dataclass(frozen=True)
class CallableFunction:
    """Opaque callable contract: points array (m, d) -> values (m,).

    ``certified`` asserts the caller has verified integrability against the
    intended noise; operations that need that fact refuse when it is False.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    certified: bool = False

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.atleast_2d(np.asarray(points, dtype=float))), dtype=float)


@dataclass(frozen=True)
class SpectralFunction:
    """Finite eigen-expansion sum_k coeffs[k] e_k aligned with a system."""

    system: EigenSystem
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", coeffs)
        if len(coeffs) != len(self.system):
            raise ValueError("coefficient length must match the system")

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty(len(pts))
        chunk = max(1, int(2_000_000 / max(len(self.system), 1)))
        for start in range(0, len(pts), chunk):
            block = pts[start : start + chunk]
            out[start : start + len(block)] = self.coeffs @ eigen_matrix(self.system, block)
        return out


@dataclass(frozen=True)
class Scaled:
    """c * f for a descriptor f; keeps closed forms of the inner descriptor."""

    inner: object
    factor: float

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.factor * self.inner.evaluate(points)


FunctionDescriptor = (
    Constant
    | Eigenfunction
    | Indicator
    | AxisPower
    | Polynomial
    | GridFunction
    | CallableFunction
    | SpectralFunction
    | Scaled
)


def _same_box(a: HyperBox, b: HyperBox) -> bool:
    return a.intervals == b.intervals


def fourier_coeff(box: HyperBox, index, f, tol: float = 1e-10) -> float:
    """Coefficient <f, e_k> on the box.

    Exact for eigenfunction inputs (orthonormality), constants, indicators
    and spectral expansions; general descriptors go through adaptive tensor
    Gauss quadrature and raise QuadratureError if refinement stalls.
    """
    idx = tuple(int(k) for k in np.atleast_1d(index))
    if len(idx) != box.dim or any(k < 1 for k in idx):
        raise ValueError(f"index {idx} invalid for dim-{box.dim} box")

    if isinstance(f, Scaled):
        return f.factor * fourier_coeff(box, idx, f.inner, tol)
    if isinstance(f, Eigenfunction) and _same_box(f.box, box):
        return 1.0 if tuple(f.index) == idx else 0.0
    if isinstance(f, Constant):
        return f.value * _constant_fourier_single(box, idx)
    if isinstance(f, Indicator):
        return float(sum(_indicator_fourier_single(box, idx, bx) for bx in f.boxes))
    if isinstance(f, SpectralFunction) and _same_box(f.system.box, box):
        pos = f.system.position(idx)
        return float(f.coeffs[pos]) if pos is not None else 0.0

    kmax = max(idx)
    eig = Eigenfunction(box, idx)

    def integrand(pts):
        return f.evaluate(pts) * eig.evaluate(pts)

    if box.dim <= 2:
        n0 = max(32, 2 * kmax + 8)
        n_cap = 4096 if box.dim == 1 else 1024
        return adaptive_tensor_quad(integrand, box, tol=tol, n0=n0, n_max=max(n_cap, 2 * n0))
    return box_integral(integrand, box, tol=tol)


def _constant_fourier_single(box: HyperBox, idx: tuple[int, ...]) -> float:
    sys1 = _single_system(box, idx)
    return float(constant_fourier(sys1)[0])


def _single_system(box: HyperBox, idx: tuple[int, ...]) -> EigenSystem:
    from .domain import eigenvalues_of

    arr = np.asarray(idx, dtype=np.int64)[None, :]
    return EigenSystem(box, arr, eigenvalues_of(box, arr), ("count", 1))


def _indicator_fourier_single(box: HyperBox, idx: tuple[int, ...], sub: HyperBox) -> float:
    # Per axis: int_alpha^beta sqrt(2/L) sin(pi k (x-a)/L) dx
    #         = sqrt(2/L) L/(pi k) [cos(pi k (alpha-a)/L) - cos(pi k (beta-a)/L)].
    out = 1.0
    for j in range(box.dim):
        a, _ = box.intervals[j]
        L = box.lengths[j]
        alpha, beta = sub.intervals[j]
        k = idx[j]
        out *= (
            math.sqrt(2.0 / L)
            * L
            / (math.pi * k)
            * (math.cos(math.pi * k * (alpha - a) / L) - math.cos(math.pi * k * (beta - a) / L))
        )
    return out


def indicator_fourier_vector(system: EigenSystem, f: Indicator) -> np.ndarray:
    box = system.box
    total = np.zeros(len(system))
    for sub in f.boxes:
        out = np.ones(len(system))
        for j in range(box.dim):
            a, _ = box.intervals[j]
            L = box.lengths[j]
            alpha, beta = sub.intervals[j]
            k = system.indices[:, j].astype(float)
            out *= (
                math.sqrt(2.0 / L)
                * L
                / (math.pi * k)
                * (np.cos(math.pi * k * (alpha - a) / L) - np.cos(math.pi * k * (beta - a) / L))
            )
        total += out
    return total


def fourier_vector(system: EigenSystem, f, nodes_per_axis: int | None = None) -> np.ndarray:
    """Coefficients <f, e_k> for every index of the system at once.

    Closed forms where the descriptor admits them; otherwise one shared
    tensor Gauss rule sized to resolve the highest mode of the system.
    """
    box = system.box
    if isinstance(f, Scaled):
        return f.factor * fourier_vector(system, f.inner, nodes_per_axis)
    if isinstance(f, Constant):
        return f.value * constant_fourier(system)
    if isinstance(f, Eigenfunction) and _same_box(f.box, box):
        out = np.zeros(len(system))
        pos = system.position(f.index)
        if pos is not None:
            out[pos] = 1.0
        return out
    if isinstance(f, Indicator):
        return indicator_fourier_vector(system, f)
    if isinstance(f, SpectralFunction) and _same_box(f.system.box, box):
        out = np.zeros(len(system))
        limit = min(len(out), len(f.coeffs))
        # Both systems are sorted the same way, so a shared prefix aligns.
        if limit and np.array_equal(system.indices[:limit], f.system.indices[:limit]):
            out[:limit] = f.coeffs[:limit]
            return out
        for pos_f, row in enumerate(f.system.indices):
            pos = system.position(row)
            if pos is not None:
                out[pos] = f.coeffs[pos_f]
        return out

    if nodes_per_axis is None:
        kmax = int(system.indices.max())
        nodes_per_axis = max(64, 2 * kmax + 48)
    pts, w = gauss_nodes(box, nodes_per_axis)
    return eigen_matrix(system, pts) @ (w * f.evaluate(pts))


def integral(f, box: HyperBox, tol: float = 1e-8) -> float:
    """int_D f dx with closed forms where available; math.inf if divergent."""
    if isinstance(f, Scaled):
        return f.factor * integral(f.inner, box, tol)
    if isinstance(f, Constant):
        return f.value * box.volume
    if isinstance(f, Eigenfunction) and _same_box(f.box, box):
        return _constant_fourier_single(box, tuple(f.index))
    if isinstance(f, Indicator):
        return float(sum(bx.volume for bx in f.boxes))
    if isinstance(f, SpectralFunction) and _same_box(f.system.box, box):
        return float(np.dot(f.coeffs, constant_fourier(f.system)))
    if isinstance(f, AxisPower):
        return _axis_power_integral(f, box, 1.0, signed=True)
    return box_integral(lambda p: f.evaluate(p), box, tol=tol)


def abs_power_integral(f, box: HyperBox, q: float, tol: float = 1e-8) -> float:
    """int_D |f|^q dx; math.inf when the analytic criterion says divergent.

    Raises UncertifiedFunctionError for opaque callables without the
    certified flag, because divergence cannot be decided by quadrature.
    """
    finite = lq_finite(f, box, q)
    if finite is None:
        raise UncertifiedFunctionError(
            "cannot decide integrability of an uncertified callable"
        )
    if not finite:
        return math.inf
    if isinstance(f, Scaled):
        return abs(f.factor) ** q * abs_power_integral(f.inner, box, q, tol)
    if isinstance(f, Constant):
        return abs(f.value) ** q * box.volume
    if isinstance(f, Indicator):
        return float(sum(bx.volume for bx in f.boxes))
    if isinstance(f, Eigenfunction) and q == 2.0 and _same_box(f.box, box):
        return 1.0
    if isinstance(f, SpectralFunction) and q == 2.0 and _same_box(f.system.box, box):
        return float(np.dot(f.coeffs, f.coeffs))
    if isinstance(f, AxisPower):
        return _axis_power_integral(f, box, q, signed=False)
    return box_integral(lambda p: np.abs(f.evaluate(p)) ** q, box, tol=tol)


def _axis_power_integral(f: AxisPower, box: HyperBox, q: float, signed: bool) -> float:
    a, b = box.intervals[f.axis]
    lo, hi = a - f.offset, b - f.offset
    if lo < 0.0:
        raise ValueError("axis-power offset must sit at or below the box on its axis")
    other = box.volume / (b - a)
    e = q * f.exponent
    if lo == 0.0 and e <= -1.0:
        return math.inf
    if e == -1.0:
        val = math.log(hi / lo)
    else:
        val = (hi ** (e + 1.0) - lo ** (e + 1.0)) / (e + 1.0)
    return other * val


def lq_finite(f, box: HyperBox, q: float) -> bool | None:
    """Whether int |f|^q < infinity; None when not analytically decidable."""
    if isinstance(f, Scaled):
        return lq_finite(f.inner, box, q)
    if isinstance(
        f, (Constant, Eigenfunction, Indicator, Polynomial, GridFunction, SpectralFunction)
    ):
        return True
    if isinstance(f, AxisPower):
        a, _ = box.intervals[f.axis]
        if a - f.offset > 0.0:
            return True
        return q * f.exponent > -1.0
    if isinstance(f, CallableFunction):
        return True if f.certified else None
    return None


def parse_function(data: dict, box: HyperBox):
    """Descriptor from a JSON config block."""
    kind = data.get("kind")
    if kind == "constant":
        return Constant(float(data.get("value", 1.0)))
    if kind == "eigenfunction":
        return Eigenfunction(box, tuple(int(k) for k in data["index"]))
    if kind == "indicator":
        boxes = tuple(HyperBox(tuple(tuple(p) for p in ivs)) for ivs in data["boxes"])
        return Indicator(boxes)
    if kind == "axis_power":
        return AxisPower(
            float(data["exponent"]), int(data.get("axis", 0)), float(data.get("offset", 0.0))
        )
    if kind == "polynomial":
        return Polynomial(tuple(float(c) for c in data["coeffs"]), int(data.get("axis", 0)))
    raise ValueError(f"unknown function kind {kind!r}")
