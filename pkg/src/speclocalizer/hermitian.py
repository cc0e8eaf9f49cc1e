"""Hermitian forms over a concrete matrix representation.

A hermitian form is an invertible self-adjoint matrix. Its *gap* is the
smallest absolute eigenvalue and its *signature* the number of positive minus
the number of negative eigenvalues. Gaps are computed in the representation
the matrix is given in; for compressions this is a lower bound for the gap in
the enveloping algebra, never more.

Homotopies are certified on a finite grid of parameter values: between two
samples the gap can only drop by the rigidity estimate
``gap(y)^2 >= gap(x)^2 - 2 eps ||x||`` with ``eps`` controlled by a Lipschitz
constant of the path.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    BoundViolated,
    Degenerate,
    GapCollapse,
    NotHermitian,
    NotUnitary,
    ShapeMismatch,
)

HERMITIAN_RTOL = 1e-12
DEGENERACY_RTOL = 1e-8
UNITARY_TOL = 1e-12
DEFAULT_STEPS = 100


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _square(data):
    a = np.asarray(data, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ShapeMismatch(f"expected a non-empty square matrix, got shape {a.shape}")
    return a


def _symmetrize(a, rtol=HERMITIAN_RTOL):
    scale = np.linalg.norm(a)
    asym = np.linalg.norm(a - a.conj().T)
    if asym > rtol * scale:
        raise NotHermitian(
            f"matrix is not Hermitian: ||A - A*|| = {asym:.3e} > {rtol:g} * ||A|| = {rtol * scale:.3e}"
        )
    return 0.5 * (a + a.conj().T)


def operator_norm(a):
    """Largest singular value of ``a``."""
    a = np.asarray(a)
    if a.ndim != 2:
        raise ShapeMismatch(f"expected a matrix, got {a.ndim} dimensions")
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


@dataclass(frozen=True, eq=False)
class RawHermitian:
    """Self-adjoint matrix that may be degenerate."""

    data: np.ndarray
    n: int

    @classmethod
    def from_matrix(cls, data, rtol=HERMITIAN_RTOL):
        a = _symmetrize(_square(data), rtol)
        return cls(_frozen(a), a.shape[0])

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.data)

    @property
    def gap(self):
        return float(np.min(np.abs(self.eigenvalues())))


@dataclass(frozen=True, eq=False)
class HermitianForm:
    """Non-degenerate self-adjoint matrix with cached spectral data.

    Build instances with :func:`make_form`; the constructor does not check
    anything.
    """

    data: np.ndarray
    n: int
    gap: float
    signature: int
    tol_zero: float
    eigenvalues: np.ndarray

    @property
    def norm(self):
        return float(np.max(np.abs(self.eigenvalues)))

    @property
    def negative_inertia(self):
        return (self.n - self.signature) // 2

    def raw(self):
        return RawHermitian(self.data, self.n)


def make_form(data, tol_zero=None, rtol=HERMITIAN_RTOL):
    """Symmetrize ``data`` and wrap it as a :class:`HermitianForm`.

    ``tol_zero`` defaults to ``1e-8 * ||data||``. Raises :class:`Degenerate`
    if some eigenvalue has modulus at most ``tol_zero``.
    """
    if isinstance(data, (HermitianForm, RawHermitian)):
        data = data.data
    a = _symmetrize(_square(data), rtol)
    evals = np.linalg.eigvalsh(a)
    norm = float(np.max(np.abs(evals)))
    if tol_zero is None:
        tol_zero = DEGENERACY_RTOL * norm
    if tol_zero < 0:
        raise ValueError("tol_zero must be nonnegative")
    k = int(np.argmin(np.abs(evals)))
    gap = float(abs(evals[k]))
    if gap <= tol_zero:
        raise Degenerate(
            f"matrix is degenerate: eigenvalue {evals[k]:.3e} within tol_zero={tol_zero:.3e}",
            eigenvalue=float(evals[k]),
        )
    signature = int(np.count_nonzero(evals > 0) - np.count_nonzero(evals < 0))
    evals = evals.copy()
    evals.setflags(write=False)
    return HermitianForm(_frozen(a), a.shape[0], gap, signature, float(tol_zero), evals)


def direct_sum(x, y):
    """Block-diagonal sum ``x ⊕ y``."""
    n, m = x.n, y.n
    out = np.zeros((n + m, n + m), dtype=complex)
    out[:n, :n] = x.data
    out[n:, n:] = y.data
    evals = np.sort(np.concatenate([x.eigenvalues, y.eigenvalues]))
    evals.setflags(write=False)
    return HermitianForm(
        _frozen(out),
        n + m,
        min(x.gap, y.gap),
        x.signature + y.signature,
        max(x.tol_zero, y.tol_zero),
        evals,
    )


def rigidity_bound(x, y):
    """Gap certificate for a perturbation ``y`` of the form ``x``.

    Returns ``(eps, certified_gap)`` with ``eps = ||x - y||`` and
    ``certified_gap = sqrt(gap(x)^2 - 2 eps ||x||)``.
    """
    y = y if isinstance(y, (RawHermitian, HermitianForm)) else RawHermitian.from_matrix(y)
    if y.n != x.n:
        raise ShapeMismatch(f"sizes differ: {x.n} vs {y.n}")
    eps = operator_norm(x.data - y.data)
    slack = x.gap**2 - 2.0 * eps * x.norm
    if slack <= 0:
        raise BoundViolated(
            f"eps = {eps:.6g} >= gap^2 / (2||x||) = {x.gap**2 / (2 * x.norm):.6g}; no certificate"
        )
    return eps, float(np.sqrt(slack))


@dataclass(frozen=True, eq=False)
class PathSample:
    t: float
    form: RawHermitian
    gap_at_t: float


@dataclass(frozen=True, eq=False)
class HomotopyCertificate:
    samples: tuple
    certified_gap: float
    certified: bool
    endpoints: tuple
    lipschitz: float

    @property
    def min_sampled_gap(self):
        return min(s.gap_at_t for s in self.samples)


def _sample(path, steps):
    if steps < 1:
        raise ValueError("steps must be a positive integer")
    samples = []
    for t in np.linspace(0.0, 1.0, steps + 1):
        raw = RawHermitian.from_matrix(path(float(t)), rtol=1e-10)
        evals = raw.eigenvalues()
        samples.append((PathSample(float(t), raw, float(np.min(np.abs(evals)))), float(np.max(np.abs(evals)))))
    return samples


def _step_bounds(samples, lipschitz):
    """Lower bounds for gap^2 on each sampling interval, from its left endpoint."""
    bounds = []
    for (left, norm), (right, _) in zip(samples[:-1], samples[1:]):
        eps = lipschitz * (right.t - left.t)
        bounds.append(left.gap_at_t**2 - 2.0 * eps * norm)
    return bounds


def _assemble(samples, lipschitz, endpoints, certified_gap=None):
    bounds = _step_bounds(samples, lipschitz)
    certified = all(s.gap_at_t > 0 for s, _ in samples) and all(b > 0 for b in bounds)
    if certified_gap is None:
        certified_gap = float(np.sqrt(max(0.0, min(bounds)))) if bounds else samples[0][0].gap_at_t
    return HomotopyCertificate(
        samples=tuple(s for s, _ in samples),
        certified_gap=float(certified_gap),
        certified=bool(certified),
        endpoints=endpoints,
        lipschitz=float(lipschitz),
    )


def path_certificate(path: Callable[[float], np.ndarray], lipschitz, steps=DEFAULT_STEPS):
    """Certify an arbitrary path ``t -> path(t)`` on ``[0, 1]``.

    ``lipschitz`` must bound ``||path(t) - path(s)|| / |t - s|``. The
    certified gap is the smallest per-interval rigidity bound.
    """
    samples = _sample(path, steps)
    start, end = samples[0][0].form, samples[-1][0].form
    endpoints = (make_form(start.data), make_form(end.data))
    return _assemble(samples, lipschitz, endpoints)


def _first_degenerate(samples):
    for s, norm in samples:
        if s.gap_at_t <= DEGENERACY_RTOL * max(norm, 1e-300):
            return s.t
    return None


def linear_homotopy(x, y, steps=DEFAULT_STEPS):
    """Certified straight-line path ``t -> (1 - t) x + t y``.

    The certified gap is ``sqrt(g^2 - eps^2/4)`` with ``g`` the smaller of
    the endpoint gaps and ``eps = ||x - y||``.
    """
    if x.n != y.n:
        raise ShapeMismatch(f"sizes differ: {x.n} vs {y.n}")
    diff = y.data - x.data
    eps = operator_norm(diff)
    g = min(x.gap, y.gap)

    def path(t):
        return x.data + t * diff

    samples = _sample(path, steps)
    if eps**2 / 4.0 >= g**2:
        t_bad = _first_degenerate(samples)
        where = f"; first degenerate sample at t = {t_bad:g}" if t_bad is not None else ""
        raise GapCollapse(f"eps^2/4 = {eps**2 / 4:.6g} >= g^2 = {g**2:.6g}{where}", t=t_bad)
    return _assemble(samples, eps, (x, y), certified_gap=np.sqrt(g**2 - eps**2 / 4.0))


def perturbation_homotopy(x, y, steps=DEFAULT_STEPS):
    """Certified path from a form ``x`` to a nearby self-adjoint ``y``."""
    y = y if isinstance(y, (RawHermitian, HermitianForm)) else RawHermitian.from_matrix(y)
    if y.n != x.n:
        raise ShapeMismatch(f"sizes differ: {x.n} vs {y.n}")
    eps = operator_norm(x.data - y.data)
    slack = x.gap**2 - 2.0 * eps * x.norm - eps**2 / 4.0
    if slack <= 0:
        raise BoundViolated(f"gap^2 = {x.gap**2:.6g} <= 2 eps ||x|| + eps^2/4 with eps = {eps:.6g}")
    rigidity_bound(x, y)
    cert = linear_homotopy(x, make_form(y.data, tol_zero=0.0), steps)
    return HomotopyCertificate(
        samples=cert.samples,
        certified_gap=float(np.sqrt(slack)),
        certified=cert.certified,
        endpoints=cert.endpoints,
        lipschitz=cert.lipschitz,
    )


def _check_unitary(u):
    u = _square(u)
    err = operator_norm(u @ u.conj().T - np.eye(u.shape[0]))
    if err > UNITARY_TOL:
        raise NotUnitary(f"||u u* - 1|| = {err:.3e} exceeds {UNITARY_TOL:g}")
    return u


def whitehead_rotation(u, t):
    """Unitary ``w_t`` with ``w_0 = 1`` and ``w_1 = diag(u, u*)``."""
    n = u.shape[0]
    eye = np.eye(n)
    zero = np.zeros((n, n))
    c, s = np.cos(np.pi * t / 2), np.sin(np.pi * t / 2)
    rot = np.block([[c * eye, -s * eye], [s * eye, c * eye]])
    left = np.block([[u, zero], [zero, eye]])
    mid = np.block([[u.conj().T, zero], [zero, eye]])
    return left @ rot @ mid @ rot.T


def whitehead_path(u, x, steps=DEFAULT_STEPS):
    """Certified path from ``x ⊕ 1`` to ``u x u* ⊕ 1`` by conjugation with ``w_t``."""
    u = _check_unitary(u)
    if u.shape[0] != x.n:
        raise ShapeMismatch(f"unitary has size {u.shape[0]}, form has size {x.n}")
    n = x.n
    big = np.zeros((2 * n, 2 * n), dtype=complex)
    big[:n, :n] = x.data
    big[n:, n:] = np.eye(n)

    def path(t):
        w = whitehead_rotation(u, t)
        return w @ big @ w.conj().T

    start = make_form(big)
    end = make_form(path(1.0))
    samples = _sample(path, steps)
    # d/dt (w X w*) = [w' w*, w X w*] and ||w'|| <= pi; shifting X by a scalar
    # leaves the commutator unchanged, so the spread of the spectrum suffices
    spread = float(start.eigenvalues[-1] - start.eigenvalues[0])
    lipschitz = np.pi * spread
    return _assemble(samples, lipschitz, (start, end), certified_gap=min(x.gap, 1.0))


def steps_needed(gap, lipschitz, norm, safety=4.0):
    """Number of sampling intervals that keeps every step bound above ``gap^2 / 2``."""
    if lipschitz <= 0:
        return 1
    return max(1, int(np.ceil(safety * lipschitz * norm / gap**2)))


def witt_projection(x):
    """Spectral projection ``(1 - sign(x)) / 2`` onto the negative eigenspace."""
    evals, vecs = np.linalg.eigh(x.data)
    neg = vecs[:, evals < 0]
    p = neg @ neg.conj().T
    return 0.5 * (p + p.conj().T)


def random_form(rng, n, min_gap=0.1, scale=1.0, signature: Optional[int] = None):
    """Random invertible Hermitian matrix with eigenvalue moduli in ``[min_gap, min_gap + scale]``."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    mags = min_gap + scale * rng.random(n)
    if signature is None:
        signs = rng.choice([-1.0, 1.0], size=n)
    else:
        k = (n - signature) // 2
        signs = np.array([-1.0] * k + [1.0] * (n - k))
    return make_form(q @ np.diag(signs * mags) @ q.conj().T)


def random_unitary(rng, n):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
