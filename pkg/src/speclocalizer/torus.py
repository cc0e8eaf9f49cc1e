"""Fourier model of the two-torus with spinors.

Functions on ``T^2`` are expanded in the modes ``e^{i(n1 t1 + n2 t2)}``. The
projection used here is

    p = [[f,            g + h U ],
         [g + h U*,     1 - f   ]],     U(t2) = e^{i m t2},

with ``f, g, h`` real functions of ``t1`` satisfying ``gh = 0`` and
``g^2 + h^2 = f - f^2``. Spectral truncation keeps the lattice modes with
``n1^2 + n2^2 <= rho^2``.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import json

import numpy as np

from . import hermitian as hc
from .errors import PadTooSmall, ShapeMismatch
from .matrix_io import matrix_to_dict

DEFAULT_BANDWIDTH = 256
DEFAULT_GRID = 4096


@dataclass(frozen=True, eq=False)
class TorusFunction:
    """Finite Fourier series ``sum_k c_k e^{i k t}`` in one circle variable.

    ``coeffs[k + bandwidth]`` holds ``c_k`` for ``|k| <= bandwidth``.
    """

    coeffs: np.ndarray
    variable: int = 1
    bandwidth: int = 0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 1 or len(c) % 2 == 0:
            raise ShapeMismatch("coefficient array must have odd length 2B+1")
        if self.variable not in (1, 2):
            raise ValueError("variable must be 1 or 2")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "bandwidth", (len(c) - 1) // 2)

    @classmethod
    def from_dict(cls, coeffs, variable=1):
        """Build from a ``{frequency: coefficient}`` mapping."""
        B = max((abs(int(k)) for k in coeffs), default=0)
        c = np.zeros(2 * B + 1, dtype=complex)
        for k, v in coeffs.items():
            c[int(k) + B] += v
        return cls(c, variable)

    @classmethod
    def constant(cls, value, variable=1):
        return cls(np.array([value], dtype=complex), variable)

    @classmethod
    def from_samples(cls, values, bandwidth, variable=1):
        """Coefficients by discrete Fourier transform of equispaced samples on ``[0, 2 pi)``."""
        values = np.asarray(values)
        grid = len(values)
        if 2 * bandwidth >= grid:
            raise ValueError(f"bandwidth {bandwidth} needs more than {grid} samples")
        c = np.fft.fft(values) / grid
        ks = np.arange(-bandwidth, bandwidth + 1)
        return cls(c[ks % grid], variable)

    def coefficient(self, k):
        k = int(k)
        return complex(self.coeffs[k + self.bandwidth]) if abs(k) <= self.bandwidth else 0j

    @property
    def frequencies(self):
        return np.arange(-self.bandwidth, self.bandwidth + 1)

    def is_real(self, atol=1e-14):
        return bool(np.allclose(self.coeffs, self.coeffs[::-1].conj(), rtol=0, atol=atol))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        phases = np.exp(1j * np.multiply.outer(t, self.frequencies))
        return phases @ self.coeffs

    def _padded(self, B):
        out = np.zeros(2 * B + 1, dtype=complex)
        out[B - self.bandwidth:B + self.bandwidth + 1] = self.coeffs
        return out

    def __add__(self, other):
        if not isinstance(other, TorusFunction):
            other = TorusFunction.constant(other, self.variable)
        if other.variable != self.variable and max(self.bandwidth, other.bandwidth) > 0:
            raise ValueError("cannot add functions of different variables")
        B = max(self.bandwidth, other.bandwidth)
        return TorusFunction(self._padded(B) + other._padded(B), self.variable)

    __radd__ = __add__

    def __neg__(self):
        return TorusFunction(-self.coeffs, self.variable)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, scalar):
        return TorusFunction(self.coeffs * scalar, self.variable)

    __rmul__ = __mul__

    def to_dict(self):
        return {
            "variable": self.variable,
            "bandwidth": self.bandwidth,
            "re": self.coeffs.real.tolist(),
            "im": self.coeffs.imag.tolist(),
        }


@dataclass(frozen=True, eq=False)
class Profile:
    f: TorusFunction
    g: TorusFunction
    h: TorusFunction
    grid: int = DEFAULT_GRID

    @property
    def bandwidth(self):
        return max(self.f.bandwidth, self.g.bandwidth, self.h.bandwidth)

    def to_dict(self):
        return {"grid": self.grid, "f": self.f.to_dict(), "g": self.g.to_dict(), "h": self.h.to_dict()}


@lru_cache(maxsize=16)
def default_profile(bandwidth=DEFAULT_BANDWIDTH, grid=DEFAULT_GRID):
    """``f = (1 + cos t)/2`` with ``g``, ``h`` the halves of ``sqrt(f - f^2) = |sin t|/2``."""
    f = TorusFunction.from_dict({-1: 0.25, 0: 0.5, 1: 0.25})
    t = 2 * np.pi * np.arange(grid) / grid
    half_sine = 0.5 * np.abs(np.sin(t))
    g = np.where(t <= np.pi, half_sine, 0.0)
    h = np.where(t >= np.pi, half_sine, 0.0)
    return Profile(
        f,
        TorusFunction.from_samples(g, bandwidth),
        TorusFunction.from_samples(h, bandwidth),
        grid,
    )


# -- symbols ------------------------------------------------------------------

# A symbol entry is a tuple of terms (phi, s) meaning phi(t1) * e^{i s t2}.


@dataclass(frozen=True, eq=False)
class Symbol:
    """2x2 matrix whose entries are sums of terms ``phi(t1) e^{i s t2}``."""

    entries: tuple  # ((e11, e12), (e21, e22)), each a tuple of (TorusFunction, int)
    m: int = 0

    def evaluate(self, t1, t2):
        t1, t2 = np.broadcast_arrays(np.asarray(t1, dtype=float), np.asarray(t2, dtype=float))
        out = np.zeros(t1.shape + (2, 2), dtype=complex)
        for a in range(2):
            for b in range(2):
                for phi, s in self.entries[a][b]:
                    out[..., a, b] += phi(t1) * np.exp(1j * s * t2)
        return out

    @property
    def bandwidth(self):
        return max(phi.bandwidth for row in self.entries for e in row for phi, _ in e)

    @property
    def max_shift(self):
        return max(abs(s) for row in self.entries for e in row for _, s in e)

    def affine(self, scale, shift):
        """The symbol ``shift * 1 + scale * self``."""
        rows = []
        for a in range(2):
            row = []
            for b in range(2):
                terms = [(scale * phi, s) for phi, s in self.entries[a][b]]
                if a == b:
                    terms = _merge_constant(terms, shift)
                row.append(tuple(terms))
            rows.append(tuple(row))
        return Symbol(tuple(rows), self.m)


def _merge_constant(terms, value):
    for i, (phi, s) in enumerate(terms):
        if s == 0:
            terms[i] = (phi + value, 0)
            return terms
    return terms + [(TorusFunction.constant(value), 0)]


def projection_symbol(m, profile=None):
    """The projection ``p`` with winding ``m`` in the second variable."""
    profile = profile or default_profile()
    f, g, h = profile.f, profile.g, profile.h
    entries = (
        (((f, 0),), ((g, 0), (h, m))),
        (((g, 0), (h, -m)), ((1 - f, 0),)),
    )
    return Symbol(entries, m)


def involution_symbol(m, profile=None):
    """``Y = 1 - 2p``."""
    return projection_symbol(m, profile).affine(-2.0, 1.0)


def profile_residuals(profile, m=1, grid=None, t2_points=16):
    """Sup-norm residuals of the projection relations on a grid."""
    grid = grid or profile.grid
    t1 = 2 * np.pi * np.arange(grid) / grid
    f, g, h = profile.f(t1).real, profile.g(t1).real, profile.h(t1).real
    t2 = 2 * np.pi * np.arange(t2_points) / t2_points
    p = projection_symbol(m, profile).evaluate(t1[:, None], t2[None, :])
    pp = np.einsum("...ij,...jk->...ik", p, p)
    return {
        "bandwidth": profile.bandwidth,
        "idempotent": float(np.max(np.abs(pp - p))),
        "gh": float(np.max(np.abs(g * h))),
        "sum_of_squares": float(np.max(np.abs(g * g + h * h - (f - f * f)))),
        "f_min": float(f.min()),
        "f_max": float(f.max()),
    }


# -- lattices and operators ------------------------------------------------------

_KEY_OFFSET = 1 << 20
_KEY_WIDTH = 1 << 21


def _keys(modes):
    modes = np.asarray(modes, dtype=np.int64).reshape(-1, 2)
    return (modes[:, 0] + _KEY_OFFSET) * _KEY_WIDTH + (modes[:, 1] + _KEY_OFFSET)


@dataclass(frozen=True, eq=False)
class TruncationLattice:
    rho: float
    modes: np.ndarray
    _keys: np.ndarray = field(repr=False)

    @classmethod
    def from_modes(cls, modes, rho=float("nan")):
        modes = np.asarray(modes, dtype=np.int64).reshape(-1, 2)
        keys = _keys(modes)
        order = np.argsort(keys, kind="stable")
        modes, keys = modes[order], keys[order]
        if len(keys) > 1 and np.any(np.diff(keys) == 0):
            raise ValueError("duplicate modes")
        modes.setflags(write=False)
        keys.setflags(write=False)
        return cls(float(rho), modes, keys)

    def __len__(self):
        return len(self.modes)

    @property
    def index(self):
        return {(int(a), int(b)): i for i, (a, b) in enumerate(self.modes)}

    def lookup(self, modes):
        """Positions of ``modes`` in the lattice, ``-1`` where absent."""
        keys = _keys(modes)
        pos = np.searchsorted(self._keys, keys)
        pos = np.minimum(pos, len(self._keys) - 1)
        found = self._keys[pos] == keys
        return np.where(found, pos, -1)

    def contains(self, modes):
        return self.lookup(modes) >= 0

    def to_dict(self):
        return {"rho": self.rho, "modes": self.modes.tolist()}


def lattice(rho):
    """All integer modes with ``n1^2 + n2^2 <= rho^2``, in lexicographic order."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    r = int(np.floor(rho + 1e-9))
    a, b = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    keep = a * a + b * b <= rho * rho + 1e-9
    return TruncationLattice.from_modes(np.stack([a[keep], b[keep]], axis=1), rho)


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    matrix: np.ndarray
    domain: TruncationLattice
    codomain: TruncationLattice
    factor: int = 1

    def __post_init__(self):
        expected = (self.factor * len(self.codomain), self.factor * len(self.domain))
        if self.matrix.shape != expected:
            raise ShapeMismatch(f"matrix shape {self.matrix.shape} != {expected}")


def term_matrix(func, shift, dom, codom):
    """Matrix of multiplication by ``func(t_var) * e^{i shift t_other}`` between lattices.

    Entry ``(k, l)`` is ``c_{k_v - l_v}`` in the function's variable with the
    other index shifted by ``shift``.
    """
    out = np.zeros((len(codom), len(dom)), dtype=complex)
    if len(dom) == 0 or len(codom) == 0:
        return out
    freqs = func.frequencies
    nz = np.nonzero(func.coeffs)[0]
    if len(nz) == 0:
        return out
    freqs, vals = freqs[nz], func.coeffs[nz]
    v = func.variable - 1
    targets = np.repeat(dom.modes[:, None, :], len(freqs), axis=1).copy()
    targets[:, :, v] += freqs[None, :]
    targets[:, :, 1 - v] += shift
    rows = codom.lookup(targets.reshape(-1, 2)).reshape(len(dom), len(freqs))
    cols = np.broadcast_to(np.arange(len(dom))[:, None], rows.shape)
    hit = rows >= 0
    np.add.at(out, (rows[hit], cols[hit]), np.broadcast_to(vals[None, :], rows.shape)[hit])
    return out


def mult_operator(func, dom, codom=None):
    codom = dom if codom is None else codom
    return TruncatedOperator(term_matrix(func, 0, dom, codom), dom, codom)


def symbol_operator(symbol, dom, codom=None):
    """Block matrix ``[[S11, S12], [S21, S22]]`` of a 2x2 symbol between lattices."""
    codom = dom if codom is None else codom
    blocks = [[sum(term_matrix(phi, s, dom, codom) for phi, s in symbol.entries[a][b]) for b in range(2)] for a in range(2)]
    return TruncatedOperator(np.block(blocks), dom, codom, factor=2)


def dirac_block(lat):
    """``D0 = i d/dt1 + d/dt2``: diagonal with entry ``-n1 + i n2``."""
    diag = -lat.modes[:, 0] + 1j * lat.modes[:, 1]
    return TruncatedOperator(np.diag(diag.astype(complex)), lat, lat)


def dirac_operator(lat):
    """Full ``D = [[0, D0], [D0*, 0]]`` on the spinor lattice."""
    d0 = dirac_block(lat).matrix
    z = np.zeros_like(d0)
    return TruncatedOperator(np.block([[z, d0], [d0.conj().T, z]]), lat, lat, factor=2)


def band_modes(lat, pad, bandwidth, shift):
    """Modes of the padded lattice outside ``lat`` reachable by a symbol.

    A symbol of bandwidth ``bandwidth`` in ``t1`` and ``|shift| <= shift`` in
    ``t2`` maps the ``rho``-lattice into the box
    ``|k1| <= r + bandwidth``, ``|k2| <= r + shift``; all other rows of the
    commutator with the truncation projection vanish identically.
    """
    r = int(np.floor(lat.rho + 1e-9))
    R = lat.rho + pad
    a, b = np.meshgrid(
        np.arange(-r - bandwidth, r + bandwidth + 1),
        np.arange(-r - shift, r + shift + 1),
        indexing="ij",
    )
    modes = np.stack([a.ravel(), b.ravel()], axis=1)
    inside_pad = modes[:, 0] ** 2 + modes[:, 1] ** 2 <= R * R + 1e-9
    modes = modes[inside_pad & ~lat.contains(modes)]
    return TruncationLattice.from_modes(modes)


def commutator_norm_with_truncation(symbol, lat, pad):
    """``||[P_rho, Y]||`` computed on the padded lattice of radius ``rho + pad``.

    With ``P`` the truncation projection, ``[P, Y] = P Y (1-P) - (1-P) Y P``
    and the two pieces are adjoint maps between orthogonal subspaces, so the
    norm equals ``||(1-P) Y P||``.
    """
    outside = band_modes(lat, pad, symbol.bandwidth, symbol.max_shift)
    block = symbol_operator(symbol, lat, outside).matrix
    return hc.operator_norm(block)


def commutator_matrix(symbol, lat, pad):
    """Dense ``[P_rho, Y]`` on the full padded lattice (small cases only)."""
    big = lattice(lat.rho + pad)
    y = symbol_operator(symbol, big).matrix
    inside = np.tile(lat.contains(big.modes), 2).astype(float)
    return inside[:, None] * y - y * inside[None, :], big


def compressed_Y(m, rho, profile=None, pad=None):
    """``x = P_rho Y P_rho`` as a form, with ``delta = ||[P_rho, Y]||``."""
    profile = profile or default_profile()
    symbol = involution_symbol(m, profile)
    needed = profile.bandwidth + abs(m)
    pad = needed if pad is None else pad
    if pad < needed:
        raise PadTooSmall(f"pad {pad} < bandwidth + |m| = {needed}")
    lat = lattice(rho)
    x = hc.make_form(symbol_operator(symbol, lat).matrix)
    delta = commutator_norm_with_truncation(symbol, lat, pad)
    return x, delta


def winding_number(values):
    """Winding number around 0 of a closed curve given by samples on ``[0, 2 pi)``."""
    values = np.asarray(values, dtype=complex)
    steps = np.angle(np.roll(values, -1) / values)
    return int(round(float(np.sum(steps)) / (2 * np.pi)))


def dump_operators(path, m, rho, profile=None, pad=None):
    """Write ``x``, ``D0`` and the lattice to ``path`` as JSON."""
    x, delta = compressed_Y(m, rho, profile, pad)
    lat = lattice(rho)
    obj = {
        "m": m,
        "rho": rho,
        "delta": delta,
        "lattice": lat.to_dict(),
        "x": matrix_to_dict(x.data),
        "D0": matrix_to_dict(dirac_block(lat).matrix),
    }
    with open(path, "w") as fh:
        json.dump(obj, fh)
