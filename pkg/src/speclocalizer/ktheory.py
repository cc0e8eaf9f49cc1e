"""Homotopy-class labels and K_0 for direct sums of matrix algebras.

For ``E = M_{k_1} ⊕ ... ⊕ M_{k_r}`` a hermitian form over ``M_n(E)`` is a
block-diagonal invertible matrix with blocks of size ``n k_i``. Its class is
labelled by the negative index of inertia of each block. That label is
unchanged by adding copies of the order unit, so it is also the label of the
class in the direct limit, and K_0 is the group of integer differences.
"""

from dataclasses import dataclass
from itertools import accumulate

import numpy as np

from . import hermitian as hc
from .errors import ShapeMismatch, SignatureMismatch


@dataclass(frozen=True)
class SystemDescriptor:
    block_sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(k) for k in self.block_sizes)
        if not sizes or any(k < 1 for k in sizes):
            raise ShapeMismatch(f"block sizes must be a non-empty list of positive integers, got {sizes}")
        object.__setattr__(self, "block_sizes", sizes)

    @property
    def rank(self):
        return len(self.block_sizes)

    @property
    def dim(self):
        return sum(self.block_sizes)

    def offsets(self, n):
        """Start offsets of each block in ``M_n(E)``, plus the total size."""
        return (0,) + tuple(accumulate(n * k for k in self.block_sizes))


@dataclass(frozen=True)
class VClassLabel:
    blocks: tuple
    n: int
    inertia: tuple

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(int(k) for k in self.blocks))
        object.__setattr__(self, "inertia", tuple(int(v) for v in self.inertia))
        if len(self.inertia) != len(self.blocks):
            raise ShapeMismatch(f"{len(self.blocks)} blocks but {len(self.inertia)} inertia entries")
        for k, rho in zip(self.blocks, self.inertia):
            if not 0 <= rho <= self.n * k:
                raise ShapeMismatch(f"inertia {rho} outside [0, {self.n * k}] for block size {k} at n={self.n}")

    @property
    def signatures(self):
        return tuple(self.n * k - 2 * rho for k, rho in zip(self.blocks, self.inertia))

    def to_dict(self):
        return {"blocks": list(self.blocks), "n": self.n, "inertia": list(self.inertia)}

    @classmethod
    def from_dict(cls, obj):
        return cls(tuple(obj["blocks"]), int(obj["n"]), tuple(obj["inertia"]))


def zero_label(desc, n):
    """Label of the order unit ``e_n``."""
    return VClassLabel(desc.block_sizes, n, (0,) * desc.rank)


@dataclass(frozen=True)
class K0Element:
    plus: tuple
    minus: tuple

    def __post_init__(self):
        if len(self.plus) != len(self.minus):
            raise ShapeMismatch("plus and minus have different lengths")
        object.__setattr__(self, "plus", tuple(int(v) for v in self.plus))
        object.__setattr__(self, "minus", tuple(int(v) for v in self.minus))

    @property
    def canonical(self):
        return tuple(a - b for a, b in zip(self.plus, self.minus))

    def __eq__(self, other):
        if not isinstance(other, K0Element):
            return NotImplemented
        return self.canonical == other.canonical

    def __hash__(self):
        return hash(self.canonical)

    def _check(self, other):
        if len(other.plus) != len(self.plus):
            raise ShapeMismatch("K0 elements of different rank")

    def __add__(self, other):
        self._check(other)
        return K0Element(
            tuple(a + b for a, b in zip(self.plus, other.plus)),
            tuple(a + b for a, b in zip(self.minus, other.minus)),
        )

    def __neg__(self):
        return K0Element(self.minus, self.plus)

    def __sub__(self, other):
        return self + (-other)

    @classmethod
    def zero(cls, rank):
        return cls((0,) * rank, (0,) * rank)

    @classmethod
    def from_canonical(cls, values):
        values = tuple(int(v) for v in values)
        return cls(tuple(max(v, 0) for v in values), tuple(max(-v, 0) for v in values))

    def to_dict(self):
        return {"canonical": list(self.canonical)}


def classify(desc, x, n=None, atol=1e-12):
    """Label of a block-diagonal hermitian form over ``M_n(E)``.

    ``n`` is inferred from the matrix size when omitted. Entries outside the
    diagonal blocks must vanish (up to ``atol * ||x||``).
    """
    form = x if isinstance(x, hc.HermitianForm) else hc.make_form(x)
    size = form.n
    if n is None:
        if size % desc.dim:
            raise ShapeMismatch(f"size {size} is not a multiple of dim(E) = {desc.dim}")
        n = size // desc.dim
    offsets = desc.offsets(n)
    if offsets[-1] != size:
        raise ShapeMismatch(f"expected size {offsets[-1]} for n={n}, blocks {desc.block_sizes}; got {size}")
    a = form.data
    mask = np.ones(a.shape, dtype=bool)
    for lo, hi in zip(offsets[:-1], offsets[1:]):
        mask[lo:hi, lo:hi] = False
    if mask.any() and np.max(np.abs(a[mask])) > atol * max(form.norm, 1.0):
        raise ShapeMismatch("form is not block diagonal with respect to the descriptor")
    inertia = []
    for lo, hi in zip(offsets[:-1], offsets[1:]):
        evals = np.linalg.eigvalsh(a[lo:hi, lo:hi])
        inertia.append(int(np.count_nonzero(evals < 0)))
    return VClassLabel(desc.block_sizes, n, tuple(inertia))


def iota(label, m):
    """Image of a class under ``[x]_n -> [x ⊕ e_{m-n}]_m``."""
    if m < label.n:
        raise ValueError(f"iota needs m >= n, got m={m} < n={label.n}")
    return VClassLabel(label.blocks, m, label.inertia)


def add(a, b):
    """Direct-sum addition of classes."""
    if a.blocks != b.blocks:
        raise ShapeMismatch(f"labels over different systems: {a.blocks} vs {b.blocks}")
    return VClassLabel(a.blocks, a.n + b.n, tuple(p + q for p, q in zip(a.inertia, b.inertia)))


def grothendieck(a, b):
    """The formal difference ``[a] - [b]`` in K_0."""
    if a.blocks != b.blocks:
        raise ShapeMismatch(f"labels over different systems: {a.blocks} vs {b.blocks}")
    return K0Element(a.inertia, b.inertia)


def block_diagonal_form(desc, blocks):
    """Assemble a form over ``M_n(E)`` from one Hermitian block per summand."""
    mats = [np.asarray(b, dtype=complex) for b in blocks]
    if len(mats) != desc.rank:
        raise ShapeMismatch(f"expected {desc.rank} blocks, got {len(mats)}")
    n = mats[0].shape[0] // desc.block_sizes[0]
    offsets = desc.offsets(n)
    out = np.zeros((offsets[-1], offsets[-1]), dtype=complex)
    for mat, lo, hi in zip(mats, offsets[:-1], offsets[1:]):
        if mat.shape != (hi - lo, hi - lo):
            raise ShapeMismatch(f"block has shape {mat.shape}, expected {(hi - lo, hi - lo)}")
        out[lo:hi, lo:hi] = mat
    return hc.make_form(out)


def direct_sum_over(desc, x, y):
    """Direct sum in ``M_{n+n'}(E)``, keeping the block-diagonal layout of ``E``."""
    nx, ny = x.n // desc.dim, y.n // desc.dim
    ox, oy = desc.offsets(nx), desc.offsets(ny)
    blocks = []
    for i in range(desc.rank):
        bx = x.data[ox[i]:ox[i + 1], ox[i]:ox[i + 1]]
        by = y.data[oy[i]:oy[i + 1], oy[i]:oy[i + 1]]
        b = np.zeros((bx.shape[0] + by.shape[0],) * 2, dtype=complex)
        b[: bx.shape[0], : bx.shape[0]] = bx
        b[bx.shape[0]:, bx.shape[0]:] = by
        blocks.append(b)
    return block_diagonal_form(desc, blocks)


def unit_padding(desc, x, m):
    """``x ⊕ e_{m-n}`` over ``M_m(E)``."""
    n = x.n // desc.dim
    if m < n:
        raise ValueError(f"need m >= n, got m={m} < n={n}")
    unit = hc.make_form(np.eye((m - n) * desc.dim)) if m > n else None
    return x if unit is None else direct_sum_over(desc, x, unit)


# -- stabilization shuffle -------------------------------------------------


@dataclass(frozen=True, eq=False)
class Shuffle:
    """Result of the stabilization map ``M_n(M_N(E)) -> M_n(M_M(E))``.

    ``image[perm][:, perm] == padded`` holds entrywise, where ``padded`` is
    ``x ⊕ e_{n(M-N)}`` in the ``M_M(M_n(E))`` ordering.
    """

    perm: np.ndarray
    padded: np.ndarray
    image: np.ndarray

    def permutation_matrix(self):
        size = len(self.perm)
        u = np.zeros((size, size))
        u[np.arange(size), self.perm] = 1.0
        return u

    def unshuffle(self):
        return self.image[np.ix_(self.perm, self.perm)]


def shuffle_permutation(n, N, M, d=1):
    """Index map ``perm`` with ``perm[i]`` the position in ``M_n(M_M(E))`` of the
    ``i``-th basis vector of the ordering ``(x block, then unit block)``."""
    if not (1 <= N <= M) or n < 1 or d < 1:
        raise ShapeMismatch(f"need n >= 1, 1 <= N <= M and d >= 1; got n={n}, N={N}, M={M}, d={d}")
    a, i, r = np.meshgrid(np.arange(n), np.arange(N), np.arange(d), indexing="ij")
    head = ((a * M + i) * d + r).ravel()
    a, j, r = np.meshgrid(np.arange(n), np.arange(N, M), np.arange(d), indexing="ij")
    tail = ((a * M + j) * d + r).ravel()
    return np.concatenate([head, tail])


def jmath_shuffle(x, N, M, unit=None):
    """Stabilization ``x -> v* (x ⊕ e_{M-N}) v`` for ``x`` in ``M_n(M_N(E))``.

    ``E = M_d`` with order unit ``unit`` (default the 1x1 identity). The
    permutation is applied by indexing only, so the result is exact.
    """
    x = np.asarray(x.data if hasattr(x, "data") else x)
    unit = np.eye(1) if unit is None else np.asarray(unit)
    d = unit.shape[0]
    if unit.shape != (d, d):
        raise ShapeMismatch("order unit must be square")
    if x.ndim != 2 or x.shape[0] != x.shape[1] or x.shape[0] % (N * d):
        raise ShapeMismatch(f"size {x.shape} is not a multiple of N*d = {N * d}")
    n = x.shape[0] // (N * d)
    extra = n * (M - N)
    padded = np.zeros((n * M * d,) * 2, dtype=np.result_type(x, unit))
    padded[: x.shape[0], : x.shape[0]] = x
    for b in range(extra):
        lo = x.shape[0] + b * d
        padded[lo:lo + d, lo:lo + d] = unit
    perm = shuffle_permutation(n, N, M, d)
    image = np.empty_like(padded)
    image[np.ix_(perm, perm)] = padded
    padded.setflags(write=False)
    image.setflags(write=False)
    return Shuffle(perm, padded, image)


# -- completeness of the signature over C -----------------------------------


def homotopy_chain(x, y, steps=None):
    """Certified homotopy between ``x ⊕ 1`` and ``y ⊕ 1`` for forms over ``C``.

    The chain diagonalizes each endpoint with a Whitehead path, slides the
    eigenvalues to ``±1`` along a diagonal path, and meets in the middle.
    Returns the list of certificates (the second half reversed in time).
    With ``steps=None`` each leg is sampled finely enough to certify.
    Raises :class:`SignatureMismatch` when no such homotopy can exist.
    """
    if x.n != y.n:
        raise ShapeMismatch(f"sizes differ: {x.n} vs {y.n}")
    if x.signature != y.signature:
        raise SignatureMismatch(f"signatures differ ({x.signature} vs {y.signature}); forms are not homotopic")
    return _to_sign_matrix(x, steps) + [_reverse(c) for c in reversed(_to_sign_matrix(y, steps))]


def _to_sign_matrix(x, steps):
    evals, vecs = np.linalg.eigh(x.data)
    order = np.argsort(evals)  # negative eigenvalues first
    u = vecs[:, order].conj().T
    u = _polish_unitary(u)
    n = x.n
    gap = min(x.gap, 1.0)
    norm = max(x.norm, 1.0)
    spread = max(float(evals.max()), 1.0) - min(float(evals.min()), 1.0)
    first = hc.whitehead_path(u, x, steps or hc.steps_needed(gap, np.pi * spread, norm))
    diag = np.concatenate([evals[order], np.ones(n)])
    target = np.sign(diag)
    lipschitz = float(np.max(np.abs(target - diag)))

    def slide(t):
        return np.diag((1 - t) * diag + t * target)

    second = hc.path_certificate(slide, lipschitz, steps or hc.steps_needed(gap, lipschitz, norm))
    return [first, second]


def _polish_unitary(u):
    # one Newton-Schulz step so that ||u u* - 1|| is at round-off level
    return 1.5 * u - 0.5 * u @ u.conj().T @ u


def _reverse(cert):
    samples = tuple(
        hc.PathSample(1.0 - s.t, s.form, s.gap_at_t) for s in reversed(cert.samples)
    )
    return hc.HomotopyCertificate(
        samples=samples,
        certified_gap=cert.certified_gap,
        certified=cert.certified,
        endpoints=(cert.endpoints[1], cert.endpoints[0]),
        lipschitz=cert.lipschitz,
    )
