"""Even spectral localizer, its signature index, and parameter sweeps.

For a form ``x`` of size ``n d`` and a Dirac block ``D0`` of size ``d`` the
localizer is

    L = [[x,            kappa D0^{⊕n}],
         [kappa D0*^{⊕n},  -x        ]].

Below ``kappa0 = gap(x)^2 / ||[D, x]||`` it is invertible and half its
signature does not depend on ``kappa``.
"""

from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import asdict, dataclass, field
import io
import json
import math
import os
import time
from typing import Optional
import warnings

import numpy as np

from . import hermitian as hc
from . import torus
from .errors import LocalizerError, OddSignature, PlateauBroken, ShapeMismatch, SingularLocalizer

SINGULAR_RTOL = 1e-6

CSV_COLUMNS = (
    "m",
    "rho",
    "kappa",
    "lattice_size",
    "gap",
    "delta",
    "comm_norm",
    "kappa0",
    "signature",
    "index",
    "min_abs_eig",
    "wall_time_ms",
)


class AboveThresholdWarning(UserWarning):
    """kappa is at or above kappa0, so invertibility is not guaranteed."""


def amplify(d0, size):
    """``D0^{⊕n}`` with ``n = size / dim(D0)``."""
    d0 = np.asarray(getattr(d0, "matrix", d0), dtype=complex)
    if d0.ndim != 2 or d0.shape[0] != d0.shape[1]:
        raise ShapeMismatch(f"D0 must be square, got shape {d0.shape}")
    d = d0.shape[0]
    if d == 0 or size % d:
        raise ShapeMismatch(f"form size {size} is not a multiple of dim(D0) = {d}")
    return np.kron(np.eye(size // d), d0)


@dataclass(frozen=True, eq=False)
class LocalizerInstance:
    x: hc.HermitianForm
    D0: np.ndarray
    kappa: float
    L: np.ndarray
    comm_norm: float
    g: float
    kappa0: float
    eigenvalues: np.ndarray

    @property
    def signature(self):
        return int(np.count_nonzero(self.eigenvalues > 0) - np.count_nonzero(self.eigenvalues < 0))

    @property
    def min_abs_eig(self):
        return float(np.min(np.abs(self.eigenvalues)))

    @property
    def norm(self):
        return float(np.max(np.abs(self.eigenvalues)))

    @property
    def min_square_eig(self):
        """Smallest eigenvalue of ``L^2``."""
        return self.min_abs_eig**2

    @property
    def square_bound(self):
        """Lower bound ``g^2 - kappa ||[D, x]||`` for the spectrum of ``L^2``."""
        return self.g**2 - self.kappa * self.comm_norm


def build_localizer(x, D0, kappa):
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    d0n = amplify(D0, x.n)
    comm_norm = hc.operator_norm(d0n @ x.data - x.data @ d0n)
    kappa0 = x.gap**2 / comm_norm if comm_norm > 0 else math.inf
    if kappa >= kappa0:
        warnings.warn(
            f"kappa = {kappa:g} >= kappa0 = {kappa0:.4g}; the localizer gap is not guaranteed",
            AboveThresholdWarning,
            stacklevel=2,
        )
    L = np.block([[x.data, kappa * d0n], [kappa * d0n.conj().T, -x.data]])
    L = 0.5 * (L + L.conj().T)
    evals = np.linalg.eigvalsh(L)
    for a in (d0n, L, evals):
        a.setflags(write=False)
    return LocalizerInstance(x, d0n, float(kappa), L, comm_norm, x.gap, kappa0, evals)


def localizer_index(inst, tol=None):
    """Half the signature of the localizer."""
    tol = SINGULAR_RTOL * inst.norm if tol is None else tol
    if inst.min_abs_eig <= tol:
        raise SingularLocalizer(
            f"min |eigenvalue| = {inst.min_abs_eig:.3e} <= tol = {tol:.3e}; try a smaller kappa "
            f"(kappa0 = {inst.kappa0:.4g})",
            min_abs_eig=inst.min_abs_eig,
        )
    sig = inst.signature
    if sig % 2:
        raise OddSignature(f"signature {sig} is odd; inconsistent dimensions")
    return sig // 2


def kappa_plateau(x, D0, kappas, tol=None):
    """Signatures along ``kappas``; must be constant on the part below ``kappa0``."""
    if list(kappas) != sorted(kappas):
        raise ValueError("kappas must be sorted ascending")
    out = []
    below = set()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AboveThresholdWarning)
        for kappa in kappas:
            inst = build_localizer(x, D0, kappa)
            localizer_index(inst, tol)
            out.append((float(kappa), inst.signature))
            if kappa < inst.kappa0:
                below.add(inst.signature)
    if len(below) > 1:
        raise PlateauBroken(f"signature not constant below kappa0: {sorted(below)}")
    return out


def additivity_check(x, x2, D0, kappa):
    """Whether ``Sig L(x ⊕ x2) = Sig L(x) + Sig L(x2)``."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AboveThresholdWarning)
        left = build_localizer(hc.direct_sum(x, x2), D0, kappa).signature
        right = build_localizer(x, D0, kappa).signature + build_localizer(x2, D0, kappa).signature
    return left == right


# -- torus pipeline and sweeps ------------------------------------------------------


@dataclass
class SweepRow:
    m: int
    rho: float
    kappa: float
    lattice_size: Optional[int] = None
    gap: Optional[float] = None
    delta: Optional[float] = None
    comm_norm: Optional[float] = None
    kappa0: Optional[float] = None
    signature: Optional[int] = None
    index: Optional[int] = None
    min_abs_eig: Optional[float] = None
    wall_time_ms: Optional[float] = None
    error: Optional[str] = None
    spectrum: Optional[np.ndarray] = field(default=None, repr=False)

    def as_dict(self):
        d = asdict(self)
        d.pop("spectrum")
        return d


def torus_localizer(m, rho, kappa, profile=None, pad=None):
    """Localizer of the compressed involution on the ``rho``-lattice."""
    x, delta = torus.compressed_Y(m, rho, profile, pad)
    lat = torus.lattice(rho)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AboveThresholdWarning)
        inst = build_localizer(x, torus.dirac_block(lat).matrix, kappa)
    return inst, delta, lat


def torus_row(m, rho, kappa, profile=None, pad=None, rtol=SINGULAR_RTOL):
    """One sweep row. Computation errors are recorded in ``error``, not raised."""
    row = SweepRow(int(m), float(rho), float(kappa))
    start = time.perf_counter()
    try:
        inst, delta, lat = torus_localizer(m, rho, kappa, profile, pad)
        row.lattice_size = len(lat)
        row.gap = inst.g
        row.delta = delta
        row.comm_norm = inst.comm_norm
        row.kappa0 = inst.kappa0
        row.signature = inst.signature
        row.min_abs_eig = inst.min_abs_eig
        row.spectrum = inst.eigenvalues
        row.index = localizer_index(inst, rtol * inst.norm)
    except (LocalizerError, ValueError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    row.wall_time_ms = 1e3 * (time.perf_counter() - start)
    return row


def default_threads():
    try:
        return max(1, int(os.environ.get("LOCALIZER_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class SweepReport:
    rows: list

    @property
    def has_errors(self):
        return any(r.error for r in self.rows)

    def columns(self):
        return CSV_COLUMNS + (("error",) if self.has_errors else ())

    def to_csv(self, header=True):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = self.columns()
        if header:
            writer.writerow(cols)
        for row in self.rows:
            d = row.as_dict()
            writer.writerow([_fmt(d[c]) for c in cols])
        return buf.getvalue()

    def to_json(self):
        return json.dumps([{c: r.as_dict()[c] for c in self.columns()} for r in self.rows], indent=2)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def sweep(params, profile=None, bandwidth=torus.DEFAULT_BANDWIDTH, pad=None, threads=None, rtol=SINGULAR_RTOL):
    """Evaluate ``(m, rho, kappa)`` triples; rows keep the input order."""
    profile = profile or torus.default_profile(bandwidth)
    threads = threads or default_threads()
    params = [tuple(p) for p in params]

    def work(p):
        m, rho, kappa = p
        return torus_row(m, rho, kappa, profile, pad, rtol)

    if threads == 1 or len(params) <= 1:
        rows = [work(p) for p in params]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(work, params))
    return SweepReport(rows)


def write_spectrum(path, eigenvalues):
    with open(path, "w") as fh:
        for v in np.sort(np.asarray(eigenvalues)):
            fh.write(f"{float(v)!r}\n")
