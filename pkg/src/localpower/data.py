"""Data ingestion, synthetic matrices and row partitioning."""
import gzip
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidParameter, ParseError, TooManyShards, ZeroMatrix
from .linalg_core import gram, spectral_norm

_GZIP_MAGIC = b"\x1f\x8b"


def parse_libsvm(text, expected_dim=None):
    """Parse LIBSVM ``<label> <idx>:<val> ...`` lines into a dense matrix.

    Labels are read and dropped.  Indices are 1-based and must strictly
    increase within a line.
    """
    if isinstance(text, (bytes, bytearray)):
        text = bytes(text).decode("utf-8")
    rows = []
    width = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            float(tokens[0])
        except ValueError:
            if ":" in tokens[0]:
                raise ParseError("MalformedToken", lineno, f"missing label before {tokens[0]!r}") from None
            raise ParseError("MalformedToken", lineno, f"bad label {tokens[0]!r}") from None
        idx = []
        vals = []
        last = 0
        for tok in tokens[1:]:
            key, sep, val = tok.partition(":")
            if not sep:
                raise ParseError("MalformedToken", lineno, repr(tok))
            try:
                j = int(key)
                x = float(val)
            except ValueError:
                raise ParseError("MalformedToken", lineno, repr(tok)) from None
            if j < 1:
                raise ParseError("MalformedToken", lineno, f"index {j} is not 1-based")
            if not math.isfinite(x):
                raise ParseError("MalformedToken", lineno, f"non-finite value in {tok!r}")
            if j <= last:
                raise ParseError("NonIncreasingIndex", lineno, f"{j} after {last}")
            if expected_dim is not None and j > expected_dim:
                raise ParseError("IndexOutOfRange", lineno, f"{j} > expected_dim={expected_dim}")
            last = j
            idx.append(j - 1)
            vals.append(x)
        width = max(width, last)
        rows.append((idx, vals))
    if not rows:
        raise ParseError("EmptyInput")
    d = max(width, expected_dim or 0)
    if d == 0:
        raise ParseError("EmptyInput", 0, "no features present")
    A = np.zeros((len(rows), d))
    for i, (idx, vals) in enumerate(rows):
        A[i, idx] = vals
    return A


def load_libsvm(path, expected_dim=None):
    """Read a LIBSVM file from disk, transparently un-gzipping it."""
    raw = Path(path).read_bytes()
    if raw[:2] == _GZIP_MAGIC:
        raw = gzip.decompress(raw)
    return parse_libsvm(raw, expected_dim)


def to_libsvm(A, labels=None):
    """Serialise a dense matrix back to LIBSVM text (zeros omitted)."""
    A = np.asarray(A, dtype=np.float64)
    buf = io.StringIO()
    for i, row in enumerate(A):
        label = 0 if labels is None else labels[i]
        nz = np.flatnonzero(row)
        feats = " ".join(f"{j + 1}:{float(row[j])!r}" for j in nz)
        buf.write(f"{label} {feats}".rstrip() + "\n")
    return buf.getvalue()


@dataclass(frozen=True)
class SpectrumSpec:
    sigmas: tuple
    n: int
    seed: int = 0

    def __post_init__(self):
        s = np.asarray(self.sigmas, dtype=np.float64)
        if s.ndim != 1 or s.size == 0:
            raise InvalidParameter("sigmas must be a nonempty sequence")
        if np.any(s < 0) or np.any(np.diff(s) > 0):
            raise InvalidParameter("sigmas must be nonnegative and non-increasing")
        if self.n < s.size:
            raise InvalidParameter(f"n={self.n} must be at least d={s.size}")
        object.__setattr__(self, "sigmas", tuple(float(x) for x in s))


def geometric_sigmas(d, ratio, top=1.0):
    return tuple(top * ratio**j for j in range(d))


def _haar_columns(rng, rows, cols):
    Q, R = np.linalg.qr(rng.standard_normal((rows, cols)))
    return Q * np.sign(np.diagonal(R))


def synthetic_spectrum(spec):
    """Matrix ``A = U diag(sqrt(n sigma)) V^T`` whose Gram has spectrum ``sigmas``."""
    rng = np.random.default_rng(spec.seed)
    s = np.asarray(spec.sigmas)
    d = s.size
    U = _haar_columns(rng, spec.n, d)
    V = _haar_columns(rng, d, d)
    return (U * np.sqrt(spec.n * s)) @ V.T


@dataclass(frozen=True, eq=False)
class Partition:
    """Row shards of ``A`` with their local and global Gram matrices.

    ``global_gram`` is computed from the shuffled row order, so it is
    exactly the matrix the shards reconstruct.
    """

    shards: tuple
    sizes: tuple
    weights: np.ndarray
    local_grams: np.ndarray
    global_gram: np.ndarray
    order: np.ndarray = field(repr=False)

    @property
    def m(self):
        return len(self.shards)

    @property
    def d(self):
        return self.global_gram.shape[0]

    @property
    def n(self):
        return int(sum(self.sizes))


def shard_sizes(n, m):
    base, extra = divmod(n, m)
    return tuple(base + 1 if i < extra else base for i in range(m))


def partition_rows(A, sizes, order=None):
    """Build a :class:`Partition` from explicit shard sizes (and row order)."""
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    if order is None:
        order = np.arange(n)
    if sum(sizes) != n or min(sizes) < 1:
        raise InvalidParameter(f"shard sizes {sizes} do not tile {n} rows")
    shuffled = A[order]
    bounds = np.cumsum((0,) + tuple(sizes))
    shards = tuple(shuffled[bounds[i]:bounds[i + 1]] for i in range(len(sizes)))
    local = np.stack([gram(S) for S in shards])
    weights = np.asarray(sizes, dtype=np.float64) / n
    return Partition(
        shards=shards,
        sizes=tuple(int(s) for s in sizes),
        weights=weights,
        local_grams=local,
        global_gram=gram(shuffled),
        order=np.asarray(order),
    )


def partition_uniform(A, m, seed):
    """Shuffle rows with a seeded permutation, then split into ``m`` balanced shards."""
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    if m < 1:
        raise InvalidParameter("m must be >= 1")
    if m > n:
        raise TooManyShards(f"m={m} exceeds n={n}")
    order = np.random.default_rng(seed).permutation(n)
    return partition_rows(A, shard_sizes(n, m), order)


def measured_eta(P):
    """Smallest ``eta`` with ``||M - M_i|| <= eta ||M||`` for every shard."""
    top = spectral_norm(P.global_gram)
    if top == 0.0:
        raise ZeroMatrix("global Gram is zero")
    return max(spectral_norm(P.global_gram - Mi) for Mi in P.local_grams) / top


def _ceil(x):
    # absorb float noise so that exact integers do not round up
    return int(math.ceil(x * (1.0 - 1e-12)))


def local_size_real(eta, delta, rank, mu, m):
    if not (0 < eta < 1 and 0 < delta < 1 and rank >= 1 and mu >= 1 and m >= 1):
        raise InvalidParameter("need 0<eta<1, 0<delta<1, rank>=1, mu>=1, m>=1")
    return 3.0 * mu * rank / eta**2 * math.log(rank * m / delta)


def required_local_size(eta, delta, rank, mu, m):
    """Shard size sufficient for ``eta``-approximation w.p. ``1 - delta`` under uniform sampling."""
    return _ceil(local_size_real(eta, delta, rank, mu, m))
