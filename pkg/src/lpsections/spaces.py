"""Quasi-normed spaces, discrete measures, block hyperplanes and samplers.

All norms are vectorized over leading axes: ``space.norm(x)`` accepts an array
of shape ``(..., space.dim)`` and returns shape ``(...)``.

Vectors of ``(R^m)^n`` are stored block-major, i.e. coordinate ``a`` of block
``i`` lives at flat index ``i * m + a``.
"""

import math
import re
from dataclasses import dataclass, field

import numpy as np

from ._validation import (
    UNIT_TOL,
    check_count,
    check_invertible,
    check_orthonormal,
    check_positive,
    check_unit_vector,
    check_vector,
)


# --------------------------------------------------------------------------
# discrete measures

@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Atoms ``(c_j, u_j)``: positive weights on unit directions spanning R^m."""

    weights: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        u = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if u.shape[0] != w.shape[0]:
            raise ValueError(f"{w.shape[0]} weights but {u.shape[0]} directions")
        if w.size == 0:
            raise ValueError("a measure needs at least one atom")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("all weights must be positive and finite")
        lengths = np.linalg.norm(u, axis=1)
        bad = np.abs(lengths - 1.0) > UNIT_TOL
        if np.any(bad):
            j = int(np.argmax(bad))
            raise ValueError(f"direction {j} is not a unit vector (norm {lengths[j]!r})")
        gram = (u * w[:, None]).T @ u
        if np.linalg.matrix_rank(gram) < u.shape[1]:
            raise ValueError("atoms do not span R^m")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "directions", u)

    @property
    def m(self):
        return self.directions.shape[1]

    def __len__(self):
        return self.weights.shape[0]

    def gram(self):
        """``sum_j c_j u_j u_j^T``."""
        u = self.directions
        return (u * self.weights[:, None]).T @ u

    def as_array(self):
        return np.column_stack([self.weights, self.directions])

    @classmethod
    def from_array(cls, rows):
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.shape[1] < 2:
            raise ValueError("each atom row needs a weight and at least one coordinate")
        return cls(rows[:, 0], rows[:, 1:])

    @classmethod
    def read(cls, path):
        rows = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                text = line.strip()
                if not text or text.startswith("#"):
                    continue
                try:
                    rows.append([float(tok) for tok in text.split()])
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: malformed number ({exc})") from None
        if not rows:
            raise ValueError(f"{path}: no atoms found")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise ValueError(f"{path}: atoms have inconsistent dimensions {sorted(widths)}")
        return cls.from_array(rows)

    def write(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# weight direction...\n")
            for row in self.as_array():
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")


# --------------------------------------------------------------------------
# spaces

class Space:
    """Base class; subclasses define ``dim``, ``norm`` and ``is_convex``."""

    dim: int

    def norm(self, x):
        raise NotImplementedError

    @property
    def is_convex(self):
        raise NotImplementedError

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise ValueError(f"vector dimension {x.shape[-1:]} does not match space dimension {self.dim}")
        return self.norm(x)


def _lp_combine(values, p):
    if math.isinf(p):
        return np.max(values, axis=-1)
    if p == 1:
        return np.sum(values, axis=-1)
    if p == 2:
        return np.sqrt(np.sum(values * values, axis=-1))
    return np.sum(values**p, axis=-1) ** (1.0 / p)


@dataclass(frozen=True, eq=False)
class LpDiscrete(Space):
    """``||x|| = (sum_j c_j |<x, u_j>|^p)^(1/p)``."""

    p: float
    measure: DiscreteMeasure

    def __post_init__(self):
        check_positive(self.p, "p")

    @property
    def dim(self):
        return self.measure.m

    def norm(self, x):
        proj = np.abs(np.asarray(x) @ self.measure.directions.T)
        return np.sum(self.measure.weights * proj**self.p, axis=-1) ** (1.0 / self.p)

    @property
    def is_convex(self):
        return self.p >= 1

    def __str__(self):
        return f"measure({len(self.measure)} atoms in R^{self.dim}),p={self.p:g}"


@dataclass(frozen=True)
class LqBall(Space):
    """The ``l_q^m`` quasi-norm, ``q`` in ``(0, inf]``."""

    q: float
    m: int

    def __post_init__(self):
        check_positive(self.q, "q", allow_inf=True)
        check_count(self.m, "m")

    @property
    def dim(self):
        return self.m

    def norm(self, x):
        return _lp_combine(np.abs(np.asarray(x)), self.q)

    @property
    def is_convex(self):
        return self.q >= 1

    def __str__(self):
        return f"lq:q={self.q:g},m={self.m}"


@dataclass(frozen=True)
class Euclidean(Space):
    m: int

    def __post_init__(self):
        check_count(self.m, "m")

    @property
    def dim(self):
        return self.m

    def norm(self, x):
        return np.linalg.norm(np.asarray(x), axis=-1)

    is_convex = True

    def __str__(self):
        return f"euclid:m={self.m}"


@dataclass(frozen=True, eq=False)
class DirectSumL1(Space):
    """``||(a, b)|| = ||a||_left + ||b||_right``."""

    left: Space
    right: Space

    @property
    def dim(self):
        return self.left.dim + self.right.dim

    def norm(self, x):
        x = np.asarray(x)
        k = self.left.dim
        return self.left.norm(x[..., :k]) + self.right.norm(x[..., k:])

    @property
    def is_convex(self):
        return self.left.is_convex and self.right.is_convex

    def __str__(self):
        return f"dsum({self.left};{self.right})"


@dataclass(frozen=True, eq=False)
class LpPower(Space):
    """The ``l_p^n`` power of ``inner``: ``(sum_i ||x_i||^p)^(1/p)``, max for ``p = inf``."""

    p: float
    n: int
    inner: Space

    def __post_init__(self):
        check_positive(self.p, "p", allow_inf=True)
        check_count(self.n, "n")

    @property
    def dim(self):
        return self.n * self.inner.dim

    def block_norms(self, x):
        x = np.asarray(x)
        blocks = x.reshape(x.shape[:-1] + (self.n, self.inner.dim))
        return self.inner.norm(blocks)

    def norm(self, x):
        return _lp_combine(self.block_norms(x), self.p)

    @property
    def is_convex(self):
        return self.p >= 1 and self.inner.is_convex

    def __str__(self):
        p = "inf" if math.isinf(self.p) else f"{self.p:g}"
        return f"power:p={p},n={self.n}({self.inner})"


@dataclass(frozen=True, eq=False)
class LinearImage(Space):
    """The space ``TX`` whose norm is ``y -> ||T^{-1} y||_X``; its unit ball is ``T(B_X)``."""

    inner: Space
    T: np.ndarray
    T_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        T = check_invertible(self.T, dim=self.inner.dim)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "T_inv", np.linalg.inv(T))

    @property
    def dim(self):
        return self.inner.dim

    def norm(self, x):
        return self.inner.norm(np.asarray(x) @ self.T_inv.T)

    @property
    def is_convex(self):
        return self.inner.is_convex

    def __str__(self):
        return f"image({self.inner})"


def norm_eval(space, x):
    """Norm of a single vector (or a batch), with a dimension check."""
    return space(x)


def in_lewis_position(space, p, tol=1e-8):
    """Whether the norm of ``space`` is ``||.||_{p,mu}`` for an isotropic ``mu`` (up to scaling)."""
    if isinstance(space, Euclidean):
        return True
    if isinstance(space, LqBall):
        return space.m == 1 or space.q == 2 or space.q == p
    if isinstance(space, LpDiscrete):
        if space.p != p:
            return False
        return np.linalg.norm(space.measure.gram() - np.eye(space.dim)) < tol
    return False


# --------------------------------------------------------------------------
# space-spec grammar:
#   lq:q=<r>,m=<int> | euclid:m=<int> | measure:<path>,p=<r>
#   | dsum(<spec>;<spec>) | power:p=<r>,n=<int>(<spec>)

def _parse_real(text, what):
    text = text.strip()
    if text in ("inf", "Inf", "infinity"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"malformed number for {what}: {text!r}") from None


def _parse_int(text, what):
    try:
        return int(text.strip())
    except ValueError:
        raise ValueError(f"malformed integer for {what}: {text!r}") from None


def _keyvals(text, keys, spec):
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise ValueError(f"expected key=value in {spec!r}, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v
    if set(out) != set(keys):
        raise ValueError(f"{spec!r}: expected keys {sorted(keys)}, got {sorted(out)}")
    return out


def _split_top(text, sep):
    depth, parts, start = 0, [], 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == sep and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return parts


def parse_space(spec):
    """Parse the space mini-grammar into a :class:`Space`."""
    s = spec.strip()
    if s.startswith("lq:"):
        kv = _keyvals(s[3:], {"q", "m"}, spec)
        return LqBall(_parse_real(kv["q"], "q"), _parse_int(kv["m"], "m"))
    if s.startswith("euclid:"):
        kv = _keyvals(s[7:], {"m"}, spec)
        return Euclidean(_parse_int(kv["m"], "m"))
    if s.startswith("measure:"):
        path, _, rest = s[8:].rpartition(",")
        kv = _keyvals(rest, {"p"}, spec)
        if not path:
            raise ValueError(f"{spec!r}: missing measure file path")
        return LpDiscrete(_parse_real(kv["p"], "p"), DiscreteMeasure.read(path))
    if s.startswith("dsum(") and s.endswith(")"):
        parts = _split_top(s[5:-1], ";")
        if len(parts) != 2:
            raise ValueError(f"{spec!r}: dsum takes exactly two specs")
        return DirectSumL1(parse_space(parts[0]), parse_space(parts[1]))
    m = re.fullmatch(r"power:([^()]*)\((.*)\)", s)
    if m:
        kv = _keyvals(m.group(1), {"p", "n"}, spec)
        return LpPower(_parse_real(kv["p"], "p"), _parse_int(kv["n"], "n"), parse_space(m.group(2)))
    raise ValueError(f"unrecognized space spec {spec!r}")


# --------------------------------------------------------------------------
# majorization

def majorizes(a, b, tol=1e-12):
    """True iff ``a`` is majorized by ``b`` (``a`` precedes ``b``)."""
    a = check_vector(a, "a")
    b = check_vector(b, "b", dim=a.shape[0])
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("weight vectors must be nonnegative")
    sa = np.cumsum(np.sort(a)[::-1])
    sb = np.cumsum(np.sort(b)[::-1])
    if abs(sa[-1] - sb[-1]) > tol:
        return False
    return bool(np.all(sa[:-1] <= sb[:-1] + tol))


def majorization_chain(n, steps):
    """Unit vectors from the diagonal to ``e_1`` with increasing squared weights.

    The squared weights interpolate linearly between ``(1/n, ..., 1/n)`` and
    ``(1, 0, ..., 0)``, which is monotone in the majorization order.
    """
    n = check_count(n, "n", minimum=2)
    steps = check_count(steps, "steps")
    flat = np.full(n, 1.0 / n)
    top = np.zeros(n)
    top[0] = 1.0
    chain = []
    for k in range(steps + 1):
        t = k / steps
        w = (1 - t) * flat + t * top
        theta = np.sqrt(w)
        chain.append(theta / np.linalg.norm(theta))
    chain[0] = np.full(n, 1.0 / math.sqrt(n))
    chain[-1] = top.copy()
    return chain


def is_chain(thetas):
    return all(majorizes(a**2, b**2, tol=1e-10) for a, b in zip(thetas, thetas[1:]))


def resolve_theta(theta, n):
    """``'diag'``, ``'e1'`` or an explicit vector; explicit vectors must already be unit."""
    if isinstance(theta, str):
        if theta == "diag":
            return np.full(n, 1.0 / math.sqrt(n))
        if theta == "e1":
            e = np.zeros(n)
            e[0] = 1.0
            return e
        raise ValueError(f"unknown theta keyword {theta!r}")
    return check_unit_vector(check_vector(theta, "theta", dim=n))


# --------------------------------------------------------------------------
# subspaces

@dataclass(frozen=True, eq=False)
class Subspace:
    """Subspace of ``R^k`` given by orthonormal basis rows."""

    basis: np.ndarray

    def __post_init__(self):
        basis = np.atleast_2d(np.asarray(self.basis, dtype=float))
        if basis.shape[0] > basis.shape[1]:
            raise ValueError(f"{basis.shape[0]} basis vectors in R^{basis.shape[1]}")
        object.__setattr__(self, "basis", check_orthonormal(basis, tol=self._tol()))

    def _tol(self):
        return UNIT_TOL

    @property
    def dim(self):
        return self.basis.shape[0]

    @property
    def ambient(self):
        return self.basis.shape[1]

    def projector(self):
        return self.basis.T @ self.basis

    def complement_basis(self):
        """Orthonormal basis rows of the orthogonal complement."""
        if self.dim == self.ambient:
            return np.zeros((0, self.ambient))
        q, _ = np.linalg.qr(np.vstack([self.basis, np.eye(self.ambient)]).T)
        return q[:, self.dim:self.ambient].T * _qr_signs(q, self.dim, self.ambient)

    def contains(self, x, tol=1e-10):
        x = np.asarray(x, dtype=float)
        resid = x - (x @ self.basis.T) @ self.basis
        return bool(np.all(np.linalg.norm(resid, axis=-1) <= tol))

    @classmethod
    def full(cls, k):
        return cls(np.eye(k))

    @classmethod
    def from_rows(cls, rows, tol=1e-10):
        """Build from user-supplied rows, validated to ``tol`` and then re-orthonormalized."""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        check_orthonormal(rows, tol=tol)
        q, r = np.linalg.qr(rows.T)
        q = q * np.sign(np.diag(r))
        return cls(q.T)

    @classmethod
    def read(cls, path, tol=1e-10):
        rows = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                text = line.strip()
                if not text or text.startswith("#"):
                    continue
                try:
                    rows.append([float(tok) for tok in text.split()])
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: malformed number ({exc})") from None
        if not rows or len({len(r) for r in rows}) != 1:
            raise ValueError(f"{path}: expected equal-length basis rows")
        return cls.from_rows(rows, tol=tol)


def _qr_signs(q, lo, hi):
    # fix the sign of each complement vector so its largest entry is positive
    cols = q[:, lo:hi]
    idx = np.argmax(np.abs(cols), axis=0)
    return np.sign(cols[idx, np.arange(cols.shape[1])])[:, None]


def _complement_of_vector(theta):
    """Orthonormal basis of ``theta^perp`` by Gram-Schmidt on coordinate vectors.

    Pivot rule: the coordinate where ``|theta_i|`` is largest (lowest index on
    ties) is dropped; the remaining ``e_j`` are orthonormalized in index order
    against ``theta`` and each other, with one reorthogonalization pass.
    """
    n = theta.shape[0]
    pivot = int(np.argmax(np.abs(theta)))
    done = [theta]
    out = []
    for j in range(n):
        if j == pivot:
            continue
        v = np.zeros(n)
        v[j] = 1.0
        for _ in range(2):
            for w in done:
                v = v - (w @ v) * w
        v /= np.linalg.norm(v)
        done.append(v)
        out.append(v)
    return np.array(out).reshape(n - 1, n)


@dataclass(frozen=True, eq=False)
class BlockHyperplane(Subspace):
    """``H_theta = theta^perp (x) R^m`` inside ``(R^m)^n``."""

    theta: np.ndarray = None
    m: int = 1

    @property
    def n(self):
        return self.theta.shape[0]

    def complement_basis(self):
        return np.kron(self.theta[None, :], np.eye(self.m))

    def contains(self, x, tol=1e-10):
        x = np.asarray(x, dtype=float)
        blocks = x.reshape(x.shape[:-1] + (self.n, self.m))
        s = np.einsum("i,...ia->...a", self.theta, blocks)
        return bool(np.all(np.abs(s) <= tol))


def hyperplane_basis(theta, m):
    """Deterministic orthonormal basis ``{w_k (x) e_a}`` of ``H_theta``."""
    theta = check_unit_vector(theta)
    m = check_count(m, "m")
    if theta.shape[0] < 2:
        raise ValueError("theta must have at least two entries")
    w = _complement_of_vector(theta)
    basis = np.kron(w, np.eye(m))
    return BlockHyperplane(basis, theta=theta, m=m)


def as_subspace(sub):
    if isinstance(sub, Subspace):
        return sub
    return Subspace(sub)


def sample_on_subspace(sub, kind, rng, size=None):
    """Standard Gaussian (``kind='gaussian'``) or uniform unit vectors (``'sphere'``) on ``sub``."""
    sub = as_subspace(sub)
    shape = (1 if size is None else size, sub.dim)
    g = rng.standard_normal(shape)
    x = g @ sub.basis
    if kind == "sphere":
        x /= np.linalg.norm(g, axis=1)[:, None]
    elif kind != "gaussian":
        raise ValueError(f"kind must be 'gaussian' or 'sphere', got {kind!r}")
    return x[0] if size is None else x


def block_transform_apply(T, x):
    """Apply ``I_n (x) T`` to vectors of ``(R^m)^n``."""
    T = check_invertible(T)
    x = np.asarray(x, dtype=float)
    m = T.shape[0]
    if x.shape[-1] % m:
        raise ValueError(f"vector length {x.shape[-1]} is not a multiple of block size {m}")
    blocks = x.reshape(x.shape[:-1] + (-1, m))
    return (blocks @ T.T).reshape(x.shape)
