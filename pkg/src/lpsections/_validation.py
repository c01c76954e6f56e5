"""Input validation helpers shared by the estimators.

These follow the scikit-learn convention of ``check_*`` functions that either
return a cleaned-up array or raise ``ValueError`` naming the offending input.
"""

import numpy as np

UNIT_TOL = 1e-12


def check_vector(x, name="x", dim=None):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise ValueError(f"{name} has length {x.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


def check_points(x, dim, name="x"):
    """Accept a single point or a batch of points of dimension ``dim``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (dim,):
        raise ValueError(f"{name} has trailing dimension {x.shape[-1:]} , expected {dim}")
    return x


def check_unit_vector(theta, name="theta", tol=UNIT_TOL):
    """Reject (never renormalize) vectors whose Euclidean norm is not 1."""
    theta = check_vector(theta, name)
    norm = np.linalg.norm(theta)
    if norm == 0.0:
        raise ValueError(f"{name} is the zero vector")
    if abs(norm - 1.0) > tol:
        raise ValueError(f"{name} is not a unit vector (norm {float(norm)!r}, tolerance {tol:g})")
    return theta


def check_positive(value, name, allow_inf=False):
    value = float(value)
    if np.isnan(value) or value <= 0 or (np.isinf(value) and not allow_inf):
        raise ValueError(f"{name} must be positive{' (or inf)' if allow_inf else ''}, got {value!r}")
    return value


def check_count(value, name, minimum=1):
    if int(value) != value or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_invertible(T, name="T", dim=None, tol=1e-12):
    T = np.asarray(T, dtype=float)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {T.shape}")
    if dim is not None and T.shape[0] != dim:
        raise ValueError(f"{name} must be {dim}x{dim}, got {T.shape}")
    if abs(np.linalg.det(T)) <= tol:
        raise ValueError(f"{name} is singular (|det| <= {tol:g})")
    return T


def check_orthonormal(basis, name="basis", tol=UNIT_TOL):
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    gram = basis @ basis.T
    err = np.max(np.abs(gram - np.eye(basis.shape[0]))) if basis.size else 0.0
    if err > tol:
        raise ValueError(f"{name} rows are not orthonormal (max Gram error {err:.3g} > {tol:g})")
    return basis
