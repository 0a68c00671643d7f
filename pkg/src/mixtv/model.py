"""Mixtures of product distributions over {0..q-1}^n.

A mixture is a convex combination of ``k`` product distributions.  This
module owns the validated in-memory representation, the probability mass
oracle, and the JSON instance format shared by the solvers and the CLI.

Values of the alphabet are encoded ``0..q-1``; coordinates are numbered
``1..n`` wherever an explicit coordinate index appears in an API.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import NormalizationError, NotAProbability, ShapeMismatch

# Rows (weights and marginals) whose sum deviates from 1 by more than this
# are rejected; smaller deviations are renormalized away.
SUM_TOL = 1e-9
# Single entries may undershoot 0 / overshoot 1 by at most this much.
ENTRY_TOL = 1e-12


@dataclass(frozen=True)
class Mixture:
    """A validated mixture of ``k`` product distributions.

    Attributes
    ----------
    q : int
        Alphabet size (>= 2).
    n : int
        Number of coordinates (>= 1).
    weights : np.ndarray, shape (k,)
        Mixing weights, renormalized to sum to 1.  Zero weights are kept:
        such components are stored but inactive.
    components : np.ndarray, shape (k, n, q)
        ``components[s, i, c]`` is the probability that coordinate ``i+1``
        takes value ``c`` under component ``s``.  Every row sums to 1.

    Instances are produced by :func:`validate_mixture`; the arrays are
    read-only, so a mixture can be shared freely across threads.
    """

    q: int
    n: int
    weights: np.ndarray
    components: np.ndarray

    @property
    def k(self) -> int:
        """Number of components, including inactive (zero-weight) ones."""
        return int(self.weights.shape[0])

    @property
    def active(self) -> np.ndarray:
        """Boolean mask of components with strictly positive weight."""
        return self.weights > 0.0


def _renormalized_rows(arr: np.ndarray, what: str) -> np.ndarray:
    """Validate rows of probabilities along the last axis and renormalize."""
    if not np.isfinite(arr).all():
        raise NotAProbability(f"{what} contains non-finite entries")
    if (arr < -ENTRY_TOL).any() or (arr > 1.0 + ENTRY_TOL).any():
        raise NotAProbability(f"{what} has entries outside [0, 1]")
    arr = np.clip(arr, 0.0, None)
    sums = arr.sum(axis=-1)
    if (np.abs(sums - 1.0) > SUM_TOL).any():
        worst = float(np.abs(sums - 1.0).max())
        raise NormalizationError(f"{what} rows sum to 1 +/- {worst:.3e}, tolerance {SUM_TOL}")
    return arr / sums[..., None]


def validate_mixture(raw: Mapping[str, Any] | tuple) -> Mixture:
    """Build a :class:`Mixture` from an unvalidated description.

    Parameters
    ----------
    raw : mapping or pair
        Either a mapping with keys ``"weights"`` (length k) and
        ``"components"`` (k x n x q nested array), i.e. the per-mixture
        sub-document of the JSON instance format, or a ``(weights,
        components)`` pair of array-likes.

    Returns
    -------
    Mixture
        With weights and marginal rows renormalized to sum to 1.

    Raises
    ------
    ShapeMismatch
        If the arrays do not form a consistent k x n x q block.
    NotAProbability
        If an entry is below -1e-12 or above 1 + 1e-12, or non-finite.
    NormalizationError
        If a row sum deviates from 1 by more than 1e-9.
    """
    if isinstance(raw, Mapping):
        try:
            weights_in, components_in = raw["weights"], raw["components"]
        except KeyError as exc:
            raise ShapeMismatch(f"mixture description is missing key {exc}") from None
    else:
        try:
            weights_in, components_in = raw
        except (TypeError, ValueError):
            raise ShapeMismatch("expected a mapping or a (weights, components) pair") from None

    try:
        weights = np.asarray(weights_in, dtype=float)
        components = np.asarray(components_in, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ShapeMismatch(f"could not coerce mixture arrays: {exc}") from None

    if weights.ndim != 1 or components.ndim != 3:
        raise ShapeMismatch(
            f"expected weights (k,) and components (k, n, q), "
            f"got {weights.shape} and {components.shape}"
        )
    k, n, q = components.shape
    if weights.shape[0] != k:
        raise ShapeMismatch(f"{weights.shape[0]} weights for {k} components")
    if n < 1 or q < 2:
        raise ShapeMismatch(f"need n >= 1 and q >= 2, got n={n}, q={q}")

    weights = _renormalized_rows(weights, "weights")
    components = _renormalized_rows(components, "marginals")
    weights.flags.writeable = False
    components.flags.writeable = False
    return Mixture(q=q, n=n, weights=weights, components=components)


def as_configuration(m: Mixture, values: Sequence[int], length: int | None = None) -> np.ndarray:
    """Coerce ``values`` to an int configuration array and range-check it."""
    cfg = np.asarray(values, dtype=np.int64)
    expect = m.n if length is None else length
    if cfg.ndim != 1 or cfg.shape[0] != expect:
        raise ShapeMismatch(f"configuration of length {cfg.shape} for n={expect}")
    if cfg.size and ((cfg < 0).any() or (cfg >= m.q).any()):
        raise ShapeMismatch(f"configuration values must lie in 0..{m.q - 1}")
    return cfg


def suffix_mass(m: Mixture, j: int, weights: Sequence[float], suffix: Sequence[int]) -> float:
    """Probability of a suffix under the mixture reweighted by ``weights``.

    Computes ``sum_s weights[s] * prod_{i=j..n} components[s, i, suffix[i-j]]``
    with coordinates multiplied left to right and components accumulated in
    ascending index, so repeated calls are bit-for-bit reproducible.

    Parameters
    ----------
    j : int
        First coordinate of the suffix, 1-based; ``j = n + 1`` with an
        empty suffix is the empty product and returns 1.
    weights : array-like, shape (k,)
        Reweighting of the components; must sum to 1 within 1e-9.
    suffix : sequence of int, length n - j + 1
        Values of coordinates ``j..n``.
    """
    if not 1 <= j <= m.n + 1:
        raise ShapeMismatch(f"coordinate j={j} outside 1..{m.n + 1}")
    w = np.asarray(weights, dtype=float)
    if w.shape != (m.k,):
        raise ShapeMismatch(f"weight vector of shape {w.shape} for k={m.k}")
    if abs(float(w.sum()) - 1.0) > SUM_TOL:
        raise ShapeMismatch(f"reweighting sums to {float(w.sum())!r}, not 1")
    if j == m.n + 1:
        if len(suffix):
            raise ShapeMismatch("expected an empty suffix for j = n + 1")
        return 1.0
    cfg = as_configuration(m, suffix, length=m.n - j + 1)

    comp = m.components
    total = 0.0
    for s in range(m.k):
        prod = 1.0
        for off, c in enumerate(cfg):
            prod *= comp[s, j - 1 + off, c]
        total += w[s] * prod
    return float(total)


def mass(m: Mixture, omega: Sequence[int]) -> float:
    """Probability mass of a full configuration, ``sum_s w_s prod_i P_i^s(omega_i)``.

    Evaluates in O(nk) arithmetic operations and is exactly
    ``suffix_mass(m, 1, m.weights, omega)`` (same arithmetic order).
    """
    return suffix_mass(m, 1, m.weights, omega)


# ---------------------------------------------------------------------------
# JSON instance format: {"q": int, "n": int,
#                        "p":      {"weights": [...], "components": [[[...]]]},
#                        "q_dist": {"weights": [...], "components": [[[...]]]}}
# ---------------------------------------------------------------------------


def parse_instance(doc: Mapping[str, Any]) -> tuple[Mixture, Mixture]:
    """Parse a JSON instance document into a validated pair of mixtures."""
    for key in ("q", "n", "p", "q_dist"):
        if key not in doc:
            raise ShapeMismatch(f"instance document is missing key {key!r}")
    p = validate_mixture(doc["p"])
    q = validate_mixture(doc["q_dist"])
    if (p.q, p.n) != (q.q, q.n):
        raise ShapeMismatch(
            f"mixtures disagree on the domain: ({p.q}, {p.n}) vs ({q.q}, {q.n})"
        )
    if int(doc["q"]) != p.q or int(doc["n"]) != p.n:
        raise ShapeMismatch(
            f"declared q={doc['q']}, n={doc['n']} but arrays have q={p.q}, n={p.n}"
        )
    return p, q


def instance_document(p: Mixture, q: Mixture) -> dict[str, Any]:
    """Serialize a pair of mixtures to the JSON instance document layout."""
    if (p.q, p.n) != (q.q, q.n):
        raise ShapeMismatch("mixtures disagree on the domain")
    return {
        "q": p.q,
        "n": p.n,
        "p": {"weights": p.weights.tolist(), "components": p.components.tolist()},
        "q_dist": {"weights": q.weights.tolist(), "components": q.components.tolist()},
    }
