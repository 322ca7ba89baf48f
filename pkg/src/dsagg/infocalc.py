"""Exact entropy and mutual-information calculus for linear observables of a
uniform source over F_q.

Everything rests on one fact: a linear image A@u of a source u drawn
uniformly from F_q^N is uniform on the column space of A, and every fiber of
the map has the same cardinality q**(N - rank(A)); hence the entropy of A@u
is exactly rank(A) in q-ary units. Joint observables stack rows, so every
entropy, conditional entropy, and mutual information in this module reduces
to integer ranks, with no floating point anywhere.

The enumeration oracle at the bottom re-derives the same quantities by
walking the whole source space and counting, sharing no code with the rank
path; agreement between the two is what justifies using ranks as the general
auditor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .gf import PrimeField
from .linalg import Matrix, _safe_dot
from .scheme import GroupKeySet, Precoder, SchemeParams, groups_of

DEFAULT_BUDGET = 2**24


class LayoutMismatchError(ValueError):
    """Raised when observables over different source layouts are combined."""


class BudgetExceededError(RuntimeError):
    """The source space is too large to enumerate."""


class NonPowerOfQSupportError(RuntimeError):
    """Enumeration found an atom count that is not a power of q.

    Cannot happen for linear observables of a uniform source; if this fires,
    either the observables are not linear images of the declared source or
    there is a bug upstream.
    """


# -- source layout ------------------------------------------------------------


@dataclass(frozen=True)
class SourceLayout:
    """Segmentation of the uniform source vector for one scheme shape.

    The source stacks, in order: one length-L segment per user input
    (users 1..K), then one length-L_S segment per group key in lexicographic
    group order. Segments are contiguous, non-overlapping, and cover [0, N).
    """

    field: PrimeField
    K: int
    L: int
    G: int
    L_S: int

    @property
    def groups(self) -> tuple[tuple[int, ...], ...]:
        return groups_of(self.K, self.G)

    @property
    def N(self) -> int:
        return self.K * self.L + len(self.groups) * self.L_S

    def input_slice(self, k: int) -> slice:
        if not 1 <= k <= self.K:
            raise KeyError(f"user {k} outside [1..{self.K}]")
        return slice((k - 1) * self.L, k * self.L)

    def key_slice(self, group: Sequence[int]) -> slice:
        g = tuple(group)
        idx = self.groups.index(g)
        base = self.K * self.L + idx * self.L_S
        return slice(base, base + self.L_S)

    @property
    def segments(self) -> tuple[tuple[str, int], ...]:
        """(name, length) pairs in source order."""
        names = [(f"W{k}", self.L) for k in range(1, self.K + 1)]
        names += [("S{" + ",".join(map(str, g)) + "}", self.L_S) for g in self.groups]
        return tuple(names)


def layout_for(source: SchemeParams | Precoder) -> SourceLayout:
    """The source layout matching a parameter set or a concrete precoder."""
    if isinstance(source, Precoder):
        p = source.params
        return SourceLayout(p.field, p.K, source.L, p.G, source.L_S)
    return SourceLayout(source.field, source.K, source.L, source.G, source.L_S)


# -- observables ----------------------------------------------------------------


@dataclass(frozen=True)
class LinearObservable:
    """A named linear function of the source: rows of a (rows x N) matrix."""

    label: str
    matrix: Matrix
    layout: SourceLayout

    def __post_init__(self):
        if self.matrix.field != self.layout.field:
            raise LayoutMismatchError("observable field differs from layout field")
        if self.matrix.cols != self.layout.N:
            raise LayoutMismatchError(
                f"observable has {self.matrix.cols} columns, layout needs {self.layout.N}"
            )

    def evaluate(self, source_vector: np.ndarray) -> np.ndarray:
        return self.matrix.matvec(source_vector)


def observe_input(layout: SourceLayout, k: int) -> LinearObservable:
    """The raw input of user k."""
    data = np.zeros((layout.L, layout.N), dtype=np.int64)
    data[:, layout.input_slice(k)] = np.eye(layout.L, dtype=np.int64)
    return LinearObservable(f"W{k}", Matrix(layout.field, data), layout)


def observe_total(layout: SourceLayout) -> LinearObservable:
    """The global input sum."""
    data = np.zeros((layout.L, layout.N), dtype=np.int64)
    eye = np.eye(layout.L, dtype=np.int64)
    for k in range(1, layout.K + 1):
        data[:, layout.input_slice(k)] = eye
    return LinearObservable("sum(W)", Matrix(layout.field, data), layout)


def observe_group_key(layout: SourceLayout, group: Sequence[int]) -> LinearObservable:
    g = tuple(group)
    data = np.zeros((layout.L_S, layout.N), dtype=np.int64)
    data[:, layout.key_slice(g)] = np.eye(layout.L_S, dtype=np.int64)
    label = "S{" + ",".join(map(str, g)) + "}"
    return LinearObservable(label, Matrix(layout.field, data), layout)


def observe_key_bundle(layout: SourceLayout, k: int) -> LinearObservable:
    """Everything user k stores: all group keys whose group contains k."""
    holding = [g for g in layout.groups if k in g]
    data = np.zeros((len(holding) * layout.L_S, layout.N), dtype=np.int64)
    eye = np.eye(layout.L_S, dtype=np.int64)
    for i, g in enumerate(holding):
        data[i * layout.L_S : (i + 1) * layout.L_S, layout.key_slice(g)] = eye
    return LinearObservable(f"Z{k}", Matrix(layout.field, data), layout)


def observe_message(layout: SourceLayout, precoder: Precoder, k: int) -> LinearObservable:
    """User k's broadcast: its input plus its key mask."""
    p = precoder.params
    if (p.K, precoder.L, p.G, precoder.L_S, p.field) != (
        layout.K, layout.L, layout.G, layout.L_S, layout.field,
    ):
        raise LayoutMismatchError("precoder shape does not match layout")
    data = np.zeros((layout.L, layout.N), dtype=np.int64)
    data[:, layout.input_slice(k)] = np.eye(layout.L, dtype=np.int64)
    for g in layout.groups:
        if k in g:
            data[:, layout.key_slice(g)] = precoder.block(k, g).data
    return LinearObservable(f"X{k}", Matrix(layout.field, data), layout)


def observable_from_matrix(layout: SourceLayout, matrix: Matrix, label: str) -> LinearObservable:
    return LinearObservable(label, matrix, layout)


# -- rank calculus ---------------------------------------------------------------


def _common_layout(groups: Sequence[Sequence[LinearObservable]]) -> SourceLayout:
    layout = None
    for obs_list in groups:
        for obs in obs_list:
            if layout is None:
                layout = obs.layout
            elif obs.layout != layout:
                raise LayoutMismatchError(
                    f"observable {obs.label!r} uses a different source layout"
                )
    if layout is None:
        raise LayoutMismatchError("no observables given")
    return layout


def _stacked_rank(obs: Sequence[LinearObservable], layout: SourceLayout,
                  cache: dict | None) -> int:
    if not obs:
        return 0
    key = None
    if cache is not None:
        key = tuple(sorted(o.label for o in obs))
        if key in cache:
            return cache[key]
    stacked = np.vstack([o.matrix.data for o in obs])
    rank = Matrix(layout.field, stacked).rank()
    if cache is not None:
        cache[key] = rank
    return rank


def entropy(obs: Sequence[LinearObservable], cache: dict | None = None) -> int:
    """Joint entropy of the observables in q-ary units (an exact integer).

    Optional ``cache`` memoizes stacked ranks by sorted label tuple; callers
    opting in must keep labels unique per distinct observable.
    """
    layout = _common_layout([obs])
    return _stacked_rank(list(obs), layout, cache)


def conditional_entropy(obs: Sequence[LinearObservable],
                        given: Sequence[LinearObservable] = (),
                        cache: dict | None = None) -> int:
    """H(obs | given) = H(obs, given) - H(given), exact in q-ary units."""
    layout = _common_layout([obs, given])
    joint = _stacked_rank(list(obs) + list(given), layout, cache)
    base = _stacked_rank(list(given), layout, cache)
    return joint - base


def mutual_information(a: Sequence[LinearObservable],
                       b: Sequence[LinearObservable],
                       given: Sequence[LinearObservable] = (),
                       cache: dict | None = None) -> int:
    """I(a; b | given), exact in q-ary units and always >= 0."""
    layout = _common_layout([a, b, given])
    a, b, c = list(a), list(b), list(given)
    r_ac = _stacked_rank(a + c, layout, cache)
    r_bc = _stacked_rank(b + c, layout, cache)
    r_abc = _stacked_rank(a + b + c, layout, cache)
    r_c = _stacked_rank(c, layout, cache)
    return r_ac + r_bc - r_abc - r_c


# -- enumeration oracle ----------------------------------------------------------

_CHUNK = 1 << 16


def _enumerate_atoms(layout: SourceLayout, stacked: np.ndarray,
                     budget: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Walk the whole source space and tally each observed tuple.

    Returns (atoms, counts, total): distinct observed value rows, how often
    each occurs, and the source-space size q**N.
    """
    q = layout.field.q
    total = q**layout.N
    if total > budget:
        raise BudgetExceededError(
            f"q**N = {q}**{layout.N} exceeds the enumeration budget {budget}"
        )
    atom_parts: list[np.ndarray] = []
    count_parts: list[np.ndarray] = []
    transposed = stacked.T.copy()
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        digits = np.empty((idx.size, layout.N), dtype=np.int64)
        rem = idx
        for j in range(layout.N):
            digits[:, j] = rem % q
            rem = rem // q
        values = _safe_dot(digits, transposed, q)
        uniq, counts = np.unique(values, axis=0, return_counts=True)
        atom_parts.append(uniq)
        count_parts.append(counts)
    all_atoms = np.vstack(atom_parts)
    all_counts = np.concatenate(count_parts)
    atoms, inverse = np.unique(all_atoms, axis=0, return_inverse=True)
    counts = np.zeros(atoms.shape[0], dtype=np.int64)
    np.add.at(counts, inverse.ravel(), all_counts)
    return atoms, counts, total


def _power_of_q_exponent(x: int, q: int) -> int:
    e = 0
    while x % q == 0:
        x //= q
        e += 1
    if x != 1:
        raise NonPowerOfQSupportError(f"count component {x} is not a power of {q}")
    return e


def _marginal_ids(atoms: np.ndarray, cols: Sequence[int],
                  counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Group atoms by the projection onto ``cols``; returns (group id per
    atom, total count per group)."""
    sub = atoms[:, list(cols)]
    _, inverse = np.unique(sub, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    sums = np.zeros(int(inverse.max()) + 1 if inverse.size else 1, dtype=np.int64)
    np.add.at(sums, inverse, counts)
    return inverse, sums


def brute_force_entropy(obs: Sequence[LinearObservable],
                        budget: int = DEFAULT_BUDGET) -> Fraction:
    """Joint entropy by full enumeration, as an exact rational.

    Independent of the rank path: it only counts realizations. Each atom
    probability is a multiple of q**-N, and for linear observables every
    atom count is a power of q, so the entropy is exact.
    """
    layout = _common_layout([obs])
    rows = [o.matrix.data for o in obs]
    stacked = np.vstack(rows) if rows else np.zeros((0, layout.N), dtype=np.int64)
    _, counts, total = _enumerate_atoms(layout, stacked, budget)
    q = layout.field.q
    weighted = 0
    for n in counts:
        weighted += int(n) * _power_of_q_exponent(int(n), q)
    return Fraction(layout.N * total - weighted, total)


def brute_force_mi(a: Sequence[LinearObservable],
                   b: Sequence[LinearObservable],
                   given: Sequence[LinearObservable] = (),
                   budget: int = DEFAULT_BUDGET) -> Fraction:
    """I(a; b | given) by full enumeration, as an exact rational.

    Builds the exact joint distribution of (a, b, given) over all q**N source
    realizations and evaluates the Shannon sum directly; every per-atom
    likelihood ratio must be an integer power of q, which holds for all
    linear observables.
    """
    layout = _common_layout([a, b, given])
    a, b, c = list(a), list(b), list(given)
    ra = sum(o.matrix.rows for o in a)
    rb = sum(o.matrix.rows for o in b)
    rows = [o.matrix.data for o in a + b + c]
    stacked = np.vstack(rows) if rows else np.zeros((0, layout.N), dtype=np.int64)
    atoms, counts, total = _enumerate_atoms(layout, stacked, budget)
    q = layout.field.q

    n_cols = stacked.shape[0]
    ac_cols = list(range(ra)) + list(range(ra + rb, n_cols))
    bc_cols = list(range(ra, n_cols))
    c_cols = list(range(ra + rb, n_cols))
    ac_id, ac_sum = _marginal_ids(atoms, ac_cols, counts)
    bc_id, bc_sum = _marginal_ids(atoms, bc_cols, counts)
    c_id, c_sum = _marginal_ids(atoms, c_cols, counts)

    weighted = 0
    for i in range(atoms.shape[0]):
        n_abc = int(counts[i])
        num = n_abc * int(c_sum[c_id[i]])
        den = int(ac_sum[ac_id[i]]) * int(bc_sum[bc_id[i]])
        g = math.gcd(num, den)
        num //= g
        den //= g
        if den == 1:
            exponent = _power_of_q_exponent(num, q)
        elif num == 1:
            exponent = -_power_of_q_exponent(den, q)
        else:
            raise NonPowerOfQSupportError(
                f"likelihood ratio {num}/{den} is not a power of {q}"
            )
        weighted += n_abc * exponent
    return Fraction(weighted, total)


# -- realization helpers -------------------------------------------------------


def source_vector(layout: SourceLayout, inputs: np.ndarray, keys: GroupKeySet) -> np.ndarray:
    """Pack per-user inputs (K x L) and a key set into one source vector."""
    u = np.zeros(layout.N, dtype=np.int64)
    inputs = layout.field.reduce(inputs)
    if inputs.shape != (layout.K, layout.L):
        raise LayoutMismatchError(
            f"inputs must be {layout.K} x {layout.L}, got {inputs.shape}"
        )
    for k in range(1, layout.K + 1):
        u[layout.input_slice(k)] = inputs[k - 1]
    for g in layout.groups:
        key = keys.key(g)
        if key.shape != (layout.L_S,):
            raise LayoutMismatchError(f"key for {g} has shape {key.shape}")
        u[layout.key_slice(g)] = key
    return u
