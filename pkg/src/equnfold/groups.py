"""Finite matrix groups and group-average (Haar) projections.

A finite group is stored as a multiplication table over element indices
``0..order-1``; a representation attaches one complex matrix per element.
The Haar integral of a compact group specializes, for a finite group, to
the normalized sum ``(1/|G|) sum_g``, which is how every projection here
is realized: onto the commutant of a representation, or more generally
onto the space of maps intertwining two representations.

Groups can be entered directly as a multiplication table, or generated by
closing a set of matrices under products (the usual way to specify a small
symmetry group such as the dihedral group of the triangle).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import StructuralError

# Entrywise tolerance used to identify equal matrices during closure.
CLOSURE_TOL = 1e-10
DEFAULT_MAX_ORDER = 512


@dataclass(frozen=True)
class FiniteGroup:
    """A finite group given by its multiplication table.

    Attributes
    ----------
    mul_table : ``(order, order)`` int ndarray
        ``mul_table[a, b]`` is the index of the product ``a * b``.
    identity : int
        Index of the identity element.
    inverse : ``(order,)`` int ndarray
        ``inverse[g]`` is the index of ``g**-1``.
    generator_indices : tuple of int
        Indices of a generating set, when the group was built by closure;
        empty when unknown.
    """

    mul_table: np.ndarray
    identity: int
    inverse: np.ndarray
    generator_indices: tuple = field(default=())

    @property
    def order(self):
        return self.mul_table.shape[0]

    def mul(self, a, b):
        return int(self.mul_table[a, b])

    def elements(self):
        return range(self.order)

    @classmethod
    def from_mul_table(cls, table, generator_indices=()):
        """Build and validate a group from a multiplication table."""
        table = np.asarray(table, dtype=int)
        if table.ndim != 2 or table.shape[0] != table.shape[1]:
            raise StructuralError("multiplication table must be square")
        n = table.shape[0]
        if table.min() < 0 or table.max() >= n:
            raise StructuralError("table entries must be element indices")

        # Latin square: every row and column is a permutation.
        full = np.arange(n)
        for axis in (0, 1):
            if not np.all(np.sort(table, axis=axis) == (full[:, None] if axis == 0 else full[None, :])):
                raise StructuralError("multiplication table is not a Latin square")

        identity = None
        for e in range(n):
            if np.all(table[e, :] == full) and np.all(table[:, e] == full):
                identity = e
                break
        if identity is None:
            raise StructuralError("no identity element in table")

        inverse = np.empty(n, dtype=int)
        for g in range(n):
            inv = np.nonzero(table[g, :] == identity)[0]
            if len(inv) != 1 or table[inv[0], g] != identity:
                raise StructuralError(f"element {g} has no two-sided inverse")
            inverse[g] = inv[0]

        # Associativity, exhaustively; groups here are small.  Chunk over the
        # first index to keep the temporary arrays modest.
        for a in range(n):
            if not np.array_equal(table[table[a]], table[a][table]):
                raise StructuralError(f"associativity fails for triples starting at {a}")

        return cls(mul_table=table, identity=identity, inverse=inverse,
                   generator_indices=tuple(generator_indices))

    def same_group(self, other):
        return self is other or (
            self.order == other.order and np.array_equal(self.mul_table, other.mul_table)
        )


@dataclass(frozen=True)
class Representation:
    """Matrices ``rho(g)``, one per group element, acting on ``C^dim``."""

    group: FiniteGroup
    matrices: np.ndarray  # (order, dim, dim) complex

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=complex)
        if mats.ndim != 3 or mats.shape[0] != self.group.order or mats.shape[1] != mats.shape[2]:
            raise StructuralError(
                f"expected {self.group.order} square matrices of equal size, got shape {mats.shape}"
            )
        object.__setattr__(self, "matrices", mats)

    @property
    def dim(self):
        return self.matrices.shape[1]

    def matrix(self, g):
        return self.matrices[g]

    def inverse_matrix(self, g):
        """rho(g)^-1, taken as the matrix of the inverse group element."""
        return self.matrices[self.group.inverse[g]]


class _MatrixSet:
    """Growable stack of equal-shaped matrices with tolerance lookup."""

    def __init__(self, d, tol):
        self.stack = np.empty((0, d, d), dtype=complex)
        self.tol = tol

    def __len__(self):
        return self.stack.shape[0]

    def find(self, M):
        if not len(self):
            return -1
        residuals = np.max(np.abs(self.stack - M[None, :, :]), axis=(1, 2))
        hits = np.nonzero(residuals < self.tol)[0]
        return int(hits[0]) if len(hits) else -1

    def add(self, M):
        self.stack = np.concatenate([self.stack, M[None, :, :]])
        return len(self) - 1


def close_generators(generators, max_order=DEFAULT_MAX_ORDER, tol=CLOSURE_TOL):
    """Close a list of matrices under products and return a Representation.

    The identity gets index 0; the given generators come next (deduplicated),
    followed by the remaining products in discovery order.  Entry comparison
    uses an absolute tolerance so exact 0/1 and root-of-unity generators are
    deduplicated despite rounding.

    Raises
    ------
    StructuralError
        If a generator is singular, shapes disagree, or the closure exceeds
        ``max_order`` elements.
    """
    gens = [np.asarray(g, dtype=complex) for g in generators]
    if not gens:
        raise StructuralError("need at least one generator")
    d = gens[0].shape[0]
    for g in gens:
        if g.shape != (d, d):
            raise StructuralError("generator matrices must share one square shape")
        if np.linalg.matrix_rank(g) < d:
            raise StructuralError("singular generator matrix")

    mats = _MatrixSet(d, tol)
    mats.add(np.eye(d, dtype=complex))
    gen_idx = []
    for g in gens:
        k = mats.find(g)
        gen_idx.append(k if k >= 0 else mats.add(g))

    grew = True
    while grew:
        grew = False
        for a in range(len(mats)):
            for b in range(len(mats)):
                p = mats.stack[a] @ mats.stack[b]
                if mats.find(p) < 0:
                    mats.add(p)
                    grew = True
                    if len(mats) > max_order:
                        raise StructuralError(
                            f"closure exceeded {max_order} elements; not a finite group at this cap"
                        )

    n = len(mats)
    products = np.einsum("aij,bjk->abik", mats.stack, mats.stack)
    table = np.empty((n, n), dtype=int)
    for a in range(n):
        for b in range(n):
            k = mats.find(products[a, b])
            if k < 0:
                raise StructuralError("closure is not closed; generator set inconsistent")
            table[a, b] = k

    group = FiniteGroup.from_mul_table(table, generator_indices=gen_idx)
    return Representation(group=group, matrices=mats.stack)


@dataclass(frozen=True)
class RepresentationReport:
    """Result of checking the homomorphism property of a representation."""

    violated_pairs: tuple       # pairs (g, h) with rho(g)rho(h) != rho(gh)
    max_residual: float         # worst entrywise residual over all pairs
    identity_residual: float    # max |rho(e) - I|
    singular_elements: tuple    # indices g with numerically singular rho(g)

    @property
    def ok(self):
        return not self.violated_pairs and not self.singular_elements


def check_representation(rep, tol=1e-9):
    """Verify rho(gh) = rho(g)rho(h) on every pair, plus identity/invertibility.

    Returns a :class:`RepresentationReport`; an empty ``violated_pairs`` list
    means the homomorphism property holds within ``tol``.
    """
    group = rep.group
    mats = rep.matrices
    d = rep.dim

    identity_residual = float(np.max(np.abs(mats[group.identity] - np.eye(d))))

    violated = []
    max_res = identity_residual
    for g in group.elements():
        for h in group.elements():
            res = float(np.max(np.abs(mats[g] @ mats[h] - mats[group.mul(g, h)])))
            max_res = max(max_res, res)
            if res > tol:
                violated.append((g, h))

    singular = []
    for g in group.elements():
        s = np.linalg.svd(mats[g], compute_uv=False)
        if s[-1] <= 1e-12 * max(s[0], 1.0):
            singular.append(g)

    if identity_residual > tol:
        violated.insert(0, (group.identity, group.identity))

    return RepresentationReport(
        violated_pairs=tuple(violated),
        max_residual=max_res,
        identity_residual=identity_residual,
        singular_elements=tuple(singular),
    )


def equivariant_average(rep_left, rep_right, M):
    """Group-average ``(1/|G|) sum_g  rhoL(g) M rhoR(g)^-1``.

    The result intertwines the two representations:
    ``rhoL(g) @ out == out @ rhoR(g)`` for every ``g``.  With
    ``rep_left is rep_right`` this is the projection onto the commutant;
    mixed arguments project onto the intertwiner space (used to project
    the rectangular R-matrices of the unfolding construction).

    The ``1/|G|`` normalization is always applied so the operator is a true
    projection (idempotent on square inputs).
    """
    if not rep_left.group.same_group(rep_right.group):
        raise StructuralError("representations live on different groups")
    M = np.asarray(M, dtype=complex)
    if M.shape != (rep_left.dim, rep_right.dim):
        raise StructuralError(
            f"matrix shape {M.shape} does not match ({rep_left.dim}, {rep_right.dim})"
        )
    group = rep_left.group
    acc = np.zeros_like(M)
    for g in group.elements():
        acc += rep_left.matrices[g] @ M @ rep_right.inverse_matrix(g)
    return acc / group.order


def commutant_basis(rep, rcond=1e-10):
    """Orthonormal basis of the matrices commuting with every rho(g).

    Solves the linear constraints ``rho(g) X - X rho(g) = 0`` stacked over a
    generating set (all elements when no generators are recorded) and returns
    the common null space reshaped to matrices.  The basis is orthonormal in
    the Frobenius inner product.  The zero-singular-value cutoff is taken
    relative to the representation norm, not to the constraint matrix itself:
    a (numerically) trivial representation constrains nothing, and its
    constraint matrix must count as zero rather than as tiny-but-full-rank.
    """
    d = rep.dim
    gens = rep.group.generator_indices or tuple(rep.group.elements())
    eye = np.eye(d)
    blocks = []
    scale = 1.0
    for g in gens:
        R = rep.matrices[g]
        scale = max(scale, float(np.linalg.norm(R, 2)))
        # row-major vec: vec(R X - X R) = (kron(R, I) - kron(I, R^T)) vec(X)
        blocks.append(np.kron(R, eye) - np.kron(eye, R.T))
    A = np.vstack(blocks)
    _, s, Vh = np.linalg.svd(A)
    tol = rcond * scale
    rank = int(np.sum(s > tol))
    ns = Vh[rank:].conj().T
    return [ns[:, k].reshape(d, d) for k in range(ns.shape[1])]


def commutant_dim(rep, rcond=1e-10):
    return len(commutant_basis(rep, rcond=rcond))
