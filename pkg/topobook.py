"""
GROWTHLAB - TOPOLOGY BOOKKEEPING
Integral homology of small chain complexes, homology-sphere tests,
plumbing-tree tables and the entropy / symplectic growth bounds.
"""

import logging
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from errors import DomainError, InvalidComplexError, ParseError, ShapeError, read_json
from exactlin import int_det, int_matrix, snf

logger = logging.getLogger(__name__)


# ============================================================
# CHAIN COMPLEXES
# ============================================================

@dataclass
class ChainComplex:
    """C_0 <- C_1 <- ... <- C_top; boundaries[k-1] is d_k : C_k -> C_{k-1}"""
    dims: list
    boundaries: list = field(default_factory=list)

    def __post_init__(self):
        self.dims = [int(d) for d in self.dims]
        if not self.dims or any(d < 0 for d in self.dims):
            raise ShapeError(f"cell counts must be non-negative, got {self.dims}")
        top = len(self.dims) - 1
        given = list(self.boundaries)
        if len(given) > top:
            raise ShapeError(f"{len(given)} boundary maps for a complex of top degree {top}")
        boundaries = []
        for k in range(1, top + 1):
            shape = (self.dims[k - 1], self.dims[k])
            if k <= len(given) and given[k - 1] is not None:
                matrix = np.array(given[k - 1], dtype=object)
                if matrix.size == 0:
                    matrix = int_matrix([], shape=shape)
                elif matrix.ndim != 2 or matrix.shape != shape:
                    raise ShapeError(f"d_{k} has shape {matrix.shape}, expected {shape}")
            else:
                matrix = int_matrix([], shape=shape)
            boundaries.append(matrix)
        self.boundaries = boundaries

        for k in range(1, top):
            product = self.boundaries[k - 1].dot(self.boundaries[k])
            if np.any(product != 0):
                raise InvalidComplexError(f"d_{k} . d_{k + 1} is not zero")

    @property
    def top(self):
        return len(self.dims) - 1

    def boundary(self, k):
        """d_k, with zero maps outside 1..top"""
        if 1 <= k <= self.top:
            return self.boundaries[k - 1]
        rows = self.dims[k - 1] if 1 <= k <= self.top + 1 else 0
        cols = self.dims[k] if 0 <= k <= self.top else 0
        return int_matrix([], shape=(rows, cols))

    def euler_characteristic(self):
        return sum((-1) ** k * d for k, d in enumerate(self.dims))

    @classmethod
    def from_dict(cls, data):
        if 'dims' in data:
            return cls(dims=data['dims'], boundaries=data.get('boundaries', []))
        # without dims, every boundary must be a non-empty row list
        top = data['top']
        boundaries = data.get('boundaries', [])
        if len(boundaries) != top or any(not b or not b[0] for b in boundaries):
            raise ParseError("chain complexes with empty boundary maps need a 'dims' list")
        dims = [len(boundaries[0])] + [len(b[0]) for b in boundaries]
        return cls(dims=dims, boundaries=boundaries)

    def to_dict(self):
        return {'top': self.top, 'dims': list(self.dims),
                'boundaries': [[[int(v) for v in row] for row in b.tolist()] for b in self.boundaries]}


@dataclass
class HomologyProfile:
    betti: list
    torsion: list

    @property
    def top(self):
        return len(self.betti) - 1

    def euler_characteristic(self):
        return sum((-1) ** k * b for k, b in enumerate(self.betti))

    def is_torsion_free(self):
        return not any(self.torsion)

    def describe(self, k):
        parts = []
        if self.betti[k]:
            parts.append('Z' if self.betti[k] == 1 else f"Z^{self.betti[k]}")
        parts.extend(f"Z/{d}" for d in self.torsion[k])
        return ' + '.join(parts) if parts else '0'

    def to_dict(self):
        return {'betti': list(self.betti), 'torsion': [list(t) for t in self.torsion],
                'groups': {f"H{k}": self.describe(k) for k in range(len(self.betti))}}


def chain_homology(complex_):
    """b_k = dim C_k - rank d_k - rank d_{k+1}; torsion from the Smith form of d_{k+1}"""
    ranks = {}
    factors = {}
    for k in range(1, complex_.top + 1):
        decomposition = snf(complex_.boundary(k))
        ranks[k] = decomposition.rank
        factors[k] = decomposition.invariant_factors
    betti = []
    torsion = []
    for k, dim in enumerate(complex_.dims):
        betti.append(dim - ranks.get(k, 0) - ranks.get(k + 1, 0))
        torsion.append(list(factors.get(k + 1, [])))
    return HomologyProfile(betti=betti, torsion=torsion)


def is_homology_sphere(profile, n):
    """b_0 = b_n = 1, every other group zero"""
    if profile.top < n:
        return False
    if not profile.is_torsion_free():
        return False
    expected = [1 if k in (0, n) else 0 for k in range(len(profile.betti))]
    return profile.betti == expected


def sphere_profile(n, count=1):
    """Wedge of `count` homology n-spheres"""
    betti = [1] + [0] * n
    betti[n] += count
    return HomologyProfile(betti=betti, torsion=[[] for _ in range(n + 1)])


def load_chain_complex(path):
    data = read_json(path)
    try:
        return ChainComplex.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"invalid chain complex document: {exc}", path=str(path)) from None


# ============================================================
# PLUMBING TREES
# ============================================================

@dataclass(frozen=True)
class PlumbingVertex:
    name: str
    homology_sphere: bool = True


@dataclass
class PlumbingTree:
    n: int
    vertices: list
    edges: list

    def __post_init__(self):
        self.vertices = [v if isinstance(v, PlumbingVertex) else
                         PlumbingVertex(**v) if isinstance(v, dict) else PlumbingVertex(str(v))
                         for v in self.vertices]
        self.edges = [tuple(e) for e in self.edges]
        if self.n < 1:
            raise DomainError(f"vertex dimension must be positive, got {self.n}")
        graph = self.graph()
        if not self.vertices or not nx.is_tree(graph):
            raise DomainError("plumbing graph must be a nonempty tree")

    def graph(self):
        g = nx.Graph()
        g.add_nodes_from(range(len(self.vertices)))
        for a, b in self.edges:
            if not (0 <= a < len(self.vertices) and 0 <= b < len(self.vertices)):
                raise DomainError(f"edge {(a, b)} refers to a missing vertex")
            g.add_edge(a, b)
        return g

    @classmethod
    def from_dict(cls, data):
        if 'dims' in data:
            dims = set(data['dims'])
            if len(dims) != 1:
                raise DomainError(f"all vertices must have the same dimension, got {sorted(dims)}")
            if 'n' not in data:
                data = dict(data, n=dims.pop())
            elif dims != {data['n']}:
                raise DomainError(f"vertex dimensions {sorted(dims)} differ from n={data['n']}")
        return cls(n=data['n'], vertices=data['vertices'], edges=data.get('edges', []))

    def to_dict(self):
        return {'n': self.n, 'vertices': [v.name for v in self.vertices],
                'edges': [list(e) for e in self.edges]}


def intersection_form(tree):
    """Self-intersection (-1)^(n(n-1)/2) chi(S^n) on the diagonal, +-1 on edges"""
    n = tree.n
    size = len(tree.vertices)
    euler = 1 + (-1) ** n
    sign = (-1) ** (n * (n - 1) // 2)
    form = int_matrix([], shape=(size, size))
    for i in range(size):
        form[i, i] = sign * euler
    skew = n % 2 == 1
    for a, b in tree.edges:
        i, j = min(a, b), max(a, b)
        form[i, j] = 1
        form[j, i] = -1 if skew else 1
    return form


@dataclass
class PlumbingReport:
    """Boundary flag comes from the determinant alone; perfect_matching is a diagnostic.

    For odd n the skew form of a tree has Pfaffian +-1 when the tree has a perfect
    matching and 0 otherwise, so the matching should agree with the flag.
    """
    interior: HomologyProfile
    boundary_homology_sphere: str
    determinant: int = None
    perfect_matching: bool = None
    model: str = 'wedge of spheres'

    def to_dict(self):
        return {
            'interior': self.interior.to_dict(),
            'boundary_homology_sphere': self.boundary_homology_sphere,
            'determinant': self.determinant,
            'diagnostics': {'perfect_matching': self.perfect_matching},
            'model': self.model,
        }


def plumbing_homology(tree):
    """Interior retracts to a wedge of the vertex spheres; boundary decided by the intersection form"""
    bad = [v.name for v in tree.vertices if not v.homology_sphere]
    if bad:
        raise DomainError(f"vertices {bad} are not homology spheres")
    interior = sphere_profile(tree.n, len(tree.vertices))

    if tree.n < 3:
        return PlumbingReport(interior=interior, boundary_homology_sphere='unknown')
    det = int_det(intersection_form(tree))
    matching = None
    if tree.n % 2 == 1:
        graph = tree.graph()
        matching = nx.is_perfect_matching(graph, nx.max_weight_matching(graph, maxcardinality=True))
    flag = 'true' if abs(det) == 1 else 'false'
    logger.info("✓ Plumbing of %d vertices, n=%d: det %d, boundary sphere %s",
                len(tree.vertices), tree.n, det, flag)
    return PlumbingReport(interior=interior, boundary_homology_sphere=flag,
                          determinant=det, perfect_matching=matching)


def brieskorn_is_homology_sphere(p, q, r):
    """M(p,q,r) is a homology sphere exactly when p, q, r are pairwise coprime"""
    if min(p, q, r) < 2:
        raise DomainError(f"exponents must be at least 2, got ({p}, {q}, {r})")
    # a factor shared by two exponents leaves H_1 of the link nonzero
    coprime = math.gcd(p, q) == math.gcd(q, r) == math.gcd(p, r) == 1
    return 'true' if coprime else 'false'


def load_plumbing_tree(path):
    data = read_json(path)
    try:
        return PlumbingTree.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"invalid plumbing document: {exc}", path=str(path)) from None


# ============================================================
# GROWTH AND ENTROPY BOUNDS
# ============================================================

@dataclass(frozen=True)
class EntropyBoundInput:
    gamma_alg: float
    rho: float
    max_f: float

    def __post_init__(self):
        if self.gamma_alg < 0:
            raise DomainError(f"gamma_alg must be non-negative, got {self.gamma_alg}")
        if self.rho <= 0:
            raise DomainError(f"rho must be positive, got {self.rho}")
        if self.max_f <= 0:
            raise DomainError(f"max_f must be positive, got {self.max_f}")


def symplectic_growth_lower_bound(gamma_alg, rho):
    if rho <= 0:
        raise DomainError(f"rho must be positive, got {rho}")
    return gamma_alg / rho


def entropy_lower_bound(inp):
    """h_top >= gamma_alg / (rho max_f)"""
    return inp.gamma_alg / (inp.rho * inp.max_f)
