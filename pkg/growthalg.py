"""
GROWTHLAB - FILTERED GROUP ALGEBRAS
F2 group algebras filtered by word length, algebraic growth of a generating
set, filtered modules and the stretching / growth comparison checks.
"""

import logging
import random
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import pandas as pd

from errors import DomainError, RangeError, ShapeError, StretchingError
from exactlin import F2Matrix, f2_kernel, f2_rank, f2_solve, mask_to_vector, vector_to_mask
from fds import FdsElement, GrowthEstimate, LevelData, StreamedFds, TabulatedFds, growth_rate, spectral_number
from groups import RewritingEngine, SphereWalker

logger = logging.getLogger(__name__)

DEFAULT_MAX_RADIUS = 256


# ============================================================
# ELEMENTS
# ============================================================

@dataclass(frozen=True)
class GroupAlgebraElement:
    """Finite sum of group elements over F2, stored as a set of canonical keys"""
    support: frozenset
    engine: object = field(compare=False, repr=False)

    def is_zero(self):
        return not self.support

    def _same_engine(self, other):
        if other.engine is not self.engine:
            raise DomainError("group algebra elements come from different engines")

    def __add__(self, other):
        self._same_engine(other)
        return GroupAlgebraElement(self.support ^ other.support, self.engine)

    def __mul__(self, other):
        self._same_engine(other)
        return _convolve(self.engine, self, other)

    def __len__(self):
        return len(self.support)


def _convolve(engine, x, y):
    support = set()
    for a in x.support:
        for b in y.support:
            # symmetric difference: coefficients live in F2
            support ^= {engine.multiply_keys(a, b)}
    return GroupAlgebraElement(frozenset(support), engine)


class _F2Span:
    """Incremental span of packed vectors, optionally tracking which inputs combine to each pivot"""

    def __init__(self):
        self.pivots = {}

    def __len__(self):
        return len(self.pivots)

    def reduce(self, mask, combo=0):
        while mask:
            top = mask.bit_length() - 1
            entry = self.pivots.get(top)
            if entry is None:
                break
            mask ^= entry[0]
            combo ^= entry[1]
        return mask, combo

    def add(self, mask, combo=0):
        """Insert a vector; returns (residual, combo), residual 0 meaning it was dependent"""
        mask, combo = self.reduce(mask, combo)
        if mask:
            self.pivots[mask.bit_length() - 1] = (mask, combo)
        return mask, combo


# ============================================================
# WORD METRIC
# ============================================================

class WordMetric:
    """Word length of group elements, grown lazily by breadth-first search"""

    def __init__(self, engine, generating_set, max_radius=DEFAULT_MAX_RADIUS):
        self.engine = engine
        self.generating_set = list(generating_set)
        self.max_radius = max_radius
        keys = [engine.word_key(w) for w in self.generating_set]
        self.walker = SphereWalker(engine, keys, record=True)
        self._levels = {k: 0 for k in self.walker.spheres[0]}
        self._ball_sizes = [len(self.walker.spheres[0])]
        self._lock = threading.Lock()

        # shortlex normal forms of a confluent system are geodesic in the full alphabet
        self._normal_form_lengths = (
            isinstance(engine, RewritingEngine) and engine.system.confluent
            and sorted(self.generating_set) == sorted(engine.letters))

    def _grow(self):
        if not self.walker.closed and self.walker.radius >= self.max_radius:
            raise RangeError(f"word metric radius cap {self.max_radius} reached")
        if not self.walker.step():
            if self.walker.truncated:
                raise RangeError("word metric hit the BFS memory cap")
            self._ball_sizes.append(self._ball_sizes[-1])
            return
        radius = self.walker.radius
        for k in self.walker.spheres[-1]:
            self._levels[k] = radius
        self._ball_sizes.append(self._ball_sizes[-1] + len(self.walker.spheres[-1]))

    def level(self, key):
        if self._normal_form_lengths:
            return len(key)
        with self._lock:
            while key not in self._levels:
                if self.walker.closed:
                    raise DomainError("element is not reachable from the generating set")
                self._grow()
            return self._levels[key]

    def ball_size(self, t):
        """Number of group elements of length at most t"""
        if t < 0:
            return 0
        t = int(t)
        with self._lock:
            while len(self._ball_sizes) <= t:
                self._grow()
            return self._ball_sizes[t]

    def ball(self, t):
        """Keys of length at most t, in BFS order"""
        size = self.ball_size(t)
        keys = []
        for sphere in self.walker.spheres:
            keys.extend(sphere)
            if len(keys) >= size:
                break
        return keys[:size]

    def geodesic(self, key):
        """Indices into the generating set spelling a shortest word for key"""
        with self._lock:
            while key not in self.walker.parents:
                if self.walker.closed:
                    raise DomainError("element is not reachable from the generating set")
                self._grow()
        return self.walker.word_of(key)


# ============================================================
# ALGEBRAS
# ============================================================

class FilteredAlgebra:
    """F2[G] filtered by word length in a fixed generating set"""

    def __init__(self, engine, generating_set=None, max_radius=DEFAULT_MAX_RADIUS):
        self.engine = engine
        words = engine.default_generating_set() if generating_set is None else list(generating_set)
        if not words:
            raise DomainError("the word metric needs a nonempty generating set")
        for w in words:
            engine.check_word(w)
        self.generating_set = words
        self.metric = WordMetric(engine, words, max_radius=max_radius)
        self._index = {}
        self._keys = []

    # --- elements ---

    def from_keys(self, keys):
        support = set()
        for k in keys:
            support ^= {k}
        return GroupAlgebraElement(frozenset(support), self.engine)

    def element(self, *words):
        """Sum of the given words; a word listed twice cancels"""
        return self.from_keys(self.engine.word_key(w) for w in words)

    @property
    def zero(self):
        return GroupAlgebraElement(frozenset(), self.engine)

    @property
    def one(self):
        return self.from_keys([self.engine.key(self.engine.identity())])

    def generators(self):
        return [self.element(w) for w in self.generating_set]

    def _check(self, x):
        if x.engine is not self.engine:
            raise DomainError("element belongs to a different engine")

    # --- packed coordinates over all group elements met so far ---

    def bit(self, key):
        position = self._index.get(key)
        if position is None:
            position = len(self._keys)
            self._index[key] = position
            self._keys.append(key)
        return position

    def to_mask(self, x):
        mask = 0
        for k in x.support:
            mask |= 1 << self.bit(k)
        return mask

    def from_mask(self, mask):
        keys = []
        while mask:
            low = mask & -mask
            keys.append(self._keys[low.bit_length() - 1])
            mask ^= low
        return GroupAlgebraElement(frozenset(keys), self.engine)

    def random_element(self, rng, max_level, terms=3):
        """Sum of up to `terms` random products of at most max_level generators"""
        keys = []
        for _ in range(rng.randint(0, terms)):
            word = ''.join(rng.choice(self.generating_set) for _ in range(rng.randint(0, max_level)))
            keys.append(self.engine.word_key(word))
        return self.from_keys(keys)


def multiply(alg, x, y):
    alg._check(x)
    alg._check(y)
    return _convolve(alg.engine, x, y)


def filtration_level(alg, x):
    """Max word length over the support; the zero element has level 0"""
    alg._check(x)
    if x.is_zero():
        return 0
    return max(alg.metric.level(k) for k in x.support)


def generating_radius(alg, S):
    """rho(S) = max filtration level over S"""
    return max((filtration_level(alg, s) for s in S), default=0)


# ============================================================
# ALGEBRAIC GROWTH
# ============================================================

class GeneratedSpan:
    """W_S(n) = span of all products of at most n elements of S, for n = 0, 1, 2, ...

    When S consists of single group elements the span has the distinct
    products as a basis and no linear algebra is needed.
    """

    def __init__(self, alg, S):
        self.alg = alg
        self.S = [s for s in S if not s.is_zero()]
        for s in self.S:
            alg._check(s)
        self.basis_case = all(len(s) == 1 for s in self.S)
        self.order = []
        self.counts = [0]
        self._lock = threading.Lock()
        if self.basis_case:
            keys = list(dict.fromkeys(next(iter(s.support)) for s in self.S))
            self._walker = SphereWalker(alg.engine, keys, start_keys=keys, record=True) if keys else None
        else:
            self._union = _F2Span()
            self._frontier = []

    def _next_basis(self, k):
        walker = self._walker
        if walker is None:
            return []
        if k == 1:
            return list(walker.spheres[0])
        if walker.step():
            return list(walker.spheres[-1])
        if walker.truncated:
            raise RangeError(f"BFS memory cap reached while building level {k}")
        return []

    def _next_general(self, k):
        alg = self.alg
        if k == 1:
            candidates = [alg.to_mask(s) for s in self.S]
        else:
            candidates = (alg.to_mask(multiply(alg, alg.from_mask(v), s))
                          for v in self._frontier for s in self.S)
        products = _F2Span()
        frontier = []
        for mask in candidates:
            if products.add(mask)[0]:
                frontier.append(mask)
        self._frontier = frontier
        fresh = []
        for mask in frontier:
            if self._union.add(mask)[0]:
                fresh.append(mask)
        return fresh

    def extend(self, n):
        with self._lock:
            while len(self.counts) <= n:
                k = len(self.counts)
                fresh = self._next_basis(k) if self.basis_case else self._next_general(k)
                self.order.extend(fresh)
                self.counts.append(len(self.order))
        return self

    def dim(self, n):
        return self.extend(n).counts[n]

    def basis(self, n):
        """Basis of W_S(n) as algebra elements; it extends the basis of W_S(n-1)"""
        self.extend(n)
        return [self.element(item) for item in self.order[:self.counts[n]]]

    def element(self, item):
        return self.alg.from_keys([item]) if self.basis_case else self.alg.from_mask(item)

    def coordinates(self, x, n):
        """Coordinates of x in basis(n), or None when x is not in W_S(n)"""
        self.extend(n)
        size = self.counts[n]
        if self.basis_case:
            position = {k: i for i, k in enumerate(self.order[:size])}
            if any(k not in position for k in x.support):
                return None
            return mask_to_vector(sum(1 << position[k] for k in x.support), size)
        target = self.alg.to_mask(x)
        columns = [self.alg.to_mask(b) for b in self.basis(n)]
        width = len(self.alg._keys)
        matrix = F2Matrix(size, width, tuple(columns)).transpose()
        return f2_solve(matrix, mask_to_vector(target, width))


def _as_elements(alg, S):
    if S is None:
        return alg.generators()
    return [alg.element(s) if isinstance(s, str) else s for s in S]


def algebraic_growth(alg, S=None, n_max=20, method='slope'):
    """w_dims[n-1] = dim W_S(n) for n = 1..n_max, with a growth estimate"""
    if n_max < 1:
        raise DomainError(f"n_max must be at least 1, got {n_max}")
    span = GeneratedSpan(alg, _as_elements(alg, S))
    if not span.S:
        return GrowthEstimate(rate=0.0, window=(1, n_max), method=method, d_sequence=[], start=1)
    span.extend(n_max)
    w_dims = span.counts[1:n_max + 1]
    logger.info("✓ Algebraic growth: %d levels, dim W_S(%d) = %d", n_max, n_max, w_dims[-1])
    return growth_rate(w_dims, method=method, start=1)


def fds_from_ball_filtration(alg, S=None):
    """Level n = W_S(n) (zero space at level 0), maps = inclusions"""
    span = GeneratedSpan(alg, _as_elements(alg, S))

    def rule(n):
        here, there = span.dim(n), span.dim(n + 1)
        return LevelData(dim=here, basis=span.order, next_dim=there)

    fds = StreamedFds(rule, monotone=True, name='generated-span')
    fds.span = span
    return fds


@dataclass
class FiniteGrowthReport:
    ok: bool
    rho: int
    w_dims: list
    ball_dims: list
    first_violation: dict = None

    def to_dict(self):
        return {'ok': self.ok, 'rho': self.rho, 'w_dims': list(self.w_dims),
                'ball_dims': list(self.ball_dims), 'first_violation': self.first_violation}


def check_finite_growth(alg, S=None, n_max=10):
    """Every element of W_S(n) has level <= rho(S) n, so dim W_S(n) <= d_{rho(S) n} of the word filtration"""
    elements = _as_elements(alg, S)
    span = GeneratedSpan(alg, elements)
    rho = generating_radius(alg, span.S)
    span.extend(n_max)
    report = FiniteGrowthReport(ok=True, rho=rho, w_dims=span.counts[1:n_max + 1], ball_dims=[])
    for n in range(1, n_max + 1):
        bound = rho * n
        ball = alg.metric.ball_size(bound)
        report.ball_dims.append(ball)
        if report.ok:
            fresh = span.order[span.counts[n - 1]:span.counts[n]]
            worst = max((filtration_level(alg, span.element(item)) for item in fresh), default=0)
            if worst > bound or span.counts[n] > ball:
                report.ok = False
                report.first_violation = {'n': n, 'level': worst, 'bound': bound,
                                          'dim': span.counts[n], 'ball': ball}
    return report


# ============================================================
# MODULES
# ============================================================

class FilteredModule(ABC):
    max_level = None

    @abstractmethod
    def level(self, m):
        pass

    @abstractmethod
    def act(self, key, m):
        """Action of a single group element"""

    @abstractmethod
    def dim_at(self, t):
        """dim{m : level(m) <= t}"""

    @abstractmethod
    def to_mask(self, m):
        pass

    @abstractmethod
    def is_zero(self, m):
        pass

    def random_element(self, rng, max_level):
        raise NotImplementedError

    def act_element(self, a, m):
        """a * m for an algebra element a, extended linearly"""
        total = 0
        for key in a.support:
            total ^= self.to_mask(self.act(key, m))
        return self.from_mask(total)

    def from_mask(self, mask):
        raise NotImplementedError


class SelfShiftModule(FilteredModule):
    """The algebra acting on itself by left multiplication, levels raised by `shift`"""

    def __init__(self, alg, shift=0):
        if shift < 0:
            raise DomainError(f"shift must be non-negative, got {shift}")
        self.alg = alg
        self.shift = shift

    def level(self, m):
        return 0 if m.is_zero() else filtration_level(self.alg, m) + self.shift

    def act(self, key, m):
        return multiply(self.alg, self.alg.from_keys([key]), m)

    def act_element(self, a, m):
        return multiply(self.alg, a, m)

    def dim_at(self, t):
        return self.alg.metric.ball_size(t - self.shift) if t >= self.shift else 0

    def to_mask(self, m):
        return self.alg.to_mask(m)

    def from_mask(self, mask):
        return self.alg.from_mask(mask)

    def is_zero(self, m):
        return m.is_zero()

    def random_element(self, rng, max_level):
        return self.alg.random_element(rng, max_level)


class TabulatedModule(FilteredModule):
    """Module on the limit space of a tabulated system; each letter acts by a matrix.

    Levels are spectral numbers. Without actions every group element acts as
    the identity (augmentation module).
    """

    def __init__(self, alg, fds, actions=None, max_level=None):
        if not isinstance(fds, TabulatedFds):
            raise DomainError("tabulated modules need a TabulatedFds")
        self.alg = alg
        self.fds = fds
        self.max_level = max_level
        self.dim = fds.dims[-1]
        self.actions = {} if actions is None else dict(actions)
        self.augmentation = actions is None
        for letter, matrix in self.actions.items():
            if matrix.shape != (self.dim, self.dim):
                raise ShapeError(f"action of {letter!r} has shape {matrix.shape}, expected {(self.dim, self.dim)}")
        self._word_matrices = {}

    @classmethod
    def from_dict(cls, alg, data):
        fds = TabulatedFds.from_dict(data['fds'])
        actions = data.get('actions')
        if actions is not None:
            d = fds.dims[-1]
            actions = {letter: F2Matrix.from_flat(flat, d, d) for letter, flat in actions.items()}
        return cls(alg, fds, actions, max_level=data.get('max_level'))

    def _letter(self, c):
        matrix = self.actions.get(c)
        if matrix is not None:
            return matrix
        inverse = self.actions.get(c.swapcase())
        if inverse is None:
            raise DomainError(f"no action given for letter {c!r}")
        # columns of the inverse solve inverse . x = e_j
        columns = []
        for j in range(self.dim):
            x = f2_solve(inverse, mask_to_vector(1 << j, self.dim))
            if x is None:
                raise DomainError(f"action of {c.swapcase()!r} is not invertible")
            columns.append(vector_to_mask(x))
        matrix = F2Matrix(self.dim, self.dim, tuple(columns)).transpose()
        self.actions[c] = matrix
        return matrix

    def _generator_matrix(self, index):
        cached = self._word_matrices.get(index)
        if cached is None:
            cached = F2Matrix.identity(self.dim)
            for c in self.alg.generating_set[index]:
                cached = cached @ self._letter(c)
            self._word_matrices[index] = cached
        return cached

    def act(self, key, m):
        if self.augmentation:
            return tuple(m)
        mask = vector_to_mask(m)
        # a = g1 g2 ... gk acts as g1 (g2 (... gk m))
        for index in reversed(self.alg.metric.geodesic(key)):
            mask = self._generator_matrix(index).apply_mask(mask)
        return mask_to_vector(mask, self.dim)

    def level(self, m):
        if not any(m):
            return 0
        return spectral_number(self.fds, FdsElement(len(self.fds.levels) - 1, tuple(m)))

    def dim_at(self, t):
        return self.fds.d_at(t)

    def to_mask(self, m):
        return vector_to_mask(m)

    def from_mask(self, mask):
        return mask_to_vector(mask, self.dim)

    def is_zero(self, m):
        return not any(m)

    def random_element(self, rng, max_level):
        return tuple(rng.randint(0, 1) for _ in range(self.dim))


# ============================================================
# SUBADDITIVITY
# ============================================================

@dataclass
class SubadditivityReport:
    ok: bool
    checked: int = 0
    counterexample: dict = None

    def to_dict(self):
        return {'ok': self.ok, 'checked': self.checked, 'counterexample': self.counterexample}


def check_subadditivity(alg, sample_count=1000, max_level=4, module=None, seed=42):
    """level(x y) <= level(x) + level(y) on random pairs; with a module, level(a m) <= level(a) + level(m)"""
    rng = random.Random(seed)
    report = SubadditivityReport(ok=True)
    for _ in range(sample_count):
        x = alg.random_element(rng, max_level)
        if module is None:
            y = alg.random_element(rng, max_level)
            product = multiply(alg, x, y)
            left, right = filtration_level(alg, product), filtration_level(alg, x) + filtration_level(alg, y)
        else:
            y = module.random_element(rng, max_level)
            product = module.act_element(x, y)
            left, right = module.level(product), filtration_level(alg, x) + module.level(y)
        report.checked += 1
        if left > right:
            report.ok = False
            report.counterexample = {'x': sorted(map(repr, x.support)), 'level': left, 'bound': right}
            break
    return report


# ============================================================
# STRETCHING
# ============================================================

@dataclass
class StretchReport:
    m0: object
    checked_level: int
    injective: bool
    dimension: int
    rank: int
    witness: GroupAlgebraElement = None

    def to_dict(self):
        return {
            'checked_level': self.checked_level,
            'injective': self.injective,
            'dimension': self.dimension,
            'rank': self.rank,
            'witness_size': None if self.witness is None else len(self.witness),
        }


def stretching_check(alg, module, m0, level):
    """Is a -> a * m0 injective on the part of the algebra of level <= level?"""
    if module.max_level is not None and level > module.max_level:
        raise RangeError(f"level {level} beyond the module data (max {module.max_level})")
    basis = alg.metric.ball(level)

    if isinstance(module, TabulatedModule):
        columns = [vector_to_mask(module.act(key, m0)) for key in basis]
        matrix = F2Matrix(len(basis), module.dim, tuple(columns)).transpose()
        rank = f2_rank(matrix)
        witness = None
        if rank < len(basis):
            kernel = f2_kernel(matrix)[0]
            witness = alg.from_keys([key for key, bit in zip(basis, kernel) if bit])
    else:
        span = _F2Span()
        rank = 0
        witness = None
        for i, key in enumerate(basis):
            residual, combo = span.add(module.to_mask(module.act(key, m0)), 1 << i)
            if residual:
                rank += 1
            elif witness is None:
                witness = alg.from_keys([basis[j] for j in range(len(basis)) if combo >> j & 1])

    report = StretchReport(m0=m0, checked_level=level, injective=rank == len(basis),
                           dimension=len(basis), rank=rank, witness=witness)
    if not report.injective:
        logger.info("⚠️  Not stretching at level %d: rank %d < %d", level, rank, len(basis))
    return report


@dataclass
class GrowthCompareReport:
    ok: bool
    shift: int
    stretch: StretchReport
    rows: list = field(default_factory=list)

    def to_frame(self):
        return pd.DataFrame(self.rows, columns=['t', 'd_algebra', 'd_module', 'slack'])

    def to_dict(self):
        return {'ok': self.ok, 'shift': self.shift, 'stretch': self.stretch.to_dict(), 'rows': self.rows}


def _compare_rows(alg, module, shift, window):
    lo, hi = window
    rows = []
    for t in range(int(lo), int(hi) + 1):
        d_alg = alg.metric.ball_size(t)
        d_mod = module.dim_at(t + shift)
        rows.append({'t': t, 'd_algebra': d_alg, 'd_module': d_mod, 'slack': d_mod - d_alg})
    return rows


def module_growth_compare(alg, module, m0, window):
    """d_t(algebra) <= d_{t + level(m0)}(module) at every integer t in the window"""
    lo, hi = window
    if lo > hi:
        raise DomainError(f"empty window {window}")
    stretch = stretching_check(alg, module, m0, int(hi))
    if not stretch.injective:
        raise StretchingError(f"m0 is not stretching at level {hi}", report=stretch)
    shift = module.level(m0)
    rows = _compare_rows(alg, module, shift, window)
    ok = all(row['slack'] >= 0 for row in rows)
    return GrowthCompareReport(ok=ok, shift=shift, stretch=stretch, rows=rows)


@dataclass
class UniformFamilyReport:
    ok: bool
    bound: int
    levels: list
    failing_member: int = None
    infimum: list = field(default_factory=list)
    algebra_dims: list = field(default_factory=list)
    growth: GrowthEstimate = None

    def to_dict(self):
        return {'ok': self.ok, 'bound': self.bound, 'levels': list(self.levels),
                'failing_member': self.failing_member, 'infimum': list(self.infimum),
                'algebra_dims': list(self.algebra_dims),
                'growth': None if self.growth is None else self.growth.to_dict()}


def uniform_family_check(alg, members, bound, window):
    """Uniform stretching: every level(m0_i) <= bound and d_t(algebra) <= inf_i d_{t+bound}(W_i)"""
    members = list(members)
    if not members:
        raise DomainError("the family is empty")
    lo, hi = window
    levels = [module.level(m0) for module, m0 in members]
    report = UniformFamilyReport(ok=True, bound=bound, levels=levels)
    for i, level in enumerate(levels):
        if level > bound:
            report.ok = False
            report.failing_member = i
            return report

    for i, (module, m0) in enumerate(members):
        stretch = stretching_check(alg, module, m0, int(hi))
        if not stretch.injective:
            raise StretchingError(f"family member {i} is not stretching at level {hi}",
                                  report=stretch, member=i)

    ts = range(int(lo), int(hi) + 1)
    report.algebra_dims = [alg.metric.ball_size(t) for t in ts]
    report.infimum = [min(module.dim_at(t + bound) for module, _ in members) for t in ts]
    for i, (module, _) in enumerate(members):
        if any(module.dim_at(t + bound) < d for t, d in zip(ts, report.algebra_dims)):
            report.ok = False
            report.failing_member = i
            break
    report.growth = growth_rate(report.infimum, start=int(lo))
    return report
