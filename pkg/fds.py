"""
GROWTHLAB - FILTERED DIRECTED SYSTEMS
F2 vector spaces V_t indexed by levels t >= 0 with persistence maps
pi_{s->t}, sampled at breakpoints. Spectral numbers, growth estimates,
dilation and (weak) interleaving checks live here.
"""

import bisect
import logging
import math
import threading
from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from sklearn.linear_model import LinearRegression

from errors import DomainError, OrderError, ParseError, ShapeError, read_json
from exactlin import F2Matrix, f2_rank, f2_solve

logger = logging.getLogger(__name__)

INFINITY = math.inf
GROWTH_METHODS = ('slope', 'last-ratio')


def safe_log(value):
    """log with the convention log(0) = 0"""
    return math.log(value) if value > 0 else 0.0


def _full_column_rank(m):
    if all(word == (1 << i) for i, word in enumerate(m.bits[:m.cols])) and not any(m.bits[m.cols:]):
        return True
    return f2_rank(m) == m.cols


# ============================================================
# SYSTEMS
# ============================================================

class Fds(ABC):
    """A filtered directed system over F2"""
    monotone = False

    @abstractmethod
    def dim_at(self, t):
        """Dimension at the breakpoint <= t"""

    @abstractmethod
    def map_between(self, s, t):
        """Composed persistence matrix pi_{s->t}"""

    def d_at(self, t, horizon=None):
        """dim{x : c(x) <= t}: rank of V_t in the limit (or at `horizon`)"""
        if self.monotone:
            return self.dim_at(t)
        if horizon is None:
            raise DomainError("a horizon level is required for a system without a finite limit")
        return f2_rank(self.map_between(t, horizon))

    def d_sequence(self, n_min, n_max):
        return pd.Series([self.d_at(n) for n in range(n_min, n_max + 1)],
                         index=range(n_min, n_max + 1), dtype=object)

    def default_levels(self):
        return None


class TabulatedFds(Fds):
    """Finite system; constant with identity maps after the last breakpoint"""

    def __init__(self, levels, dims, maps):
        levels = list(levels)
        dims = [int(d) for d in dims]
        maps = list(maps)
        if not levels:
            raise ShapeError("a tabulated system needs at least one level")
        if any(t < 0 for t in levels):
            raise DomainError("levels must be non-negative")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise DomainError("levels must be strictly increasing")
        if len(dims) != len(levels):
            raise ShapeError(f"{len(dims)} dimensions for {len(levels)} levels")
        if len(maps) != len(levels) - 1:
            raise ShapeError(f"{len(maps)} maps for {len(levels)} levels")
        for i, m in enumerate(maps):
            if m.shape != (dims[i + 1], dims[i]):
                raise ShapeError(f"map {i} has shape {m.shape}, expected {(dims[i + 1], dims[i])}")
        self.levels = levels
        self.dims = dims
        self.maps = maps

    @property
    def last_level(self):
        return self.levels[-1]

    def index(self, t):
        return bisect.bisect_right(self.levels, t) - 1

    def dim_at(self, t):
        if t < 0:
            raise DomainError(f"negative level {t}")
        i = self.index(t)
        return self.dims[i] if i >= 0 else 0

    def map_between(self, s, t):
        if s > t:
            raise OrderError(f"map requested from {s} to {t}")
        i, j = self.index(s), self.index(t)
        if i == j:
            return F2Matrix.identity(self.dims[i] if i >= 0 else 0)
        if i < 0:
            return F2Matrix.zeros(self.dims[j], 0)
        result = self.maps[i]
        for k in range(i + 1, j):
            result = self.maps[k] @ result
        return result

    def d_at(self, t, horizon=None):
        if horizon is None:
            horizon = max(t, self.last_level)
        return f2_rank(self.map_between(t, horizon))

    def default_levels(self):
        return list(self.levels)

    def default_window(self):
        # past the last breakpoint the system is constant
        start = int(math.ceil(self.last_level)) + 1
        return (start, start + 8)

    # --- JSON ---

    @classmethod
    def from_dict(cls, data):
        try:
            levels = list(data['levels'])
            dims = [int(d) for d in data['dims']]
            raw = list(data.get('maps', []))
        except (KeyError, TypeError) as exc:
            raise ParseError(f"tabulated system needs levels, dims and maps ({exc})") from None
        if len(raw) != len(levels) - 1:
            raise ShapeError(f"{len(raw)} maps for {len(levels)} levels")
        maps = [F2Matrix.from_flat(values, dims[i + 1], dims[i]) for i, values in enumerate(raw)]
        return cls(levels, dims, maps)

    def to_dict(self):
        return {'levels': list(self.levels), 'dims': list(self.dims),
                'maps': [m.to_flat() for m in self.maps]}


@dataclass(frozen=True)
class LevelData:
    """One level of a streamed system.

    `basis` may be a list shared between levels; its first `dim` entries are
    this level's basis. Without `to_next` the map to the next level is the
    inclusion of the first `dim` coordinates into F2^next_dim, kept implicit.
    """
    dim: int
    basis: Sequence
    to_next: F2Matrix = None
    next_dim: int = None

    def __post_init__(self):
        if self.to_next is None:
            if self.next_dim is None:
                raise ShapeError("a level needs either a map or the next dimension")
            if self.next_dim < self.dim:
                raise ShapeError(f"cannot include dimension {self.dim} into {self.next_dim}")
        elif self.to_next.cols != self.dim:
            raise ShapeError(f"map has {self.to_next.cols} columns for dimension {self.dim}")

    @property
    def is_inclusion(self):
        return self.to_next is None

    @property
    def target_dim(self):
        return self.next_dim if self.to_next is None else self.to_next.rows

    def step(self):
        """The map to the next level as a matrix"""
        if self.to_next is None:
            return F2Matrix.inclusion(self.next_dim, self.dim)
        return self.to_next


class StreamedFds(Fds):
    """System generated level by level from a rule n -> LevelData"""

    def __init__(self, rule, monotone=False, name='streamed'):
        self.rule = rule
        self.monotone = monotone
        self.name = name
        self._cache = {}
        self._lock = threading.Lock()

    def level(self, n):
        n = int(n)
        if n < 0:
            raise DomainError(f"negative level {n}")
        with self._lock:
            cached = self._cache.get(n)
        if cached is not None:
            return cached
        data = self.rule(n)
        if self.monotone and not data.is_inclusion and not _full_column_rank(data.to_next):
            raise DomainError(f"level {n}: map is not injective in a system flagged monotone")
        with self._lock:
            self._cache.setdefault(n, data)
        return data

    def prefetch(self, levels, n_jobs=1):
        """Evaluate levels ahead of time; rules are pure, so order does not matter"""
        levels = list(levels)
        if n_jobs > 1:
            Parallel(n_jobs=n_jobs, prefer='threads')(delayed(self.level)(n) for n in levels)
        else:
            for n in levels:
                self.level(n)

    def dim_at(self, t):
        if t < 0:
            raise DomainError(f"negative level {t}")
        return self.level(math.floor(t)).dim

    def map_between(self, s, t):
        if s > t:
            raise OrderError(f"map requested from {s} to {t}")
        a, b = math.floor(s), math.floor(t)
        steps = [self.level(n) for n in range(a, b)]
        for n, data in zip(range(a, b), steps):
            if data.target_dim != self.level(n + 1).dim:
                raise ShapeError(f"level {n}: map lands in dimension {data.target_dim}, "
                                 f"next level has dimension {self.level(n + 1).dim}")
        # composites of inclusions are inclusions; build the matrix once
        if all(data.is_inclusion for data in steps):
            return F2Matrix.inclusion(self.level(b).dim, self.level(a).dim)
        result = F2Matrix.identity(self.level(a).dim)
        for data in steps:
            result = data.step() @ result
        return result


class ReparametrizedFds(Fds):
    """W_t = V_{tau(t)} for a nondecreasing level function tau"""

    def __init__(self, base, tau, name='reparametrized'):
        self.base = base
        self.tau = tau
        self.monotone = base.monotone
        self.name = name

    def dim_at(self, t):
        return self.base.dim_at(self.tau(t))

    def map_between(self, s, t):
        if s > t:
            raise OrderError(f"map requested from {s} to {t}")
        return self.base.map_between(self.tau(s), self.tau(t))

    def d_at(self, t, horizon=None):
        return self.base.d_at(self.tau(t), None if horizon is None else self.tau(horizon))


class DilatedFds(ReparametrizedFds):
    """V(eta)_t = V_{eta t}"""

    def __init__(self, base, eta):
        super().__init__(base, lambda t: eta * t, name='dilated')
        self.eta = eta


def dilate(fds, eta):
    """Dilate a system by an integer factor eta >= 1"""
    if eta < 1 or int(eta) != eta:
        raise DomainError(f"dilation factor must be an integer >= 1, got {eta}")
    return DilatedFds(fds, int(eta))


# ============================================================
# ELEMENTS AND SPECTRAL NUMBERS
# ============================================================

@dataclass(frozen=True)
class FdsElement:
    """Vector in V at a breakpoint index (tabulated) or integer level (streamed)"""
    level: int
    vector: tuple

    def is_zero(self):
        return not any(self.vector)


def spectral_number(fds, x, horizon=None):
    """Least level whose image in the limit contains the limit image of x"""
    if isinstance(fds, TabulatedFds):
        if not 0 <= x.level < len(fds.levels):
            raise ShapeError(f"breakpoint index {x.level} outside 0..{len(fds.levels) - 1}")
        if len(x.vector) != fds.dims[x.level]:
            raise ShapeError(f"vector of length {len(x.vector)} at a level of dimension {fds.dims[x.level]}")
        limit = fds.last_level
        candidates = fds.levels
        source = fds.levels[x.level]
    else:
        if len(x.vector) != fds.dim_at(x.level):
            raise ShapeError(f"vector of length {len(x.vector)} at a level of dimension {fds.dim_at(x.level)}")
        limit = x.level if horizon is None else horizon
        if limit < x.level:
            raise OrderError(f"horizon {limit} below the element level {x.level}")
        candidates = range(0, int(limit) + 1)
        source = x.level

    image = fds.map_between(source, limit).apply(x.vector)
    if not any(image):
        return candidates[0]
    for level in candidates:
        if f2_solve(fds.map_between(level, limit), image) is not None:
            return level
    return INFINITY


# ============================================================
# GROWTH ESTIMATES
# ============================================================

@dataclass
class GrowthEstimate:
    rate: float
    window: tuple
    method: str
    certified_upper: float = None
    d_sequence: list = field(default_factory=list)
    start: int = 0
    estimates: dict = field(default_factory=dict)

    @property
    def w_dims(self):
        return self.d_sequence

    def to_dict(self):
        return {
            'rate': self.rate,
            'window': list(self.window),
            'method': self.method,
            'certified_upper': self.certified_upper,
            'd_sequence': [int(d) for d in self.d_sequence],
            'start': self.start,
            'estimates': dict(self.estimates),
        }


def _as_series(source, start, window):
    if isinstance(source, pd.Series):
        return source
    if isinstance(source, Fds):
        if window is None:
            if isinstance(source, TabulatedFds):
                window = source.default_window()
            else:
                raise DomainError("a window is required to estimate the growth of a streamed system")
        n_min, n_max = window
        first = max(0, n_min - 1)
        return source.d_sequence(first, n_max)
    values = list(source)
    return pd.Series(values, index=range(start, start + len(values)), dtype=object)


def growth_rate(source, window=None, method='slope', submultiplicative=False, start=0):
    """Exponential growth estimate of a d-sequence (list, Series or system)"""
    if method not in GROWTH_METHODS:
        raise DomainError(f"unknown growth method {method!r}")
    series = _as_series(source, start, window)
    if window is None:
        if len(series) == 0:
            raise DomainError("empty window")
        window = (int(series.index[0]), int(series.index[-1]))
    n_min, n_max = int(window[0]), int(window[1])
    inside = series[(series.index >= n_min) & (series.index <= n_max)]
    if len(inside) == 0:
        raise DomainError(f"empty window {window}")
    values = [int(v) for v in inside.values]
    if any(v < 0 for v in values):
        raise DomainError("dimensions must be non-negative")
    levels = [int(n) for n in inside.index]

    if len(set(values)) == 1:
        slope_rate = ratio_rate = 0.0
    else:
        last = values[-1]
        before = series.get(levels[-1] - 1)
        ratio_rate = safe_log(last) - safe_log(int(before)) if before is not None else 0.0

        mid = (levels[0] + levels[-1]) / 2
        upper = [(n, v) for n, v in zip(levels, values) if n >= mid]
        if len(upper) >= 2:
            X = np.array([[n] for n, _ in upper], dtype=float)
            y = np.array([safe_log(v) for _, v in upper], dtype=float)
            slope_rate = float(LinearRegression().fit(X, y).coef_[0])
        else:
            slope_rate = ratio_rate

    slope_rate = max(0.0, slope_rate)
    ratio_rate = max(0.0, ratio_rate)
    rate = slope_rate if method == 'slope' else ratio_rate

    certified = None
    if submultiplicative:
        bounds = [safe_log(v) / n for n, v in zip(levels, values) if n >= 1]
        certified = min(bounds) if bounds else None

    return GrowthEstimate(
        rate=rate,
        window=(n_min, n_max),
        method=method,
        certified_upper=certified,
        d_sequence=values,
        start=levels[0],
        estimates={'slope': slope_rate, 'last-ratio': ratio_rate},
    )


# ============================================================
# MORPHISMS AND INTERLEAVINGS
# ============================================================

@dataclass
class CheckReport:
    ok: bool
    first_violation: dict = None
    checked: int = 0

    def to_dict(self):
        return {'ok': self.ok, 'first_violation': self.first_violation, 'checked': self.checked}


def _member(family, level):
    if family is None:
        return None
    if callable(family):
        return family(level)
    if isinstance(family, Mapping):
        return family.get(level)
    raise DomainError(f"a map family must be a mapping or a callable, got {type(family).__name__}")


def _checked_member(family, level, rows, cols, label):
    m = _member(family, level)
    if m is not None and m.shape != (rows, cols):
        raise ShapeError(f"{label} at level {level} has shape {m.shape}, expected {(rows, cols)}")
    return m


def _sample_levels(levels, *systems):
    if levels is not None:
        return sorted(set(levels))
    merged = set()
    for system in systems:
        found = system.default_levels()
        if found is None:
            raise DomainError("sample levels are required for streamed systems")
        merged.update(found)
    return sorted(merged)


def _squares(V, W, f, levels, cutoff, target, label, report):
    """Check f_t . pi^V_{s->t} = pi^W_{target(s)->target(t)} . f_s"""
    usable = [t for t in levels if cutoff is None or t > cutoff]
    for a, s in enumerate(usable):
        fs = _checked_member(f, s, W.dim_at(target(s)), V.dim_at(s), label)
        if fs is None:
            continue
        for t in usable[a + 1:]:
            ft = _checked_member(f, t, W.dim_at(target(t)), V.dim_at(t), label)
            if ft is None:
                continue
            report.checked += 1
            if ft @ V.map_between(s, t) != W.map_between(target(s), target(t)) @ fs:
                report.ok = False
                report.first_violation = {'check': f'square-{label}', 's': s, 't': t}
                return False
    return True


def check_morphism(V, W, f, levels=None, cutoff=None, target=None):
    """Verify that f commutes with the persistence maps at all sampled squares"""
    target = target or (lambda t: t)
    report = CheckReport(ok=True)
    _squares(V, W, f, _sample_levels(levels, V), cutoff, target, 'f', report)
    return report


def _cross_check(V, W, stretch1, stretch2, f, g, levels, cutoff):
    target1 = lambda t: stretch1(t) * t
    target2 = lambda t: stretch2(t) * t
    report = CheckReport(ok=True)
    if not _squares(V, W, f, levels, cutoff, target1, 'f', report):
        return report
    if not _squares(W, V, g, levels, cutoff, target2, 'g', report):
        return report

    for t in levels:
        if cutoff is not None and t <= cutoff:
            continue
        # g . f = pi^V
        u = target1(t)
        ft = _checked_member(f, t, W.dim_at(u), V.dim_at(t), 'f')
        gu = _checked_member(g, u, V.dim_at(target2(u)), W.dim_at(u), 'g')
        if ft is not None and gu is not None:
            report.checked += 1
            if gu @ ft != V.map_between(t, target2(u)):
                report.ok = False
                report.first_violation = {'check': 'composite-gf', 't': t, 'through': u}
                return report
        # f . g = pi^W
        v = target2(t)
        gt = _checked_member(g, t, V.dim_at(v), W.dim_at(t), 'g')
        fv = _checked_member(f, v, W.dim_at(target1(v)), V.dim_at(v), 'f')
        if gt is not None and fv is not None:
            report.checked += 1
            if fv @ gt != W.map_between(t, target1(v)):
                report.ok = False
                report.first_violation = {'check': 'composite-fg', 't': t, 'through': v}
                return report
    return report


@dataclass
class InterleavingCandidate:
    eta1: float
    eta2: float
    f: object
    g: object
    cutoff: float = None

    def __post_init__(self):
        if self.eta1 < 1 or self.eta2 < 1:
            raise DomainError(f"interleaving constants must be >= 1, got ({self.eta1}, {self.eta2})")

    @classmethod
    def from_dict(cls, data, V, W):
        """Maps are row-major 0/1 lists aligned with the breakpoints of V (for f) and W (for g)"""
        if not isinstance(V, TabulatedFds) or not isinstance(W, TabulatedFds):
            raise ParseError("candidate documents need tabulated systems")
        try:
            eta1, eta2 = data['eta1'], data['eta2']
            raw_f, raw_g = data['f'], data['g']
        except (KeyError, TypeError) as exc:
            raise ParseError(f"candidate needs eta1, eta2, f and g ({exc})") from None
        if len(raw_f) != len(V.levels) or len(raw_g) != len(W.levels):
            raise ShapeError("one map per breakpoint is required for f and g")
        f = {t: F2Matrix.from_flat(values, W.dim_at(eta1 * t), V.dim_at(t))
             for t, values in zip(V.levels, raw_f)}
        g = {t: F2Matrix.from_flat(values, V.dim_at(eta2 * t), W.dim_at(t))
             for t, values in zip(W.levels, raw_g)}
        return cls(eta1=eta1, eta2=eta2, f=f, g=g, cutoff=data.get('cutoff'))


def check_interleaving(V, W, cand, levels=None):
    """Both morphism squares and both composite identities for an (eta1, eta2) candidate"""
    levels = _sample_levels(levels, V, W)
    return _cross_check(V, W, lambda t: cand.eta1, lambda t: cand.eta2,
                        cand.f, cand.g, levels, cand.cutoff)


def check_weak_interleaving(V, W, sigma1, sigma2, f, g, levels=None, cutoff=None):
    """Interleaving check with level-dependent stretches sigma_i(t) >= 1"""
    levels = _sample_levels(levels, V, W)

    def guarded(sigma, name):
        def stretch(t):
            value = sigma(t)
            if value < 1:
                raise DomainError(f"{name}({t}) = {value} < 1")
            return value
        return stretch

    for t in levels:
        guarded(sigma1, 'sigma1')(t)
        guarded(sigma2, 'sigma2')(t)
    return _cross_check(V, W, guarded(sigma1, 'sigma1'), guarded(sigma2, 'sigma2'),
                        f, g, levels, cutoff)


def canonical_dilation_interleaving(V, eta):
    """W = V(eta) with f_t = pi_{t->eta t} and g = identity, a (1, eta)-interleaving"""
    W = dilate(V, eta)
    f = lambda t: V.map_between(t, eta * t)
    g = lambda t: F2Matrix.identity(V.dim_at(eta * t))
    return W, InterleavingCandidate(eta1=1, eta2=eta, f=f, g=g)


# ============================================================
# LOADERS
# ============================================================

def load_tabulated_fds(path):
    return TabulatedFds.from_dict(read_json(path))


def load_interleaving_candidate(path, V, W):
    return InterleavingCandidate.from_dict(read_json(path), V, W)
