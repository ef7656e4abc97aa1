"""
GROWTHLAB - GROUPS
Finitely presented groups: presentations, Knuth-Bendix completion, exact
Tits-representation engines for triangle groups, ball growth and
abelianization.

Words are strings over single letters; an uppercase letter is the inverse
of its lowercase generator.
"""

import hashlib
import heapq
import json
import logging
import math
import os
import random
import threading
from abc import ABC, abstractmethod
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction

import joblib
import mpmath
import numpy as np
import pandas as pd
from joblib import Parallel, delayed

import config
from errors import DomainError, InputError
from exactlin import RingMatrix, int_matrix, real_cyclotomic_ring, ring_mat_mul, snf
from fds import LevelData, StreamedFds

logger = logging.getLogger(__name__)

GENERATOR_NAMES = 'abcdefghijklmnopqrstuvwxyz'

# x^10 + x^9 - x^7 - x^6 - x^5 - x^4 - x^3 + x + 1, highest degree first
LEHMER_COEFFS = (1, 1, 0, -1, -1, -1, -1, -1, 0, 1, 1)


# ============================================================
# WORDS AND PRESENTATIONS
# ============================================================

def invert_word(word):
    return ''.join(c.swapcase() for c in reversed(word))


def free_reduce(word):
    """Cancel adjacent x X and X x pairs"""
    stack = []
    for c in word:
        if stack and stack[-1] != c and stack[-1] == c.swapcase():
            stack.pop()
        else:
            stack.append(c)
    return ''.join(stack)


def exponent_sums(word, generators):
    index = {g: i for i, g in enumerate(generators)}
    sums = [0] * len(generators)
    for c in word:
        if c.islower():
            sums[index[c]] += 1
        else:
            sums[index[c.lower()]] -= 1
    return sums


@dataclass(frozen=True)
class FpGroupPresentation:
    """Generators plus freely reduced, non-empty relators"""
    generators: tuple
    relators: tuple
    notes: tuple = ()

    def __post_init__(self):
        generators = tuple(self.generators)
        if len(set(generators)) != len(generators):
            raise InputError(f"duplicate generator names in {list(generators)}")
        for g in generators:
            if len(g) != 1 or not g.isalpha() or not g.islower():
                raise InputError(f"generator names must be single lowercase letters, got {g!r}")
        known = set(generators) | {g.upper() for g in generators}
        notes = list(self.notes)
        relators = []
        for r in self.relators:
            unknown = sorted(set(r) - known)
            if unknown:
                raise InputError(f"relator {r!r} uses unknown letters {unknown}")
            reduced = free_reduce(r)
            if reduced != r:
                notes.append(f"relator {r!r} freely reduced to {reduced!r}")
            if not reduced:
                notes.append(f"relator {r!r} is trivial and was dropped")
                continue
            relators.append(reduced)
        object.__setattr__(self, 'generators', generators)
        object.__setattr__(self, 'relators', tuple(relators))
        object.__setattr__(self, 'notes', tuple(notes))

    @property
    def alphabet(self):
        """Shortlex alphabet: each generator followed by its inverse"""
        return ''.join(g + g.upper() for g in self.generators)

    @property
    def deficiency(self):
        return len(self.generators) - len(self.relators)

    @classmethod
    def from_dict(cls, data):
        return cls(tuple(data['generators']), tuple(data.get('relators', [])))

    def to_dict(self):
        return {'generators': list(self.generators), 'relators': list(self.relators)}


def free_presentation(k):
    if not 1 <= k <= len(GENERATOR_NAMES):
        raise DomainError(f"free group rank must be in 1..{len(GENERATOR_NAMES)}, got {k}")
    return FpGroupPresentation(tuple(GENERATOR_NAMES[:k]), ())


def cyclic_presentation(k):
    if k < 1:
        raise DomainError(f"cyclic order must be positive, got {k}")
    return FpGroupPresentation(('a',), ('a' * k,))


def _check_exponents(p, q, r):
    if min(p, q, r) < 2:
        raise DomainError(f"exponents must be at least 2, got ({p}, {q}, {r})")


def brieskorn_presentation(p, q, r):
    """G(p,q,r) = < a, b, c | a^p = b^q = c^r = abc >"""
    _check_exponents(p, q, r)
    tail = invert_word('abc')
    return FpGroupPresentation(('a', 'b', 'c'), ('a' * p + tail, 'b' * q + tail, 'c' * r + tail))


def von_dyck_presentation(p, q, r):
    """< a, b | a^p, b^q, (ab)^r >"""
    _check_exponents(p, q, r)
    return FpGroupPresentation(('a', 'b'), ('a' * p, 'b' * q, 'ab' * r))


def coxeter_presentation(p, q, r):
    """Triangle Coxeter group with m(a,b)=p, m(a,c)=q, m(b,c)=r"""
    _check_exponents(p, q, r)
    return FpGroupPresentation(('a', 'b', 'c'), ('aa', 'bb', 'cc', 'ab' * p, 'ac' * q, 'bc' * r))


# ============================================================
# ABELIANIZATION
# ============================================================

@dataclass(frozen=True)
class Abelianization:
    free_rank: int
    invariant_factors: tuple

    @property
    def is_trivial(self):
        return self.free_rank == 0 and not self.invariant_factors

    def describe(self):
        if self.is_trivial:
            return 'trivial'
        parts = []
        if self.free_rank:
            parts.append('Z' if self.free_rank == 1 else f"Z^{self.free_rank}")
        parts.extend(f"Z/{d}" for d in self.invariant_factors)
        return ' + '.join(parts)

    def to_dict(self):
        return {'free_rank': self.free_rank, 'invariant_factors': list(self.invariant_factors),
                'h1': self.describe(), 'trivial': self.is_trivial}


def relation_matrix(presentation):
    """Exponent-sum matrix: one row per relator, one column per generator"""
    rows = [exponent_sums(r, presentation.generators) for r in presentation.relators]
    shape = (len(rows), len(presentation.generators))
    return int_matrix([v for row in rows for v in row], shape=shape)


def abelianize(presentation):
    """H_1 = Z^free_rank + sum Z/d_i from the Smith form of the relation matrix"""
    decomposition = snf(relation_matrix(presentation))
    free_rank = len(presentation.generators) - decomposition.rank
    return Abelianization(free_rank=free_rank, invariant_factors=tuple(decomposition.invariant_factors))


@dataclass
class KervaireReport:
    h1_trivial: bool
    deficiency_ok: bool
    h2_status: str
    abelianization: Abelianization
    deficiency: int
    growth_rate: float = None

    def to_dict(self):
        return {
            'h1_trivial': self.h1_trivial,
            'deficiency_ok': self.deficiency_ok,
            'h2_status': self.h2_status,
            'h1': self.abelianization.describe(),
            'deficiency': self.deficiency,
            'growth_rate': self.growth_rate,
        }


def kervaire_check(presentation, growth=None):
    """Checkable Kervaire hypotheses; H_2 is always reported unknown"""
    ab = abelianize(presentation)
    return KervaireReport(
        h1_trivial=ab.is_trivial,
        deficiency_ok=len(presentation.relators) <= len(presentation.generators),
        h2_status='unknown',
        abelianization=ab,
        deficiency=presentation.deficiency,
        growth_rate=None if growth is None else growth.rate,
    )


# ============================================================
# REWRITING SYSTEMS
# ============================================================

class Shortlex:
    def __init__(self, alphabet):
        self.rank = {c: i for i, c in enumerate(alphabet)}

    def key(self, word):
        return (len(word), tuple(self.rank[c] for c in word))

    def orient(self, u, v):
        """(bigger, smaller)"""
        return (u, v) if self.key(u) > self.key(v) else (v, u)


class _RuleIndex:
    """Rules lhs -> rhs with prefix/suffix indexes for overlap search"""

    def __init__(self):
        self.rules = {}
        self.lengths = Counter()
        self.prefixes = defaultdict(set)
        self.suffixes = defaultdict(set)

    def __len__(self):
        return len(self.rules)

    def add(self, lhs, rhs):
        self.rules[lhs] = rhs
        self.lengths[len(lhs)] += 1
        for k in range(1, len(lhs)):
            self.prefixes[lhs[:k]].add(lhs)
            self.suffixes[lhs[-k:]].add(lhs)

    def remove(self, lhs):
        rhs = self.rules.pop(lhs)
        self.lengths[len(lhs)] -= 1
        if not self.lengths[len(lhs)]:
            del self.lengths[len(lhs)]
        for k in range(1, len(lhs)):
            self.prefixes[lhs[:k]].discard(lhs)
            self.suffixes[lhs[-k:]].discard(lhs)
        return rhs

    def sorted_lengths(self):
        return sorted(self.lengths)

    def overlaps(self, lhs):
        """Critical words of lhs with every rule (proper overlaps, both orders)"""
        rules = self.rules
        rhs = rules[lhs]
        for k in range(1, len(lhs)):
            # suffix of lhs = prefix of other
            for other in self.prefixes.get(lhs[-k:], ()):
                yield (rhs + other[k:], lhs[:-k] + rules[other])
            # suffix of other = prefix of lhs
            for other in self.suffixes.get(lhs[:k], ()):
                yield (rules[other] + lhs[k:], other[:-k] + rhs)


def _rewrite(word, rules, lengths):
    """Leftmost reduction with an output stack that is always irreducible"""
    out = []
    pending = list(reversed(word))
    while pending:
        out.append(pending.pop())
        for size in lengths:
            if size > len(out):
                break
            rhs = rules.get(''.join(out[-size:]))
            if rhs is not None:
                del out[-size:]
                pending.extend(reversed(rhs))
                break
    return ''.join(out)


@dataclass
class RewritingSystem:
    alphabet: str
    rules: dict
    confluent: bool
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        self._lengths = sorted({len(lhs) for lhs in self.rules})

    def reduce(self, word):
        return _rewrite(word, self.rules, self._lengths)

    def is_irreducible(self, word):
        return self.reduce(word) == word

    def sorted_rules(self):
        order = Shortlex(self.alphabet)
        return sorted(self.rules.items(), key=lambda item: order.key(item[0]))

    def irreducible_counts(self, n_max):
        """Number of irreducible words of each length 0..n_max (Aho-Corasick automaton)"""
        goto = [{}]
        dead = [False]
        for lhs in self.rules:
            state = 0
            for c in lhs:
                nxt = goto[state].get(c)
                if nxt is None:
                    goto.append({})
                    dead.append(False)
                    nxt = len(goto) - 1
                    goto[state][c] = nxt
                state = nxt
            dead[state] = True

        fail = [0] * len(goto)
        queue = deque()
        for c, nxt in goto[0].items():
            queue.append(nxt)
        while queue:
            state = queue.popleft()
            dead[state] = dead[state] or dead[fail[state]]
            for c, nxt in goto[state].items():
                back = fail[state]
                while back and c not in goto[back]:
                    back = fail[back]
                fail[nxt] = goto[back].get(c, 0) if goto[back].get(c, 0) != nxt else 0
                queue.append(nxt)

        def step(state, c):
            while state and c not in goto[state]:
                state = fail[state]
            return goto[state].get(c, 0)

        live = [s for s in range(len(goto)) if not dead[s]]
        delta = {s: [step(s, c) for c in self.alphabet] for s in live}

        counts = [1]
        current = {0: 1}
        for _ in range(n_max):
            following = defaultdict(int)
            for state, ways in current.items():
                for nxt in delta[state]:
                    if not dead[nxt]:
                        following[nxt] += ways
            current = following
            counts.append(sum(current.values()))
        return counts

    def save(self, path):
        os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
        joblib.dump({'alphabet': self.alphabet, 'rules': self.rules,
                     'confluent': self.confluent, 'stats': self.stats}, path)
        logger.info("✓ Saved rewriting system: %s", path)

    @classmethod
    def load(cls, path):
        data = joblib.load(path)
        return cls(alphabet=data['alphabet'], rules=data['rules'],
                   confluent=data['confluent'], stats=data.get('stats', {}))


def knuth_bendix(presentation, max_rules=None, max_len=None):
    """Shortlex completion with interreduction; caps give an incomplete system, not an error"""
    max_rules = config.KB_MAX_RULES if max_rules is None else max_rules
    max_len = config.KB_MAX_LEN if max_len is None else max_len
    if max_rules < 1 or max_len < 1:
        raise DomainError(f"completion caps must be positive, got rules={max_rules}, len={max_len}")

    alphabet = presentation.alphabet
    order = Shortlex(alphabet)
    index = _RuleIndex()
    pending = []
    counter = 0

    def push(u, v):
        nonlocal counter
        counter += 1
        heapq.heappush(pending, (max(len(u), len(v)), counter, u, v))

    def reduce(word):
        return _rewrite(word, index.rules, index.sorted_lengths())

    for g in presentation.generators:
        push(g + g.upper(), '')
        push(g.upper() + g, '')
    for r in presentation.relators:
        push(r, '')

    stats = Counter()
    stop_reason = None
    # oriented equations longer than max_len; never queued twice
    dropped = set()
    while True:
        while pending:
            _, _, u, v = heapq.heappop(pending)
            stats['equations'] += 1
            u, v = reduce(u), reduce(v)
            if u == v:
                continue
            lhs, rhs = order.orient(u, v)
            if len(lhs) > max_len:
                dropped.add((lhs, rhs))
                continue

            # rules whose left side contains the new one go back to the queue
            for old in [l for l in index.rules if lhs in l]:
                push(old, index.remove(old))
            index.add(lhs, rhs)
            for old, old_rhs in list(index.rules.items()):
                if lhs in old_rhs:
                    index.rules[old] = reduce(old_rhs)

            for left, right in index.overlaps(lhs):
                stats['critical_pairs'] += 1
                push(left, right)

            if len(index) > max_rules:
                stop_reason = 'max_rules'
                break
        if stop_reason is not None:
            break

        # final sweep: every overlap of the finished system must resolve;
        # only equations short enough to become rules go back to the queue
        requeued = 0
        for lhs in list(index.rules):
            for left, right in index.overlaps(lhs):
                u, v = reduce(left), reduce(right)
                if u == v:
                    continue
                long_lhs, long_rhs = order.orient(u, v)
                if len(long_lhs) > max_len:
                    dropped.add((long_lhs, long_rhs))
                    continue
                push(u, v)
                requeued += 1
        if not requeued:
            break

    # later rules may have resolved an equation that was too long when it appeared
    dropped = {(u, v) for u, v in dropped if reduce(u) != reduce(v)}
    if stop_reason is None and dropped:
        stop_reason = 'max_len'
    confluent = stop_reason is None
    stats['dropped'] = len(dropped)
    stats = dict(stats)
    stats.update({'rules': len(index), 'stop_reason': stop_reason,
                  'max_rules': max_rules, 'max_len': max_len})
    if confluent:
        logger.info("✓ Completion finished: %d rules, confluent", len(index))
    else:
        logger.warning("⚠️  Completion incomplete: %d rules (%s, %d long equations dropped)",
                       len(index), stop_reason, stats["dropped"])
    return RewritingSystem(alphabet=alphabet, rules=dict(index.rules), confluent=confluent, stats=stats)


def _cache_path(presentation, cache_dir, max_rules, max_len):
    payload = json.dumps({'p': presentation.to_dict(), 'rules': max_rules, 'len': max_len}, sort_keys=True)
    digest = hashlib.sha1(payload.encode('utf-8')).hexdigest()[:16]
    return os.path.join(cache_dir, f"kb_{digest}.pkl")


def complete_presentation(presentation, max_rules=None, max_len=None, cache_dir=None):
    """knuth_bendix with an optional on-disk cache of finished systems"""
    if cache_dir is None:
        return knuth_bendix(presentation, max_rules, max_len)
    path = _cache_path(presentation, cache_dir, max_rules, max_len)
    if os.path.exists(path):
        logger.info("✓ Loaded rewriting system from cache: %s", path)
        return RewritingSystem.load(path)
    system = knuth_bendix(presentation, max_rules, max_len)
    system.save(path)
    return system


# ============================================================
# GROUP ENGINES
# ============================================================

class GroupEngine(ABC):
    """A solved word problem. Forms are engine values; keys are their hashable serializations."""
    kind = None
    letters = ''

    def check_word(self, word):
        for c in word:
            if c not in self.letters:
                raise InputError(f"unknown letter {c!r} for a {self.kind} engine over {self.letters!r}")

    @abstractmethod
    def normalize(self, word):
        """Canonical form of a word"""

    @abstractmethod
    def key(self, form):
        """Hashable canonical serialization"""

    @abstractmethod
    def from_key(self, key):
        pass

    @abstractmethod
    def compose(self, u, v):
        pass

    @abstractmethod
    def invert(self, u):
        pass

    @abstractmethod
    def identity(self):
        pass

    @property
    def exact(self):
        """True when equal keys mean equal elements and conversely"""
        return True

    def default_generating_set(self):
        return list(self.letters)

    def word_key(self, word):
        return self.key(self.normalize(word))

    def multiply_keys(self, a, b):
        return self.key(self.compose(self.from_key(a), self.from_key(b)))

    def equal(self, u, v):
        return self.word_key(u) == self.word_key(v)

    def is_symmetric(self, generating_set):
        keys = {self.word_key(w) for w in generating_set}
        inverses = {self.key(self.invert(self.normalize(w))) for w in generating_set}
        return keys == inverses

    # --- batches of elements for breadth-first search ---

    def seed(self, keys):
        return [self.from_key(k) for k in keys]

    def expand(self, batch, key):
        """Right-multiply every element of the batch by the element `key`"""
        g = self.from_key(key)
        return [self.compose(x, g) for x in batch]

    def batch_keys(self, batch):
        return [self.key(x) for x in batch]

    def take(self, batch, indices):
        return [batch[i] for i in indices]

    def concat(self, batches):
        return [x for b in batches for x in b]

    def chunk(self, batch, pieces):
        size = max(1, math.ceil(len(batch) / pieces))
        return [batch[i:i + size] for i in range(0, len(batch), size)]


class RewritingEngine(GroupEngine):
    """Normal forms are irreducible words of a rewriting system"""
    kind = 'rewriting'

    def __init__(self, system, presentation=None):
        self.system = system
        self.presentation = presentation
        self.letters = system.alphabet

    @property
    def exact(self):
        return self.system.confluent

    def normalize(self, word):
        self.check_word(word)
        return self.system.reduce(word)

    def key(self, form):
        return form

    def from_key(self, key):
        return key

    def compose(self, u, v):
        return self.system.reduce(u + v)

    def invert(self, u):
        return self.system.reduce(invert_word(u))

    def identity(self):
        return ''

    def expand(self, batch, key):
        reduce = self.system.reduce
        return [reduce(x + key) for x in batch]


def rewriting_engine(presentation, max_rules=None, max_len=None, cache_dir=None):
    system = complete_presentation(presentation, max_rules, max_len, cache_dir)
    return RewritingEngine(system, presentation)


def default_ring_order(labels):
    """lcm of the labels that need an irrational 2cos(pi/m); 2 when there are none"""
    big = [m for m in labels if m >= 4]
    return math.lcm(*big) if big else 2


class CoxeterTitsEngine(GroupEngine):
    """Triangle Coxeter group as exact 3x3 matrices of the Tits reflection representation.
    Labels: m(a,b) = p, m(a,c) = q, m(b,c) = r."""
    kind = 'coxeter-tits'
    letters = 'abc'
    _OVERFLOW_GUARD = 2 ** 52

    def __init__(self, p, q, r, order=None):
        if min(p, q, r) < 2:
            raise DomainError(f"Coxeter labels must be at least 2, got ({p}, {q}, {r})")
        self.labels = (p, q, r)
        self.m = {(0, 1): p, (1, 0): p, (0, 2): q, (2, 0): q, (1, 2): r, (2, 1): r}
        self.order = default_ring_order(self.labels) if order is None else order
        self.ring = real_cyclotomic_ring(self.order)
        # ring.two_cos raises DomainError when a label does not divide the order
        self.two_cos = {pair: self.ring.two_cos(m) for pair, m in self.m.items()}
        self._mul_cache = {}

        self.reflections = [self._reflection(i) for i in range(3)]
        self._by_letter = dict(zip('abc', self.reflections))
        # elements reachable by a fixed reflection word take the column fast path
        self._fast_words = {self.key(s): letter for letter, s in zip('abc', self.reflections)}
        logger.debug("✓ Coxeter engine %s over Z[2cos(pi/%d)] (degree %d)",
                     self.labels, self.order, self.ring.degree)

    @property
    def geometry(self):
        total = sum(Fraction(1, m) for m in self.labels)
        if total < 1:
            return 'hyperbolic'
        return 'euclidean' if total == 1 else 'spherical'

    def _reflection(self, i):
        # row i of sigma_i is (delta_ij - B_ij) with B_ij = -2cos(pi/m_ij), B_ii = 2
        ring = self.ring
        rows = []
        for row in range(3):
            if row != i:
                rows.append(tuple(ring.one if col == row else ring.zero for col in range(3)))
            else:
                rows.append(tuple(ring.scalar(-1) if col == i else self.two_cos[(i, col)]
                                  for col in range(3)))
        return RingMatrix(ring, tuple(rows))

    def bilinear_form(self):
        """Tits form as ring elements: 2 on the diagonal, -2cos(pi/m_ij) off it"""
        ring = self.ring
        return [[ring.scalar(2) if i == j else ring.neg(self.two_cos[(i, j)]) for j in range(3)]
                for i in range(3)]

    def _product(self, reflection_word):
        result = RingMatrix.identity(self.ring)
        for c in reflection_word:
            result = ring_mat_mul(result, self._by_letter[c])
        return result

    def normalize(self, word):
        if isinstance(word, RingMatrix):
            return word
        self.check_word(word)
        return self._product(word)

    def key(self, form):
        return form.to_array().tobytes()

    def from_key(self, key):
        array = np.frombuffer(key, dtype=np.int64).reshape(3, 3, self.ring.degree)
        return RingMatrix.from_array(self.ring, array)

    def compose(self, u, v):
        return ring_mat_mul(u, v)

    def invert(self, u):
        return _ring_inverse(u)

    def identity(self):
        return RingMatrix.identity(self.ring)

    # --- vectorized batches: int64 arrays of shape (K, 3, 3, degree) ---

    def _mul_matrix(self, element):
        cached = self._mul_cache.get(element)
        if cached is None:
            cached = self.ring.mul_matrix(element)
            self._mul_cache[element] = cached
        return cached

    def _guard(self, out):
        if out.size and np.abs(out).max() > self._OVERFLOW_GUARD:
            raise DomainError("matrix coefficients left the exact int64 range; lower n_max")
        return out

    def _reflect(self, batch, i):
        out = batch.copy()
        column = batch[:, :, i, :]
        out[:, :, i, :] = -column
        for j in range(3):
            if j == i:
                continue
            c = self.two_cos[(i, j)]
            if any(c):
                out[:, :, j, :] += column @ self._mul_matrix(c).T
        return out

    def _general(self, batch, matrix):
        out = np.zeros_like(batch)
        for k in range(3):
            column = batch[:, :, k, :]
            for j in range(3):
                c = matrix.entries[k][j]
                if any(c):
                    out[:, :, j, :] += column @ self._mul_matrix(c).T
        return out

    def seed(self, keys):
        d = self.ring.degree
        if not keys:
            return np.zeros((0, 3, 3, d), dtype=np.int64)
        return np.stack([np.frombuffer(k, dtype=np.int64).reshape(3, 3, d) for k in keys])

    def expand(self, batch, key):
        word = self._fast_words.get(key)
        if word is not None:
            for c in word:
                batch = self._reflect(batch, 'abc'.index(c))
            return self._guard(batch)
        return self._guard(self._general(batch, self.from_key(key)))

    def batch_keys(self, batch):
        flat = np.ascontiguousarray(batch).reshape(len(batch), -1)
        return [row.tobytes() for row in flat]

    def take(self, batch, indices):
        return batch[np.asarray(indices, dtype=np.intp)]

    def concat(self, batches):
        return np.concatenate(batches, axis=0)

    def chunk(self, batch, pieces):
        return [part for part in np.array_split(batch, pieces) if len(part)]


class VonDyckEngine(CoxeterTitsEngine):
    """Rotation subgroup with x = ab, y = bc, so x^p = y^r = (xy)^q = 1"""
    kind = 'von-dyck'
    letters = 'xXyY'
    WORDS = {'x': 'ab', 'X': 'ba', 'y': 'bc', 'Y': 'cb'}

    def __init__(self, p, q, r, order=None):
        super().__init__(p, q, r, order=order)
        for letter, word in self.WORDS.items():
            self._fast_words[self.key(self._product(word))] = word

    def normalize(self, word):
        if isinstance(word, RingMatrix):
            return word
        self.check_word(word)
        return self._product(''.join(self.WORDS[c] for c in word))


def coxeter_triangle_engine(p, q, r, order=None):
    return CoxeterTitsEngine(p, q, r, order=order)


def von_dyck_engine(p, q, r, order=None):
    return VonDyckEngine(p, q, r, order=order)


def _ring_inverse(m):
    """Inverse of a ring matrix with determinant +-1, via the adjugate"""
    ring = m.ring
    e = m.entries

    def minor(i, j):
        rows = [r for r in range(3) if r != i]
        cols = [c for c in range(3) if c != j]
        a, b = e[rows[0]][cols[0]], e[rows[0]][cols[1]]
        c, d = e[rows[1]][cols[0]], e[rows[1]][cols[1]]
        return ring.sub(ring.mul(a, d), ring.mul(b, c))

    cof = [[minor(i, j) if (i + j) % 2 == 0 else ring.neg(minor(i, j)) for j in range(3)]
           for i in range(3)]
    det = ring.zero
    for j in range(3):
        det = ring.add(det, ring.mul(e[0][j], cof[0][j]))
    if det == ring.one:
        sign = 1
    elif det == ring.scalar(-1):
        sign = -1
    else:
        raise DomainError("matrix is not invertible over the ring")
    adj = tuple(tuple(cof[j][i] if sign == 1 else ring.neg(cof[j][i]) for j in range(3))
                for i in range(3))
    return RingMatrix(ring, adj)


# ============================================================
# BALL GROWTH
# ============================================================

@dataclass
class BallTable:
    generating_set: list
    sizes: list
    truncated: bool = False
    closed: bool = False
    method: str = 'bfs'

    @property
    def n_max(self):
        return len(self.sizes) - 1

    @property
    def spheres(self):
        return [self.sizes[0]] + [b - a for a, b in zip(self.sizes, self.sizes[1:])]

    @property
    def group_order(self):
        return self.sizes[-1] if self.closed else None

    def ratios(self):
        return [b / a for a, b in zip(self.sizes, self.sizes[1:])]

    def submultiplicative_violations(self):
        sizes = self.sizes
        return [(m, n) for m in range(len(sizes)) for n in range(m, len(sizes) - m)
                if sizes[m + n] > sizes[m] * sizes[n]]

    def is_submultiplicative(self):
        return not self.submultiplicative_violations()

    def to_frame(self):
        ratios = [None] + self.ratios()
        return pd.DataFrame({'n': range(len(self.sizes)), 'ball': self.sizes,
                             'sphere': self.spheres, 'ratio': ratios})

    def to_dict(self):
        return {'generating_set': list(self.generating_set), 'sizes': list(self.sizes),
                'spheres': self.spheres, 'truncated': self.truncated, 'closed': self.closed,
                'method': self.method, 'group_order': self.group_order}


class SphereWalker:
    """Breadth-first search of the Cayley graph, one sphere per step.

    With a symmetric generating set started at the identity only three
    spheres are held (neighbours of sphere n lie in spheres n-1, n, n+1);
    otherwise every visited element is kept.
    """

    def __init__(self, engine, generator_keys, start_keys=None, window=None,
                 record=False, memory_cap=None, threads=None):
        self.engine = engine
        self.generator_keys = list(generator_keys)
        if start_keys is None:
            start_keys = [engine.key(engine.identity())]
        start_keys = list(dict.fromkeys(start_keys))
        if window is None:
            window = False
        self.window = window
        self.record = record
        self.memory_cap = config.BFS_MEMORY_CAP if memory_cap is None else memory_cap
        self.threads = config.THREADS if threads is None else threads

        self.sphere_sizes = [len(start_keys)]
        self.spheres = [list(start_keys)] if record else None
        self.parents = {k: None for k in start_keys} if record else None
        self._batch = engine.seed(start_keys)
        self._current_keys = list(start_keys)
        self._previous = set()
        self._current = set(start_keys)
        self._seen = None if window else set(start_keys)
        self.truncated = False
        self.closed = False
        self._lock = threading.Lock()

    @property
    def radius(self):
        return len(self.sphere_sizes) - 1

    @property
    def sphere(self):
        """Keys of the outermost sphere reached so far"""
        return self._current_keys

    def held(self):
        if self.window:
            return len(self._previous) + len(self._current)
        return len(self._seen)

    def _candidates(self):
        engine = self.engine
        pieces = engine.chunk(self._batch, self.threads) if self.threads > 1 else [self._batch]
        jobs = [(g, piece) for g in self.generator_keys for piece in pieces]
        if self.threads > 1 and len(jobs) > 1:
            parts = Parallel(n_jobs=self.threads, prefer='threads')(
                delayed(engine.expand)(piece, g) for g, piece in jobs)
        else:
            parts = [engine.expand(piece, g) for g, piece in jobs]
        # candidate i came from element i % len(batch) of the sphere, in generator order
        return engine.concat(parts) if parts else self._batch[:0]

    def step(self):
        """Compute the next sphere; False once the group is exhausted or the cap is hit"""
        if self.closed or self.truncated:
            return False
        engine = self.engine
        size = len(self._current_keys)
        if size == 0:
            self.closed = True
            return False
        candidates = self._candidates()
        keys = engine.batch_keys(candidates)
        excluded = (self._previous | self._current) if self.window else self._seen
        fresh = {}
        for i, k in enumerate(keys):
            if k in excluded or k in fresh:
                continue
            fresh[k] = i

        held = self.held() + len(fresh)
        if held > self.memory_cap:
            self.truncated = True
            logger.warning("⚠️  BFS memory cap %d reached at radius %d", self.memory_cap, self.radius + 1)
            return False

        if self.record:
            for k, i in fresh.items():
                self.parents[k] = (self._current_keys[i % size], i // size)
            self.spheres.append(list(fresh))
        self._batch = engine.take(candidates, list(fresh.values()))
        if self.window:
            self._previous = self._current
            self._current = set(fresh)
        else:
            self._seen.update(fresh)
        self._current_keys = list(fresh)
        self.sphere_sizes.append(len(fresh))
        if not fresh:
            self.closed = True
        return True

    def run(self, n_max):
        with self._lock:
            while self.radius < n_max:
                if not self.step():
                    break
        return self

    def word_of(self, key):
        """A shortest word (as generator indices) reaching key; needs record=True"""
        letters = []
        while self.parents[key] is not None:
            key, g = self.parents[key]
            letters.append(g)
        return list(reversed(letters))


def _resolve_generating_set(engine, generating_set):
    S = engine.default_generating_set() if generating_set is None else list(generating_set)
    if not S:
        raise DomainError("generating set must be nonempty")
    for w in S:
        engine.check_word(w)
    return S


def ball_sizes(engine, generating_set=None, n_max=10, method='auto', memory_cap=None, threads=None):
    """Exact |B(0)|..|B(n_max)| by BFS, or by counting irreducible words of a confluent system"""
    if n_max < 1:
        raise DomainError(f"n_max must be at least 1, got {n_max}")
    S = _resolve_generating_set(engine, generating_set)

    automaton_ok = (isinstance(engine, RewritingEngine) and engine.system.confluent
                    and sorted(S) == sorted(engine.letters))
    if method == 'auto':
        method = 'automaton' if automaton_ok else 'bfs'
    if method == 'automaton':
        if not automaton_ok:
            raise DomainError("automaton counting needs a confluent rewriting engine and S = all letters")
        counts = engine.system.irreducible_counts(n_max)
        sizes = list(np.cumsum(counts).tolist())
        return BallTable(generating_set=S, sizes=sizes, closed=counts[-1] == 0, method='automaton')
    if method != 'bfs':
        raise DomainError(f"unknown ball method {method!r}")

    keys = [engine.word_key(w) for w in S]
    walker = SphereWalker(engine, keys, window=engine.is_symmetric(S),
                          memory_cap=memory_cap, threads=threads)
    walker.run(n_max)
    sizes = list(np.cumsum(walker.sphere_sizes).tolist())
    if walker.closed:
        sizes += [sizes[-1]] * (n_max + 1 - len(sizes))
    if walker.truncated:
        logger.warning("⚠️  Ball table truncated at n=%d", len(sizes) - 1)
    return BallTable(generating_set=S, sizes=sizes[:n_max + 1], truncated=walker.truncated,
                     closed=walker.closed, method='bfs')


def ball_filtration_fds(engine, generating_set=None, memory_cap=None):
    """Level n = F2-span of B(n), maps = inclusions"""
    S = _resolve_generating_set(engine, generating_set)
    walker = SphereWalker(engine, [engine.word_key(w) for w in S], memory_cap=memory_cap)
    # elements in BFS order; B(n) is the prefix of length sizes[n]
    elements = [engine.key(engine.identity())]
    sizes = [1]
    lock = threading.Lock()

    def ball_size(n):
        with lock:
            while len(sizes) <= n:
                if walker.step():
                    elements.extend(walker.sphere)
                elif walker.truncated:
                    raise DomainError(f"memory cap reached before radius {n}")
                sizes.append(len(elements))
            return sizes[n]

    def rule(n):
        here, there = ball_size(n), ball_size(n + 1)
        return LevelData(dim=here, basis=elements, next_dim=there)

    return StreamedFds(rule, monotone=True, name=f"ball-{engine.kind}")


# ============================================================
# CROSS-CHECKS AND CONSTANTS
# ============================================================

def lehmer_root(tolerance=1e-15):
    """Largest real root of Lehmer's polynomial by bisection on [1, 2]"""
    with mpmath.workdps(30):
        lo, hi = mpmath.mpf(1), mpmath.mpf(2)
        value = lambda x: mpmath.polyval(list(LEHMER_COEFFS), x)
        while hi - lo > tolerance:
            mid = (lo + hi) / 2
            if value(mid) > 0:
                hi = mid
            else:
                lo = mid
        return float((lo + hi) / 2)


@dataclass
class CrossValidationReport:
    status: str
    pairs: int = 0
    agreements: int = 0
    equal_pairs: int = 0
    disagreements: list = field(default_factory=list)

    @property
    def ok(self):
        return self.status == 'compared' and not self.disagreements

    def to_dict(self):
        return {'status': self.status, 'pairs': self.pairs, 'agreements': self.agreements,
                'equal_pairs': self.equal_pairs, 'disagreements': self.disagreements[:10]}


def cross_validate_engines(first, second, relators, letter_map=None, pairs=1000, max_len=12, seed=None):
    """Compare word equality in two engines on random pairs; half the pairs are equal by construction"""
    for engine in (first, second):
        if not engine.exact:
            logger.warning("⚠️  Skipping cross-validation: %s engine is not confluent", engine.kind)
            return CrossValidationReport(status='skipped-incomplete')
    letter_map = letter_map or {c: c for c in first.letters}
    translate = lambda w: ''.join(letter_map[c] for c in w)
    rng = random.Random(config.DEFAULT_RANDOM_SEED if seed is None else seed)
    letters = first.letters
    relators = list(relators)

    report = CrossValidationReport(status='compared', pairs=pairs)
    for i in range(pairs):
        u = ''.join(rng.choice(letters) for _ in range(rng.randint(0, max_len)))
        if i % 2 == 0 and relators:
            cut = rng.randint(0, len(u))
            v = u[:cut] + rng.choice(relators) + u[cut:]
        else:
            v = ''.join(rng.choice(letters) for _ in range(rng.randint(0, max_len)))
        a = first.equal(u, v)
        b = second.equal(translate(u), translate(v))
        if a == b:
            report.agreements += 1
            report.equal_pairs += int(a)
        else:
            report.disagreements.append({'u': u, 'v': v, first.kind: a, second.kind: b})
    return report
