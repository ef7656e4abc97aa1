"""
GROWTHLAB - PRESETS
Named groups and plumbing trees for one-command runs:

  coxeter-P-Q-R      triangle Coxeter group, reflections a, b, c
  von-dyck-P-Q-R     < x, y | x^P, y^Q, (xy)^R > inside the Coxeter group
  brieskorn-P-Q-R    G(P,Q,R) = < a, b, c | a^P = b^Q = c^R = abc >
  free-K, cyclic-K
  e8-plumbing-tree, two-vertex-plumbing
"""

import re
from dataclasses import dataclass

from errors import DomainError
from groups import (GENERATOR_NAMES, FpGroupPresentation, brieskorn_presentation, coxeter_presentation,
                    coxeter_triangle_engine, cyclic_presentation, free_presentation, rewriting_engine,
                    von_dyck_engine, von_dyck_presentation)
from topobook import PlumbingTree

GROUP_PATTERNS = {
    'coxeter': re.compile(r'^coxeter-(\d+)-(\d+)-(\d+)$'),
    'von-dyck': re.compile(r'^von-dyck-(\d+)-(\d+)-(\d+)$'),
    'brieskorn': re.compile(r'^brieskorn-(\d+)-(\d+)-(\d+)$'),
    'free': re.compile(r'^free-(\d+)$'),
    'cyclic': re.compile(r'^cyclic-(\d+)$'),
}

# von Dyck generators inside the Coxeter engine
VON_DYCK_LETTERS = {'a': 'x', 'A': 'X', 'b': 'y', 'B': 'Y'}

E8_EDGES = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (4, 7)]

PLUMBING_PRESETS = {
    'e8-plumbing-tree': lambda: PlumbingTree(n=4, vertices=['Q'] + [f"S{i}" for i in range(1, 8)],
                                             edges=E8_EDGES),
    'two-vertex-plumbing': lambda: PlumbingTree(n=3, vertices=['M(2,3,7)', 'S3'], edges=[(0, 1)]),
}

EXAMPLE_NAMES = ['coxeter-2-3-7', 'coxeter-2-3-3', 'von-dyck-2-3-7', 'von-dyck-2-3-5',
                 'brieskorn-2-3-7', 'brieskorn-2-3-5', 'free-2', 'cyclic-3']


@dataclass
class GroupPreset:
    name: str
    family: str
    params: tuple
    presentation: FpGroupPresentation

    def engine(self, max_rules=None, max_len=None, cache_dir=None):
        """Exact matrix engines for Coxeter and von Dyck groups, completion otherwise"""
        if self.family == 'coxeter':
            return coxeter_triangle_engine(*self.params)
        if self.family == 'von-dyck':
            p, q, r = self.params
            # x = ab has order m(a,b), y = bc has order m(b,c), xy = ac has order m(a,c)
            return von_dyck_engine(p, r, q)
        return rewriting_engine(self.presentation, max_rules=max_rules, max_len=max_len, cache_dir=cache_dir)

    @property
    def letter_map(self):
        """Presentation letters to engine letters"""
        if self.family == 'von-dyck':
            return dict(VON_DYCK_LETTERS)
        if self.family == 'coxeter':
            # reflections are involutions
            return {c: c.lower() for c in self.presentation.alphabet}
        return {c: c for c in self.presentation.alphabet}

    def translate(self, word):
        mapping = self.letter_map
        return ''.join(mapping.get(c, c) for c in word)


def group_preset(name):
    for family, pattern in GROUP_PATTERNS.items():
        match = pattern.match(name)
        if match is None:
            continue
        params = tuple(int(g) for g in match.groups())
        if family == 'coxeter':
            presentation = coxeter_presentation(*params)
        elif family == 'von-dyck':
            presentation = von_dyck_presentation(*params)
        elif family == 'brieskorn':
            presentation = brieskorn_presentation(*params)
        elif family == 'free':
            presentation = free_presentation(params[0])
        else:
            presentation = cyclic_presentation(params[0])
        return GroupPreset(name=name, family=family, params=params, presentation=presentation)
    raise DomainError(f"unknown group preset {name!r}")


def plumbing_preset(name):
    factory = PLUMBING_PRESETS.get(name)
    if factory is None:
        raise DomainError(f"unknown plumbing preset {name!r}; known: {sorted(PLUMBING_PRESETS)}")
    return factory()


def list_presets():
    return {
        'groups': {
            'patterns': ['coxeter-P-Q-R', 'von-dyck-P-Q-R', 'brieskorn-P-Q-R', 'free-K', 'cyclic-K'],
            'examples': list(EXAMPLE_NAMES),
        },
        'plumbing': sorted(PLUMBING_PRESETS),
        'max_free_rank': len(GENERATOR_NAMES),
    }
