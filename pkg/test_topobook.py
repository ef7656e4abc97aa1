"""
GROWTHLAB - TOPOLOGY BOOKKEEPING TESTS
"""

import os

import numpy as np
import pytest

from errors import DomainError, InvalidComplexError, ParseError, ShapeError
from exactlin import int_det
from presets import plumbing_preset
from topobook import (ChainComplex, EntropyBoundInput, PlumbingTree, brieskorn_is_homology_sphere,
                      chain_homology, entropy_lower_bound, intersection_form, is_homology_sphere,
                      load_chain_complex, load_plumbing_tree, plumbing_homology, sphere_profile,
                      symplectic_growth_lower_bound)

DATA = os.path.join(os.path.dirname(__file__), 'data')


def _complex(name):
    return load_chain_complex(os.path.join(DATA, name))


# ============================================================
# CHAIN COMPLEXES
# ============================================================

def test_sphere_and_point():
    s3 = chain_homology(_complex('complex-s3.json'))
    assert s3.betti == [1, 0, 0, 1]
    assert is_homology_sphere(s3, 3)
    point = chain_homology(_complex('complex-point.json'))
    assert point.betti == [1]


def test_projective_plane_torsion():
    rp2 = chain_homology(_complex('complex-rp2.json'))
    assert rp2.betti == [1, 0, 0]
    assert rp2.torsion == [[], [2], []]
    assert rp2.describe(1) == 'Z/2'
    assert not rp2.is_torsion_free()
    assert not is_homology_sphere(rp2, 2)


def test_product_of_spheres():
    profile = chain_homology(_complex('complex-s3xs2.json'))
    assert profile.betti == [1, 0, 1, 1, 0, 1]
    assert profile.euler_characteristic() == 0
    assert not is_homology_sphere(profile, 5)


def test_plumbing_boundary_complex():
    profile = chain_homology(_complex('complex-plumbing-boundary-n1.json'))
    assert is_homology_sphere(profile, 5)


def test_boundary_maps_must_compose_to_zero():
    with pytest.raises(InvalidComplexError):
        ChainComplex(dims=[1, 1, 1], boundaries=[[[1]], [[1]]])
    with pytest.raises(ShapeError):
        ChainComplex(dims=[1, 2], boundaries=[[[1]]])


def test_from_dict_needs_dims_for_empty_maps():
    complex_ = ChainComplex.from_dict({'top': 2, 'boundaries': [[[0]], [[2]]]})
    assert complex_.dims == [1, 1, 1]
    with pytest.raises(ParseError):
        ChainComplex.from_dict({'top': 2, 'boundaries': [[], [[2]]]})


def test_euler_characteristic_matches_betti_numbers():
    rng = np.random.default_rng(5)
    for _ in range(100):
        dims = [int(d) for d in rng.integers(0, 4, size=4)]
        d2 = rng.integers(-3, 4, size=(dims[1], dims[2])).tolist()
        complex_ = ChainComplex(dims=dims, boundaries=[None, d2 if dims[1] and dims[2] else None, None])
        profile = chain_homology(complex_)
        assert profile.euler_characteristic() == complex_.euler_characteristic()
        assert all(b >= 0 for b in profile.betti)


def test_sphere_profiles():
    assert is_homology_sphere(sphere_profile(3), 3)
    assert not is_homology_sphere(sphere_profile(3, 2), 3)
    assert not is_homology_sphere(sphere_profile(2), 3)


# ============================================================
# PLUMBING
# ============================================================

def test_e8_plumbing():
    tree = load_plumbing_tree(os.path.join(DATA, 'plumbing-e8.json'))
    report = plumbing_homology(tree)
    assert report.interior.betti[4] == 8
    assert report.boundary_homology_sphere == 'true'
    assert int_det(intersection_form(tree)) == 1
    assert plumbing_preset('e8-plumbing-tree').to_dict() == tree.to_dict()


def test_two_vertex_plumbing():
    report = plumbing_homology(plumbing_preset('two-vertex-plumbing'))
    assert report.interior.betti[3] == 2
    assert report.boundary_homology_sphere == 'true'
    assert report.perfect_matching


@pytest.mark.parametrize('edges', [[(0, 1)], [(0, 1), (1, 2)], [(0, 1), (1, 2), (2, 3)], [(0, 1), (0, 2), (0, 3)]])
def test_odd_plumbing_matching_agrees_with_flag(edges):
    size = max(max(e) for e in edges) + 1
    tree = PlumbingTree(n=3, vertices=[f"S{i}" for i in range(size)], edges=edges)
    report = plumbing_homology(tree)
    assert report.perfect_matching == (report.boundary_homology_sphere == 'true')
    data = report.to_dict()
    assert data['diagnostics'] == {'perfect_matching': report.perfect_matching}
    assert 'perfect_matching' not in data


def test_single_vertex_plumbing():
    report = plumbing_homology(PlumbingTree(n=3, vertices=['S3'], edges=[]))
    assert report.boundary_homology_sphere == 'false'
    assert plumbing_homology(PlumbingTree(n=2, vertices=['S2'], edges=[])).boundary_homology_sphere == 'unknown'


def test_plumbing_validation():
    with pytest.raises(DomainError):
        PlumbingTree(n=3, vertices=['A', 'B', 'C'], edges=[(0, 1), (1, 2), (2, 0)])
    with pytest.raises(DomainError):
        PlumbingTree.from_dict({'dims': [4, 4, 3], 'vertices': ['A', 'B', 'C'], 'edges': [[0, 1], [1, 2]]})
    with pytest.raises(DomainError):
        plumbing_homology(PlumbingTree(n=3, vertices=[{'name': 'T3', 'homology_sphere': False}], edges=[]))
    with pytest.raises(DomainError):
        plumbing_preset('a8-plumbing-tree')


def test_brieskorn_homology_spheres():
    assert brieskorn_is_homology_sphere(2, 3, 7) == 'true'
    assert brieskorn_is_homology_sphere(2, 4, 6) == 'false'
    assert brieskorn_is_homology_sphere(2, 5, 7) == 'true'
    assert brieskorn_is_homology_sphere(3, 3, 4) == 'false'
    with pytest.raises(DomainError):
        brieskorn_is_homology_sphere(1, 3, 5)


# ============================================================
# BOUNDS
# ============================================================

def test_growth_bounds():
    assert abs(symplectic_growth_lower_bound(0.162358, 2) - 0.081179) < 1e-9
    assert abs(entropy_lower_bound(EntropyBoundInput(0.162358, 1, 2)) - 0.081179) < 1e-6
    with pytest.raises(DomainError):
        symplectic_growth_lower_bound(1.0, 0)
    with pytest.raises(DomainError):
        EntropyBoundInput(-1.0, 1, 1)
    with pytest.raises(DomainError):
        EntropyBoundInput(1.0, 1, 0)


def test_entropy_bound_is_monotone():
    rng = np.random.default_rng(9)
    for _ in range(100):
        gamma, rho, max_f = rng.uniform(0.01, 3, size=3)
        base = entropy_lower_bound(EntropyBoundInput(gamma, rho, max_f))
        assert entropy_lower_bound(EntropyBoundInput(gamma * 1.5, rho, max_f)) >= base
        assert entropy_lower_bound(EntropyBoundInput(gamma, rho * 1.5, max_f)) <= base
        assert entropy_lower_bound(EntropyBoundInput(gamma, rho, max_f * 1.5)) <= base
