"""
GROWTHLAB - FILTERED GROUP ALGEBRA TESTS
"""

import math
import os

import pytest

from errors import DomainError, RangeError, StretchingError, read_json
from fds import FdsElement, TabulatedFds, spectral_number
from groups import coxeter_triangle_engine, cyclic_presentation, free_presentation, rewriting_engine
from growthalg import (FilteredAlgebra, SelfShiftModule, TabulatedModule, algebraic_growth,
                       check_finite_growth, check_subadditivity, fds_from_ball_filtration,
                       filtration_level, generating_radius, module_growth_compare, multiply,
                       stretching_check, uniform_family_check)

DATA = os.path.join(os.path.dirname(__file__), 'data')


@pytest.fixture(scope='module')
def free_alg():
    return FilteredAlgebra(rewriting_engine(free_presentation(2)))


@pytest.fixture(scope='module')
def cyclic_alg():
    return FilteredAlgebra(rewriting_engine(cyclic_presentation(3)))


def _augmentation(alg, max_level=None):
    return TabulatedModule(alg, TabulatedFds([0], [1], []), max_level=max_level)


# ============================================================
# ELEMENTS AND LEVELS
# ============================================================

def test_algebra_arithmetic(free_alg):
    a, b = free_alg.element('a'), free_alg.element('b')
    assert multiply(free_alg, free_alg.one, a) == a
    assert len((a + b) * (a + b)) == 4
    assert (a + a).is_zero()
    assert free_alg.element('a', 'a').is_zero()


def test_characteristic_two():
    alg = FilteredAlgebra(rewriting_engine(cyclic_presentation(2)))
    x = alg.one + alg.element('a')
    assert (x * x).is_zero()


def test_filtration_levels(free_alg):
    assert filtration_level(free_alg, free_alg.one) == 0
    assert filtration_level(free_alg, free_alg.zero) == 0
    assert filtration_level(free_alg, free_alg.element('a', 'ab')) == 2
    assert filtration_level(free_alg, free_alg.element('abBA')) == 0
    assert generating_radius(free_alg, [free_alg.element('ab'), free_alg.element('b')]) == 2


def test_word_metric_on_coxeter_group():
    alg = FilteredAlgebra(coxeter_triangle_engine(2, 3, 7))
    assert alg.metric.ball_size(2) == 9
    assert filtration_level(alg, alg.element('aba')) == 1
    assert filtration_level(alg, alg.element('abc')) == 3
    key = alg.engine.word_key('cb')
    word = ''.join(alg.generating_set[i] for i in alg.metric.geodesic(key))
    assert alg.engine.word_key(word) == key


def test_metric_radius_cap():
    alg = FilteredAlgebra(coxeter_triangle_engine(2, 3, 7), max_radius=3)
    with pytest.raises(RangeError):
        alg.metric.ball_size(5)


def test_empty_generating_set_rejected():
    with pytest.raises(DomainError):
        FilteredAlgebra(rewriting_engine(free_presentation(1)), generating_set=[])


def test_subadditivity(free_alg):
    assert check_subadditivity(free_alg, sample_count=200).ok
    assert check_subadditivity(free_alg, sample_count=100, module=SelfShiftModule(free_alg, 1)).ok
    coxeter = FilteredAlgebra(coxeter_triangle_engine(2, 3, 7))
    report = check_subadditivity(coxeter, sample_count=200)
    assert report.ok
    assert report.checked == 200


# ============================================================
# ALGEBRAIC GROWTH
# ============================================================

def test_free_group_algebraic_growth(free_alg):
    estimate = algebraic_growth(free_alg, n_max=6)
    assert estimate.w_dims[:3] == [4, 17, 53]
    assert estimate.start == 1


def test_finite_group_algebraic_growth(cyclic_alg):
    estimate = algebraic_growth(cyclic_alg, S=['a'], n_max=4)
    assert estimate.w_dims == [1, 2, 3, 3]
    assert algebraic_growth(cyclic_alg, S=['a'], n_max=12).rate == 0.0


def test_empty_generating_set_has_zero_growth(free_alg):
    estimate = algebraic_growth(free_alg, S=[free_alg.zero], n_max=5)
    assert estimate.rate == 0.0
    assert estimate.w_dims == []


def test_sums_need_linear_algebra(free_alg):
    # (a+b)^k are the sums of all positive words of length k
    estimate = algebraic_growth(free_alg, S=[free_alg.element('a', 'b')], n_max=6)
    assert estimate.w_dims == [1, 2, 3, 4, 5, 6]


def test_ball_filtration_bridge(free_alg):
    for S in (None, [free_alg.element('a', 'b')]):
        fds = fds_from_ball_filtration(free_alg, S)
        estimate = algebraic_growth(free_alg, S=S, n_max=5)
        assert list(fds.d_sequence(1, 5)) == estimate.w_dims


def test_spectral_number_in_generated_span(free_alg):
    fds = fds_from_ball_filtration(free_alg)
    vector = fds.span.coordinates(free_alg.element('a'), 5)
    assert spectral_number(fds, FdsElement(5, tuple(vector))) == 1
    vector = fds.span.coordinates(free_alg.one, 5)
    assert spectral_number(fds, FdsElement(5, tuple(vector))) == 2
    assert fds.span.coordinates(free_alg.element('aaaaaa'), 5) is None


def test_finite_growth_bound(free_alg):
    report = check_finite_growth(free_alg, n_max=5)
    assert report.ok
    assert report.rho == 1
    assert all(w <= b for w, b in zip(report.w_dims, report.ball_dims))
    report = check_finite_growth(free_alg, S=[free_alg.element('ab')], n_max=5)
    assert report.ok
    assert report.rho == 2
    assert report.w_dims == [1, 2, 3, 4, 5]


@pytest.mark.slow
def test_coxeter_237_algebraic_growth():
    alg = FilteredAlgebra(coxeter_triangle_engine(2, 3, 7))
    estimate = algebraic_growth(alg, n_max=60)
    assert abs(estimate.rate - math.log(1.17628)) < 0.005


# ============================================================
# MODULES AND STRETCHING
# ============================================================

def test_tabulated_module_from_document(free_alg):
    module = TabulatedModule.from_dict(free_alg, read_json(os.path.join(DATA, 'module-augmentation.json')))
    assert module.augmentation
    assert module.level((1,)) == 0
    assert module.act(free_alg.engine.word_key('ab'), (1,)) == (1,)


def test_tabulated_module_inverts_missing_letters(free_alg):
    fds = TabulatedFds([0], [2], [])
    swap = [0, 1, 1, 0]
    shear = [1, 1, 0, 1]
    module = TabulatedModule.from_dict(free_alg, {'fds': fds.to_dict(), 'actions': {'a': swap, 'b': shear}})
    key = free_alg.engine.word_key
    assert module.act(key('b'), (0, 1)) == (1, 1)
    assert module.act(key('B'), (1, 1)) == (0, 1)
    # ab acts as a after b
    assert module.act(key('ab'), (1, 0)) == (0, 1)
    assert module.act(key('A'), (1, 0)) == (0, 1)


def test_self_module_is_stretching(free_alg):
    module = SelfShiftModule(free_alg, 0)
    report = stretching_check(free_alg, module, free_alg.one, 3)
    assert report.injective
    assert report.dimension == 53
    assert report.witness is None


def test_zero_is_not_stretching(free_alg):
    report = stretching_check(free_alg, SelfShiftModule(free_alg, 0), free_alg.zero, 2)
    assert not report.injective
    assert report.witness == free_alg.one


def test_augmentation_is_not_stretching(free_alg):
    module = _augmentation(free_alg)
    report = stretching_check(free_alg, module, (1,), 1)
    assert not report.injective
    assert report.rank == 1
    assert not report.witness.is_zero()
    assert module.act_element(report.witness, (1,)) == (0,)


def test_stretching_beyond_module_data(free_alg):
    with pytest.raises(RangeError):
        stretching_check(free_alg, _augmentation(free_alg, max_level=2), (1,), 3)


def test_growth_compare(free_alg):
    report = module_growth_compare(free_alg, SelfShiftModule(free_alg, 0), free_alg.one, (0, 6))
    assert report.ok
    assert report.shift == 0
    assert all(row['slack'] == 0 for row in report.rows)

    shifted = module_growth_compare(free_alg, SelfShiftModule(free_alg, 2), free_alg.one, (0, 6))
    assert shifted.ok
    assert shifted.shift == 2
    assert list(shifted.to_frame()['slack']) == [0] * 7

    word = module_growth_compare(free_alg, SelfShiftModule(free_alg, 0), free_alg.element('ab'), (0, 8))
    assert word.ok
    assert word.shift == 2


def test_growth_compare_requires_stretching(free_alg):
    with pytest.raises(StretchingError) as info:
        module_growth_compare(free_alg, _augmentation(free_alg), (1,), (0, 3))
    assert not info.value.report.injective


# ============================================================
# UNIFORM FAMILIES
# ============================================================

def test_uniform_family_of_shifts(free_alg):
    members = [(SelfShiftModule(free_alg, c), free_alg.one) for c in (0, 1, 2)]
    report = uniform_family_check(free_alg, members, bound=2, window=(0, 6))
    assert report.ok
    assert report.levels == [0, 1, 2]
    assert report.infimum == report.algebra_dims


def test_uniform_family_of_group_elements(free_alg):
    words = ['', 'a', 'ab', 'BA', 'b']
    members = [(SelfShiftModule(free_alg, 0), free_alg.element(w)) for w in words]
    report = uniform_family_check(free_alg, members, bound=2, window=(0, 6))
    assert report.ok
    assert report.growth.rate > 0


def test_uniform_family_level_violation(free_alg):
    members = [(SelfShiftModule(free_alg, 0), free_alg.one),
               (SelfShiftModule(free_alg, 0), free_alg.element('aaaaa'))]
    report = uniform_family_check(free_alg, members, bound=2, window=(0, 4))
    assert not report.ok
    assert report.failing_member == 1


def test_uniform_family_stretching_failure(free_alg):
    members = [(SelfShiftModule(free_alg, 0), free_alg.one), (_augmentation(free_alg), (1,))]
    with pytest.raises(StretchingError) as info:
        uniform_family_check(free_alg, members, bound=2, window=(0, 3))
    assert info.value.member == 1
