"""
GROWTHLAB - COMMAND LINE TESTS
"""

import json
import os
import re

import pandas as pd
import pytest

from cli import emit_report, make_report, parse_presentation, parse_presentation_file, run
from errors import ParseError

DATA = os.path.join(os.path.dirname(__file__), 'data')


def _data(name):
    return os.path.join(DATA, name)


def _run(*argv, **kwargs):
    return run(list(argv), write=False, **kwargs)


# ============================================================
# INPUT PARSING
# ============================================================

def test_parse_presentation_drops_trivial_relators():
    presentation = parse_presentation({'generators': ['a'], 'relators': ['aA', 'aaa']})
    assert presentation.relators == ('aaa',)


def test_parse_errors(tmp_path):
    duplicate = tmp_path / 'duplicate.json'
    duplicate.write_text(json.dumps({'generators': ['a', 'a'], 'relators': []}))
    with pytest.raises(ParseError):
        parse_presentation_file(str(duplicate))

    broken = tmp_path / 'broken.json'
    broken.write_text('{\n  "generators": ["a",\n')
    with pytest.raises(ParseError) as info:
        parse_presentation_file(str(broken))
    assert info.value.line is not None

    with pytest.raises(ParseError):
        parse_presentation({'relators': ['aa']})


# ============================================================
# EXIT STATUS
# ============================================================

def test_usage_errors_exit_with_two():
    status, report = _run('no-such-command')
    assert status == 2
    assert report['diagnostics']['error']['kind'] == 'usage'
    assert _run('entropy-bound', '--gamma', '1', '--rho', '1', '--bogus')[0] == 2
    assert _run('group-abelianize')[0] == 2


def test_missing_file_exits_with_one():
    status, report = _run('group-abelianize', _data('does-not-exist.json'))
    assert status == 1
    assert report['diagnostics']['error']['kind'] == 'parse'


def test_help_exits_with_zero(capsys):
    status, report = run(['--help'], write=False)
    assert status == 0
    assert report is None
    assert 'group-growth' in capsys.readouterr().out


# ============================================================
# COMMANDS
# ============================================================

def test_entropy_bound():
    status, report = _run('entropy-bound', '--gamma', '0.162358', '--rho', '1', '--max-f', '2')
    assert status == 0
    assert abs(report['results']['entropy_lower_bound'] - 0.081179) < 1e-6
    assert abs(report['results']['symplectic_lower_bound'] - 0.162358) < 1e-12


def test_abelianize_brieskorn():
    status, report = _run('group-abelianize', _data('brieskorn-2-3-7.json'))
    assert status == 0
    assert report['results']['trivial'] is True
    assert 'h1: trivial' in emit_report(report, 'text').splitlines()


def test_kervaire_with_growth():
    status, report = _run('group-kervaire', _data('brieskorn-2-3-7.json'))
    assert status == 0
    assert report['results']['h1_trivial'] is True
    assert report['results']['h2_status'] == 'unknown'
    status, report = _run('group-kervaire', '--preset', 'free-2', '--with-growth', '--n-max', '8')
    assert report['results']['h1_trivial'] is False
    assert report['results']['growth_rate'] > 1.0


def test_group_growth_expectations():
    status, report = _run('group-growth', '--preset', 'free-2', '--n-max', '10', '--expect-rate', '1.0986')
    assert status == 0
    assert report['results']['ball_sizes'][:4] == [1, 5, 17, 53]
    assert report['diagnostics']['window'] == [5, 10]
    assert report['diagnostics']['expect_rate']['ok'] is True
    status, report = _run('group-growth', '--preset', 'free-2', '--n-max', '10', '--expect-rate', '5')
    assert status == 1


def test_group_growth_finite_group():
    status, report = _run('group-growth', '--preset', 'coxeter-2-3-3', '--n-max', '10')
    assert status == 0
    assert report['results']['group_order'] == 24
    assert report['results']['rate'] == 0.0


def test_group_growth_with_lehmer_and_table(tmp_path):
    path = tmp_path / 'balls.csv'
    status, report = _run('group-growth', '--preset', 'coxeter-2-3-7', '--n-max', '12', '--lehmer',
                          '--table-csv', str(path))
    assert status == 0
    assert abs(report['results']['lehmer_root'] - 1.176280818) < 1e-8
    frame = pd.read_csv(path)
    assert list(frame['ball'][:3]) == [1, 4, 9]


def test_group_growth_cross_validation():
    status, report = _run('group-growth', '--preset', 'coxeter-2-3-5', '--n-max', '5', '--cross-validate', '40')
    assert status == 0
    assert report['results']['cross_validation']['status'] == 'compared'
    assert _run('group-growth', '--preset', 'free-2', '--n-max', '3', '--cross-validate', '10')[0] == 2


def test_alg_growth_with_checks():
    status, report = _run('alg-growth', '--preset', 'free-2', '--n-max', '4', '--check-bridge', '--check-finite')
    assert status == 0
    assert report['results']['w_dims'][:3] == [4, 17, 53]
    assert report['results']['bridge_ok'] is True
    assert report['results']['finite_growth']['ok'] is True
    status, report = _run('alg-growth', '--preset', 'cyclic-3', '--generating-set', 'a', '--n-max', '4')
    assert report['results']['w_dims'] == [1, 2, 3, 3]


def test_fds_commands():
    example = _data('fds-example.json')
    status, report = _run('fds-spectral', example, '--level', '2', '--vector', '0,0,1')
    assert status == 0
    assert report['results']['spectral_number'] == 1
    assert _run('fds-interleave', example, '--dilate', '2')[0] == 0
    status, report = _run('fds-interleave', example, '--other', example,
                          '--candidate', _data('interleaving-identity.json'))
    assert status == 0
    assert report['results']['ok'] is True
    status, report = _run('fds-growth', example)
    assert status == 0
    assert report['results']['rate'] == 0.0


def test_module_stretch():
    status, report = _run('module-stretch', '--preset', 'free-2', '--module', _data('module-self-shift.json'),
                          '--m0', 'ab', '--window', '0,4')
    assert status == 0
    assert report['results']['m0_level'] == 4
    status, report = _run('module-stretch', '--preset', 'free-2', '--module', _data('module-augmentation.json'),
                          '--m0', '1', '--level', '1')
    assert status == 1
    assert report['results']['stretch']['injective'] is False
    status, report = _run('module-stretch', '--preset', 'free-2', '--module', _data('module-augmentation.json'),
                          '--m0', '1', '--window', '0,3')
    assert status == 1
    assert report['diagnostics']['error']['kind'] == 'stretching'


def test_chain_homology_and_plumbing():
    status, report = _run('chain-homology', _data('complex-rp2.json'))
    assert status == 0
    assert report['results']['torsion'] == [[], [2], []]
    assert report['results']['groups']['H1'] == 'Z/2'
    status, report = _run('chain-homology', _data('complex-s3.json'), '--sphere-dim', '3')
    assert report['results']['homology_sphere'] is True
    status, report = _run('plumbing', '--preset', 'e8-plumbing-tree')
    assert status == 0
    assert report['results']['interior']['betti'][4] == 8
    assert report['results']['boundary_homology_sphere'] == 'true'


def test_inline_documents():
    document = {'top': 2, 'dims': [1, 1, 1], 'boundaries': [[[0]], [[2]]]}
    status, report = _run('chain-homology', 'inline', documents={'input': document})
    assert status == 0
    assert report['results']['betti'] == [1, 0, 0]


# ============================================================
# REPORTS
# ============================================================

def test_text_report_format():
    _, report = _run('group-growth', '--preset', 'free-2', '--n-max', '6')
    lines = emit_report(report, 'text').splitlines()
    assert lines[0] == 'command: group-growth'
    assert any(re.fullmatch(r'rate: \d+\.\d{6}', line) for line in lines)
    assert 'submultiplicative: true' in lines
    assert lines[-1] == 'status: 0'


def test_json_report_is_stable():
    first = _run('group-growth', '--preset', 'free-2', '--n-max', '6')[1]
    second = _run('group-growth', '--preset', 'free-2', '--n-max', '6')[1]
    assert first == second
    assert json.loads(emit_report(first, 'json')) == first


def test_json_report_written_to_output(tmp_path):
    path = tmp_path / 'report.json'
    status, _ = run(['entropy-bound', '--gamma', '1', '--rho', '2', '--format', 'json', '--output', str(path)])
    assert status == 0
    written = json.loads(path.read_text())
    assert written['command'] == 'entropy-bound'
    assert written['results']['symplectic_lower_bound'] == 0.5


def test_infinite_values_are_strings():
    report = make_report('fds-spectral', {}, {'spectral_number': float('inf')})
    assert report['results']['spectral_number'] == 'infinity'


@pytest.mark.slow
def test_coxeter_237_rate_acceptance():
    status, report = _run('group-growth', '--preset', 'coxeter-2-3-7', '--n-max', '60',
                          '--expect-rate', '0.16236', '--tolerance', '0.0045')
    assert status == 0
