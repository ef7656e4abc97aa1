"""
GROWTHLAB - COMMAND LINE
Parse inputs, dispatch to the library and emit text or JSON reports.

Usage:
    python cli.py group-growth --preset coxeter-2-3-7 --n-max 60
    python cli.py group-abelianize data/brieskorn-2-3-7.json
    python cli.py entropy-bound --gamma 0.162358 --rho 1 --max-f 2

Exit status: 0 when everything ran and every requested check passed,
1 on a library error or a failed check, 2 on a usage error.
"""

import argparse
import json
import logging
import math
import os
import sys

import pandas as pd

import config
from errors import GrowthLabError, InputError, ParseError, UsageError, read_json
from fds import (InterleavingCandidate, TabulatedFds, FdsElement, canonical_dilation_interleaving,
                 check_interleaving, growth_rate, spectral_number)
from groups import (FpGroupPresentation, abelianize, ball_sizes, cross_validate_engines, kervaire_check,
                    lehmer_root, rewriting_engine)
from growthalg import (FilteredAlgebra, SelfShiftModule, TabulatedModule, algebraic_growth,
                       check_finite_growth, fds_from_ball_filtration, generating_radius,
                       module_growth_compare, stretching_check)
from presets import GroupPreset, group_preset, plumbing_preset
from topobook import (ChainComplex, EntropyBoundInput, PlumbingTree, chain_homology, entropy_lower_bound,
                      is_homology_sphere, plumbing_homology, symplectic_growth_lower_bound)

logger = logging.getLogger(__name__)

COMMANDS = ('group-growth', 'group-abelianize', 'group-kervaire', 'alg-growth', 'fds-growth',
            'fds-interleave', 'fds-spectral', 'module-stretch', 'chain-homology', 'plumbing',
            'entropy-bound')


class ArgumentParser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting"""

    def error(self, message):
        raise UsageError(message)


# ============================================================
# INPUT HELPERS
# ============================================================

def parse_presentation(data, path=None):
    try:
        presentation = FpGroupPresentation.from_dict(data)
    except InputError as exc:
        raise ParseError(str(exc), path=path) from None
    except (KeyError, TypeError, AttributeError) as exc:
        raise ParseError(f"invalid presentation document: {exc}", path=path) from None
    for note in presentation.notes:
        logger.warning("⚠️  %s", note)
    return presentation


def parse_presentation_file(path):
    return parse_presentation(read_json(path), path=str(path))


def _document(args, name):
    """Inline document (HTTP API) or the JSON file named by the argument"""
    inline = getattr(args, 'documents', None) or {}
    if name in inline:
        return inline[name]
    path = getattr(args, name, None)
    if not path:
        raise UsageError(f"missing input document '{name}'")
    return read_json(path)


def _window(text):
    if text is None:
        return None
    try:
        lo, hi = (int(v) for v in text.split(','))
    except ValueError:
        raise UsageError(f"window must look like 'MIN,MAX', got {text!r}") from None
    return lo, hi


def _words(text):
    if text is None:
        return None
    return [w.strip() for w in text.split(',')]


def _vector(text):
    try:
        return tuple(int(v) & 1 for v in text.split(','))
    except ValueError:
        raise UsageError(f"vector must be comma-separated 0/1 entries, got {text!r}") from None


def _number(value):
    """JSON-friendly number: infinities become the string 'infinity'"""
    if isinstance(value, float) and math.isinf(value):
        return 'infinity'
    return value


def _group(args):
    if args.preset:
        return group_preset(args.preset)
    presentation = parse_presentation(_document(args, 'input'), path=args.input)
    return GroupPreset(name=args.input or 'inline', family='file', params=(), presentation=presentation)


def _engine(args, preset):
    return preset.engine(max_rules=args.max_rules, max_len=args.max_len, cache_dir=args.cache_dir)


def _algebra_elements(alg, text):
    """'a,b+ab' -> [a, b + ab]"""
    if text is None:
        return None
    return [alg.element(*item.split('+')) for item in _words(text) if item]


def _expect(args, rate, diagnostics):
    if args.expect_rate is None:
        return True
    ok = abs(rate - args.expect_rate) <= args.tolerance
    diagnostics['expect_rate'] = {'expected': args.expect_rate, 'tolerance': args.tolerance,
                                  'observed': rate, 'ok': ok}
    return ok


def _default_window(n_max):
    return (max(1, math.ceil(n_max / 2)), n_max)


# ============================================================
# COMMANDS
# ============================================================

def cmd_group_growth(args):
    preset = _group(args)
    engine = _engine(args, preset)
    table = ball_sizes(engine, _words(args.generating_set), n_max=args.n_max, method=args.ball_method,
                       memory_cap=args.memory_cap, threads=args.threads)
    window = _window(args.window) or _default_window(table.n_max)
    estimate = growth_rate(pd.Series(table.sizes), window=window, method=args.method, submultiplicative=True)
    sizes = table.sizes
    results = {
        'ball_sizes': sizes,
        'sphere_sizes': table.spheres,
        'rate': estimate.rate,
        'estimates': estimate.estimates,
        'growth_base': math.exp(estimate.rate),
        'last_ratio': sizes[-1] / sizes[-2] if len(sizes) > 1 and sizes[-2] else None,
        'certified_upper': estimate.certified_upper,
        'group_order': table.group_order,
        'submultiplicative': table.is_submultiplicative(),
    }
    diagnostics = {'window': list(window), 'method': args.method, 'ball_method': table.method,
                   'engine': engine.kind, 'exact': engine.exact, 'truncated': table.truncated,
                   'generating_set': table.generating_set}
    if not engine.exact:
        diagnostics['warning'] = 'rewriting system is not confluent; ball sizes are upper bounds'
    if args.lehmer:
        root = lehmer_root()
        results['lehmer_root'] = root
        results['lehmer_log'] = math.log(root)
    ok = _expect(args, estimate.rate, diagnostics)

    if args.cross_validate:
        if preset.family not in ('coxeter', 'von-dyck'):
            raise UsageError("--cross-validate needs a coxeter or von-dyck preset")
        rewriting = rewriting_engine(preset.presentation, args.max_rules, args.max_len, args.cache_dir)
        report = cross_validate_engines(rewriting, engine, preset.presentation.relators,
                                        letter_map=preset.letter_map, pairs=args.cross_validate,
                                        seed=config.DEFAULT_RANDOM_SEED)
        results['cross_validation'] = report.to_dict()
        ok = ok and (report.status != 'compared' or report.ok)

    if args.table_csv:
        table.to_frame().to_csv(args.table_csv, index=False)
        logger.info("✓ Ball table written: %s", args.table_csv)
    return results, diagnostics, ok


def cmd_group_abelianize(args):
    ab = abelianize(_group(args).presentation)
    return ab.to_dict(), {}, True


def cmd_group_kervaire(args):
    preset = _group(args)
    growth = None
    diagnostics = {}
    if args.with_growth:
        engine = _engine(args, preset)
        table = ball_sizes(engine, n_max=args.n_max, memory_cap=args.memory_cap, threads=args.threads)
        growth = growth_rate(pd.Series(table.sizes), window=_default_window(table.n_max))
        diagnostics['growth_exact'] = engine.exact
    report = kervaire_check(preset.presentation, growth)
    return report.to_dict(), diagnostics, True


def cmd_alg_growth(args):
    preset = _group(args)
    engine = _engine(args, preset)
    alg = FilteredAlgebra(engine, _words(args.metric_set))
    S = _algebra_elements(alg, args.generating_set) or alg.generators()
    estimate = algebraic_growth(alg, S, n_max=args.n_max, method=args.method)
    rho = generating_radius(alg, S)
    results = {
        'w_dims': list(estimate.w_dims),
        'rate': estimate.rate,
        'estimates': estimate.estimates,
        'rho': rho,
        'symplectic_lower_bound': symplectic_growth_lower_bound(estimate.rate, rho) if rho else None,
    }
    ok = True
    if args.check_bridge:
        fds = fds_from_ball_filtration(alg, S)
        d_sequence = [int(d) for d in fds.d_sequence(1, args.n_max).values]
        results['bridge_ok'] = d_sequence == list(estimate.w_dims)
        ok = results['bridge_ok']
    if args.check_finite:
        report = check_finite_growth(alg, S, n_max=args.n_max)
        results['finite_growth'] = report.to_dict()
        ok = ok and report.ok
    diagnostics = {'window': list(estimate.window), 'method': args.method, 'engine': engine.kind,
                   'metric_generating_set': alg.generating_set}
    ok = _expect(args, estimate.rate, diagnostics) and ok
    return results, diagnostics, ok


def cmd_fds_growth(args):
    fds = TabulatedFds.from_dict(_document(args, 'input'))
    window = _window(args.window) or fds.default_window()
    estimate = growth_rate(fds, window=window, method=args.method, submultiplicative=args.submultiplicative)
    diagnostics = {'window': list(window), 'method': args.method}
    ok = _expect(args, estimate.rate, diagnostics)
    return estimate.to_dict(), diagnostics, ok


def cmd_fds_interleave(args):
    V = TabulatedFds.from_dict(_document(args, 'input'))
    if args.dilate is not None:
        W, candidate = canonical_dilation_interleaving(V, args.dilate)
        source = f"canonical dilation by {args.dilate}"
    else:
        W = TabulatedFds.from_dict(_document(args, 'other'))
        candidate = InterleavingCandidate.from_dict(_document(args, 'candidate'), V, W)
        source = 'candidate document'
    levels = [float(v) for v in args.levels.split(',')] if args.levels else list(V.levels)
    report = check_interleaving(V, W, candidate, levels=levels)
    diagnostics = {'candidate': source, 'eta': [candidate.eta1, candidate.eta2], 'levels': levels}
    return report.to_dict(), diagnostics, report.ok


def cmd_fds_spectral(args):
    fds = TabulatedFds.from_dict(_document(args, 'input'))
    element = FdsElement(level=args.level, vector=_vector(args.vector))
    value = spectral_number(fds, element)
    return {'spectral_number': _number(value)}, {'limit_level': fds.last_level}, True


def _module(alg, data):
    kind = data.get('kind')
    if kind == 'self-shift':
        return SelfShiftModule(alg, int(data.get('shift', 0)))
    if kind == 'tabulated':
        return TabulatedModule.from_dict(alg, data)
    raise ParseError(f"unknown module kind {kind!r}")


def cmd_module_stretch(args):
    preset = _group(args)
    alg = FilteredAlgebra(_engine(args, preset), _words(args.metric_set))
    module = _module(alg, _document(args, 'module'))
    if isinstance(module, TabulatedModule):
        m0 = _vector(args.m0)
    else:
        m0 = alg.element(*args.m0.split('+')) if args.m0 else alg.zero
    results = {'m0_level': module.level(m0)}
    ok = True
    if args.window:
        report = module_growth_compare(alg, module, m0, _window(args.window))
        results['compare'] = report.to_dict()
        ok = report.ok
    else:
        report = stretching_check(alg, module, m0, args.level)
        results['stretch'] = report.to_dict()
        ok = report.injective
    return results, {'module': type(module).__name__}, ok


def cmd_chain_homology(args):
    complex_ = ChainComplex.from_dict(_document(args, 'input'))
    profile = chain_homology(complex_)
    results = profile.to_dict()
    results['euler_characteristic'] = complex_.euler_characteristic()
    if args.sphere_dim is not None:
        results['homology_sphere'] = is_homology_sphere(profile, args.sphere_dim)
    return results, {'top': complex_.top}, True


def cmd_plumbing(args):
    if args.preset:
        tree = plumbing_preset(args.preset)
    else:
        tree = PlumbingTree.from_dict(_document(args, 'input'))
    report = plumbing_homology(tree)
    return report.to_dict(), {'n': tree.n, 'vertices': len(tree.vertices)}, True


def cmd_entropy_bound(args):
    results = {'symplectic_lower_bound': symplectic_growth_lower_bound(args.gamma, args.rho)}
    if args.max_f is not None:
        results['entropy_lower_bound'] = entropy_lower_bound(EntropyBoundInput(args.gamma, args.rho, args.max_f))
    return results, {}, True


# ============================================================
# PARSER
# ============================================================

def _common(parser):
    parser.add_argument('--format', choices=('text', 'json'), default='text')
    parser.add_argument('--output', help='json report path (default: <report dir>/<command>.json)')
    parser.add_argument('--threads', type=int, default=config.THREADS)
    parser.add_argument('--verbose', action='store_true')
    parser.add_argument('--expect-rate', type=float)
    parser.add_argument('--tolerance', type=float, default=0.005)


def _group_options(parser, n_max=True):
    parser.add_argument('input', nargs='?', help='presentation JSON')
    parser.add_argument('--preset')
    parser.add_argument('--max-rules', type=int, default=config.KB_MAX_RULES)
    parser.add_argument('--max-len', type=int, default=config.KB_MAX_LEN)
    parser.add_argument('--cache-dir', default=None)
    parser.add_argument('--memory-cap', type=int, default=config.BFS_MEMORY_CAP)
    if n_max:
        parser.add_argument('--n-max', type=int, default=config.DEFAULT_N_MAX)


def build_parser():
    parser = ArgumentParser(prog='growthlab', description=__doc__,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
    commands = parser.add_subparsers(dest='command', required=True, parser_class=ArgumentParser)

    p = commands.add_parser('group-growth', help='exact ball sizes and growth estimate')
    _group_options(p)
    _common(p)
    p.add_argument('--generating-set')
    p.add_argument('--window')
    p.add_argument('--method', choices=('slope', 'last-ratio'), default='slope')
    p.add_argument('--ball-method', choices=('auto', 'bfs', 'automaton'), default='auto')
    p.add_argument('--table-csv')
    p.add_argument('--lehmer', action='store_true', help="report Lehmer's number for comparison")
    p.add_argument('--cross-validate', type=int, default=0, metavar='PAIRS')
    p.set_defaults(handler=cmd_group_growth)

    p = commands.add_parser('group-abelianize', help='H1 from the Smith normal form')
    _group_options(p, n_max=False)
    _common(p)
    p.set_defaults(handler=cmd_group_abelianize)

    p = commands.add_parser('group-kervaire', help='checkable Kervaire conditions')
    _group_options(p)
    _common(p)
    p.add_argument('--with-growth', action='store_true')
    p.set_defaults(handler=cmd_group_kervaire)

    p = commands.add_parser('alg-growth', help='algebraic growth of a generating set')
    _group_options(p)
    _common(p)
    p.add_argument('--generating-set', help="algebra elements, e.g. 'a,A,b+ab'")
    p.add_argument('--metric-set', help='words defining the word metric')
    p.add_argument('--method', choices=('slope', 'last-ratio'), default='slope')
    p.add_argument('--check-bridge', action='store_true')
    p.add_argument('--check-finite', action='store_true')
    p.set_defaults(handler=cmd_alg_growth)

    p = commands.add_parser('fds-growth', help='growth of a tabulated system')
    p.add_argument('input')
    _common(p)
    p.add_argument('--window')
    p.add_argument('--method', choices=('slope', 'last-ratio'), default='slope')
    p.add_argument('--submultiplicative', action='store_true')
    p.set_defaults(handler=cmd_fds_growth)

    p = commands.add_parser('fds-interleave', help='verify an interleaving candidate')
    p.add_argument('input')
    _common(p)
    p.add_argument('--other')
    p.add_argument('--candidate')
    p.add_argument('--dilate', type=int)
    p.add_argument('--levels')
    p.set_defaults(handler=cmd_fds_interleave)

    p = commands.add_parser('fds-spectral', help='spectral number of an element')
    p.add_argument('input')
    _common(p)
    p.add_argument('--level', type=int, required=True, help='breakpoint index')
    p.add_argument('--vector', required=True)
    p.set_defaults(handler=cmd_fds_spectral)

    p = commands.add_parser('module-stretch', help='stretching test and growth comparison')
    _group_options(p, n_max=False)
    _common(p)
    p.add_argument('--module', required=False, help='module JSON')
    p.add_argument('--metric-set')
    p.add_argument('--m0')
    p.add_argument('--level', type=int, default=3)
    p.add_argument('--window')
    p.set_defaults(handler=cmd_module_stretch)

    p = commands.add_parser('chain-homology', help='integral homology of a chain complex')
    p.add_argument('input')
    _common(p)
    p.add_argument('--sphere-dim', type=int)
    p.set_defaults(handler=cmd_chain_homology)

    p = commands.add_parser('plumbing', help='plumbing tree homology table')
    p.add_argument('input', nargs='?')
    _common(p)
    p.add_argument('--preset')
    p.set_defaults(handler=cmd_plumbing)

    p = commands.add_parser('entropy-bound', help='symplectic growth and entropy lower bounds')
    _common(p)
    p.add_argument('--gamma', type=float, required=True)
    p.add_argument('--rho', type=float, required=True)
    p.add_argument('--max-f', type=float)
    p.set_defaults(handler=cmd_entropy_bound)
    return parser


# ============================================================
# REPORTS
# ============================================================

_NOT_ECHOED = {'handler', 'documents', 'format', 'output', 'verbose', 'command'}


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, float):
        return _number(value)
    if hasattr(value, 'item'):
        return _plain(value.item())
    return value


def make_report(command, inputs, results=None, diagnostics=None, status=0):
    return _plain({'command': command, 'inputs': inputs or {}, 'results': results or {},
                   'diagnostics': diagnostics or {}, 'status': status})


def _text_value(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if value is None:
        return 'none'
    if isinstance(value, float):
        return f"{value:.6f}"
    if isinstance(value, list):
        if all(not isinstance(v, (dict, list)) for v in value):
            return ', '.join(_text_value(v) for v in value)
        return json.dumps(value, sort_keys=True)
    return str(value)


def _flatten(prefix, value, lines):
    if isinstance(value, dict):
        for key in sorted(value):
            _flatten(f"{prefix}.{key}" if prefix else key, value[key], lines)
    else:
        lines.append(f"{prefix}: {_text_value(value)}")


def emit_report(report, fmt='text'):
    if fmt == 'json':
        return json.dumps(report, sort_keys=True, indent=2)
    lines = [f"command: {report.get('command')}"]
    _flatten('', report.get('results', {}), lines)
    _flatten('diagnostics', report.get('diagnostics', {}), lines)
    lines.append(f"status: {report.get('status')}")
    return '\n'.join(lines)


def _write(report, args):
    text = emit_report(report, args.format)
    if args.format == 'json':
        path = args.output or os.path.join(config.REPORT_DIR, f"{report['command']}.json")
        os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(text + '\n')
        logger.info("✓ Report written: %s", path)
    else:
        print(text)


# ============================================================
# ENTRY POINTS
# ============================================================

def run(argv, documents=None, write=True):
    """Parse argv, dispatch, return (exit status, report document)"""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        report = make_report(None, {'argv': list(argv)}, diagnostics={'error': exc.to_dict()}, status=2)
        if write:
            print(f"growthlab: {exc}", file=sys.stderr)
        return 2, report
    except SystemExit as exc:
        # --help
        return int(exc.code or 0), None

    args.documents = documents or {}
    if args.verbose:
        logging.getLogger().setLevel(logging.INFO)
    inputs = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_ECHOED}

    try:
        results, diagnostics, ok = args.handler(args)
        report = make_report(args.command, inputs, results, diagnostics, status=0 if ok else 1)
    except UsageError as exc:
        report = make_report(args.command, inputs, diagnostics={'error': exc.to_dict()}, status=2)
    except GrowthLabError as exc:
        report = make_report(args.command, inputs, diagnostics={'error': exc.to_dict()}, status=1)
    except Exception as exc:
        logger.exception("Unexpected failure in %s", args.command)
        report = make_report(args.command, inputs,
                             diagnostics={'error': {'kind': 'internal', 'message': str(exc)}}, status=1)

    if write:
        _write(report, args)
    return report['status'], report


def main(argv=None):
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, config.LOG_LEVEL, logging.WARNING),
                        format='%(levelname)s %(name)s: %(message)s')
    status, _ = run(sys.argv[1:] if argv is None else argv)
    return status


if __name__ == '__main__':
    sys.exit(main())
