from __future__ import annotations

import argparse
import json
import logging

from pathlib import Path
from typing import Any

from .absint.engine import PreState, analyze, call_context
from .corpus import bucket_counts, generate_corpus, write_corpus
from .difftest import compare_modes, outcomes_frame, run_difftest
from .domains.mutants import MUTANTS, mutant_domain_cls
from .domains.obligations import check_obligations, kit_domain
from .domains.smt import Z3Disjointness, z3_available
from .mir.models import Program
from .mir.parser import ParseError, load_program
from .reports.checks import build_report
from .reports.groundtruth import ground_truth
from .reports.metrics import aggregate_metrics
from .reports.models import FunctionReport, Verdict, percent
from .utils.config import AnalysisConfig
from .utils.logging_utils import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2
EXIT_CODES = {Verdict.OK: EXIT_OK, Verdict.UN: 10, Verdict.ERR: 20}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--debug', action='store_true', help='Enable debug logging.')
    parser.add_argument('--log-file', default=None, help='Write logs to this file instead of stderr.')
    parser.add_argument('--config', default=None, help='Flat TOML file with analysis settings.')
    parser.add_argument('--json', action='store_true', help='Print machine-readable JSON.')
    parser.add_argument('--out', type=Path, default=None, help='Write output here instead of stdout.')


def _add_analysis(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        '--domain',
        default=None,
        help='Pointer domain: full, C, B or S (also onlyC, onlyB, onlyS). Default: full.',
    )
    parser.add_argument(
        '--strict-separation',
        action='store_true',
        help='Treat desirable separation as possible overlap.',
    )
    parser.add_argument('--step-budget', type=int, default=None, help='Maximum state visits or concrete steps.')
    parser.add_argument('--frame-cap', type=lambda s: int(s, 0), default=None, help='Current frame size in bytes.')
    parser.add_argument('--solver', choices=['none', 'z3'], default=None, help='Extra disjointness backend.')


def _parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog='ballpark',
        description='Pointer analysis for lifted binaries with differential soundness testing.',
    )
    commands = parser.add_subparsers(dest='command', required=True)

    analyze_cmd = commands.add_parser('analyze', help='Analyze one function and report its verdict.')
    analyze_cmd.add_argument('path', type=Path, help='Micro-IR file.')
    analyze_cmd.add_argument('--entry', default=None, help='Function to analyze (default: main or the first).')
    analyze_cmd.add_argument(
        '--call-context',
        default=None,
        metavar='FUNC:ADDR',
        help='Seed memory from the caller FUNC at its call site ADDR.',
    )
    analyze_cmd.add_argument('--seeds', type=int, default=None, help='Also compare against this many concrete runs.')
    analyze_cmd.add_argument('--states', action='store_true', help='Include the invariant at every address.')
    _add_analysis(analyze_cmd)
    _add_common(analyze_cmd)

    check_cmd = commands.add_parser('check', help='Check every function of a program.')
    check_cmd.add_argument('path', type=Path, help='Micro-IR file.')
    _add_analysis(check_cmd)
    _add_common(check_cmd)

    diff_cmd = commands.add_parser('difftest', help='Compare analysis against concrete runs.')
    diff_cmd.add_argument('paths', type=Path, nargs='+', help='Micro-IR files or directories of them.')
    diff_cmd.add_argument('--seeds', type=int, default=None, help='Concrete runs per program (default: 8).')
    diff_cmd.add_argument('--compare-modes', action='store_true', help='Compare full, C, B and S domains; --out names a directory for the table and chart.')
    diff_cmd.add_argument('--mutant', choices=sorted(MUTANTS), default=None, help='Test a deliberately broken domain.')
    diff_cmd.add_argument('--trace-dir', type=Path, default=None, help='Write one JSON-lines trace per run.')
    diff_cmd.add_argument('--workers', type=int, default=1, help='Programs tested in parallel.')
    _add_analysis(diff_cmd)
    _add_common(diff_cmd)

    obl_cmd = commands.add_parser('obligations', help='Check the domain proof obligations on random cases.')
    obl_cmd.add_argument('--domain', default=None, help='Domain mode to check (default: full).')
    obl_cmd.add_argument('--budget', type=int, default=10_000, help='Cases per obligation (default: 10000).')
    obl_cmd.add_argument('--seed', type=int, default=0, help='Random seed (default: 0).')
    obl_cmd.add_argument('--mutant', choices=sorted(MUTANTS), default=None, help='Check a deliberately broken domain.')
    obl_cmd.add_argument('--solver', choices=['none', 'z3'], default=None, help='Extra disjointness backend.')
    _add_common(obl_cmd)

    gen_cmd = commands.add_parser('gen', help='Generate a random program corpus.')
    gen_cmd.add_argument('--count', type=int, default=100, help='Programs to generate (default: 100).')
    gen_cmd.add_argument('--seed', type=int, default=0, help='Corpus seed (default: 0).')
    gen_cmd.add_argument('--profile', choices=['mixed', 'anchored'], default='mixed', help='Generator profile.')
    _add_common(gen_cmd)

    return parser.parse_args(argv)


def _emit(args: argparse.Namespace, payload: dict[str, Any], text: str) -> None:
    body = json.dumps(payload, indent=2) if args.json else text
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(body + '\n', encoding='utf-8')
        logger.info('Output written: path=%s', args.out)
    else:
        print(body)


def _render_report(report: FunctionReport) -> str:
    lines = [f'{report.entry}: {report.verdict.verdict}']
    if report.verdict.reason:
        lines.append(f'  reason: {report.verdict.reason}')
    if report.verdict.witness:
        lines.append('  witness: ' + ', '.join(f'{a:#x}' for a in report.verdict.witness))
    lines.append('  writes:')
    lines += [f'    {w.to_dict()["addr"]}: {w.region} {w.to_dict()["designation"]}' for w in report.writes]
    if report.recall is not None:
        lines.append(f'  recall: {percent(report.recall)}  precision: {percent(report.precision)}')
    if report.callee_saved:
        preserved = ', '.join(f'{r}={"yes" if ok else "no"}' for r, ok in report.callee_saved.items())
        lines.append(f'  callee-saved: {preserved}')
    lines += [f'  suspect: {s.addr:#x} {s.callee}({s.register}={s.pointer})' for s in report.suspects]
    lines += [f'  assumption: {message}' for message in report.assumptions]
    lines += [f'  diagnostic: {message}' for message in report.diagnostics]
    return '\n'.join(lines)


def _pre_state(program: Program, spec: str | None, config: AnalysisConfig) -> PreState | None:
    if not spec:
        return None
    caller, sep, addr_text = spec.partition(':')
    if not sep:
        raise ValueError(f'--call-context expects FUNC:ADDR, got {spec!r}')
    caller_result = analyze(program, caller, config)
    return call_context(caller_result, int(addr_text, 0))


def _cmd_analyze(args: argparse.Namespace, config: AnalysisConfig) -> int:
    program = load_program(args.path)
    entry = args.entry or program.default_entry()
    result = analyze(program, entry, config, pre_state=_pre_state(program, args.call_context, config))
    truth = None
    if args.seeds is not None:
        truth = ground_truth(program, entry, config.seeds, step_budget=config.step_budget)
    report = build_report(result, program, config, truth)

    payload = report.to_dict()
    payload['post'] = None if result.post is None else result.post.to_dict()
    payload['unresolved'] = [f'{a:#x}' for a in sorted(result.unresolved)]
    if args.states:
        payload['analysis'] = result.to_dict()
    text = _render_report(report)
    if result.post is not None:
        text += '\n  post:\n' + '\n'.join(f'    {line}' for line in result.post.render_lines())
    _emit(args, payload, text)
    return EXIT_CODES[report.verdict.verdict]


def _cmd_check(args: argparse.Namespace, config: AnalysisConfig) -> int:
    program = load_program(args.path)
    reports = [build_report(analyze(program, entry, config), program, config) for entry in program.entries]
    worst = max((EXIT_CODES[r.verdict.verdict] for r in reports), default=EXIT_OK)
    payload = {'functions': [r.to_dict() for r in reports]}
    _emit(args, payload, '\n'.join(_render_report(r) for r in reports))
    return worst


def _collect(paths: list[Path]) -> list[Path]:
    found: list[Path] = []
    for path in paths:
        if path.is_dir():
            found.extend(sorted(path.glob('*.mir')))
        else:
            found.append(path)
    if not found:
        raise OSError(f'no .mir files found in {", ".join(str(p) for p in paths)}')
    return found


def _cmd_difftest(args: argparse.Namespace, config: AnalysisConfig) -> int:
    paths = _collect(args.paths)
    if args.compare_modes:
        summary = compare_modes(paths, config, out_dir=args.out, workers=args.workers)
        payload = {'modes': json.loads(summary.to_json(orient='records'))}
        print(json.dumps(payload, indent=2) if args.json else summary.to_string(index=False))
        return EXIT_OK if (summary['violations'] == 0).all() else EXIT_FAILURE

    outcomes = run_difftest(paths, config, mutant=args.mutant, trace_dir=args.trace_dir, workers=args.workers)
    frame = outcomes_frame(outcomes)
    summary = aggregate_metrics(frame)
    payload = {
        'programs': [o.to_dict() for o in outcomes],
        'corpus': {key: percent(value) for key, value in summary.items()},
        'unobserved': [o.name for o in outcomes if o.observed == 0],
    }
    _emit(args, payload, frame.to_string(index=False))
    unsound = [o.name for o in outcomes if not o.sound]
    if unsound:
        logger.warning('Recall below 100 or simulation violated: programs=%s', ','.join(unsound))
        return EXIT_FAILURE
    return EXIT_OK


def _cmd_obligations(args: argparse.Namespace) -> int:
    config = AnalysisConfig.from_namespace(args)
    mode = config.mode
    disjointness = None
    if config.solver == 'z3':
        if not z3_available():
            raise ValueError('Solver z3 requested but z3-solver is not installed. Install ballpark[smt].')
        disjointness = Z3Disjointness()
    domain = kit_domain(mode, mutant_domain_cls(args.mutant), disjointness, config.caps, config.alloc_verdict)
    report = check_obligations(domain, budget=args.budget, seed=args.seed)
    lines = [
        f'{r.name}: {"ok" if r.passed else "FAIL"} cases={r.cases} attempts={r.attempts}'
        + (f' counterexample={r.first_counterexample}' if r.first_counterexample else '')
        for r in report.results.values()
    ]
    _emit(args, report.to_dict(), '\n'.join(lines))
    logger.info('Obligations checked: mode=%s passed=%s failed=%s', mode, report.passed, report.failed())
    return EXIT_OK if report.passed else EXIT_FAILURE


def _cmd_gen(args: argparse.Namespace) -> int:
    programs = generate_corpus(args.count, args.seed, args.profile)
    out_dir = args.out or Path('corpus')
    paths = write_corpus(programs, out_dir)
    counts = bucket_counts(programs)
    payload = {'dir': str(out_dir), 'files': [p.name for p in paths], 'buckets': counts}
    text = f'{len(paths)} programs written to {out_dir}\n' + '\n'.join(f'  {b}: {n}' for b, n in counts.items())
    print(json.dumps(payload, indent=2) if args.json else text)
    return EXIT_OK


def run(args: argparse.Namespace) -> int:
    match args.command:
        case 'analyze':
            return _cmd_analyze(args, AnalysisConfig.from_namespace(args))
        case 'check':
            return _cmd_check(args, AnalysisConfig.from_namespace(args))
        case 'difftest':
            return _cmd_difftest(args, AnalysisConfig.from_namespace(args))
        case 'obligations':
            return _cmd_obligations(args)
        case 'gen':
            return _cmd_gen(args)
    raise ValueError(f'Unknown command: {args.command}')


def main(argv: list[str] | None = None) -> int:
    """
    CLI entrypoint.

    Returns:
        0 for OK, 10 for UN, 20 for ERR, 2 on unreadable or malformed input,
        1 when a difftest or obligation run fails.
    """
    args = _parse_args(argv)
    configure_logging(debug=bool(args.debug), log_file=args.log_file)
    logger.debug('Command: %s', vars(args))
    try:
        return run(args)
    except (ParseError, OSError, ValueError) as exc:
        if args.debug:
            raise
        logger.error('%s: %s', args.command, exc)
        return EXIT_INPUT


if __name__ == '__main__':
    raise SystemExit(main())
