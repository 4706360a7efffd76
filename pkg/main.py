#!/usr/bin/env python3
"""
fpi - Main Entry Point
Full-program induction verifier for array programs parameterized by N
"""

import sys
import json
import argparse
from pathlib import Path

# Add current directory to Python path
sys.path.insert(0, str(Path(__file__).parent))

from fpi.config import Config
from fpi.errors import FpiError
from fpi.utils import save_json, setup_logging

EXIT_CODES = {"Valid": 0, "CounterexampleFound": 1, "Inconclusive": 2}
EXIT_ERROR = 3


def settings_from_args(args) -> dict:
    """Config defaults overridden by command-line flags."""
    settings = Config.verifier_settings()
    if getattr(args, "solver", None):
        settings["solver_path"] = args.solver
    if getattr(args, "timeout_ms", None):
        settings["timeout_ms"] = args.timeout_ms
    if getattr(args, "base_bound", None):
        settings["base_bound"] = args.base_bound
    return settings


def run_verify(args) -> int:
    """Verify one program file."""
    from fpi.pipeline import VerificationPipeline

    pipeline = VerificationPipeline(
        settings_from_args(args),
        dump_vcs=args.dump_vcs,
        dump_cfg=args.dump_cfg,
        verbose=not args.json,
    )
    try:
        result = pipeline.verify_file(args.file)
    except FileNotFoundError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ERROR

    if args.output:
        if not save_json(result, args.output):
            return EXIT_ERROR
        print(f"Results saved to: {args.output}", file=sys.stderr if args.json else sys.stdout)
    if args.json:
        print(json.dumps(result, indent=2, ensure_ascii=False))
    else:
        if result.get("witness"):
            print("\nCounterexample:")
            print(json.dumps(result["witness"], indent=2))
        if result.get("detail"):
            print(f"  Detail: {result['detail']}")
        if result.get("vc_scripts"):
            print(f"  VC scripts: {len(result['vc_scripts'])} written to {Path(result['vc_scripts'][0]).parent}")
    return EXIT_CODES.get(result.get("verdict"), EXIT_ERROR)


def run_bench(args) -> int:
    """Verify a corpus directory and compare with expected verdicts."""
    from evaluation.runner import run_benchmarks

    report = run_benchmarks(args.directory, settings_from_args(args), jobs=args.jobs,
                            progress=not args.quiet)
    print(report.to_table())
    if not args.output:
        Config.ensure_directories()
    paths = report.save(args.output or str(Config.RESULTS_DIR))
    print(f"\nResults saved to: {paths['csv']}")
    return 0 if report.all_passed else 1


def run_interpret(args) -> int:
    """Execute a program at a concrete size."""
    from fpi.pipeline import VerificationPipeline

    result = VerificationPipeline(verbose=False).interpret_file(args.file, args.n, args.input, args.seed)
    print(json.dumps(result, indent=2))
    return 0


def run_config(args) -> int:
    """Show the effective configuration and any problems with it."""
    print(json.dumps(Config.get_config_summary(), indent=2))
    problems = Config.validate_config()
    for problem in problems:
        print(f"Configuration error: {problem}", file=sys.stderr)
    return EXIT_ERROR if problems else 0


def run_tests(args) -> int:
    """Run tests."""
    from scripts.run_tests import main as test_main
    forwarded = ["--corpus"] if args.corpus else []
    if args.coverage:
        forwarded.append("--coverage")
    if args.module:
        forwarded += ["--module", *args.module]
    return test_main(forwarded)


def main(argv=None) -> int:
    """Main entry point."""
    parser = argparse.ArgumentParser(
        description="fpi - full-program induction verifier",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py verify corpus/safe/cubes.fpi          # Verify one program
  python main.py verify prog.fpi --json --dump-vcs vcs # Verdict JSON, keep SMT scripts
  python main.py bench corpus --jobs 4                 # Run the benchmark corpus
  python main.py interpret corpus/safe/ss.fpi --n 3    # Execute at N=3
  python main.py config                                # Show configuration
  python main.py test                                  # Run tests

Exit codes: 0 Valid, 1 CounterexampleFound, 2 Inconclusive, 3 usage/internal error
        """
    )
    parser.add_argument('--log-level', default=None, help='Logging level (default from LOG_LEVEL)')

    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    solver_flags = argparse.ArgumentParser(add_help=False)
    solver_flags.add_argument('--solver', help='SMT-LIB solver executable (default: in-process z3)')
    solver_flags.add_argument('--timeout-ms', type=int, help='Per-query solver timeout')
    solver_flags.add_argument('--base-bound', type=int, choices=range(1, Config.MAX_BASE_BOUND + 1),
                              metavar='M', help=f'Base case checked for N=1..M (M <= {Config.MAX_BASE_BOUND})')

    verify_parser = subparsers.add_parser('verify', parents=[solver_flags], help='Verify a program')
    verify_parser.add_argument('file', help='Program file (.fpi)')
    verify_parser.add_argument('--dump-cfg', metavar='DIR', help='Write the CFG with dependence edges as DOT')
    verify_parser.add_argument('--dump-vcs', metavar='DIR', help='Write every SMT-LIB query to DIR (default: a fresh directory under data/runs)')
    verify_parser.add_argument('--json', action='store_true', help='Print the verdict as JSON')
    verify_parser.add_argument('--output', '-o', help='Also save the verdict JSON to this file')

    bench_parser = subparsers.add_parser('bench', parents=[solver_flags], help='Run a benchmark directory')
    bench_parser.add_argument('directory', help='Directory of .fpi files with .expected.json sidecars')
    bench_parser.add_argument('--jobs', '-j', type=int, default=None, help='Parallel worker processes')
    bench_parser.add_argument('--output', '-o', help='Directory for CSV/JSON results')
    bench_parser.add_argument('--quiet', '-q', action='store_true', help='No progress bar')

    interpret_parser = subparsers.add_parser('interpret', help='Execute a program at a concrete N')
    interpret_parser.add_argument('file', help='Program file (.fpi)')
    interpret_parser.add_argument('--n', type=int, required=True, help='Value of N (>= 1)')
    interpret_parser.add_argument('--input', help='JSON initial state; sampled from the pre-condition if omitted')
    interpret_parser.add_argument('--seed', type=int, default=None, help='Sampling seed')

    subparsers.add_parser('config', help='Show the effective configuration')
    test_parser = subparsers.add_parser('test', help='Run tests')
    test_parser.add_argument('--corpus', action='store_true', help='Only the end-to-end corpus tests')
    test_parser.add_argument('--coverage', action='store_true', help='Measure coverage')
    test_parser.add_argument('--module', '-m', nargs='+', help='Test modules to run')

    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code else 0

    setup_logging(args.log_level)

    problems = Config.validate_config()
    if problems and args.command in ('verify', 'bench'):
        for problem in problems:
            print(f"Configuration error: {problem}", file=sys.stderr)
        return EXIT_ERROR

    handlers = {
        'verify': run_verify,
        'bench': run_bench,
        'interpret': run_interpret,
        'config': run_config,
        'test': run_tests,
    }
    if args.command not in handlers:
        parser.print_help()
        return EXIT_ERROR
    if args.command == 'interpret' and args.n < 1:
        print("Error: --n must be at least 1", file=sys.stderr)
        return EXIT_ERROR

    try:
        return handlers[args.command](args)
    except (FpiError, FileNotFoundError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
