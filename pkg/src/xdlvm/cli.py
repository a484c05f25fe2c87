"""Command-line entry point: ``xdlvm check|run|compile-tm|oracle|render``.

Results go to stdout and diagnostics to stderr. Exit codes are 0 on
success, 1 for input or static-check problems and 2 for runtime errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

from . import __version__
from .chemputer import load_platform, save_platform, standard_platform
from .errors import XdlError, XdlSyntaxError
from .parser import parse_document
from .render import NoTransitions, render_ascii, render_svg
from .runtime import ExecutionConfig, check, has_errors, read_trace, run, write_trace
from .turing.codec import load_configuration
from .turing.compiler import STATE_VIALS, render_compiled, run_compiled
from .turing.machine import TmConfiguration, load_machine, oracle_trace, parse_tape

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2


def _err(message: str):
    print(message, file=sys.stderr)


def _load_doc(path: str):
    """Parse an XDL file; returns None after printing diagnostics."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        _err(f"{path}: error: {exc.strerror}")
        return None
    try:
        return parse_document(data)
    except XdlSyntaxError as exc:
        for d in exc.diagnostics:
            _err(d.format(path))
        return None


def _load_platform(path: str):
    try:
        return load_platform(path)
    except OSError as exc:
        _err(f"{path}: error: {exc.strerror}")
    except XdlError as exc:
        _err(f"{path}: error: {exc}")
    return None


def _static_check(doc, platform, path) -> bool:
    diags = check(doc, platform)
    for d in diags:
        _err(d.format(path))
    return not has_errors(diags)


# -- check / run --------------------------------------------------------------


def cmd_check(args) -> int:
    doc = _load_doc(args.xdl)
    if doc is None:
        return EXIT_INPUT
    platform = _load_platform(args.platform)
    if platform is None:
        return EXIT_INPUT
    if not _static_check(doc, platform, args.xdl):
        return EXIT_INPUT
    print(f"{args.xdl}: ok")
    return EXIT_OK


def vessel_summary(platform) -> str:
    width = max(len(v) for v in platform.vessels)
    lines = [f"{'vessel':<{width}}  {'colour':<7}  volume_ml"]
    for vid, v in platform.vessels.items():
        if v.is_stock and not v.contents:
            colour, volume = v.colour.value, "inf"
        else:
            colour, volume = platform.true_colour(vid).value, f"{v.volume_ml:g}"
        lines.append(f"{vid:<{width}}  {colour:<7}  {volume}")
    tapes = platform.by_role("tape")
    if tapes:
        cells = "".join(platform.true_colour(v.id).letter for v in tapes)
        lines.append(f"tape  {cells}")
    return "\n".join(lines)


def _resolve_seed(cli_seed: Optional[int]) -> Optional[int]:
    env = os.environ.get("XDLVM_SEED")
    if env is not None and env.strip():
        return int(env)
    return cli_seed


def cmd_run(args) -> int:
    doc = _load_doc(args.xdl)
    if doc is None:
        return EXIT_INPUT
    platform = _load_platform(args.platform)
    if platform is None:
        return EXIT_INPUT
    if args.sigma is not None:
        if args.sigma < 0:
            _err("error: --sigma must be >= 0")
            return EXIT_INPUT
        platform.camera_noise_sigma = args.sigma
    try:
        seed = _resolve_seed(args.seed)
    except ValueError:
        _err("error: XDLVM_SEED must be an integer")
        return EXIT_INPUT
    if seed is not None:
        platform.rng_seed = seed
    if not _static_check(doc, platform, args.xdl):
        return EXIT_INPUT
    if args.max_steps < 1:
        _err("error: --max-steps must be >= 1")
        return EXIT_INPUT

    try:
        final, trace = run(doc, platform, ExecutionConfig(max_steps=args.max_steps))
        code = EXIT_OK
    except XdlError as exc:
        _err(f"{args.xdl}: error: {type(exc).__name__}: {exc}")
        final, trace = getattr(exc, "platform", None), exc.trace or []
        code = EXIT_RUNTIME
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            write_trace(trace, fh)
    if final is not None:
        print(vessel_summary(final))
    return code


# -- compile-tm ---------------------------------------------------------------


def cmd_compile_tm(args) -> int:
    try:
        spec = load_machine(args.machine)
    except OSError as exc:
        _err(f"{args.machine}: error: {exc.strerror}")
        return EXIT_INPUT
    except XdlError as exc:
        _err(f"{args.machine}: error: {exc}")
        return EXIT_INPUT
    try:
        tape_len = args.tape_len
        if tape_len is None:
            tape_len = len(parse_tape(spec, args.tape)) if args.tape else 8
        tape = parse_tape(spec, args.tape, tape_len)
        text = render_compiled(spec, tape_len)
        platform = None
        if args.emit_platform:
            c0 = TmConfiguration(tape, spec.initial_head, spec.initial_state)
            platform = load_configuration(
                standard_platform(tape_len, tape_len, STATE_VIALS), spec, c0)
    except (XdlError, ValueError) as exc:
        _err(f"{args.machine}: error: {type(exc).__name__}: {exc}")
        return EXIT_INPUT
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(text)
    if platform is not None:
        save_platform(platform, args.emit_platform)
    print(f"wrote {args.output}" + (f" and {args.emit_platform}" if platform else ""))
    return EXIT_OK


# -- oracle -------------------------------------------------------------------


def _verdict(result) -> tuple[str, int]:
    final = result.final
    tail = f"transitions={result.transitions} head={final.head} tape={final.tape_string()}"
    if result.outcome == "halt":
        return f"HALT {tail}", EXIT_OK
    if result.outcome == "cap":
        return f"CAP {tail}", EXIT_OK
    if result.outcome == "no_rule":
        exc = result.error
        return f"NoRule state={exc.state} symbol={exc.symbol} {tail}", EXIT_RUNTIME
    return f"TapeBounds move={result.error.move} {tail}", EXIT_RUNTIME


def _oracle_lines(result) -> list[str]:
    return [f"{k:>4}  {c.state:<8} {c.head:>3}  {c.tape_string()}"
            for k, c in enumerate(result.configurations)]


def _oracle_job(job) -> tuple[list[str], int]:
    """One (machine, tape) pair: oracle run plus a compiled run on a fresh platform."""
    spec, tape, max_transitions, compare = job
    c0 = TmConfiguration(tape, spec.initial_head, spec.initial_state)
    result = oracle_trace(spec, c0, max_transitions)
    lines = _oracle_lines(result)
    verdict, code = _verdict(result)
    lines.append(verdict)
    if compare:
        compiled = run_compiled(spec, c0, max_transitions)
        n = min(len(compiled.configurations), len(result.configurations))
        bad = [k for k in range(n) if compiled.configurations[k] != result.configurations[k]]
        if bad or len(compiled.configurations) != len(result.configurations):
            at = bad[0] if bad else n
            lines.append(f"compiled MISMATCH at transition {at}")
            code = EXIT_RUNTIME
        else:
            lines.append(f"compiled match outcome={compiled.outcome}")
    return lines, code


def cmd_oracle(args) -> int:
    try:
        spec = load_machine(args.machine)
    except OSError as exc:
        _err(f"{args.machine}: error: {exc.strerror}")
        return EXIT_INPUT
    except XdlError as exc:
        _err(f"{args.machine}: error: {exc}")
        return EXIT_INPUT
    if args.max < 0:
        _err("error: --max must be >= 0")
        return EXIT_INPUT
    if args.jobs is not None and args.jobs < 1:
        _err("error: --jobs must be >= 1")
        return EXIT_INPUT
    tapes = args.tape or [""]
    batch = len(tapes) > 1 or args.jobs is not None
    jobs = []
    for text in tapes:
        try:
            tape = parse_tape(spec, text)
            if not tape:
                raise ValueError("empty tape")
            TmConfiguration(tape, spec.initial_head, spec.initial_state)
        except ValueError as exc:
            _err(f"error: --tape {text!r}: {exc}")
            return EXIT_INPUT
        jobs.append((spec, tape, args.max, batch))

    workers = args.jobs or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_oracle_job, jobs))
    else:
        results = [_oracle_job(j) for j in jobs]

    code = EXIT_OK
    for text, (lines, job_code) in zip(tapes, results):
        if batch:
            print(f"# tape {text}")
        print("\n".join(lines))
        if job_code != EXIT_OK and not batch:
            _err(lines[-1])
        code = max(code, job_code)
    return code


# -- render -------------------------------------------------------------------


def cmd_render(args) -> int:
    try:
        with open(args.trace, encoding="utf-8") as fh:
            trace = read_trace(fh)
    except OSError as exc:
        _err(f"{args.trace}: error: {exc.strerror}")
        return EXIT_INPUT
    except (ValueError, KeyError) as exc:
        _err(f"{args.trace}: error: malformed trace: {exc}")
        return EXIT_INPUT
    try:
        text = render_svg(trace) if args.format == "svg" else render_ascii(trace)
    except NoTransitions as exc:
        _err(f"{args.trace}: error: {exc}")
        return EXIT_INPUT
    except (XdlError, ValueError) as exc:
        _err(f"{args.trace}: error: {exc}")
        return EXIT_INPUT
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xdlvm", description="Conditional XDL interpreter and Turing machine compiler.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="subcommand")

    p = sub.add_parser("check", help="parse and statically check an XDL document")
    p.add_argument("xdl")
    p.add_argument("--platform", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("run", help="check and execute an XDL document")
    p.add_argument("xdl")
    p.add_argument("--platform", required=True)
    p.add_argument("--trace", help="write the JSON-lines execution trace here")
    p.add_argument("--max-steps", type=int, default=ExecutionConfig.max_steps)
    p.add_argument("--sigma", type=float, help="camera noise standard deviation")
    p.add_argument("--seed", type=int, help="camera RNG seed (XDLVM_SEED overrides)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compile-tm", help="compile a Turing machine into XDL")
    p.add_argument("machine")
    p.add_argument("--tape", help="initial tape, padded with blanks to --tape-len")
    p.add_argument("--tape-len", type=int)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--emit-platform", help="also write a platform config loaded with the tape")
    p.set_defaults(func=cmd_compile_tm)

    p = sub.add_parser("oracle", help="run a Turing machine on the reference executor")
    p.add_argument("machine")
    p.add_argument("--tape", action="append",
                   help="initial tape; repeat for a batch checked against the compiled run")
    p.add_argument("--max", type=int, default=1000, help="transition cap")
    p.add_argument("--jobs", type=int, help="parallel workers for batch mode")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("render", help="render a Turing machine run trace")
    p.add_argument("trace")
    p.add_argument("--format", choices=("ascii", "svg"), default="ascii")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; those are input problems here
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
