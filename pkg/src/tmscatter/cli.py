"""Command-line front end.

Exit codes: 0 success, 2 validation or parse error, 3 singular system,
4 oracle comparison failure.
"""

from __future__ import annotations

import argparse
import re
import sys
import warnings

import numpy as np

from .core import (
    DomainError,
    Excitation,
    ExcitationEntry,
    FrequencyGrid,
    ScattererBlocks,
    SingularSystemError,
    ValidationError,
    pol_offset,
)
from .formats import FORMAT_VERSION, ResultRecord, load_bundle, load_context, load_plan, records_to_text, write_records
from .loads import fourier_coefficient, fourier_coefficient_numeric
from .oracle import SnapWarning, compare, model_spectrum, quasi_static_spectrum
from .solver import bcs, convergence_check, harmonic_spectrum, scatter, system_matrix_for

EXIT_OK, EXIT_INVALID, EXIT_SINGULAR, EXIT_ORACLE = 0, 2, 3, 4


class CliError(ValidationError):
    pass


def parse_excitation(text: str, default_h: int) -> Excitation:
    """Parse ``"tau=A,pol=phi,amp=1+0j[,h=H]"``."""
    fields = {}
    for part in text.split(","):
        if "=" not in part:
            raise CliError(f"excitation item {part!r} is not key=value")
        k, v = part.split("=", 1)
        fields[k.strip()] = v.strip()
    unknown = set(fields) - {"tau", "pol", "amp", "h"}
    if unknown:
        raise CliError(f"unknown excitation keys {sorted(unknown)}")
    if "tau" not in fields:
        raise CliError("excitation needs tau=<direction>")
    try:
        tau = int(fields["tau"])
        h = int(fields.get("h", default_h))
        amp = complex(fields.get("amp", "1").replace(" ", ""))
    except ValueError as e:
        raise CliError(f"bad excitation {text!r}: {e}") from e
    pol = fields.get("pol", "phi")
    entry = ExcitationEntry(h, tau, amp, 0j) if pol_offset(pol) == 0 else ExcitationEntry(h, tau, 0j, amp)
    return Excitation([entry])


def parse_offsets(text: str) -> list[int]:
    """``"3"``, ``"±3"``/``"+-3"`` (both signs) or ``"-3:3"`` (inclusive range)."""
    text = text.strip()
    m = re.fullmatch(r"(?:±|\+-|\+/-)(\d+)", text)
    if m:
        k = int(m.group(1))
        return sorted({-k, k})
    m = re.fullmatch(r"(-?\d+):(-?\d+)", text)
    if m:
        return list(range(int(m.group(1)), int(m.group(2)) + 1))
    try:
        return [int(text)]
    except ValueError:
        raise CliError(f"cannot read harmonic offsets from {text!r}") from None


def parse_probe(text: str) -> tuple[int, list[int]]:
    rho, ks = None, [1]
    for part in text.split(","):
        k, _, v = part.partition("=")
        if k.strip() == "rho":
            rho = int(v)
        elif k.strip() == "k":
            ks = parse_offsets(v)
        else:
            raise CliError(f"unknown probe item {part!r}")
    if rho is None:
        raise CliError("probe needs rho=<direction>")
    return rho, ks


def rewindow(blocks: ScattererBlocks, grid: FrequencyGrid, H: int) -> tuple[ScattererBlocks, FrequencyGrid]:
    """Centered sub-window of ``H`` harmonics around the bundle's input tone."""
    half = (H - 1) // 2
    lo, hi = grid.h_c - half, grid.h_c + half
    if not blocks.is_flat and (lo < 1 or hi > grid.H):
        raise CliError(f"bundle covers harmonics 1..{grid.H}; H={H} around h_c={grid.h_c} needs {lo}..{hi}")
    idx = np.clip(np.arange(lo, hi + 1), 1, grid.H) - 1
    names = ("s_ff_pp", "s_ff_tp", "s_ff_pt", "s_ff_tt", "s_fd_p", "s_fd_t", "s_df_p", "s_df_t", "s_dd")
    sub = ScattererBlocks(z_ref=blocks.z_ref, **{n: getattr(blocks, n)[idx] for n in names})
    return sub, FrequencyGrid.centered(grid.f_in, grid.f_m, H)


def _records_for(result, excitation, plan, directions, ctx=None, tau=None, hs=None):
    grid = result.grid
    tau = excitation.entries[0].tau if tau is None else tau
    out = []
    for rho in directions:
        for row in harmonic_spectrum(result, rho):
            if hs is not None and row.h not in hs:
                continue
            sigma = bcs(result, excitation, ctx, row.h, rho, tau, grid.h_c) if ctx is not None else None
            out.append(ResultRecord(
                plan.regime, tau, rho, row.h, row.h - grid.h_c, float(row.f_hz),
                float(row.b_phi.real), float(row.b_phi.imag), float(row.b_theta.real), float(row.b_theta.imag),
                float(row.power_w),
                None if sigma is None else float(sigma.m2),
                None if sigma is None else float(sigma.dbm2),
            ))
    return out


def _emit(records, out, fmt):
    if out:
        write_records(records, out, fmt)
        print(f"wrote {len(records)} records to {out}")
    else:
        sys.stdout.write(records_to_text(records, fmt))


def cmd_coeffs(args) -> int:
    plan = load_plan(args.plan)
    if not 1 <= args.port <= plan.num_ports:
        raise CliError(f"port {args.port} not in plan (1..{plan.num_ports})")
    sched = plan.schedules[args.port - 1]
    z_ref = complex(args.z_ref.replace(" ", ""))
    gammas = sched.reflections(args.harmonic, args.f_hz, z_ref)
    ks = np.arange(-args.kmax, args.kmax + 1)
    closed = fourier_coefficient(sched, gammas, ks)
    numeric = fourier_coefficient_numeric(sched, gammas, ks, args.samples) if args.numeric else None
    lines = ["k,re,im,abs" + (",re_numeric,im_numeric,abs_diff" if args.numeric else "")]
    for i, k in enumerate(ks):
        c = closed[i]
        row = [str(int(k)), format(c.real, ".17g"), format(c.imag, ".17g"), format(abs(c), ".17g")]
        if numeric is not None:
            n = numeric[i]
            row += [format(n.real, ".17g"), format(n.imag, ".17g"), format(abs(n - c), ".17g")]
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {len(ks)} coefficients to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_solve(args) -> int:
    blocks, grid, layout = load_bundle(args.bundle)
    plan = load_plan(args.plan)
    exc = parse_excitation(args.excite, grid.h_c)
    ctx = load_context(args.ctx) if args.ctx else None
    C_sys = system_matrix_for(blocks, grid, plan)
    result = scatter(C_sys, exc, layout, grid)
    directions = [args.rho] if args.rho else range(1, layout.M + 1)
    records = _records_for(result, exc, plan, directions, ctx)
    _emit(records, args.out, args.format)
    return EXIT_OK


def cmd_bcs(args) -> int:
    blocks, grid, layout = load_bundle(args.bundle)
    plan = load_plan(args.plan)
    ctx = load_context(args.ctx)
    if not args.sweep_rho and args.rho is None:
        raise CliError("give --sweep-rho or --rho")
    exc = Excitation.single(grid.h_c, args.tau, args.pol, 1.0)
    result = scatter(system_matrix_for(blocks, grid, plan), exc, layout, grid)
    h = grid.h_c + args.harmonic_offset
    if not 1 <= h <= grid.H:
        raise CliError(f"offset {args.harmonic_offset} falls outside harmonics 1..{grid.H}")
    directions = range(1, layout.M + 1) if args.sweep_rho else [args.rho]
    records = _records_for(result, exc, plan, directions, ctx, hs={h})
    if args.out:
        write_records(records, args.out, args.format)
    print(f"{'rho':>4} {'bcs_m2':>14} {'bcs_dbm2':>10}")
    for r in records:
        print(f"{r.rho:>4} {r.bcs_m2:14.6e} {r.bcs_dbm2:10.3f}")
    return EXIT_OK


def cmd_validate(args) -> int:
    blocks, grid, layout = load_bundle(args.bundle)
    plan = load_plan(args.plan)
    exc = Excitation.single(grid.h_c, args.tau, args.pol, 1.0)
    dispersive = not blocks.is_flat
    model = model_spectrum(scatter(system_matrix_for(blocks, grid, plan), exc, layout, grid))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SnapWarning)
        oracle = quasi_static_spectrum(blocks, plan, exc, grid, samples=args.samples)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    kmax = min(args.kmax, grid.H - grid.h_c, grid.h_c - 1)
    report = compare(model, oracle, args.tol, kmax=kmax)
    for line in report.lines():
        print(line)
    if dispersive:
        print("warning: bundle is not frequency-flat; divergence from the quasi-static oracle is expected",
              file=sys.stderr)
        return EXIT_OK
    return EXIT_OK if report.passed else EXIT_ORACLE


def cmd_converge(args) -> int:
    if args.hmax % 2 == 0 or args.hmax < 5:
        raise CliError("--hmax must be odd and at least 5")
    blocks, grid, layout = load_bundle(args.bundle)
    plan = load_plan(args.plan)
    rho, ks = parse_probe(args.probe)

    def build(H):
        sub, g = rewindow(blocks, grid, H)
        exc = Excitation.single(g.h_c, args.tau, args.pol, 1.0)
        return scatter(system_matrix_for(sub, g, plan), exc, sub.layout, g)

    table = convergence_check(build, list(range(5, args.hmax + 1, 2)), rho, ks, args.tol)
    print("H," + ",".join(f"|b|(k={k})" for k in ks) + ",max_change")
    for i, H in enumerate(table.harmonic_counts):
        change = "" if i == 0 else format(table.changes[i - 1], ".3e")
        print(f"{H}," + ",".join(format(v, ".10e") for v in table.magnitudes[i]) + f",{change}")
    print(f"settled H at tol {args.tol:g}: {table.settled_at if table.settled_at else 'not reached'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tmscatter", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s (format {FORMAT_VERSION})")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("coeffs", help="Fourier coefficients of one port's reflection waveform")
    c.add_argument("--plan", required=True)
    c.add_argument("--port", type=int, required=True)
    c.add_argument("--kmax", type=int, required=True)
    c.add_argument("--harmonic", type=int, default=1, help="harmonic index for per-harmonic tables")
    c.add_argument("--f-hz", type=float, default=0.0, help="frequency for frequency-dependent loads")
    c.add_argument("--z-ref", default="50")
    c.add_argument("--numeric", action="store_true", help="add the quadrature cross-check")
    c.add_argument("--samples", type=int, default=1 << 20)
    c.add_argument("--out")
    c.set_defaults(func=cmd_coeffs)

    s = sub.add_parser("solve", help="scattered power waves at every harmonic")
    s.add_argument("--bundle", required=True)
    s.add_argument("--plan", required=True)
    s.add_argument("--excite", required=True, help='e.g. "tau=5,pol=theta,amp=1+0j"')
    s.add_argument("--rho", type=int)
    s.add_argument("--ctx", help="measurement context; fills the BCS columns")
    s.add_argument("--out")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bcs", help="bistatic cross section versus receive direction")
    b.add_argument("--bundle", required=True)
    b.add_argument("--plan", required=True)
    b.add_argument("--ctx", required=True)
    b.add_argument("--tau", type=int, required=True)
    b.add_argument("--pol", default="phi")
    b.add_argument("--sweep-rho", action="store_true")
    b.add_argument("--rho", type=int)
    b.add_argument("--harmonic-offset", type=int, default=0)
    b.add_argument("--out")
    b.add_argument("--format", choices=("csv", "json"), default="csv")
    b.set_defaults(func=cmd_bcs)

    v = sub.add_parser("validate", help="compare against the quasi-static oracle")
    v.add_argument("--bundle", required=True)
    v.add_argument("--plan", required=True)
    v.add_argument("--samples", type=int, default=None,
                   help="time samples per period (default: aligned to the switch instants, >= 2**16)")
    v.add_argument("--tol", type=float, default=1e-9)
    v.add_argument("--tau", type=int, default=1)
    v.add_argument("--pol", default="phi")
    v.add_argument("--kmax", type=int, default=10)
    v.set_defaults(func=cmd_validate)

    g = sub.add_parser("converge", help="probe magnitudes versus harmonic count")
    g.add_argument("--bundle", required=True)
    g.add_argument("--plan", required=True)
    g.add_argument("--hmax", type=int, default=25)
    g.add_argument("--probe", default="rho=1,k=±3")
    g.add_argument("--tol", type=float, default=1e-6)
    g.add_argument("--tau", type=int, default=1)
    g.add_argument("--pol", default="phi")
    g.set_defaults(func=cmd_converge)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SingularSystemError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SINGULAR
    except (ValidationError, DomainError, IndexError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
