"""Command-line driver: ``polykoop {validate,lift,matrices,simulate,residual-check}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import render
from .lifting import LiftingCapExceeded, StructureError, compute_lifting, decompose_per_state
from .model import build_model, eval_numeric, reorder, residual
from .poly_core import Monomial, UnboundParameterError
from .simulator import (
    DEFAULT_H,
    DEFAULT_T,
    InputSignal,
    NonFiniteStateError,
    SampledInput,
    StepInput,
    ZeroInput,
    compare,
    expm_propagate,
    integrate_lifted,
    integrate_nonlinear,
    lift_state,
    project,
)
from .spec_io import SpecDocument, SpecError, parse_document

RESIDUAL_THRESHOLD = 1e-9


class CliError(Exception):
    """Failure reported as a one-line diagnostic with exit code 1."""


def load_document(path: str) -> SpecDocument:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return parse_document(text)
    except SpecError as exc:
        raise CliError("\n".join(f"{path}:{d}" for d in exc.diagnostics)) from None


def parse_order(text: str, n_x: int) -> list[Monomial]:
    """Observables as a JSON list of exponent lists, or one exponent vector per line."""
    try:
        rows = json.loads(text)
    except json.JSONDecodeError:
        rows = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append([int(t) for t in line.replace(",", " ").split()])
    out = []
    for r in rows:
        if len(r) != n_x:
            raise CliError(f"order entry {r} does not have {n_x} exponents")
        out.append(Monomial(tuple(int(e) for e in r)))
    return out


def parse_input(text: str, n_u: int, base: Path) -> InputSignal:
    """``zero``, ``step:<amp>[,<amp>...]@<onset>`` or ``file:<csv>`` (columns t,u1..)."""
    if text == "zero":
        return ZeroInput(max(n_u, 1))
    if text.startswith("step:"):
        body = text[5:]
        amp, _, onset = body.partition("@")
        try:
            amps = tuple(float(a) for a in amp.split(","))
            t0 = float(onset) if onset else 0.0
        except ValueError:
            raise CliError(f"bad step input {text!r}; expected step:<amp>@<t>") from None
        if len(amps) == 1 and n_u > 1:
            amps = amps * n_u
        if len(amps) != n_u:
            raise CliError(f"step input has {len(amps)} channels, system has {n_u}")
        return StepInput(amps, t0)
    if text.startswith("file:"):
        path = Path(text[5:])
        if not path.is_absolute():
            path = base / path
        try:
            traj, _ = render.read_trajectory(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise CliError(f"cannot read input file {path}: {exc}") from None
        sig = SampledInput(traj.times, traj.samples)
        if sig.n_u != n_u:
            raise CliError(f"input file has {sig.n_u} channels, system has {n_u}")
        return sig
    raise CliError(f"unknown input {text!r}; use zero, step:<amp>@<t> or file:<path>")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_validate(args) -> int:
    doc = load_document(args.spec)
    print(f"{args.spec}: ok ({doc.spec.n_x} states)")
    return 0


def cmd_lift(args) -> int:
    spec = load_document(args.spec).spec
    phi = compute_lifting(spec)
    print(f"Phi ({len(phi)} observables):")
    for k, m in enumerate(phi, start=1):
        print(f"  z{k} = {m}")
    for i, w in enumerate(decompose_per_state(phi, spec), start=1):
        print(f"W_{i} = {{{', '.join(str(m) for m in w)}}}")
    return 0


def cmd_matrices(args) -> int:
    doc = load_document(args.spec)
    model = build_model(doc.spec)
    if args.order:
        try:
            text = Path(args.order).read_text(encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot read {args.order}: {exc.strerror}") from None
        try:
            model = reorder(model, parse_order(text, model.n_x))
        except ValueError as exc:
            raise CliError(f"{args.order}: {exc}") from None
    names = render.observable_names(model.phi.observables)
    sections = [f"# Phi\n{', '.join(names)}\n"]
    if args.numeric:
        num = eval_numeric(model)
        sections.append("# A\n" + render.render_matrix(num.A, render.NUMERIC))
        sections.append("# C\n" + render.render_matrix(model.C, render.NUMERIC))
    else:
        sections.append("# A\n" + render.render_matrix(model.A) + "\n")
        sections.append("# C\n" + render.render_matrix(model.C.astype(int).astype(float)) + "\n")
    sections.append("# dPhi/dx\n" + render.render_matrix(model.J) + "\n")
    if model.B is not None:
        sections.append("# B(x)\n" + render.render_matrix(model.B) + "\n")
    _emit("\n".join(sections), args.out)
    return 0


def cmd_simulate(args) -> int:
    doc = load_document(args.spec)
    spec, sim = doc.spec, doc.sim
    h = args.h if args.h is not None else (sim.h or DEFAULT_H)
    T = args.T if args.T is not None else (sim.T if sim.T is not None else DEFAULT_T)
    if args.x0 is not None:
        try:
            x0 = np.array([float(v) for v in args.x0.split(",")])
        except ValueError:
            raise CliError(f"bad --x0 {args.x0!r}") from None
    elif sim.x0 is not None:
        x0 = np.array(sim.x0)
    else:
        x0 = np.ones(spec.n_x)
    if x0.shape != (spec.n_x,):
        raise CliError(f"x0 has {x0.size} entries, system has {spec.n_x} states")
    u_text = args.input or sim.input or "zero"
    if not spec.has_input and u_text != "zero":
        raise CliError("system has no input map; only the zero input is allowed")
    u = parse_input(u_text, spec.n_u, Path(args.spec).parent) if spec.has_input else None

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    state_names = [f"x{i}" for i in range(1, spec.n_x + 1)]
    series = []
    nonlinear = lifted_x = None
    if args.mode in ("nonlinear", "both"):
        nonlinear = integrate_nonlinear(spec, x0, u, h, T)
        (out / "nonlinear.csv").write_text(render.write_trajectory(nonlinear, state_names))
        series.append(("nonlinear.csv", "x", spec.n_x))
    if args.mode in ("lifted", "both"):
        model = build_model(spec)
        num = eval_numeric(model)
        z0 = lift_state(model.phi, x0)
        if args.expm:
            if u is not None and not isinstance(u, ZeroInput):
                raise CliError("--expm propagates the autonomous model only; use --input zero")
            ztraj = expm_propagate(num.A, z0, h, T)
        else:
            ztraj = integrate_lifted(num, z0, u, h, T)
        znames = [f"z{k}" for k in range(1, num.n_f + 1)]
        (out / "lifted_z.csv").write_text(render.write_trajectory(ztraj, znames))
        lifted_x = project(ztraj, num.C)
        (out / "lifted.csv").write_text(render.write_trajectory(lifted_x, state_names))
        series.append(("lifted.csv", "z", spec.n_x))
    error_csv = None
    if nonlinear is not None and lifted_x is not None:
        rep = compare(nonlinear, lifted_x)
        error_csv = "error.csv"
        (out / error_csv).write_text(render.write_trajectory(rep.series, [f"e{i}" for i in range(1, spec.n_x + 1)]))
        print(f"sup error: {rep.sup:.3e}")
        print("per-state max error: " + ", ".join(f"{v:.3e}" for v in rep.per_state))
    (out / "plot.gp").write_text(render.plot_script(series, error_csv))
    print(f"wrote {len(nonlinear or lifted_x)} samples per trajectory to {out}")
    return 0


def cmd_residual(args) -> int:
    spec = load_document(args.spec).spec
    model = build_model(spec)
    rng = np.random.default_rng(args.seed)
    x = rng.uniform(-args.box, args.box, size=(args.samples, spec.n_x))
    r = residual(model, spec, x)
    worst = float(np.max(r, initial=0.0))
    print(f"max residual over {args.samples} samples: {worst:.3e} (threshold {RESIDUAL_THRESHOLD:.0e})")
    return 0 if worst <= RESIDUAL_THRESHOLD else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polykoop", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse a system file and check its triangular structure")
    p.add_argument("spec")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("lift", help="print the lifting and its per-state decomposition")
    p.add_argument("spec")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("matrices", help="print A, C, dPhi/dx and B")
    p.add_argument("spec")
    p.add_argument("--order", help="file listing observables (exponent vectors) in the desired order")
    p.add_argument("--numeric", action="store_true", help="emit A and C as numeric CSV")
    p.add_argument("--out", help="write to this file instead of stdout")
    p.set_defaults(func=cmd_matrices)

    p = sub.add_parser("simulate", help="integrate the original and lifted systems")
    p.add_argument("spec")
    p.add_argument("--mode", choices=("nonlinear", "lifted", "both"), default="both")
    p.add_argument("--input", help="zero | step:<amp>@<t> | file:<path>")
    p.add_argument("--h", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--x0", help="comma-separated initial state")
    p.add_argument("--expm", action="store_true", help="propagate the lifted model with exp(A h)")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("residual-check", help="check dPhi/dx f = A Phi at random states")
    p.add_argument("spec")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--box", type=float, default=1.0, help="sample states uniformly in [-box, box]^n")
    p.set_defaults(func=cmd_residual)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (StructureError, LiftingCapExceeded, UnboundParameterError, NonFiniteStateError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
