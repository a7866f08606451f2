"""laxforge command line.

Exit codes: 0 success, 1 self-check failed, 2 usage, 3 reference mismatch only.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .config import FORMATS, PipelineConfig, UsageError, load_config, load_seed_file
from .emit import emit
from .pipeline import EXIT_INCONSISTENT, EXIT_OK, EXIT_REFERENCE, EXIT_USAGE, bracket_text, run_pipeline


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _family_args(p, order=False, m=False):
    p.add_argument("--family", required=True, help="nilpotent, hadamard, idempotent or kidempotent")
    p.add_argument("--p", type=int, help="nilpotency parameter (N^(p+1) = 0)")
    p.add_argument("--n", type=int, help="number of idempotents")
    p.add_argument("--sign-variant", default="plain", choices=["plain", "alternating"])
    p.add_argument("--format", default="text", choices=FORMATS)
    p.add_argument("--out", help="write output here instead of stdout")
    if order:
        p.add_argument("--order", type=int, default=2, help="flow index")
    if m:
        p.add_argument("--m", type=int, default=1, help="Hamiltonian index")
    p.add_argument("--seed-file", help="JSON object of order-0 seeds, e.g. {\"B1\": \"r1\"}")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="laxforge", description="Coupled integrable hierarchies from matrix-coupled Lax pairs")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _family_args(sub.add_parser("family", help="family axioms and closure table"))
    _family_args(sub.add_parser("components", help="component zero-curvature equations"))
    _family_args(sub.add_parser("derive", help="emit the evolution equations of one flow"), order=True)
    h = sub.add_parser("hamiltonian", help="trace identity, H_m and the symplectic fit")
    _family_args(h, m=True)
    h.add_argument("--verify", action="store_true", help="check the gradient and fit J")
    h.add_argument("--transpose", choices=["auto", "yes", "no"], default="auto",
                   help="pair with tr(M_j^T M_k) instead of tr(M_j M_k)")
    s = sub.add_parser("simulate", help="integrate an emitted system on a periodic grid")
    s.add_argument("--system", required=True, help="PDE system JSON from 'derive --format json'")
    s.add_argument("--nx", type=int, default=256)
    s.add_argument("--dt", type=float, default=1e-4)
    s.add_argument("--tmax", type=float, default=0.1)
    s.add_argument("--length", type=float, default=2 * math.pi)
    s.add_argument("--kmax", type=int, default=16, help="spectral cutoff; 0 disables it")
    s.add_argument("--amplitude", type=float, default=1e-2)
    s.add_argument("--modes", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--stride", type=int, default=10)
    s.add_argument("--log", help="conservation CSV")
    r = sub.add_parser("report", help="full derivation report")
    r.add_argument("--config", help="JSON config; overrides the family options")
    r.add_argument("--family")
    r.add_argument("--p", type=int)
    r.add_argument("--n", type=int)
    r.add_argument("--sign-variant", default="plain", choices=["plain", "alternating"])
    r.add_argument("--order", type=int, default=2)
    r.add_argument("--m", type=int, default=1)
    r.add_argument("--format", default="text", choices=FORMATS)
    r.add_argument("--out")
    r.add_argument("--seed-file")
    return ap


def _write(args, data: bytes):
    if getattr(args, "out", None):
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode())
        sys.stdout.flush()


def _family(args):
    from ..matkit import build_family
    cfg = PipelineConfig(args.family, args.p, args.n, args.sign_variant)
    return build_family(cfg.family, **cfg.family_kwargs)


def cmd_family(args) -> int:
    import json
    from ..matkit import closure_table, verify_family_axioms
    fam = _family(args)
    ax = verify_family_axioms(fam)
    table = closure_table(fam)
    if args.format == "json":
        obj = {"family": fam.kind, "params": dict(fam.params), "axioms": [[n, ok] for n, ok in ax.checks],
               "closure_table": table.to_json()}
        _write(args, (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode())
    else:
        lines = [f"[{'ok' if ok else 'FAIL'}] {n}" for n, ok in ax.checks]
        _write(args, ("\n".join(lines) + "\n\n").encode() + emit(table, args.format))
    return EXIT_OK if ax.passed else EXIT_INCONSISTENT


def cmd_components(args) -> int:
    import json
    from ..hierarchy.reference import components_report, derived_components
    from ..laxzcc import assemble, check_against_brute_force
    fam = _family(args)
    comps = derived_components(fam)
    bad = check_against_brute_force(assemble(fam, 2))
    rep = components_report(fam)
    if args.format == "json":
        obj = {"components": {k: bracket_text(v) for k, v in comps.items()},
               "brute_force_ok": not bad, "diff": rep.to_json()}
        _write(args, (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode())
    else:
        lines = [f"{k}: U_t - V_x + {bracket_text(v)} = 0" for k, v in comps.items()]
        lines.append(f"brute-force check: {'ok' if not bad else 'FAIL at ' + str(bad)}")
        _write(args, ("\n".join(lines) + "\n\n").encode() + emit(rep, args.format if args.format != "json" else "text"))
    if bad:
        return EXIT_INCONSISTENT
    return EXIT_OK if rep.is_empty() else EXIT_REFERENCE


def _seeds(args, fam, order):
    if not getattr(args, "seed_file", None):
        return None
    from ..hierarchy import default_seeds
    from ..laxzcc import assemble
    seeds = default_seeds(assemble(fam, order))
    seeds.update(load_seed_file(args.seed_file))
    return seeds


def cmd_derive(args) -> int:
    from ..hierarchy import check_recursion, emit_pde_system, extract_recursion_operator, solve_hierarchy
    from ..hierarchy.reference import flow_report
    fam = _family(args)
    order = max(args.order, 2)
    ht = solve_hierarchy(fam, order, seeds=_seeds(args, fam, order))
    pde = emit_pde_system(ht, args.order)
    _write(args, emit(pde, args.format))
    ok = ht.consistent() and not any(check_recursion(extract_recursion_operator(fam), ht).values())
    if not ok:
        print("self-check failed: hierarchy residuals or recursion mismatch", file=sys.stderr)
        return EXIT_INCONSISTENT
    for n in pde.notes:
        print(f"note: {n}", file=sys.stderr)
    rep = flow_report(pde)
    if rep is not None and not rep.is_empty():
        print(rep.to_text(), file=sys.stderr)
        return EXIT_REFERENCE
    return EXIT_OK


def cmd_hamiltonian(args) -> int:
    import json
    from .. import hamilton
    from ..diffring import to_text
    from ..hierarchy import emit_pde_system, flow_for_hamiltonian, solve_hierarchy
    fam = _family(args)
    m = args.m
    from ..laxzcc import assemble
    template = assemble(fam, 0).template
    flow = flow_for_hamiltonian(template, m)
    order = max(m + 1, flow, 2)
    ht = solve_hierarchy(fam, order, seeds=_seeds(args, fam, order))
    transpose = {"auto": None, "yes": True, "no": False}[args.transpose]
    g = hamilton.solve_gamma(ht, transpose)
    out = {"family": fam.kind, "params": dict(fam.params), "m": m, "gamma": g.describe()}
    code = EXIT_OK
    if not g.consistent:
        out["hamiltonian"] = None
        code = EXIT_INCONSISTENT
        H = hamilton.displayed_hamiltonian(fam, m).evaluate(ht.entries)
        out["note"] = f"printed H_{m} used for the fit"
    else:
        rec = hamilton.hamiltonian(ht, g.gamma, m, g.transpose)
        cmp = hamilton.compare_forms(rec.form, hamilton.displayed_hamiltonian(fam, m))
        out["hamiltonian"] = rec.text()
        out["density"] = to_text(rec.density)
        out["printed form"] = cmp.detail
        if args.verify:
            out["gradient check"] = "ok" if rec.gradient_ok else "FAIL"
            if not rec.gradient_ok:
                code = EXIT_INCONSISTENT
        if not cmp.exact and code == EXIT_OK:
            code = EXIT_REFERENCE
        H = rec.density
    if args.verify:
        fits = hamilton.fit_both(emit_pde_system(ht, flow), H)
        conv = hamilton.resolve_convention(fits)
        out["symplectic"] = {c: f.describe() for c, f in fits.items()}
        out["convention"] = conv
        best = fits.get(conv) if conv else None
        if best is None:
            code = EXIT_INCONSISTENT
        else:
            out["W"] = str(best.W)
            md = hamilton.diff_displayed(best, hamilton.displayed_w(fam))
            out["printed W"] = md.detail
            if not md.exact and code == EXIT_OK:
                code = EXIT_REFERENCE
    if args.format == "json":
        data = json.dumps(out, sort_keys=True, indent=2) + "\n"
    elif args.format == "latex":
        data = "\\begin{verbatim}\n" + "\n".join(f"{k}: {v}" for k, v in out.items()) + "\n\\end{verbatim}\n"
    else:
        data = "\n".join(f"{k}: {v}" for k, v in out.items()) + "\n"
    _write(args, data.encode())
    return code


def simulation_hamiltonian(pde):
    """H_m paired with the flow of `pde`, derived when gamma is consistent, printed otherwise."""
    from .. import hamilton
    from ..hierarchy import solve_hierarchy
    from ..laxzcc import assemble
    from ..matkit import build_family
    fam = build_family(pde.family, **pde.params)
    template = assemble(fam, 0).template
    m = pde.order - 1 if template.name == "kaup-newell" else pde.order + 1
    if m < 1:
        return None, "H"
    ht = solve_hierarchy(fam, max(m + 1, pde.order, 2))
    g = hamilton.solve_gamma(ht)
    if g.consistent:
        return hamilton.hamiltonian(ht, g.gamma, m, g.transpose).density, f"H{m}"
    return hamilton.displayed_hamiltonian(fam, m).evaluate(ht.entries), f"H{m}_printed"


def cmd_simulate(args) -> int:
    import json
    from .. import numlab
    from ..hierarchy.flows import PDESystem
    try:
        pde = PDESystem.from_json(json.loads(Path(args.system).read_text()))
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read system {args.system}: {exc}") from None
    if args.dt <= 0 or args.tmax < 0:
        raise UsageError("dt must be positive and tmax non-negative")
    ev = numlab.compile_rhs(pde, kmax=args.kmax or None)
    H, name = simulation_hamiltonian(pde)
    mon = numlab.Monitor(ev, H, name=name)
    state = numlab.smooth_initial(pde, args.nx, args.amplitude, args.length, args.modes, args.seed)
    steps = int(round(args.tmax / args.dt))
    try:
        final, log = numlab.integrate(ev, state, args.dt, steps, args.stride, mon)
    except numlab.BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        if args.log:
            exc.log.write_csv(args.log)
        return EXIT_INCONSISTENT
    if args.log:
        log.write_csv(args.log)
    lines = [f"t = {final.time:.6g} after {steps} steps"]
    lines += [f"relative drift {c}: {log.drift(c):.3e}" for c in log.columns[1:] if not c.startswith("max")]
    print("\n".join(lines))
    return EXIT_OK


def cmd_report(args) -> int:
    if args.config:
        cfg = load_config(args.config)
    else:
        if not args.family:
            raise UsageError("report needs --config or --family")
        seeds = load_seed_file(args.seed_file) if args.seed_file else None
        cfg = PipelineConfig(args.family, args.p, args.n, args.sign_variant, args.order, args.m,
                             [args.format], seeds)
    rep = run_pipeline(cfg)
    _write(args, emit(rep, args.format))
    for e in rep.errors:
        print(f"error [{e['module']}]: {e['message']}", file=sys.stderr)
    return rep.exit_code


COMMANDS = {"family": cmd_family, "components": cmd_components, "derive": cmd_derive,
            "hamiltonian": cmd_hamiltonian, "simulate": cmd_simulate, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"laxforge: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # module errors surface with their origin
        mod = type(exc).__module__.replace("laxforge.", "")
        print(f"laxforge: error [{mod}]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT


if __name__ == "__main__":
    sys.exit(main())
