"""``echobd`` command line.

Exit codes: 0 success, 1 a check failed, 2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .complexbuilder import FLAT, FULL, SHARP, TotalBounds, VModel, build_total_complex, build_U0, ech_rel_boundary, mapping_cone
from .config import ModelConfig, dumps, load_config, nmodel_to_dict
from .errors import ConfigError, DegenerateOrbit, EchobdError, InfeasibleParameters, InvalidModel, MissingConvention, NotStabilized
from .indices import index_table
from .reebprofiles import check_contact, emit_profile_plot, scan_morse_bott
from .scenarios import (
    ScenarioBounds,
    ScenarioResult,
    acceptance_models,
    random_admissible_nmodel,
    run_corollary_v_variants,
    run_hat_theorem,
    run_main_theorem,
    run_many,
    run_solid_torus,
    thread_count,
)
from .spectral import FILTRATIONS, make_filtration, page

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_INPUT)


def _csv(rows: Sequence[Sequence], header: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def _config(path: str) -> ModelConfig:
    return load_config(path)


def _profile(args):
    cfg = _config(args.profile)
    if not cfg.profiles:
        raise ConfigError(f"{args.profile} declares no profiles")
    if args.index >= len(cfg.profiles):
        raise ConfigError(f"profile index {args.index} out of range ({len(cfg.profiles)} declared)")
    return cfg, cfg.profiles[args.index]


def _bounds(args, cfg: Optional[ModelConfig] = None) -> ScenarioBounds:
    sp = cfg.scenario if cfg else None
    j = args.jmax if args.jmax is not None else (sp.j_max if sp else 6)
    m = args.mmax if args.mmax is not None else (sp.m_max if sp else 6)
    g = args.guard if args.guard is not None else (sp.guard if sp else 2)
    if j - g < 1 or g < 0 or m < 1:
        raise ConfigError("need guard >= 0, m_max >= 1 and j_max > guard")
    return ScenarioBounds(m_max=m, j_max=j, guard=g)


# ----------------------------------------------------------------- commands

def cmd_check_profile(args) -> int:
    _, p = _profile(args)
    rep = check_contact(p, grid=args.grid)
    lines = [f"profile: {p.name or p.side}", f"side: {p.side}",
             f"range: [{p.parameter_range[0]}, {p.parameter_range[1]}]", f"pieces: {len(p.pieces)}",
             f"contact: {'ok' if rep.ok else 'VIOLATED'}", f"margin: {rep.margin!r}", f"worst_at: {rep.worst_at!r}"]
    if rep.limit is not None:
        lines.append(f"limit_at_core: {rep.limit}")
    _write("\n".join(lines) + "\n", None)
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_scan_orbits(args) -> int:
    cfg, p = _profile(args)
    L = args.L if args.L is not None else cfg.scenario.L
    q = args.qmax if args.qmax is not None else cfg.scenario.q_max
    if not check_contact(p).ok:
        sys.stderr.write("profile violates the contact condition; refusing to scan\n")
        return EXIT_FAIL
    recs = scan_morse_bott(p, L, q, threads=thread_count())
    _write(_csv([r.as_row() for r in recs], ("parameter", "p", "q", "action")), args.out)
    return EXIT_OK


def cmd_plot_profile(args) -> int:
    _, p = _profile(args)
    emit_profile_plot(p, args.out)
    return EXIT_OK


def cmd_indices(args) -> int:
    if args.n < 0:
        raise ConfigError("--n must be >= 0")
    rows = [(n, idx, mu) for n, mu, idx in index_table(args.r, args.n) if n >= 1]
    _write(_csv(rows, ("n", "index", "symmetric_cz")), args.out)
    return EXIT_OK


def _model(args):
    if args.model:
        cfg = _config(args.model)
        return cfg, cfg.nmodel()
    return None, random_admissible_nmodel(args.seed, args.orbits, args.jmax or 6)


def cmd_homology(args) -> int:
    cfg, n = _model(args)
    b = _bounds(args, cfg)
    rows = []
    for J in range(b.j_max + 1):
        er = ech_rel_boundary(n, args.variant, b.j_max, J)
        rows.append((J, *er.dims, er.limit_dim if er.stabilized else "", er.quotient_dim,
                     "yes" if er.stabilized else "no"))
    header = ("grade", *[f"j{j}" for j in range(b.j_max + 1)], "limit", "quotient", "stable")
    _write(_csv(rows, header), args.out)
    return EXIT_OK


def cmd_pages(args) -> int:
    cfg, n = _model(args)
    b = _bounds(args, cfg)
    J = args.grade if args.grade is not None else 0
    T = build_total_complex(VModel.post_limit(), n, TotalBounds(b.total_degree, J))
    if args.filtration == "Ehat":
        T = mapping_cone(build_U0(T), T)
    fc = make_filtration(T, args.filtration)
    rep = page(fc, args.r, check_collapse=False)
    rows = [(lvl, g, d) for (lvl, g), d in sorted(rep.dims.items(), key=lambda kv: (kv[0][0], str(kv[0][1])))]
    _write(_csv(rows, ("level", "grade", "dim")), args.out)
    return EXIT_OK


def cmd_gen_model(args) -> int:
    n = random_admissible_nmodel(args.seed, args.orbits, args.jmax or 6)
    _write(dumps(nmodel_to_dict(n, {"seed": args.seed, "j_max": args.jmax or 6})), args.out)
    return EXIT_OK


def _report(results: list[ScenarioResult], deterministic: bool) -> str:
    out = []
    if not deterministic:
        out.append(f"# generated {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}")
    out.append(f"# echobd {__version__}")
    for r in results:
        out.append(f"== {r.name}: {'PASS' if r.passed else 'FAIL'}")
        out.extend(f"   {n}" for n in r.notes if n.startswith("["))
    passed = sum(r.passed for r in results)
    out.append(f"summary: {passed}/{len(results)} passed")
    return "\n".join(out) + "\n"


def _tables(results: list[ScenarioResult], directory: str) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for r in results:
        for key, rows in r.tables.items():
            if not rows:
                continue
            header = list(rows[0].keys())
            safe = "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in f"{r.name}-{key}")
            (d / f"{safe}.csv").write_text(_csv([[row[h] for h in header] for row in rows], header),
                                           encoding="utf-8", newline="")


def cmd_verify(args) -> int:
    b = _bounds(args)
    which = args.scenario
    results: list[ScenarioResult] = []
    if which in ("solid-torus", "all"):
        results.append(run_solid_torus(args.r_list or (1.4142, 14.142, 141.42), n_max=args.nmax))
    if which in ("v-variants", "all"):
        results.append(run_corollary_v_variants(m_max=max(b.m_max, 2 * b.guard + 1), guard=b.guard))
    if which in ("main", "hat", "all"):
        models = acceptance_models(args.count, base_seed=args.seed, j_max=b.j_max)
        if which in ("main", "all"):
            results += run_many(lambda n: run_main_theorem(n, b, claims=not args.no_claims), models)
        if which in ("hat", "all"):
            results += run_many(lambda n: run_hat_theorem(n, b), models)
    _write(_report(results, args.deterministic), args.out)
    if args.csv_dir:
        _tables(results, args.csv_dir)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


# ------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="echobd", description="Exact F2 computations for ECH of open books and Reeb profiles.")
    ap.add_argument("--version", action="version", version=f"echobd {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def profile_args(p):
        p.add_argument("--profile", required=True, help="JSON configuration with a 'profiles' list")
        p.add_argument("--index", type=int, default=0, help="which declared profile to use")

    def model_args(p):
        p.add_argument("--model", help="JSON model configuration (default: a random model)")
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--orbits", type=int, default=3)
        p.add_argument("--jmax", type=int)
        p.add_argument("--mmax", type=int)
        p.add_argument("--guard", type=int)
        p.add_argument("--out")

    p = sub.add_parser("check-profile", help="contact condition audit")
    profile_args(p)
    p.add_argument("--grid", type=int, default=1000)
    p.set_defaults(func=cmd_check_profile)

    p = sub.add_parser("scan-orbits", help="Morse-Bott tori as CSV")
    profile_args(p)
    p.add_argument("--L", type=float)
    p.add_argument("--qmax", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_scan_orbits)

    p = sub.add_parser("plot-profile", help="SVG of the (f, g) trajectory")
    profile_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot_profile)

    p = sub.add_parser("indices", help="absolute indices of e^n on the solid torus")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_indices)

    p = sub.add_parser("homology", help="ECH_j(N, dN) dims and stabilized values per grade")
    model_args(p)
    p.add_argument("--variant", choices=(FLAT, SHARP, FULL), default=FLAT)
    p.set_defaults(func=cmd_homology)

    p = sub.add_parser("pages", help="spectral-sequence page dims of the total complex")
    model_args(p)
    p.add_argument("--filtration", choices=sorted(FILTRATIONS), default="G")
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--grade", type=int, help="interior degree cap J")
    p.set_defaults(func=cmd_pages)

    p = sub.add_parser("gen-model", help="random admissible model as JSON")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--orbits", type=int, default=3)
    p.add_argument("--jmax", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_model)

    p = sub.add_parser("verify", help="run verification scenarios")
    p.add_argument("scenario", choices=("solid-torus", "v-variants", "main", "hat", "all"))
    p.add_argument("--seed", type=int, default=1, help="first seed of the random models")
    p.add_argument("--count", type=int, default=20, help="number of random models")
    p.add_argument("--jmax", type=int)
    p.add_argument("--mmax", type=int)
    p.add_argument("--guard", type=int)
    p.add_argument("--nmax", type=int, default=10)
    p.add_argument("--r-list", type=float, nargs="+", dest="r_list")
    p.add_argument("--no-claims", action="store_true", help="skip the intermediate page checks")
    p.add_argument("--deterministic", action="store_true", help="omit the timestamp line")
    p.add_argument("--csv-dir", help="write the dimension tables here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, InvalidModel, DegenerateOrbit, InfeasibleParameters, MissingConvention, ValueError) as exc:
        sys.stderr.write(f"echobd: invalid input: {exc}\n")
        return EXIT_INPUT
    except NotStabilized as exc:
        sys.stderr.write(f"echobd: {exc}\n")
        return EXIT_FAIL
    except EchobdError as exc:
        sys.stderr.write(f"echobd: {type(exc).__name__}: {exc}\n")
        return EXIT_FAIL
    except OSError as exc:
        sys.stderr.write(f"echobd: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
