"""Command-line front end.

Subcommands read a protograph and a spreading (the bundled Hamming example
by default), run one analysis, and write CSV or JSON.  Exit status is 0 on
success, 1 when an analysis fails and 2 for bad input.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

import click
import numpy as np

from . import oracle
from .coupling import EdgeSpreading, SpreadingError, delta_correction, spread, tailbite, terminate
from .enumerators import finite_count, node_exponent
from .gf2 import ConstraintCode, enumerate_codewords, hamming_7_4, single_parity_check
from .protograph import ConstraintNode, Protograph, ProtographError, design_rate, validate
from .spectral import (
    LN2,
    delta_grid,
    find_growth_rate,
    growth_rate,
    random_coding_shape,
    spectral_shape,
)

log = logging.getLogger(__name__)

EXIT_ANALYSIS = 1
EXIT_INPUT = 2


class InputError(ValueError):
    """Malformed input document; the message names the offending field."""


# ------------------------------------------------------------------ loaders


def _field(doc, key, where, kind=None):
    if not isinstance(doc, dict) or key not in doc:
        raise InputError(f"{where}: missing field '{key}'")
    val = doc[key]
    wrong = kind is not None and (not isinstance(val, kind) or (kind is int and isinstance(val, bool)))
    if wrong:
        raise InputError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}, got {type(val).__name__}")
    return val


def protograph_from_dict(doc: dict) -> Protograph:
    n_v = _field(doc, "num_variables", "protograph", int)
    codes_doc = _field(doc, "codes", "protograph", dict)
    codes: dict[str, ConstraintCode] = {}
    for cid, cdoc in codes_doc.items():
        h = _field(cdoc, "parity_check", f"codes.{cid}", list)
        try:
            codes[cid] = enumerate_codewords(np.array(h))
        except ValueError as exc:
            raise InputError(f"codes.{cid}.parity_check: {exc}") from exc
    nodes = []
    for i, cdoc in enumerate(_field(doc, "constraints", "protograph", list)):
        where = f"constraints[{i}]"
        cid = _field(cdoc, "code", where, str)
        if cid not in codes:
            raise InputError(f"{where}.code: unknown code id '{cid}'")
        sockets = []
        for j, sdoc in enumerate(_field(cdoc, "sockets", where, list)):
            sw = f"{where}.sockets[{j}]"
            sockets.append((_field(sdoc, "position", sw, int), _field(sdoc, "variable", sw, int)))
        try:
            nodes.append(ConstraintNode.from_sockets(codes[cid], sockets))
        except ProtographError as exc:
            raise InputError(f"{where}.sockets: {exc}") from exc
    p = Protograph(n_v, tuple(nodes), name=str(doc.get("name", "")))
    try:
        validate(p)
    except ProtographError as exc:
        raise InputError(f"protograph: {exc}") from exc
    return p


def spreading_from_dict(doc: dict, block: Protograph) -> EdgeSpreading:
    memory = _field(doc, "memory", "spreading", int)
    assignment = {}
    for i, cdoc in enumerate(_field(doc, "components", "spreading", list)):
        where = f"spreading.components[{i}]"
        key = (_field(cdoc, "constraint", where, int), _field(cdoc, "position", where, int))
        if key in assignment:
            raise InputError(f"{where}: socket {key} assigned twice")
        assignment[key] = _field(cdoc, "component", where, int)
    try:
        return spread(block, assignment, memory)
    except (SpreadingError, ProtographError) as exc:
        raise InputError(f"spreading: {exc}") from exc


def _read_json(path, default: str) -> dict:
    try:
        if path is None:
            text = resources.files("scgldpc").joinpath("data", default).read_text()
        else:
            text = Path(path).read_text()
        return json.loads(text)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path or default}: invalid JSON ({exc})") from exc


def load_protograph(path=None) -> Protograph:
    """Load a protograph document; ``None`` gives the bundled Hamming example."""
    return protograph_from_dict(_read_json(path, "hamming_block.json"))


def load_spreading(block: Protograph, path=None) -> EdgeSpreading:
    return spreading_from_dict(_read_json(path, "hamming_spreading.json"), block)


def hamming_example() -> tuple[Protograph, EdgeSpreading]:
    block = load_protograph()
    return block, load_spreading(block)


# ------------------------------------------------------------------ output


def _fmt(v) -> str:
    if isinstance(v, np.generic):
        v = v.item()
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def render(rows: list[dict], columns: list[str], meta: dict, fmt: str) -> str:
    if fmt == "json":
        doc = {"config": {k: _jsonable(v) for k, v in meta.items()},
               "rows": [{c: _jsonable(r.get(c)) for c in columns} for r in rows]}
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}: {_fmt(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _emit(text: str, out: Path | None):
    if out is None:
        click.echo(text, nl=False)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)


def _parse_range(text: str) -> list[int]:
    """``"7-20"``, ``"1,2,4,8"`` or a mix such as ``"1-4,8"``."""
    vals = []
    try:
        for part in text.split(","):
            part = part.strip()
            if "-" in part:
                a, b = part.split("-")
                vals.extend(range(int(a), int(b) + 1))
            elif part:
                vals.append(int(part))
    except ValueError as exc:
        raise click.BadParameter(f"cannot parse range '{text}'") from exc
    if not vals:
        raise click.BadParameter("empty range")
    return vals


# --------------------------------------------------------------- commands


class _Cli(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except InputError as exc:
            click.echo(f"input error: {exc}", err=True)
            sys.exit(EXIT_INPUT)


@click.group(cls=_Cli)
@click.option("--protograph", "protograph_path", type=click.Path(dir_okay=False), default=None,
              help="Protograph JSON (default: bundled Hamming example).")
@click.option("--spreading", "spreading_path", type=click.Path(dir_okay=False), default=None,
              help="Spreading JSON (default: bundled Hamming spreading).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--restarts", type=click.IntRange(1), default=8, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Output file, or directory when several files are produced (default: stdout).")
@click.option("-v", "--verbose", is_flag=True)
@click.pass_context
def main(ctx, protograph_path, spreading_path, seed, restarts, fmt, out, verbose):
    """Spectral shapes, growth rates and free-distance bounds of GLDPC protograph ensembles."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    ctx.obj = dict(protograph_path=protograph_path, spreading_path=spreading_path, seed=seed,
                   restarts=restarts, fmt=fmt, out=out)


def _inputs(ctx, need_spreading=True):
    o = ctx.obj
    block = load_protograph(o["protograph_path"])
    s = load_spreading(block, o["spreading_path"]) if need_spreading else None
    return block, s


def _ensembles(block, s, want_block, terminated, tailbiting):
    out = []
    if want_block:
        out.append(("block", block, block, 0))
    for L in terminated:
        cp = terminate(s, L)
        out.append((f"terminated{L}", cp, cp.realized, delta_correction(cp)))
    for lam in tailbiting:
        try:
            cp = tailbite(s, lam)
        except ProtographError as exc:
            raise InputError(str(exc)) from exc
        out.append((f"tailbiting{lam}", cp, cp.realized, 0))
    return out


@main.command()
@click.option("--block", "want_block", is_flag=True, help="Analyze the block protograph.")
@click.option("--terminated", multiple=True, type=click.IntRange(1), help="Terminated chain length L.")
@click.option("--tailbiting", multiple=True, type=click.IntRange(1), help="Tail-biting length lambda.")
@click.option("--grid-step", type=click.FloatRange(min=0, min_open=True), default=0.0005, show_default=True)
@click.option("--grid-max", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=0.9, show_default=True)
@click.option("--tol", type=click.FloatRange(min=0, min_open=True), default=1e-4, show_default=True,
              help="Bisection tolerance of the reported zero crossing.")
@click.pass_context
def shape(ctx, want_block, terminated, tailbiting, grid_step, grid_max, tol):
    """Spectral shape with the random-coding reference curve, one file per ensemble."""
    o = ctx.obj
    if not (want_block or terminated or tailbiting):
        want_block = True
    block, s = _inputs(ctx, need_spreading=bool(terminated or tailbiting))
    jobs = _ensembles(block, s, want_block, terminated, tailbiting)
    if len(jobs) > 1 and o["out"] is not None and o["out"].suffix:
        raise InputError("--out must be a directory when several ensembles are requested")
    failed = False
    for label, source, realized, corr in jobs:
        sh = spectral_shape(source, delta_grid(grid_step, grid_max), o["restarts"], o["seed"])
        rep = growth_rate(sh, tol, corr)
        R = rep.design_rate
        rows = [
            dict(delta=pt.delta, r_nats=pt.r, r_bits=pt.r / LN2,
                 random_coding_r=random_coding_shape(R, pt.delta), converged=pt.converged)
            for pt in sh.points
        ]
        meta = dict(ensemble=label, protograph=o["protograph_path"] or "bundled:hamming_block.json",
                    spreading=(o["spreading_path"] or "bundled:hamming_spreading.json") if label != "block" else "",
                    design_rate=R, delta_correction=corr, grid_step=grid_step, grid_max=grid_max,
                    restarts=o["restarts"], seed=o["seed"], tol=tol, delta_min=rep.delta_min,
                    asymptotically_good=rep.asymptotically_good, units="r_nats in nats, r_bits in bits, random_coding_r in nats")
        cols = ["delta", "r_nats", "r_bits", "random_coding_r", "converged"]
        target = None
        if o["out"] is not None:
            target = o["out"] if len(jobs) == 1 and o["out"].suffix else o["out"] / f"shape_{label}.{o['fmt']}"
        _emit(render(rows, cols, meta, o["fmt"]), target)
        if rep.delta_min is None:
            click.echo(f"{label}: no zero crossing on the grid", err=True)
            failed = True
    if failed:
        sys.exit(EXIT_ANALYSIS)


def _growth_row(kind, factor, source, step, tol, restarts, seed, m_s):
    row = dict(factor=factor, kind=kind)
    try:
        if kind == "tailbiting":
            cp = tailbite(source, factor)
        else:
            cp = terminate(source, factor)
        row["rate"] = design_rate(cp.realized)
        rep = find_growth_rate(cp, step=step, tol=tol, restarts=restarts, seed=seed)
        row["delta_min"] = rep.delta_min
        if rep.delta_min is None:
            row["error"] = "no zero crossing"
        elif kind == "tailbiting":
            row["lower_bound"] = rep.delta_min * factor / (m_s + 1)
        else:
            row["upper_bound"] = rep.delta_min * factor / (m_s + 1)
    except Exception as exc:
        row["error"] = str(exc)
    return row


@main.command()
@click.option("--L-range", "l_range", default="7-20", show_default=True)
@click.option("--lambda-range", "lam_range", default="1-20", show_default=True)
@click.option("--grid-step", type=click.FloatRange(min=0, min_open=True), default=0.01, show_default=True,
              help="Coarse scan step before bisection.")
@click.option("--bisect-tol", type=click.FloatRange(min=0, min_open=True), default=1e-4, show_default=True)
@click.option("--tol", type=click.FloatRange(min=0), default=0.01, show_default=True,
              help="Coincidence tolerance of the free-distance bounds.")
@click.pass_context
def sweep(ctx, l_range, lam_range, grid_step, bisect_tol, tol):
    """Growth rates of terminated and tail-biting chains, with free-distance bounds."""
    o = ctx.obj
    block, s = _inputs(ctx)
    m = s.memory
    rows = []
    for L in _parse_range(l_range):
        rows.append(_growth_row("terminated", L, s, grid_step, bisect_tol, o["restarts"], o["seed"], m))
    for lam in _parse_range(lam_range):
        rows.append(_growth_row("tailbiting", lam, s, grid_step, bisect_tol, o["restarts"], o["seed"], m))
    upper = {r["factor"]: r.get("upper_bound") for r in rows if r["kind"] == "terminated"}
    lower = {r["factor"]: r.get("lower_bound") for r in rows if r["kind"] == "tailbiting"}
    for r in rows:
        T = r["factor"]
        if upper.get(T) is not None and lower.get(T) is not None:
            r["coincide"] = abs(upper[T] - lower[T]) <= tol
            if r["coincide"]:
                r["delta_free"] = 0.5 * (upper[T] + lower[T])
    cols = ["factor", "kind", "rate", "delta_min", "lower_bound", "upper_bound", "coincide", "delta_free", "error"]
    meta = dict(protograph=o["protograph_path"] or "bundled:hamming_block.json",
                spreading=o["spreading_path"] or "bundled:hamming_spreading.json", memory=m,
                L_range=l_range, lambda_range=lam_range, grid_step=grid_step, bisect_tol=bisect_tol,
                tol=tol, restarts=o["restarts"], seed=o["seed"])
    _emit(render(rows, cols, meta, o["fmt"]), o["out"])
    bad = [r for r in rows if r.get("error")]
    for r in bad:
        click.echo(f"{r['kind']} {r['factor']}: {r['error']}", err=True)
    if bad:
        sys.exit(EXIT_ANALYSIS)


@main.command()
@click.option("--T-range", "t_range", default="10-20", show_default=True)
@click.option("--grid-step", type=click.FloatRange(min=0, min_open=True), default=0.01, show_default=True)
@click.option("--tol", type=click.FloatRange(min=0), default=0.01, show_default=True)
@click.pass_context
def bounds(ctx, t_range, grid_step, tol):
    """Upper and lower free-distance growth-rate bounds per period T."""
    from .freedist import scan

    o = ctx.obj
    block, s = _inputs(ctx)
    res = scan(block, s, _parse_range(t_range), tol, grid_step, o["restarts"], o["seed"])
    rows = [dict(T=b.T, m_s=b.m_s, lower=b.lower, upper=b.upper, coincide=b.coincide,
                 delta_free=b.delta_free, half_gap=b.half_gap, error=b.error) for b in res]
    cols = ["T", "m_s", "lower", "upper", "coincide", "delta_free", "half_gap", "error"]
    meta = dict(protograph=o["protograph_path"] or "bundled:hamming_block.json",
                spreading=o["spreading_path"] or "bundled:hamming_spreading.json",
                T_range=t_range, grid_step=grid_step, tol=tol, restarts=o["restarts"], seed=o["seed"])
    _emit(render(rows, cols, meta, o["fmt"]), o["out"])
    if any(b.error for b in res):
        sys.exit(EXIT_ANALYSIS)


@main.command()
@click.option("--L-range", "l_range", default="7-20", show_default=True)
@click.option("--lambda-range", "lam_range", default="1-4", show_default=True)
@click.pass_context
def rate(ctx, l_range, lam_range):
    """Exact design rates of the block, terminated and tail-biting protographs."""
    o = ctx.obj
    block, s = _inputs(ctx)
    rows = [dict(kind="block", factor=1, rate=design_rate(block), delta_correction=0,
                 num_variables=block.num_variables, num_constraints=block.num_constraints)]
    for kind, rng in (("terminated", _parse_range(l_range)), ("tailbiting", _parse_range(lam_range))):
        for f in rng:
            try:
                cp = terminate(s, f) if kind == "terminated" else tailbite(s, f)
            except (ProtographError, ValueError) as exc:
                rows.append(dict(kind=kind, factor=f, error=str(exc)))
                continue
            rows.append(dict(kind=kind, factor=f, rate=design_rate(cp.realized),
                             delta_correction=delta_correction(cp),
                             num_variables=cp.realized.num_variables,
                             num_constraints=cp.realized.num_constraints))
    cols = ["kind", "factor", "rate", "delta_correction", "num_variables", "num_constraints", "error"]
    _emit(render(rows, cols, dict(memory=s.memory), o["fmt"]), o["out"])
    if any(r.get("error") for r in rows):
        sys.exit(EXIT_ANALYSIS)


# ------------------------------------------------------------------ verify


def _random_protograph(rng: np.random.Generator) -> Protograph:
    """Tiny random protograph: at most 6 edges, small codes, parallel edges allowed."""
    pool = [single_parity_check(2), single_parity_check(3),
            enumerate_codewords(np.array([[1, 1, 0], [0, 1, 1]])),  # repetition code
            ConstraintCode(np.array([[0, 0, 0], [1, 1, 0], [0, 0, 1], [1, 1, 1]], dtype=np.uint8))]
    while True:
        n_v = int(rng.integers(1, 4))
        nodes, edges = [], 0
        for _ in range(int(rng.integers(1, 3))):
            code = pool[int(rng.integers(len(pool)))]
            if edges + code.length > oracle.MAX_BRUTE_EDGES:
                break
            nodes.append(ConstraintNode(code, tuple(int(v) for v in rng.integers(0, n_v, code.length))))
            edges += code.length
        p = Protograph(n_v, tuple(nodes))
        if nodes and (p.variable_degrees() > 0).all():
            return p


def verify_checks(seed: int = 0, instances: int = 20, max_n: int = 3, product_hook=None):
    """Yield ``(name, status, detail)`` for the oracle equivalence suite.

    ``status`` is ``"PASS"``, ``"FAIL"`` or ``"SKIP"``.  ``product_hook``
    replaces the product formula, which is how a deliberate mismatch is
    injected to exercise the failure path.
    """
    product = product_hook or oracle.product_formula_average
    rng = np.random.default_rng(seed)
    if max_n > oracle.MAX_BRUTE_N:
        yield (f"brute force N={max_n}", "SKIP", f"exceeds the N <= {oracle.MAX_BRUTE_N} guard")
        max_n = oracle.MAX_BRUTE_N
    for i in range(instances):
        p = _random_protograph(rng)
        N = int(rng.integers(1, max_n + 1))
        if N == 3 and p.num_edges > 5:
            N = 2  # keep the (N!)^E loop short
        d = tuple(int(x) for x in rng.integers(0, N + 1, p.num_variables))
        bf = oracle.brute_force_average(p, N, d)
        pf = product(p, N, d)
        desc = f"n_v={p.num_variables} nodes={[(c.code.length, c.variables) for c in p.constraints]} N={N} d={d}"
        yield (f"product formula #{i}", "PASS" if bf == pf else "FAIL",
               desc if bf == pf else f"{desc}: brute force {bf} != product {pf}")
    for name, code in (("SPC(3)", single_parity_check(3)), ("Hamming(7,4)", hamming_7_4())):
        for j in range(4):
            probs = rng.dirichlet(np.ones(code.size))
            tau = probs @ code.codewords
            dual = node_exponent(code, tau).value
            primal = oracle.primal_entropy_grid(code, tau, 0.01)
            ok = abs(dual - primal) <= 0.02
            yield (f"primal vs dual {name} #{j}", "PASS" if ok else "FAIL",
                   f"dual {dual:.6f} primal {primal:.6f}")
    code = single_parity_check(3)
    tau = np.array([0.5, 0.25, 0.75])
    a = node_exponent(code, tau).value
    rates = [math.log(finite_count(code, N, np.rint(N * tau).astype(int))) / N for N in (4, 8, 16, 32)]
    ok = all(x < y for x, y in zip(rates, rates[1:])) and all(x <= a + 1e-12 for x in rates)
    yield ("finite-N convergence SPC(3)", "PASS" if ok else "FAIL",
           " ".join(f"{x:.5f}" for x in rates) + f" -> a={a:.5f}")


@main.command()
@click.option("--instances", type=click.IntRange(1), default=20, show_default=True)
@click.option("--max-n", type=click.IntRange(1), default=3, show_default=True)
@click.option("--perturb", type=float, default=None, hidden=True,
              help="Test hook: scale the product formula by (1 + perturb).")
@click.pass_context
def verify(ctx, instances, max_n, perturb):
    """Oracle equivalence checks; exit status 1 on any mismatch."""
    hook = None
    if perturb is not None:
        factor = Fraction(perturb).limit_denominator(10**9) + 1

        def hook(p, N, d):
            return oracle.product_formula_average(p, N, d) * factor

    failed = 0
    for name, status, detail in verify_checks(ctx.obj["seed"], instances, max_n, hook):
        if status == "SKIP":
            click.echo(f"warning: skipped {name}: {detail}", err=True)
        click.echo(f"{status} {name}: {detail}")
        failed += status == "FAIL"
    click.echo(f"{failed} failed")
    if failed:
        sys.exit(EXIT_ANALYSIS)


if __name__ == "__main__":
    main()
