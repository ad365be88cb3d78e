"""Spec-file driven command line.

Spec files are JSON::

    {"schemaVersion": 1, "name": "tsirelson",
     "space": {"form": "FiniteMixed",
               "entries": [{"family": {"kind": "Schreier"}, "theta": "1/2"}]},
     "options": {"precision": 20}}

Exit codes: 0 ok, 1 usage or input error, 2 budget exhausted,
3 undetermined verdict (classify / compare).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Any

import click

from . import __version__
from .classifier import (BlockWitness, ClassificationReport, ComparisonReport, RatioProbe, classify, compare,
                         l1_block_witness)
from .dualball import NodeBudgetExceeded, enumerate_K, format_tree
from .families import (AnK, Empty, ExplicitFinite, Family, FamilyError, PairConsecutive, PairTailPow2, Schreier,
                       Singletons, UnionOf, admissible_witness, finset, index)
from .foundations import (Constant, ExplicitList, FinVec, FoundationError, InvLinear, InvLogPow, PowerLaw,
                          RatInterval, format_rat, rat)
from .norm import BudgetExceeded, NormEngine
from .spaces import AdmissibleSeq, FiniteMixed, SpaceError

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_BUDGET, EXIT_UNDETERMINED = 0, 1, 2, 3
OPTION_DEFAULTS = {"precision": 20, "indexCap": 32, "maxSupport": 96, "nodeBudget": 100_000, "probeDepth": 16}


class SpecError(ValueError):
    pass


# -- parsing ------------------------------------------------------------------

def _fields(obj: Any, required: set[str], optional: set[str] = frozenset(), where: str = "") -> dict:
    if not isinstance(obj, dict):
        raise SpecError(f"{where or 'document'}: expected an object")
    unknown = set(obj) - required - optional
    if unknown:
        raise SpecError(f"{where or 'document'}: unknown field(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise SpecError(f"{where or 'document'}: missing field(s) {sorted(missing)}")
    return obj


def _rational(value, where):
    if not isinstance(value, str):
        raise SpecError(f"{where}: rationals are written as \"p/q\" strings")
    return rat(value)


def _int(value, where):
    if not isinstance(value, int) or isinstance(value, bool):
        raise SpecError(f"{where}: expected an integer")
    return value


def parse_family(obj: Any, where: str = "family") -> Family:
    kind = obj.get("kind") if isinstance(obj, dict) else None
    if kind == "AnK":
        _fields(obj, {"kind", "k"}, where=where)
        return AnK(_int(obj["k"], where + ".k"))
    if kind == "Schreier":
        _fields(obj, {"kind"}, {"shift"}, where)
        return Schreier(_int(obj.get("shift", 0), where + ".shift"))
    if kind in ("Singletons", "PairTailPow2", "PairConsecutive", "Empty"):
        _fields(obj, {"kind"}, where=where)
        return {"Singletons": Singletons, "PairTailPow2": PairTailPow2,
                "PairConsecutive": PairConsecutive, "Empty": Empty}[kind]()
    if kind == "ExplicitFinite":
        _fields(obj, {"kind", "members"}, where=where)
        members = obj["members"]
        if not isinstance(members, list) or not all(isinstance(m, list) for m in members):
            raise SpecError(f"{where}.members: expected a list of integer lists")
        return ExplicitFinite(tuple(finset(_int(e, where) for e in m) for m in members) + ((),))
    if kind == "UnionOf":
        _fields(obj, {"kind", "parts"}, where=where)
        if not isinstance(obj["parts"], list):
            raise SpecError(f"{where}.parts: expected a list")
        return UnionOf(tuple(parse_family(p, f"{where}.parts[{i}]") for i, p in enumerate(obj["parts"])))
    raise SpecError(f"{where}: unknown family kind {kind!r}")


def parse_coeffs(obj: Any, where: str = "coeffs"):
    form = obj.get("form") if isinstance(obj, dict) else None
    if form == "ExplicitList":
        _fields(obj, {"form", "values"}, {"tail"}, where)
        tail = obj.get("tail")
        return ExplicitList(tuple(_rational(v, where + ".values") for v in obj["values"]),
                            None if tail is None else _rational(tail, where + ".tail"))
    if form == "Constant":
        _fields(obj, {"form", "c"}, where=where)
        return Constant(_rational(obj["c"], where + ".c"))
    if form == "InvLinear":
        _fields(obj, {"form"}, where=where)
        return InvLinear()
    if form == "PowerLaw":
        _fields(obj, {"form", "gamma", "alpha"}, where=where)
        return PowerLaw(_rational(obj["gamma"], where + ".gamma"), _rational(obj["alpha"], where + ".alpha"))
    if form == "InvLogPow":
        _fields(obj, {"form", "r"}, where=where)
        return InvLogPow(_rational(obj["r"], where + ".r"))
    raise SpecError(f"{where}: unknown coefficient form {form!r}")


def parse_space(obj: Any):
    form = obj.get("form") if isinstance(obj, dict) else None
    if form == "FiniteMixed":
        _fields(obj, {"form", "entries"}, where="space")
        entries = []
        for i, e in enumerate(obj["entries"]):
            _fields(e, {"family", "theta"}, where=f"space.entries[{i}]")
            entries.append((parse_family(e["family"], f"space.entries[{i}].family"),
                            _rational(e["theta"], f"space.entries[{i}].theta")))
        return FiniteMixed(tuple(entries))
    if form == "AdmissibleSeq":
        _fields(obj, {"form", "coeffs"}, where="space")
        return AdmissibleSeq(parse_coeffs(obj["coeffs"]))
    raise SpecError(f"space: unknown form {form!r}")


def parse_document(text: str) -> tuple[str, Any, dict]:
    """Parse a spec document into ``(name, space, options)``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"not valid JSON: {exc}") from exc
    _fields(doc, {"space"}, {"schemaVersion", "name", "options"})
    if doc.get("schemaVersion", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise SpecError(f"unsupported schemaVersion {doc['schemaVersion']!r}")
    options = dict(OPTION_DEFAULTS)
    given = _fields(doc.get("options", {}), set(), set(OPTION_DEFAULTS), "options")
    options.update({k: _int(v, f"options.{k}") for k, v in given.items()})
    try:
        space = parse_space(doc["space"])
    except (FoundationError, FamilyError, SpaceError) as exc:
        raise SpecError(str(exc)) from exc
    return doc.get("name", ""), space, options


def parse_spec(text: str):
    return parse_document(text)[1]


# -- serialization ----------------------------------------------------------------

def family_to_json(fam: Family) -> dict:
    if isinstance(fam, AnK):
        return {"kind": "AnK", "k": fam.k}
    if isinstance(fam, Schreier):
        return {"kind": "Schreier", "shift": fam.shift} if fam.shift else {"kind": "Schreier"}
    if isinstance(fam, ExplicitFinite):
        return {"kind": "ExplicitFinite", "members": [list(m) for m in fam.members if m]}
    if isinstance(fam, UnionOf):
        return {"kind": "UnionOf", "parts": [family_to_json(p) for p in fam.parts]}
    return {"kind": type(fam).__name__}


def coeffs_to_json(seq) -> dict:
    if isinstance(seq, ExplicitList):
        out = {"form": "ExplicitList", "values": [format_rat(v) for v in seq.values]}
        if seq.tail is not None:
            out["tail"] = format_rat(seq.tail)
        return out
    if isinstance(seq, Constant):
        return {"form": "Constant", "c": format_rat(seq.c)}
    if isinstance(seq, InvLinear):
        return {"form": "InvLinear"}
    if isinstance(seq, PowerLaw):
        return {"form": "PowerLaw", "gamma": format_rat(seq.gamma), "alpha": format_rat(seq.alpha)}
    if isinstance(seq, InvLogPow):
        return {"form": "InvLogPow", "r": format_rat(seq.r)}
    raise TypeError(f"cannot serialize {seq!r}")


def space_to_json(space) -> dict:
    if isinstance(space, FiniteMixed):
        return {"form": "FiniteMixed",
                "entries": [{"family": family_to_json(f), "theta": format_rat(t)} for f, t in space.entries]}
    return {"form": "AdmissibleSeq", "coeffs": coeffs_to_json(space.coeffs)}


def emit_spec(space, name: str = "", options: dict | None = None) -> str:
    doc = {"schemaVersion": SCHEMA_VERSION, "name": name, "space": space_to_json(space)}
    if options:
        doc["options"] = options
    return json.dumps(doc, sort_keys=True)


def scalar_json(v) -> Any:
    if isinstance(v, Fraction):
        return format_rat(v)
    if isinstance(v, RatInterval):
        return {"lo": format_rat(v.lo), "hi": format_rat(v.hi)}
    return v


# -- vectors -------------------------------------------------------------------------

def parse_vector(text: str) -> FinVec:
    """``segment a..b`` or a JSON map ``{"position": "coefficient"}``."""
    text = text.strip()
    if text.startswith("segment"):
        try:
            a, b = (int(t) for t in text[len("segment"):].strip().split(".."))
        except ValueError as exc:
            raise SpecError(f"malformed segment {text!r}; use 'segment a..b'") from exc
        if not 1 <= a <= b:
            raise SpecError("segment needs 1 <= a <= b")
        return FinVec.segment(a, b)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"vector is neither 'segment a..b' nor JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise SpecError("vector JSON must be an object {position: coefficient}")
    try:
        return FinVec({int(p): _rational(v, f"vector[{p}]") for p, v in obj.items()})
    except (ValueError, FoundationError) as exc:
        raise SpecError(str(exc)) from exc


def vector_json(x: FinVec) -> dict:
    return {str(p): format_rat(v) for p, v in x}


# -- reports ---------------------------------------------------------------------------

class RunReport(dict):
    """command, inputsDigest, results, version, timing (excluded from determinism)."""

    exit_code: int = EXIT_OK


def _report(command: str, inputs: dict, results: dict, started: float) -> RunReport:
    canon = json.dumps(inputs, sort_keys=True)
    rep = RunReport(command=command, inputs=inputs,
                    inputsDigest=hashlib.sha256(canon.encode()).hexdigest(),
                    results=results, version=__version__,
                    timing={"seconds": round(time.perf_counter() - started, 6)})
    return rep


def emit_report(report: RunReport, fmt: str = "text") -> bytes:
    results = report["results"]
    if fmt == "json":
        return (json.dumps(report, sort_keys=True, indent=2) + "\n").encode()
    if fmt == "csv":
        if "lambda" not in results:
            raise click.UsageError("csv output is available for lambda tables only")
        buf = io.StringIO()
        rows = results["lambda"]
        interval = any(isinstance(v, dict) for v in rows)
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "lambda_lo", "lambda_hi"] if interval else ["n", "lambda"])
        for n, v in enumerate(rows, 1):
            if interval:
                lo, hi = (v["lo"], v["hi"]) if isinstance(v, dict) else (v, v)
                writer.writerow([n, lo, hi])
            else:
                writer.writerow([n, v])
        return buf.getvalue().encode()
    return (_text(report["command"], results) + "\n").encode()


def _fmt(v) -> str:
    if isinstance(v, dict) and set(v) == {"lo", "hi"}:
        return f"[{v['lo']}, {v['hi']}]"
    return str(v)


def _text(command: str, r: dict) -> str:
    if command == "norm":
        lines = [] if r["norm"] is None else [f"norm = {_fmt(r['norm'])}"]
        if r.get("witness"):
            lines.append(f"witness: {r['witness']}")
        if "iterated" in r:
            lines.append("iterated: " + ", ".join(_fmt(v) for v in r["iterated"]))
            lines.append(f"stabilized at s = {r['stabilizedAt']}")
        for item in r.get("batch", []):
            lines.append(f"{_fmt(item['vector'])}: {_fmt(item['norm'])}")
        return "\n".join(lines)
    if command == "lambda":
        return "\n".join(f"lambda_{n} = {_fmt(v)}" for n, v in enumerate(r["lambda"], 1))
    if command == "classify":
        lines = [f"saturation: {r['saturation']}", f"reflexive: {r['reflexive']}"]
        if r.get("p"):
            lines.append(f"p: {r['p']}")
        lines += [f"reduction: {x}" for x in r["reductions"]]
        lines += [f"{v['kind']} [{v['tag']}] {v['detail']}".rstrip() for v in r["verdicts"]]
        return "\n".join(lines)
    if command == "compare":
        return f"{r['verdict']} [{r['fired']}] {r['detail']}".rstrip()
    if command == "index":
        return f"index = {r['index']}"
    if command == "admissible":
        return f"admissible = {str(r['admissible']).lower()}" + (
            f" witness {r['witness']}" if r["witness"] is not None else "")
    if command == "dualball":
        return "\n".join(r["functionals"])
    if command == "witness":
        if r["witness"] is None:
            return "no witness within the scanned scales"
        w = r["witness"]
        return f"scale {w['scale']} block length {w['blockLength']}: norm = {_fmt(w['value'])}"
    return json.dumps(r, sort_keys=True)


def classification_json(rep: ClassificationReport) -> dict:
    evidence = {}
    for k, v in rep.evidence.items():
        if k == "lambda":
            v = [scalar_json(x) for x in v]
        elif k == "segmentRatios":
            v = [{"k": k_, "norm": format_rat(n), "ratio": format_rat(q)} for k_, n, q in v]
        evidence[k] = v
    return {"saturation": rep.saturation, "reflexive": rep.reflexive,
            "p": str(rep.p) if rep.p else None,
            "verdicts": [{"kind": v.kind, "tag": v.tag, "detail": v.detail} for v in rep.verdicts],
            "reductions": list(rep.reductions), "evidence": evidence}


def comparison_json(rep: ComparisonReport) -> dict:
    out = {"verdict": rep.verdict, "fired": rep.fired, "detail": rep.detail}
    if rep.ratio_probe is not None:
        out["ratioProbe"] = {"ratios": [scalar_json(x) for x in rep.ratio_probe.ratios],
                             "trend": rep.ratio_probe.trend}
    return out


# -- command plumbing --------------------------------------------------------------------

def _load(path: str) -> tuple[str, Any, dict, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise click.UsageError(f"cannot read {path}: {exc}") from exc
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        name, space, options = parse_document(text)
    for w in caught:
        click.echo(f"warning: {w.message}", err=True)
    return name, space, options, text


def _finish(ctx, report: RunReport, code: int = EXIT_OK) -> None:
    fmt, out = ctx.obj["format"], ctx.obj["out"]
    data = emit_report(report, fmt)
    sys.stdout.buffer.write(data)
    sys.stdout.flush()
    if out:
        Path(out).write_bytes(emit_report(report, "json"))
    report.exit_code = code
    ctx.obj["exit"] = code


@click.group()
@click.option("--format", "fmt", type=click.Choice(["text", "csv", "json"]), default="text",
              help="Output format for stdout.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Also write the machine-readable report here.")
@click.version_option(__version__)
@click.pass_context
def cli(ctx, fmt, out):
    """Exact computations in mixed Tsirelson spaces."""
    ctx.ensure_object(dict)
    ctx.obj.update(format=fmt, out=out, exit=EXIT_OK, started=time.perf_counter())


def _norm_one(args):
    space, options, vec, s_max = args
    eng = NormEngine(space, precision=max(options["precision"], 64), max_support=options["maxSupport"])
    res = eng.norm(vec)
    out = {"vector": vector_json(vec), "norm": scalar_json(res.value),
           "witness": format_tree(res.witness) if res.witness is not None else None}
    if s_max is not None:
        it = eng.iterated(vec, s_max)
        out.update(iterated=[scalar_json(v) for v in it.values], stabilizedAt=it.stabilized_at,
                   converged=it.converged)
    return out


@cli.command("norm")
@click.argument("spec")
@click.option("--vector", "vectors", multiple=True,
              help="'segment a..b' or JSON {\"pos\": \"p/q\"}; repeatable.")
@click.option("--vector-file", type=click.Path(exists=True, dir_okay=False),
              help="JSON list of vectors (objects or 'segment a..b' strings).")
@click.option("--iterated", "s_max", type=int, default=None, help="Also report |x|_0 .. |x|_s.")
@click.option("--jobs", type=int, default=1, show_default=True, help="Worker processes for batches.")
@click.pass_context
def norm_cmd(ctx, spec, vectors, vector_file, s_max, jobs):
    """Norm of one or more finitely supported vectors."""
    name, space, options, text = _load(spec)
    items = [parse_vector(v) for v in vectors]
    if vector_file:
        raw = json.loads(Path(vector_file).read_text(encoding="utf-8"))
        if not isinstance(raw, list):
            raise SpecError("vector file must hold a JSON list")
        items += [parse_vector(v if isinstance(v, str) else json.dumps(v)) for v in raw]
    if not items:
        raise click.UsageError("give --vector or --vector-file")
    tasks = [(space, options, x, s_max) for x in items]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outs = list(pool.map(_norm_one, tasks))
    else:
        outs = [_norm_one(t) for t in tasks]
    results = outs[0] if len(outs) == 1 else {"norm": None, "batch": outs}
    inputs = {"spec": json.loads(text), "vectors": [o["vector"] for o in outs], "iterated": s_max}
    _finish(ctx, _report("norm", inputs, results, ctx.obj["started"]))


@cli.command("lambda")
@click.argument("spec")
@click.option("--max", "N", type=int, required=True, help="Largest n.")
@click.option("--method", type=click.Choice(["auto", "fast", "fixed", "generic"]), default="auto")
@click.pass_context
def lambda_cmd(ctx, spec, N, method):
    """Table of lambda_n = ||e_1 + ... + e_n||."""
    if N < 1:
        raise click.UsageError("--max must be >= 1")
    name, space, options, text = _load(spec)
    eng = NormEngine(space, max_support=options["maxSupport"])
    table = eng.lambda_table(N, precision=options["precision"], method=method)
    results = {"lambda": [scalar_json(v) for v in table.values], "method": table.method}
    _finish(ctx, _report("lambda", {"spec": json.loads(text), "max": N, "method": method},
                         results, ctx.obj["started"]))


@cli.command("classify")
@click.argument("spec")
@click.pass_context
def classify_cmd(ctx, spec):
    """Saturation / reflexivity verdicts with provenance."""
    name, space, options, text = _load(spec)
    rep = classify(space, index_cap=options["indexCap"], probe_depth=options["probeDepth"])
    code = EXIT_UNDETERMINED if rep.saturation == "undetermined" else EXIT_OK
    _finish(ctx, _report("classify", {"spec": json.loads(text)}, classification_json(rep),
                         ctx.obj["started"]), code)


@cli.command("compare")
@click.argument("spec_a")
@click.argument("spec_b")
@click.pass_context
def compare_cmd(ctx, spec_a, spec_b):
    """Total incomparability of two spaces."""
    _, a, _, ta = _load(spec_a)
    _, b, _, tb = _load(spec_b)
    rep = compare(a, b)
    code = EXIT_UNDETERMINED if rep.verdict == "evidenceOnly" else EXIT_OK
    _finish(ctx, _report("compare", {"a": json.loads(ta), "b": json.loads(tb)}, comparison_json(rep),
                         ctx.obj["started"]), code)


def _family_arg(text: str) -> tuple[Family, Any]:
    path = Path(text)
    raw = path.read_text(encoding="utf-8") if path.is_file() else text
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SpecError(f"family is neither a file nor JSON: {exc}") from exc
    try:
        return parse_family(obj), obj
    except FamilyError as exc:
        raise SpecError(str(exc)) from exc


@cli.command("index")
@click.argument("family")
@click.option("--cap", type=int, default=32, show_default=True)
@click.pass_context
def index_cmd(ctx, family, cap):
    """Cantor-Bendixson index of a family (JSON text or file)."""
    fam, obj = _family_arg(family)
    value = index(fam, cap)
    results = {"index": str(value), "finite": value.finite, "cap": value.cap}
    _finish(ctx, _report("index", {"family": obj, "cap": cap}, results, ctx.obj["started"]))


@cli.command("admissible")
@click.argument("family")
@click.option("--sets", required=True, help="JSON list of successive sets, e.g. '[[3,4],[7]]'.")
@click.pass_context
def admissible_cmd(ctx, family, sets):
    """Is a sequence of successive sets admissible for the family?"""
    fam, obj = _family_arg(family)
    try:
        raw = json.loads(sets)
        parts = [finset(s) for s in raw]
        w = admissible_witness(fam, parts)
    except (json.JSONDecodeError, TypeError, FamilyError) as exc:
        raise SpecError(f"bad --sets: {exc}") from exc
    results = {"admissible": w is not None, "witness": list(w) if w is not None else None}
    _finish(ctx, _report("admissible", {"family": obj, "sets": [list(p) for p in parts]}, results,
                         ctx.obj["started"]))


@cli.command("dualball")
@click.argument("spec")
@click.option("--support", required=True, help="Comma separated positions, e.g. 1,2,3.")
@click.option("--depth", type=int, required=True)
@click.pass_context
def dualball_cmd(ctx, spec, support, depth):
    """Enumerate the norming functionals K_depth on a finite support."""
    name, space, options, text = _load(spec)
    try:
        bound = finset(int(t) for t in support.split(",") if t.strip())
    except (ValueError, FamilyError) as exc:
        raise click.UsageError(f"bad --support: {exc}") from exc
    fs = enumerate_K(space, bound, depth, budget=options["nodeBudget"])
    texts = sorted(format_tree(f) for f in fs)
    results = {"count": len(texts), "functionals": texts}
    _finish(ctx, _report("dualball", {"spec": json.loads(text), "support": list(bound), "depth": depth},
                         results, ctx.obj["started"]))


@cli.command("witness")
@click.argument("spec")
@click.option("--n", "n", type=int, required=True, help="Number of blocks.")
@click.option("--eps", default="1/10", show_default=True, help="Tolerance as p/q.")
@click.option("--lmax", type=int, default=10, show_default=True, help="Largest scale.")
@click.pass_context
def witness_cmd(ctx, spec, n, eps, lmax):
    """Search equal normalized blocks with ||y_1+...+y_n|| >= n - eps."""
    name, space, options, text = _load(spec)
    eps_q = _rational(eps, "--eps")
    if n < 1:
        raise click.UsageError("--n must be >= 1")
    w: BlockWitness | None = l1_block_witness(space, n, eps_q, lmax)
    results = {"witness": None if w is None else {
        "scale": w.scale, "blockLength": w.block_length, "blocks": [list(b) for b in w.blocks],
        "value": scalar_json(w.value)}}
    _finish(ctx, _report("witness", {"spec": json.loads(text), "n": n, "eps": format_rat(eps_q),
                                     "lmax": lmax}, results, ctx.obj["started"]))


def run(argv: list[str]) -> int:
    """Run the CLI in-process and return its exit code."""
    obj: dict = {}
    try:
        cli.main(args=list(argv), standalone_mode=False, obj=obj)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except (SpecError, FoundationError, FamilyError, SpaceError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    except (BudgetExceeded, NodeBudgetExceeded) as exc:
        click.echo(f"budget exhausted: {exc}", err=True)
        return EXIT_BUDGET
    except click.exceptions.Abort:
        return EXIT_USAGE
    return obj.get("exit", EXIT_OK)


def main() -> None:
    sys.exit(run(sys.argv[1:]))
