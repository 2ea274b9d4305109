"""Command-line front end: ``iqcf <subcommand> ...``.

Every command writes a single artifact (JSON, CSV, SVG or DOT) that embeds a
run manifest.  Exit codes: 0 success, 2 validation failure, 3 input error,
4 resource or budget exhausted.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import random
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Sequence

import mpmath
import numpy as np

from . import __version__
from .analysis import (
    OPEN,
    GraphNotClosedError,
    InsufficientOracleBound,
    best_approx_oracle,
    detect_periodicity,
    explore_states,
    verify_expansion,
)
from .cfrac import (
    Coefficient,
    FirstFound,
    GreedyQuality,
    InvalidScriptError,
    PrecisionExhaustedError,
    Scripted,
    expand,
    render_cf,
)
from .covering import (
    AdmissibleParams,
    CoveringError,
    SearchBoundExceeded,
    build_covering_instance,
    check_admissible,
    covering_svg,
    find_minimal_admissible_set,
    params_from_check,
)
from .numerics import FloatComplex, QuadComplex, QuadReal, format_complex, parse_complex
from .ring_ideals import Elem, IdealError, IdealLattice, Ring, unit_ideal

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INPUT = 3
EXIT_BUDGET = 4

DIGITS = 17
PRETTY_DIGITS = 6


class ValidationFailure(Exception):
    """A computation finished but its result failed a check; carries the report."""

    def __init__(self, message: str, artifact: Optional[str] = None):
        super().__init__(message)
        self.artifact = artifact


class InputError(ValueError):
    pass


# ---------------------------------------------------------------- config


@dataclass
class Config:
    precision: int = 128
    tolerance: float = 1e-10
    cache_path: Optional[str] = None
    output_format: str = "json"

    def __post_init__(self):
        if int(self.precision) < 64:
            raise InputError("precision must be at least 64 bits")
        if not 0 < float(self.tolerance) <= 1e-6:
            raise InputError("tolerance must lie in (0, 1e-6]")
        if self.output_format not in ("json", "pretty"):
            raise InputError("output_format must be 'json' or 'pretty'")
        self.precision = int(self.precision)
        self.tolerance = float(self.tolerance)

    @classmethod
    def load(cls, path: Optional[str]) -> "Config":
        if path is None:
            return cls()
        p = Path(path)
        try:
            raw = p.read_bytes()
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        if p.suffix.lower() == ".toml":
            data = _load_toml(raw)
        else:
            try:
                data = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise InputError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise InputError("config must be a table/object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def resolved_cache(self) -> Path:
        env = os.environ.get("IQCF_CACHE")
        if env:
            return Path(env)
        if self.cache_path:
            return Path(self.cache_path)
        return Path.home() / ".cache" / "iqcf" / "params.json"


def _load_toml(raw: bytes) -> dict:
    try:
        import tomllib  # type: ignore[import-not-found]
    except ModuleNotFoundError:
        try:
            import tomli as tomllib  # type: ignore[import-not-found,no-redef]
        except ModuleNotFoundError as exc:
            raise InputError("TOML configs need Python 3.11+ or the 'tomli' package") from exc
    try:
        return tomllib.loads(raw.decode())
    except Exception as exc:
        raise InputError(f"invalid TOML config: {exc}") from exc


@dataclass
class RunManifest:
    command: str
    arguments: dict
    seed: Optional[int] = None
    versions: dict = field(default_factory=dict)
    record_timing: bool = True
    started: float = field(default_factory=time.perf_counter)

    @classmethod
    def start(cls, command: str, args: argparse.Namespace) -> "RunManifest":
        skip = {"func", "command", "no_timing"}
        arguments = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
        versions = {
            "iqcf": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "mpmath": mpmath.__version__,
        }
        return cls(
            command, arguments, getattr(args, "seed", None), versions, not getattr(args, "no_timing", False)
        )

    def to_json(self) -> dict:
        timing = {"seconds": time.perf_counter() - self.started} if self.record_timing else None
        return {
            "command": self.command,
            "arguments": self.arguments,
            "seed": self.seed,
            "versions": self.versions,
            "timing": timing,
        }


# ---------------------------------------------------------------- parameter cache


class ParamCache:
    def __init__(self, path: Path):
        self.path = path

    def _read(self) -> dict:
        if not self.path.exists():
            return {}
        try:
            return json.loads(self.path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"unreadable parameter cache {self.path}: {exc}") from exc

    def get(self, disc: int) -> Optional[AdmissibleParams]:
        obj = self._read().get(str(disc))
        return None if obj is None else AdmissibleParams.from_json(obj)

    def put(self, disc: int, params: AdmissibleParams) -> None:
        data = self._read()
        data[str(disc)] = params.to_json()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        tmp.write_text(json.dumps(data, sort_keys=True, indent=1))
        tmp.replace(self.path)


# ---------------------------------------------------------------- serialization


def _mark_floats(obj, digits: int):
    if isinstance(obj, float):
        if math.isfinite(obj):
            return f"\x00{obj:.{digits}g}\x00"
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _mark_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_mark_floats(v, digits) for v in obj]
    if isinstance(obj, (np.floating,)):
        return _mark_floats(float(obj), digits)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def dump_json(obj, pretty: bool = False) -> str:
    """JSON text with every finite float printed to a fixed number of significant digits."""
    digits = PRETTY_DIGITS if pretty else DIGITS
    text = json.dumps(_mark_floats(obj, digits), indent=1, ensure_ascii=False)
    return re.sub(r'"\\u0000([^"\\]*)\\u0000"', r"\1", text) + "\n"


def fmt_float(x: float, pretty: bool = False) -> str:
    return f"{x:.{PRETTY_DIGITS if pretty else DIGITS}g}"


def parse_elem(text: str) -> Elem:
    """``3``, ``-2+2t``, ``1+τ``, ``t`` style ring elements."""
    s = "".join(text.split()).replace("τ", "t").strip("()")
    m = re.fullmatch(r"([+-]?\d+)?(?:([+-]?)(\d*)\*?t)?", s)
    if not s or not m or (m.group(1) is None and m.group(2) is None and "t" not in s):
        raise InputError(f"cannot parse ring element {text!r}")
    x = int(m.group(1)) if m.group(1) else 0
    if "t" in s:
        coef = m.group(3)
        y = int(coef) if coef else 1
        if m.group(2) == "-":
            y = -y
    else:
        y = 0
    return Elem(x, y)


def parse_set(text: str) -> list[Elem]:
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise InputError("empty coefficient set")
    return [parse_elem(p) for p in parts]


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"cannot parse rational {text!r}") from exc


def make_ring(disc: int) -> Ring:
    try:
        return Ring(int(disc))
    except IdealError as exc:
        raise InputError(str(exc)) from exc


def parse_z(text: str, ring: Ring):
    try:
        return parse_complex(text, ring.d)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _parse_ideal(ring: Ring, text: str) -> IdealLattice:
    try:
        lat = IdealLattice.from_json(ring, json.loads(text))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"bad ideal JSON {text!r}: {exc}") from exc
    if not lat.is_ideal():
        raise InputError("lattice is not closed under multiplication by tau")
    return lat


def _elem_str(ring: Ring, e: Elem) -> str:
    return ring.format_elem(e)


# ---------------------------------------------------------------- parameters


def resolve_params(ring: Ring, args, cfg: Config) -> AdmissibleParams:
    """Parameters from ``--set``/``--eps-sq``, else from the cache, else by search."""
    B = getattr(args, "set", None)
    eps_sq = getattr(args, "eps_sq", None)
    if B is None:
        if eps_sq is not None:
            raise InputError("--eps-sq requires --set")
        cache = ParamCache(cfg.resolved_cache())
        params = cache.get(ring.disc)
        if params is None:
            params = find_minimal_admissible_set(ring)
            cache.put(ring.disc, params)
        return params
    elems = parse_set(B)
    res = check_admissible(ring, elems, tol=cfg.tolerance)
    if not res.admissible:
        raise ValidationFailure(f"B = {{{B}}} is not admissible for disc {ring.disc}")
    if eps_sq is None:
        return params_from_check(res)
    e = parse_fraction(eps_sq)
    if not 0 < e < 1:
        raise InputError("eps^2 must lie in (0, 1)")
    if float(e) < res.eps_sq_lo:
        raise ValidationFailure(
            f"eps^2 = {e} is below the minimal admissible value {fmt_float(res.eps_sq)}"
        )
    return AdmissibleParams.exact(ring, elems, e)


def _params_json(ring: Ring, p: AdmissibleParams) -> dict:
    out = p.to_json()
    out["B_text"] = [_elem_str(ring, b) for b in p.B]
    out["mu"] = p.mu
    out["eps"] = math.sqrt(p.eps_sq)
    return out


def _input_value(ring: Ring, text: str, mode: str, precision: int):
    z = parse_z(text, ring)
    if mode == "float":
        with mpmath.workprec(precision + 32):
            return FloatComplex(z.to_mpc(), precision)
    return z


def _policy(name: str):
    if name == "greedy":
        return GreedyQuality()
    if name == "first":
        return FirstFound()
    p = Path(name)
    try:
        data = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"policy must be 'greedy', 'first' or a script file: {exc}") from exc
    rows = data["coefficients"] if isinstance(data, dict) else data
    return Scripted(tuple(Coefficient.from_json(r) for r in rows))


# ---------------------------------------------------------------- reference tables


def load_reference(name: str) -> dict:
    return json.loads(resources.files("iqcf").joinpath("data", name).read_text(encoding="utf-8"))


def table1_script(ref: Optional[dict] = None) -> tuple[Coefficient, ...]:
    ref = ref or load_reference("table1.json")
    return tuple(Coefficient(Elem.from_json(r["a"]), Elem.from_json(r["b"])) for r in ref["rows"])


def _printed_tolerance(text: str) -> float:
    decimals = len(text.split(".")[1]) if "." in text else 0
    return 10.0**-decimals


def run_table1(script: Optional[Sequence[Coefficient]] = None) -> dict:
    """Replay the reference script and compare every row; failures are report entries."""
    ref = load_reference("table1.json")
    ring = Ring(ref["disc"])
    z = parse_complex(ref["z"], ring.d)
    B = [Elem(b, 0) for b in ref["B"]]
    params = AdmissibleParams.exact(ring, B, Fraction(ref["eps_sq"]))
    script = tuple(script) if script is not None else table1_script(ref)
    report: dict[str, Any] = {"disc": ring.disc, "z": ref["z"], "rows": [], "errors": []}
    try:
        exp = expand(ring, z, len(script), params, Scripted(script))
    except InvalidScriptError as exc:
        report["errors"].append({"kind": "invalid-script", "index": exc.index + 1, "reason": exc.reason})
        report["matched"] = 0
        report["passed"] = False
        return report
    matched = 0
    for row, entry in zip(ref["rows"], exp.trail):
        p_ref, q_ref = Elem.from_json(row["p"]), Elem.from_json(row["q"])
        conv_ok = entry.p == p_ref and entry.q == q_ref
        tol = _printed_tolerance(row["quality"])
        qual_ok = abs(entry.quality - float(row["quality"])) <= tol * (1 + 1e-9)
        ok = conv_ok and qual_ok
        matched += ok
        report["rows"].append(
            {
                "n": entry.n,
                "a": _elem_str(ring, entry.coefficient.a),
                "b": _elem_str(ring, entry.coefficient.b),
                "p": _elem_str(ring, entry.p),
                "q": _elem_str(ring, entry.q),
                "q_norm": int(ring.norm(entry.q)),
                "quality": entry.quality,
                "quality_reference": row["quality"],
                "convergent_match": conv_ok,
                "quality_match": qual_ok,
            }
        )
    if len(exp.trail) != len(ref["rows"]):
        report["errors"].append({"kind": "length", "steps": len(exp.trail), "expected": len(ref["rows"])})
    report["matched"] = matched
    report["passed"] = matched == len(ref["rows"]) and not report["errors"]
    return report


def _closed_form(v: dict) -> float:
    with mpmath.workprec(200):
        return float((v["a"] + v["b"] * mpmath.sqrt(v["r"])) / v["den"])


def _associates(ring: Ring, u: Elem, v: Elem) -> bool:
    return ring.divides(u, v) and ring.divides(v, u)


def _same_set(ring: Ring, found: Sequence[Elem], ref: Sequence[Elem]) -> bool:
    if len(found) != len(ref):
        return False
    pool = list(ref)
    for f in found:
        hit = next((r for r in pool if _associates(ring, f, r)), None)
        if hit is None:
            return False
        pool.remove(hit)
    return True


def table2_row(disc: int, tol: float = 1e-10) -> dict:
    ring = Ring(disc)
    t0 = time.perf_counter()
    params = find_minimal_admissible_set(ring)
    check = check_admissible(ring, params.B, tol=tol)
    return {
        "disc": disc,
        "B": [_elem_str(ring, b) for b in params.B],
        "B_json": [b.to_json() for b in params.B],
        "mu_sq": params.mu_sq,
        "eps_sq": check.eps_sq,
        "eps_sq_lo": check.eps_sq_lo,
        "eps_sq_hi": check.eps_sq_hi,
        "seconds": time.perf_counter() - t0,
    }


def run_table2(discs: Sequence[int], jobs: int = 1, tol: float = 1e-10, match_tol: float = 1e-9) -> dict:
    """Minimal admissible sets for each discriminant, compared with the reference rows."""
    for d in discs:
        make_ring(d)
    ref = {r["disc"]: r for r in load_reference("table2.json")["rows"]}
    order = sorted(set(discs), key=lambda d: (abs(d), d))
    if jobs > 1 and len(order) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(table2_row, order, [tol] * len(order)))
    else:
        rows = [table2_row(d, tol) for d in order]
    matched = compared = 0
    for row in rows:
        r = ref.get(row["disc"])
        if r is None:
            row["status"] = "no-reference"
            continue
        ring = Ring(row["disc"])
        compared += 1
        target = _closed_form(r["eps_sq"])
        ref_B = [Elem(b, 0) for b in r["B"]]
        mu_ref = max(int(ring.norm(b)) for b in ref_B)
        row["reference"] = {"B": r["B"], "eps_sq": r["text"], "eps_sq_value": target}
        row["eps_sq_error"] = row["eps_sq"] - target
        row["mu_match"] = row["mu_sq"] == mu_ref
        row["set_match"] = _same_set(ring, [Elem.from_json(b) for b in row["B_json"]], ref_B)
        row["eps_match"] = abs(row["eps_sq"] - target) <= match_tol
        ok = row["mu_match"] and row["set_match"] and row["eps_match"]
        row["status"] = "match" if ok else "mismatch"
        matched += ok
    return {
        "rows": rows,
        "compared": compared,
        "matched": matched,
        "passed": matched == compared,
    }


# ---------------------------------------------------------------- bench / verify helpers


def step_bound(delta: float, eps: float) -> int:
    return math.ceil(math.log(delta) / math.log(1 / eps))


def run_bench(ring: Ring, z, params: AdmissibleParams, deltas: Sequence[float]) -> list[dict]:
    """Steps (and time) until ``|q z - p| <= 1/delta``, per target."""
    if any(d < 2 for d in deltas):
        raise InputError("targets must satisfy delta >= 2")
    eps = math.sqrt(float(params.disc_bound()))
    out = []
    need = max(step_bound(d, eps) for d in deltas) if deltas else 0
    t0 = time.perf_counter()
    exp = expand(ring, z, max(need, 1), params)
    total = time.perf_counter() - t0
    per_step = total / max(exp.steps, 1)
    quals = [t.quality for t in exp.trail]
    for d in deltas:
        steps = next((i + 1 for i, q in enumerate(quals) if q <= 1 / d), None)
        bound = step_bound(d, eps)
        out.append(
            {
                "delta": float(d),
                "steps": steps,
                "bound": bound,
                "within_bound": steps is not None and steps <= bound,
                "seconds": None if steps is None else steps * per_step,
            }
        )
    return out


def slope_fit(rows: Sequence[dict]) -> float:
    """Least-squares slope of steps against ``log delta``."""
    xs = np.log([r["delta"] for r in rows])
    ys = np.array([r["steps"] for r in rows], dtype=float)
    return float(np.polyfit(xs, ys, 1)[0])


def random_input(ring: Ring, rng: random.Random, den: int = 1000, span: int = 2) -> QuadComplex:
    """A random exact point ``re + im*i`` with ``re, im`` in Q(sqrt(d)); almost never in K."""

    def coord():
        return QuadReal.of(
            ring.d,
            Fraction(rng.randint(-span * den, span * den), den),
            Fraction(rng.randint(-den, den), den * den),
        )

    return QuadComplex(coord(), coord())


def verify_runs(
    discs: Sequence[int], runs: int, steps: int, seed: int, cache: Optional[ParamCache] = None
) -> dict:
    rng = random.Random(seed)
    params_by_disc = {}
    for d in discs:
        ring = make_ring(d)
        p = cache.get(d) if cache else None
        if p is None:
            p = find_minimal_admissible_set(ring)
            if cache:
                cache.put(d, p)
        params_by_disc[d] = (ring, p)
    per_disc = {d: {"runs": 0, "checks": 0, "violations": 0} for d in discs}
    violations = []
    for k in range(runs):
        d = discs[k % len(discs)]
        ring, params = params_by_disc[d]
        z = random_input(ring, rng)
        exp = expand(ring, z, steps, params)
        rep = verify_expansion(exp, params)
        s = per_disc[d]
        s["runs"] += 1
        s["checks"] += len(rep.checks)
        bad = rep.violations
        s["violations"] += len(bad)
        for v in bad:
            violations.append({"disc": d, "run": k, "check": v.name, "n": v.n})
    return {
        "seed": seed,
        "runs": runs,
        "steps": steps,
        "per_disc": {str(d): per_disc[d] for d in discs},
        "violations": violations,
        "passed": not violations,
    }


# ---------------------------------------------------------------- commands


def _emit(args, text: str) -> None:
    out = getattr(args, "output", None)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _json_artifact(args, manifest: RunManifest, body: dict, cfg: Config) -> str:
    return dump_json({"manifest": manifest.to_json(), **body}, pretty=args.pretty or cfg.output_format == "pretty")


def cmd_check_admissible(args, cfg, manifest):
    ring = make_ring(args.disc)
    B = parse_set(args.set)
    res = check_admissible(ring, B, tol=cfg.tolerance)
    body = {
        "disc": ring.disc,
        "B": [_elem_str(ring, b) for b in res.B],
        "admissible": res.admissible,
        "eps": res.eps,
        "eps_sq": res.eps_sq,
        "eps_sq_lo": res.eps_sq_lo,
        "eps_sq_hi": res.eps_sq_hi,
        "mu_sq": res.mu_sq,
        "ideals": [
            {"ideal": r.ideal.describe(), "eps": r.eps} for r in res.per_ideal
        ],
    }
    text = _json_artifact(args, manifest, body, cfg)
    if not res.admissible:
        raise ValidationFailure("set is not admissible", text)
    return text


def cmd_find_min_set(args, cfg, manifest):
    ring = make_ring(args.disc)
    max_mu_sq = args.max_mu_sq if args.max_mu is None else args.max_mu**2
    params = find_minimal_admissible_set(ring, max_mu_sq=max_mu_sq)
    ParamCache(cfg.resolved_cache()).put(ring.disc, params)
    return _json_artifact(args, manifest, {"disc": ring.disc, "params": _params_json(ring, params)}, cfg)


def cmd_covering_svg(args, cfg, manifest):
    ring = make_ring(args.disc)
    B = parse_set(args.set)
    ideal = _parse_ideal(ring, args.ideal) if args.ideal else unit_ideal(ring)
    inst = build_covering_instance(ring, B, ideal)
    try:
        svg = covering_svg(inst, args.scale, view=args.view)
    except CoveringError as exc:
        raise InputError(str(exc)) from exc
    meta = json.dumps(manifest.to_json(), sort_keys=True).replace("--", "- -")
    head, rest = svg.split("\n", 1)
    return f"{head}\n<!-- manifest: {meta} -->\n{rest}"


def cmd_expand(args, cfg, manifest):
    ring = make_ring(args.disc)
    if args.steps < 1:
        raise InputError("--steps must be positive")
    params = resolve_params(ring, args, cfg)
    z = _input_value(ring, args.z, args.mode, args.precision or cfg.precision)
    exp = expand(ring, z, args.steps, params, _policy(args.policy))
    body = {
        "disc": ring.disc,
        "z": args.z,
        "mode": args.mode,
        "params": _params_json(ring, params),
        "policy": exp.policy,
        "terminated": exp.terminated,
        "steps": exp.records(),
        "continued_fraction": render_cf(exp),
    }
    return _json_artifact(args, manifest, body, cfg)


def cmd_explore(args, cfg, manifest):
    ring = make_ring(args.disc)
    z = parse_z(args.z, ring)
    if args.open:
        B = [tuple(b) for b in parse_set(args.set or "1")]
        graph = explore_states(z, ring, OPEN, budget=args.budget, B=B)
        params_desc = {"mode": "open", "B": [_elem_str(ring, Elem(*b)) for b in B]}
    else:
        params = resolve_params(ring, args, cfg)
        graph = explore_states(z, ring, params, budget=args.budget)
        params_desc = {"mode": "closed", **_params_json(ring, params)}
    if not graph.closed:
        raise GraphNotClosedError(f"exploration exceeded the budget of {args.budget} states")
    cyc = detect_periodicity(graph)
    period = None
    if cyc is not None:
        pre, per, coeffs = cyc
        period = {
            "preperiod": pre,
            "period": per,
            "coefficients": [{"a": _elem_str(ring, c.a), "b": _elem_str(ring, c.b)} for c in coeffs],
        }
    if args.dot:
        meta = json.dumps(manifest.to_json(), sort_keys=True).replace("*/", "* /")
        Path(args.dot).write_text(f"/* manifest: {meta} */\n{graph.to_dot()}\n", encoding="utf-8")
    body = {
        "disc": ring.disc,
        "z": args.z,
        "params": params_desc,
        "vertex_count": len(graph.vertices),
        "distinct_values": graph.distinct_values,
        "graph": graph.to_json(),
        "periodicity": period,
    }
    return _json_artifact(args, manifest, body, cfg)


def cmd_oracle(args, cfg, manifest):
    ring = make_ring(args.disc)
    z = parse_z(args.z, ring)
    if args.q_bound < 1:
        raise InputError("--q-bound must be at least 1")
    recs = best_approx_oracle(z, ring, args.q_bound)
    if args.limit:
        recs = recs[: args.limit]
    buf = io.StringIO()
    buf.write(f"# manifest: {json.dumps(manifest.to_json(), sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "q", "q_norm", "quality"])
    for r in recs:
        w.writerow([_elem_str(ring, r.p), _elem_str(ring, r.q), int(ring.norm(r.q)), fmt_float(r.quality, args.pretty)])
    return buf.getvalue()


def cmd_verify(args, cfg, manifest):
    discs = _disc_list(args.discs)
    if args.runs < 1 or args.steps < 1:
        raise InputError("--runs and --steps must be positive")
    rep = verify_runs(discs, args.runs, args.steps, args.seed, ParamCache(cfg.resolved_cache()))
    text = _json_artifact(args, manifest, rep, cfg)
    if not rep["passed"]:
        raise ValidationFailure(f"{len(rep['violations'])} bound violations", text)
    return text


def cmd_table1(args, cfg, manifest):
    script = None
    if args.script:
        pol = _policy(args.script)
        if not isinstance(pol, Scripted):
            raise InputError("--script expects a coefficient file")
        script = pol.coefficients
    rep = run_table1(script)
    text = _json_artifact(args, manifest, rep, cfg)
    if not rep["passed"]:
        raise ValidationFailure("table replay mismatch", text)
    return text


def cmd_table2(args, cfg, manifest):
    if args.discs is None:
        discs = [r["disc"] for r in load_reference("table2.json")["rows"]]
    else:
        discs = _disc_list(args.discs)
    rep = run_table2(discs, jobs=args.jobs, tol=cfg.tolerance)
    if args.no_timing:
        for r in rep["rows"]:
            r["seconds"] = None
    text = _json_artifact(args, manifest, rep, cfg)
    if not rep["passed"]:
        raise ValidationFailure(f"{rep['compared'] - rep['matched']} table rows differ", text)
    return text


def cmd_bench(args, cfg, manifest):
    ring = make_ring(args.disc)
    params = resolve_params(ring, args, cfg)
    z = parse_z(args.z, ring)
    deltas = [float(d) for d in args.deltas.split(",")] if args.deltas else [2.0**k for k in range(1, args.max_log2 + 1)]
    rows = run_bench(ring, z, params, deltas)
    buf = io.StringIO()
    buf.write(f"# manifest: {json.dumps(manifest.to_json(), sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["delta", "steps", "bound", "within_bound", "seconds"])
    for r in rows:
        secs = "" if r["seconds"] is None or args.no_timing else fmt_float(r["seconds"], args.pretty)
        w.writerow([fmt_float(r["delta"]), r["steps"], r["bound"], int(r["within_bound"]), secs])
    text = buf.getvalue()
    if not all(r["within_bound"] for r in rows):
        raise ValidationFailure("step bound exceeded", text)
    return text


def _disc_list(text: str) -> list[int]:
    """``-23,-47`` or a range ``3:48`` / ``-3:-48`` of |disc| (every valid discriminant in it)."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        try:
            lo, hi = sorted(abs(int(v)) for v in text.split(":"))
        except ValueError as exc:
            raise InputError(f"bad discriminant range {text!r}") from exc
        return [-m for m in range(max(lo, 3), hi + 1) if (-m) % 4 in (0, 1)]
    try:
        discs = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"bad discriminant list {text!r}") from exc
    for d in discs:
        make_ring(d)
    return discs


# ---------------------------------------------------------------- argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("-o", "--output", help="write the artifact here instead of stdout")
    p.add_argument("--pretty", action="store_true", help="round floats for reading")
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock fields")


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--set", help="coefficient set, e.g. '1,2' or '1,1+t'")
    p.add_argument("--eps-sq", help="rational eps^2 to use with --set, e.g. 8/9")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="iqcf", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="JSON or TOML configuration file")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check-admissible", help="minimal eps for a given set")
    p.add_argument("--disc", type=int, required=True)
    p.add_argument("--set", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_check_admissible)

    p = sub.add_parser("find-min-set", help="search the minimal admissible set and cache it")
    p.add_argument("--disc", type=int, required=True)
    p.add_argument("--max-mu", type=int, help="largest |b| to try")
    p.add_argument("--max-mu-sq", type=int, default=64, help="largest |b|^2 to try")
    _add_common(p)
    p.set_defaults(func=cmd_find_min_set)

    p = sub.add_parser("covering-svg", help="draw the disc family of the unit ideal")
    p.add_argument("--disc", type=int, required=True)
    p.add_argument("--set", required=True)
    p.add_argument("--scale", type=float, default=1.0, help="radius scale in (0, 1]")
    p.add_argument("--ideal", help='JSON ideal, e.g. \'{"scale": "1", "a0": 2, "b0": 0, "c0": 1}\'')
    p.add_argument("--view", type=float, default=1.0)
    _add_common(p)
    p.set_defaults(func=cmd_covering_svg)

    p = sub.add_parser("expand", help="continued fraction expansion of a point")
    p.add_argument("--disc", type=int, required=True)
    p.add_argument("--z", required=True, help="e.g. '-1.26+0.48i' or '1/2*sqrt(23)+1/3i'")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--policy", default="greedy", help="greedy, first, or a JSON script file")
    p.add_argument("--mode", choices=("exact", "float"), default="exact")
    p.add_argument("--precision", type=int, help="bits in float mode")
    _add_params(p)
    _add_common(p)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("explore", help="state graph over all valid coefficient choices")
    p.add_argument("--disc", type=int, required=True)
    p.add_argument("--z", required=True)
    p.add_argument("--open", action="store_true", help="strict unit-disc test without eps")
    p.add_argument("--budget", type=int, default=10**5)
    p.add_argument("--dot", help="also write the graph as DOT")
    _add_params(p)
    _add_common(p)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("oracle", help="brute-force |q (q z - p)| table as CSV")
    p.add_argument("--disc", type=int, required=True)
    p.add_argument("--z", required=True)
    p.add_argument("--q-bound", "--qbound", dest="q_bound", type=int, default=1000, help="largest |q|^2")
    p.add_argument("--limit", type=int, default=0, help="keep only the best N rows")
    _add_common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", help="random exact runs checked against every bound")
    p.add_argument("--discs", "--disc", dest="discs", default="-15,-20,-23,-24,-47")
    p.add_argument("--runs", type=int, default=200)
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("table1", help="replay the reference expansion over disc -23")
    p.add_argument("--script", help="replace the reference coefficients with a JSON file")
    _add_common(p)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("table2", help="minimal admissible sets versus the reference table")
    p.add_argument("--discs", help="'-3,-4' or an absolute range '3:48'; default: all reference rows")
    p.add_argument("--jobs", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_table2)

    p = sub.add_parser("bench", help="steps needed for |q z - p| <= 1/delta")
    p.add_argument("--disc", type=int, required=True)
    p.add_argument("--z", default="1/10*sqrt({d})+1/3i", help="'{d}' expands to |disc|")
    p.add_argument("--deltas", help="comma list; default 2,4,...,2^max-log2")
    p.add_argument("--max-log2", type=int, default=20)
    _add_params(p)
    _add_common(p)
    p.set_defaults(func=cmd_bench)
    return ap


_VALUE_OPTIONS = ("--z", "--disc", "--discs", "--set", "--eps-sq", "--deltas")


def _glue_values(argv: Sequence[str]) -> list[str]:
    """``--z -1.26+0.48i`` -> ``--z=-1.26+0.48i`` so leading minus signs are not read as flags."""
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok in _VALUE_OPTIONS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(_glue_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "z", None) and "{d}" in args.z:
        args.z = args.z.replace("{d}", str(abs(args.disc)))
    try:
        cfg = Config.load(args.config)
        manifest = RunManifest.start(args.command, args)
        text = args.func(args, cfg, manifest)
    except ValidationFailure as exc:
        if exc.artifact:
            _emit(args, exc.artifact)
        print(f"iqcf: validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InvalidScriptError as exc:
        print(f"iqcf: invalid-script at index {exc.index + 1}: {exc.reason}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SearchBoundExceeded, PrecisionExhaustedError, GraphNotClosedError, InsufficientOracleBound) as exc:
        print(f"iqcf: budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InputError, IdealError, CoveringError, ValueError, OSError) as exc:
        print(f"iqcf: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(args, text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
