"""Command-line front end: classify, verify, sweep, sample.

Settings come from built-in defaults, then an optional JSON file (--config),
then explicit flags. The merged record is validated as a whole before any work
starts. Every output file name carries the seed and a hash of that record.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class ConfigError(Exception):
    def __init__(self, problems):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


# ------------------------------------------------------------------ settings

def _int_list(value):
    if isinstance(value, str):
        parts = [x.strip() for x in value.split(",") if x.strip()]
        return [int(x) for x in parts]
    if isinstance(value, (list, tuple)):
        return [int(x) for x in value]
    return [int(value)]


def _optional_int(value):
    return None if value is None else int(value)


def _bool(value):
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.lower() in ("true", "false", "1", "0", "yes", "no"):
        return value.lower() in ("true", "1", "yes")
    raise ValueError(f"not a boolean: {value!r}")


def _str_list(value):
    if isinstance(value, str):
        return [value]
    return [str(x) for x in value]


COMMON = {
    "seed": (int, 0),
    "out": (str, "out"),
    "threads": (_optional_int, None),
}

SCHEMAS = {
    "classify": {"k": (int, None), "pairings_only": (_bool, False), "dot": (str, None),
                 "partition": (_str_list, [])},
    "verify lemmas": {"s": (float, 3.0), "c_kappa": (float, 1.0), "grid": (_int_list, [50, 100, 200]),
                      "grid_high": (_int_list, [20, 40, 80]), "samples": (int, 4000),
                      "tolerance": (float, 0.2), "cost_cap": (float, 1e9)},
    "verify exponents": {"k": (int, None), "s": (float, 3.0), "c_kappa": (float, 1.0),
                         "grid": (_int_list, [8, 12, 16, 24]), "tolerance": (float, 0.25),
                         "leading_tolerance": (float, 0.1), "cost_cap": (float, 1e9),
                         "pairings_only": (_bool, False)},
    "verify moments": {"n": (int, 16), "k": (_int_list, [2, 4]), "s": (float, 3.0),
                       "samples": (int, 2000), "construction": (_str_list, ["filtered", "wigner"]),
                       "filter_halfwidth": (_optional_int, None), "sigmas": (float, 3.0)},
    "sweep": {"construction": (str, "filtered"), "s": (float, 3.0), "c_kappa": (float, 1.0),
              "grid": (_int_list, [64, 128, 256, 512]), "samples": (int, 200),
              "epsilon": (float, 0.25), "moments": (_int_list, []), "tol": (float, 1e-8),
              "filter_halfwidth": (_optional_int, None), "slope_threshold": (float, 0.1)},
    "sample": {"n": (int, None), "construction": (str, "filtered"), "s": (float, 3.0),
               "c_kappa": (float, 1.0), "filter_halfwidth": (_optional_int, None),
               "index": (int, 0), "count": (int, 1)},
}


def resolve_config(command: str, file_values: dict, flag_values: dict) -> dict:
    """Defaults < config file < flags, then validation; all problems reported at once."""
    schema = {**COMMON, **SCHEMAS[command]}
    problems = []
    for key in sorted(set(file_values) - set(schema) - {"command"}):
        problems.append(f"unknown config key {key!r}")
    if "command" in file_values and file_values["command"] != command:
        problems.append(f"config is for {file_values['command']!r}, not {command!r}")
    cfg = {}
    for key, (conv, default) in schema.items():
        raw = default
        if key in file_values:
            raw = file_values[key]
        if flag_values.get(key) is not None:
            raw = flag_values[key]
        try:
            cfg[key] = conv(raw) if raw is not None else None
        except (TypeError, ValueError) as exc:
            problems.append(f"{key}: {exc}")
            cfg[key] = None
    problems += _validate(command, cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def _validate(command, cfg) -> list[str]:
    from .partitions import PAIRING_CAP as MAX_PAIRING_K, PARTITION_CAP as MAX_PARTITION_K
    from .sampler import Construction

    out = []

    def need(key, ok, msg):
        if cfg.get(key) is not None and not ok(cfg[key]):
            out.append(f"{key}: {msg}")

    if cfg.get("seed") is not None and not 0 <= cfg["seed"] < 2**64:
        out.append("seed: must be a 64-bit unsigned integer")
    need("threads", lambda t: t >= 1, "must be >= 1")
    for key in ("grid", "grid_high"):
        if key in cfg and cfg[key] is not None:
            g = cfg[key]
            if len(g) < 3:
                out.append(f"{key}: grid needs ≥ 3 points")
            elif sorted(set(g)) != g:
                out.append(f"{key}: grid must be strictly increasing")
            elif g[0] < 2:
                out.append(f"{key}: sizes must be >= 2")
    for key in ("s",):
        need(key, lambda v: v > 2, "decay exponent must exceed 2")
    need("c_kappa", lambda v: v > 0, "must be positive")
    if command not in ("sweep", "verify moments"):
        need("samples", lambda v: v >= 1, "must be >= 1")
    need("count", lambda v: v >= 1, "must be >= 1")
    for key in ("tolerance", "leading_tolerance", "tol", "sigmas", "cost_cap"):
        need(key, lambda v: v > 0 and math.isfinite(v), "must be positive")
    need("epsilon", lambda v: v > 0, "must be positive")
    need("filter_halfwidth", lambda v: v >= 1, "must be >= 1")
    need("index", lambda v: v >= 0, "must be >= 0")
    need("n", lambda v: v >= 2, "must be >= 2")
    for key in ("construction",):
        vals = cfg.get(key)
        for v in ([vals] if isinstance(vals, str) else vals or []):
            try:
                Construction.parse(v)
            except ValueError as exc:
                out.append(f"{key}: {exc}")
    if command == "classify":
        k = cfg.get("k")
        if k is None:
            out.append("k: required")
        elif k < 1:
            out.append("k: must be >= 1")
        else:
            cap = MAX_PAIRING_K if cfg.get("pairings_only") else MAX_PARTITION_K
            if k > cap:
                out.append(f"k: expansion order too large (k={k} > {cap})")
            elif cfg.get("pairings_only") and k % 2:
                out.append("k: pairings need even k")
    if command == "verify exponents":
        k = cfg.get("k")
        if k is None:
            out.append("k: required")
        elif not 2 <= k <= MAX_PARTITION_K:
            out.append(f"k: must be in 2..{MAX_PARTITION_K}")
    if command == "verify moments":
        for k in cfg.get("k") or []:
            if not 0 <= k <= 12:
                out.append(f"k: moment order {k} outside 0..12")
        need("samples", lambda v: v >= 30, "must be >= 30")
    if command == "sample" and cfg.get("n") is None:
        out.append("n: required")
    if command == "sweep":
        need("samples", lambda v: v >= 2, "must be >= 2")
        for k in cfg.get("moments") or []:
            if not 0 <= k <= 12:
                out.append(f"moments: order {k} outside 0..12")
    return out


def result_config(cfg: dict) -> dict:
    """Settings that affect results; output location and threads do not."""
    return {k: v for k, v in cfg.items() if k not in ("out", "threads", "dot")}


def config_hash(command: str, cfg: dict) -> str:
    text = json.dumps({"command": command, **result_config(cfg)}, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


# ------------------------------------------------------------------ output

class Writer:
    def __init__(self, command: str, cfg: dict):
        self.dir = Path(cfg["out"])
        self.stem = f"{command.replace(' ', '_')}_seed{cfg['seed']}_{config_hash(command, cfg)}"
        self.header = {"command": command, "config": result_config(cfg), "config_hash": config_hash(command, cfg),
                       "seed": cfg["seed"]}
        self.written: list[Path] = []

    def path(self, suffix: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        return self.dir / f"{self.stem}{suffix}"

    def json(self, payload: dict, suffix: str = ".json") -> Path:
        p = self.path(suffix)
        doc = {**self.header, "result": payload}
        p.write_text(json.dumps(doc, sort_keys=True, indent=1, default=_jsonable) + "\n", encoding="utf-8")
        self.written.append(p)
        return p

    def csv(self, header, rows, suffix: str = ".csv") -> Path:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([_cell(x) for x in r])
        return self.text(buf.getvalue(), suffix)

    def text(self, body: str, suffix: str) -> Path:
        p = self.path(suffix)
        p.write_text(body, encoding="utf-8")
        self.written.append(p)
        return p


def _cell(x):
    if isinstance(x, float):
        return repr(x)
    if x is None:
        return ""
    return x


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if hasattr(x, "to_dict"):
        return x.to_dict()
    if hasattr(x, "item"):
        return x.item()
    return str(x)


def _clean(obj):
    """NaN/inf are not JSON; map them to null."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


# ------------------------------------------------------------------ commands

def _slug(p) -> str:
    return "_".join("-".join(str(v) for v in b) for b in p.blocks)


def cmd_classify(cfg, out: Writer) -> int:
    from .graph_reduce import build_kgon, reduce, to_dot
    from .moment_engine import bound_trace_moment, predict_exponent
    from .partitions import dihedral_orbits, enumerate_pairings, parse_partition

    k = cfg["k"]
    bound = bound_trace_moment(k) if not cfg["pairings_only"] else None
    parts = enumerate_pairings(k) if cfg["pairings_only"] else None
    if bound is not None:
        reports = bound.per_partition
    else:
        reports = [predict_exponent(p) for p in parts]
    rows = [(str(r.partition), r.predicted_exponent, r.normalized_exponent, r.verdict, r.rule)
            for r in reports]
    out.csv(["partition", "predicted_exponent", "normalized_exponent", "verdict", "rule"], rows)
    worst = max((r.normalized_exponent for r in reports), default=float("-inf"))
    payload = {"k": k, "partitions": [r.to_dict() for r in reports],
               "leading_count": sum(r.verdict == "Leading" for r in reports),
               "bound_exponent": worst if math.isfinite(worst) else None}
    out.json(_clean(payload))
    if cfg["dot"]:
        try:
            targets = [parse_partition(t) for t in cfg["partition"]]
        except ValueError as exc:
            raise ConfigError([f"partition: {exc}"])
        for t in targets:
            if t.k != k:
                raise ConfigError([f"partition: {t} is not a partition of [{k}]"])
        if not targets and k % 2 == 0:
            targets = list(dihedral_orbits(enumerate_pairings(k)))
        ddir = Path(cfg["dot"])
        ddir.mkdir(parents=True, exist_ok=True)
        for t in targets:
            final, _ = reduce(t)
            for tag, g in (("initial", build_kgon(t)), ("reduced", final)):
                p = ddir / f"k{k}_{_slug(t)}_{tag}.dot"
                p.write_text(to_dot(g, f"k{k}_{tag}"), encoding="utf-8")
    print(f"k={k}: {len(reports)} terms, {payload['leading_count']} leading, "
          f"max normalized exponent {payload['bound_exponent']}")
    return EXIT_OK if not math.isfinite(worst) or worst <= 0 else EXIT_VIOLATION


def cmd_verify_lemmas(cfg, out: Writer) -> int:
    from .moment_engine.lemmas import lemma_checks, run_check

    results = [run_check(c, s=cfg["s"], c_kappa=cfg["c_kappa"], samples=cfg["samples"],
                         seed=cfg["seed"], tolerance=cfg["tolerance"], cost_cap=cfg["cost_cap"])
               for c in lemma_checks(cfg["grid"], cfg["grid_high"])]
    rows = []
    for r in results:
        if r.skipped:
            _warn(f"{r.check.name}: skipped ({r.skipped})")
        rows.append((r.check.name, r.check.group, r.check.exponent, r.slope, r.slope_stderr,
                     "skipped" if r.skipped else ("pass" if r.passed else "FAIL"), "/".join(r.methods)))
    out.csv(["check", "group", "exponent", "measured_slope", "slope_stderr", "status", "methods"], rows)
    out.json(_clean({"checks": [r.to_dict() for r in results]}))
    failed = [r for r in results if not r.skipped and not r.passed]
    for r in failed:
        print(f"FAIL {r.check.name}: slope {r.slope:.3f} > {r.check.exponent} + {r.tolerance}")
    print(f"{len(results) - len(failed)}/{len(results)} lemma checks without violation")
    return EXIT_VIOLATION if failed else EXIT_OK


def cmd_verify_exponents(cfg, out: Writer) -> int:
    from .moment_engine.certify import UNATTAINABLE, VIOLATION, certify_exponents, certify_leading

    k = cfg["k"]
    certs = certify_exponents(k, cfg["grid"], cfg["s"], cfg["c_kappa"], cfg["tolerance"],
                              cfg["cost_cap"], cfg["pairings_only"])
    lead = certify_leading(k, cfg["grid"], cfg["c_kappa"], cfg["leading_tolerance"],
                           cfg["cost_cap"]) if k % 2 == 0 else []
    rows = [(str(c.partition), c.predicted, c.measured, c.status, "model")
            for c in certs]
    rows += [(str(c.partition), c.predicted, c.measured, c.status, "delta") for c in lead]
    out.csv(["partition", "predicted", "measured", "verdict", "kernel"], rows)
    out.json(_clean({"k": k, "model": [c.to_dict() for c in certs],
                     "delta_leading": [c.to_dict() for c in lead]}))
    skipped = [c for c in certs + lead if c.status == UNATTAINABLE]
    if skipped:
        _warn(f"{len(skipped)} terms skipped: beyond the cost cap on this grid")
    bad = [c for c in certs + lead if c.status == VIOLATION]
    for c in bad:
        print(f"FAIL {c.partition} ({c.target}): measured {c.measured:.3f}, predicted {c.predicted}")
    print(f"k={k}: {len(certs) + len(lead) - len(bad) - len(skipped)} certified, "
          f"{len(skipped)} skipped, {len(bad)} violations")
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_verify_moments(cfg, out: Writer) -> int:
    from .kernel import CorrelationParams
    from .moment_engine import exact_gaussian_trace_moment
    from .montecarlo import trace_moment_mc
    from .sampler import Construction, EnsembleSpec

    n = cfg["n"]
    rows, recs, bad = [], [], 0
    for name in cfg["construction"]:
        con = Construction.parse(name)
        spec = EnsembleSpec(CorrelationParams(n, cfg["s"]), con, cfg["filter_halfwidth"], cfg["seed"])
        for k in cfg["k"]:
            exact = exact_gaussian_trace_moment(n, k, spec)
            mc, se = trace_moment_mc(spec, k, cfg["samples"])
            z = (mc - exact) / se if se > 0 else (0.0 if mc == exact else math.inf)
            ok = abs(z) <= cfg["sigmas"]
            bad += not ok
            rows.append((con.value, k, exact, mc, se, z, "pass" if ok else "FAIL"))
            recs.append({"construction": con.value, "k": k, "exact": exact, "mc": mc,
                         "stderr": se, "z": z, "passed": ok})
    out.csv(["construction", "k", "exact", "monte_carlo", "stderr", "z", "status"], rows)
    out.json(_clean({"n": n, "rows": recs}))
    for r in recs:
        print(f"{r['construction']} k={r['k']}: exact {r['exact']:.5f}, MC {r['mc']:.5f} ± {r['stderr']:.5f}"
              f" ({'pass' if r['passed'] else 'FAIL'})")
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_sweep(cfg, out: Writer) -> int:
    from .kernel import CorrelationParams
    from .montecarlo import norm_sweep
    from .sampler import EnsembleSpec

    spec = EnsembleSpec(CorrelationParams(cfg["grid"][0], cfg["s"], cfg["c_kappa"]),
                        cfg["construction"], cfg["filter_halfwidth"], cfg["seed"])
    res = norm_sweep(spec, cfg["grid"], cfg["samples"], cfg["epsilon"], tuple(cfg["moments"]),
                     cfg["tol"], cfg["filter_halfwidth"], cfg["threads"])
    out.text(res.to_csv(), ".csv")
    out.json(_clean(res.to_dict()))
    for p in res.per_n:
        print(f"n={p.n}: median ‖H‖ {p.median_norm:.4f}, tail({cfg['epsilon']}) {p.tail_fraction:.4f}")
    print(f"slope {res.slope_norm:.4f} ± {res.slope_stderr:.4f} (threshold {cfg['slope_threshold']})")
    return EXIT_OK if res.slope_norm <= cfg["slope_threshold"] else EXIT_VIOLATION


def cmd_sample(cfg, out: Writer) -> int:
    from .kernel import CorrelationParams
    from .sampler import EnsembleSpec, sample_matrix, write_sample

    spec = EnsembleSpec(CorrelationParams(cfg["n"], cfg["s"], cfg["c_kappa"]), cfg["construction"],
                        cfg["filter_halfwidth"], cfg["seed"])
    files = []
    for i in range(cfg["index"], cfg["index"] + cfg["count"]):
        p = out.path(f"_{i}.bin")
        write_sample(p, sample_matrix(spec, i))
        out.written.append(p)
        files.append(p.name)
    out.json({"spec": spec.to_dict(), "spec_hash": spec.spec_hash(), "files": files,
              "format": "16-byte header: magic b'CMH1', uint32 N, uint64 sample index; "
                        "then N*N little-endian float64 of H in row-major order"})
    print(f"wrote {len(files)} sample(s) to {out.dir}")
    return EXIT_OK


COMMANDS = {"classify": cmd_classify, "verify lemmas": cmd_verify_lemmas,
            "verify exponents": cmd_verify_exponents, "verify moments": cmd_verify_moments,
            "sweep": cmd_sweep, "sample": cmd_sample}


# ------------------------------------------------------------------ parser

class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors already; only long options are declared."""

    def __init__(self, *a, **kw):
        kw.setdefault("allow_abbrev", False)
        super().__init__(*a, **kw)


def _common(p):
    p.add_argument("--config", help="JSON file with settings; flags override it")
    p.add_argument("--seed", type=int, help="top-level seed (default 0)")
    p.add_argument("--out", help="output directory (default ./out)")
    p.add_argument("--threads", type=int, help="worker threads (also CORRMOMENT_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="corrmoment", description="Moment-method tools for correlated random matrices.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="exponent report for every term of order k")
    _common(p)
    p.add_argument("--k", type=int)
    p.add_argument("--pairings-only", action="store_const", const=True, dest="pairings_only")
    p.add_argument("--dot", help="directory for DOT graphs")
    p.add_argument("--partition", action="append", help="partition to draw, e.g. '{{1,5},{2,6},{3,7},{4,8}}'")

    p = sub.add_parser("verify", help="numeric verification suites")
    vs = p.add_subparsers(dest="suite", required=True, parser_class=_Parser)
    q = vs.add_parser("lemmas", help="growth of the summation bounds")
    _common(q)
    q.add_argument("--s", type=float)
    q.add_argument("--c-kappa", type=float, dest="c_kappa")
    q.add_argument("--grid")
    q.add_argument("--grid-high", dest="grid_high")
    q.add_argument("--samples", type=int)
    q.add_argument("--tolerance", type=float)
    q.add_argument("--cost-cap", type=float, dest="cost_cap")
    q = vs.add_parser("exponents", help="measured vs predicted term exponents")
    _common(q)
    q.add_argument("--k", type=int)
    q.add_argument("--s", type=float)
    q.add_argument("--c-kappa", type=float, dest="c_kappa")
    q.add_argument("--grid")
    q.add_argument("--tolerance", type=float)
    q.add_argument("--leading-tolerance", type=float, dest="leading_tolerance")
    q.add_argument("--cost-cap", type=float, dest="cost_cap")
    q.add_argument("--pairings-only", action="store_const", const=True, dest="pairings_only")
    q = vs.add_parser("moments", help="Monte Carlo vs exact Gaussian trace moments")
    _common(q)
    q.add_argument("--n", type=int)
    q.add_argument("--k")
    q.add_argument("--s", type=float)
    q.add_argument("--samples", type=int)
    q.add_argument("--construction", action="append")
    q.add_argument("--filter-halfwidth", type=int, dest="filter_halfwidth")
    q.add_argument("--sigmas", type=float)

    p = sub.add_parser("sweep", help="spectral norm sweep over a size grid")
    _common(p)
    p.add_argument("--construction")
    p.add_argument("--s", type=float)
    p.add_argument("--c-kappa", type=float, dest="c_kappa")
    p.add_argument("--grid")
    p.add_argument("--samples", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--moments")
    p.add_argument("--tol", type=float)
    p.add_argument("--filter-halfwidth", type=int, dest="filter_halfwidth")
    p.add_argument("--slope-threshold", type=float, dest="slope_threshold")

    p = sub.add_parser("sample", help="write matrix samples to binary files")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--construction")
    p.add_argument("--s", type=float)
    p.add_argument("--c-kappa", type=float, dest="c_kappa")
    p.add_argument("--filter-halfwidth", type=int, dest="filter_halfwidth")
    p.add_argument("--index", type=int)
    p.add_argument("--count", type=int)
    return ap


def _load_config(path) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError([f"config: cannot read {path}: {exc.strerror}"])
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config: {path} is not valid JSON ({exc.msg} at line {exc.lineno})"])
    if not isinstance(data, dict):
        raise ConfigError(["config: top level must be a JSON object"])
    return data


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command if args.command != "verify" else f"verify {args.suite}"
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "suite", "config")}
    try:
        cfg = resolve_config(command, _load_config(args.config), flags)
        if cfg["threads"]:
            os.environ["CORRMOMENT_THREADS"] = str(cfg["threads"])
        return COMMANDS[command](cfg, Writer(command, cfg))
    except ConfigError as exc:
        print("configuration error:", file=sys.stderr)
        for msg in exc.problems:
            print(f"  - {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
