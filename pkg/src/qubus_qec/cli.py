"""``qubus-qec`` command line: plans, syndrome runs, sweeps and resource reports.

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 resource
mismatch. Every JSON document and CSV row is validated against the schema
files shipped in ``qubus_qec/schemas`` before it is written.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources as _res

import jsonschema
import numpy as np

from . import codes as C
from . import plans
from . import protocols as proto
from .noise import NoiseConfig
from .resources import COUNT_FIELDS, comparison_rows, expected

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_MISMATCH = 0, 2, 3, 4


class ConfigError(Exception):
    pass


# -- schemas and output ---------------------------------------------------------------------------


def load_schema(name):
    text = _res.files("qubus_qec").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(obj, name):
    jsonschema.validate(obj, load_schema(name))
    return obj


def _csv_text(rows, fields):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _threads():
    raw = os.environ.get("QUBUS_QEC_THREADS", "")
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ConfigError(f"QUBUS_QEC_THREADS must be an integer, got {raw!r}") from exc
        if n < 1:
            raise ConfigError("QUBUS_QEC_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


# -- plan -----------------------------------------------------------------------------------------


def _landing_rows(plan):
    blk = plan.block
    rows = []
    for basis, parity, pt in plans.landing_table(plan):
        bits = [int(c) for c in basis]
        rows.append({"basis": basis, "parity": parity, "beta": blk.beta(bits),
                     "re": float(complex(pt).real), "im": float(complex(pt).imag)})
    return rows


def cmd_plan(args):
    if args.no_displacements:
        plan = plans.bare_block_plan(args.n, args.theta, args.alpha)
    elif args.scheme == "photon":
        plan = plans.solve_photon_plan(args.n, args.theta, args.alpha)
    else:
        plan = plans.solve_homodyne_plan(args.n, args.theta, args.alpha, args.r3)
    doc = validate(plan.to_dict(), "plan")
    rows = [validate(r, "landing_row") for r in _landing_rows(plan)]
    plan_text = json.dumps(doc, indent=2)
    csv_text = _csv_text(rows, ["basis", "parity", "beta", "re", "im"])
    if args.out:
        _emit(plan_text, f"{args.out}.plan.json")
        _emit(csv_text, f"{args.out}.landing.csv")
    else:
        _emit(plan_text if args.format == "json" else csv_text, None)
    return EXIT_OK


# -- syndrome -------------------------------------------------------------------------------------


def _parse_logical(text, k):
    try:
        vals = [complex(v.strip().replace(" ", "")) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"--logical: cannot parse {text!r}") from exc
    if len(vals) != 1 << k or not any(vals):
        raise ConfigError(f"--logical needs {1 << k} amplitudes, not all zero")
    return vals


def _load_noise(path):
    if not path:
        return NoiseConfig()
    try:
        with open(path) as fh:
            return NoiseConfig.from_json(fh.read())
    except (OSError, ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"noise config {path}: {exc}") from exc


def _load_code(name):
    try:
        return C.load_code(name)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"code {name}: {exc}") from exc


def run_shots(code, scheme, params, noise, shots, seed, logical, threads=1):
    """Independent QEC cycles; results are keyed by shot index (order independent)."""
    ref = C.encode_vector(code, logical)
    psi = C.encode(code, logical)

    def one(i):
        rng = np.random.default_rng([seed, i])
        _, rep = C.qec_cycle(psi, code, scheme, noise, params, rng, reference=ref)
        return i, rep

    if threads > 1 and shots > 1:
        with ThreadPoolExecutor(max_workers=min(threads, shots)) as pool:
            results = dict(pool.map(one, range(shots)))
    else:
        results = dict(one(i) for i in range(shots))
    return [results[i] for i in range(shots)]


def summarize(code, scheme, params, noise, seed, reports):
    hist, corr = {}, {}
    ones = [0] * len(code.generators)
    for rep in reports:
        key = "".join(map(str, rep["syndrome"]))
        hist[key] = hist.get(key, 0) + 1
        c = rep["correction"] or "heralded"
        corr[c] = corr.get(c, 0) + 1
        for j, b in enumerate(rep["syndrome"]):
            ones[j] += b
    fids = [rep["fidelity"] for rep in reports]
    tally = {}
    for rep in reports:
        for k, v in rep["tally"].items():
            tally[k] = tally.get(k, 0) + v
    doc = {
        "code": code.name,
        "scheme": scheme,
        "alpha": params.alpha,
        "theta": params.theta,
        "shots": len(reports),
        "seed": seed,
        "noise": noise.to_dict(),
        "histogram": dict(sorted(hist.items())),
        "generators": [{"pauli": str(g), "ones": ones[j], "zeros": len(reports) - ones[j]}
                       for j, g in enumerate(code.generators)],
        "corrections": dict(sorted(corr.items())),
        "mean_fidelity": float(np.mean(fids)),
        "min_fidelity": float(np.min(fids)),
        "heralded_failures": sum(rep["heralded_failure"] for rep in reports),
        "leakage_shots": sum(any(rep["leakage"]) for rep in reports),
        "tally": tally,
    }
    if scheme != "fault-tolerant":
        doc["r3"] = params.r3
    return doc


def _default_probe(scheme, alpha, theta):
    if scheme == "fault-tolerant":
        return alpha or 12.0, theta or math.pi / 3
    return alpha or 100.0, theta or 0.3


def cmd_syndrome(args):
    if args.shots < 1:
        raise ConfigError("--shots must be >= 1")
    code = _load_code(args.code)
    scheme = C.normalize_scheme(args.scheme)
    alpha, theta = _default_probe(scheme, args.alpha, args.theta)
    try:
        params = C.SchemeParams(alpha=alpha, theta=theta, r3=args.r3, repetitions=args.repetitions,
                                verify=args.verify)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    noise = _load_noise(args.noise)
    for q, _ in noise.data_errors:
        if not 0 <= q < code.n:
            raise ConfigError(f"noise config {args.noise}: data error on qubit {q} outside 0..{code.n - 1}")
    logical = _parse_logical(args.logical, code.k)
    reports = run_shots(code, scheme, params, noise, args.shots, args.seed, logical, _threads())
    if args.format == "csv":
        rows = [{"shot": i, "syndrome": "".join(map(str, r["syndrome"])), "correction": r["correction"] or "",
                 "heralded_failure": int(r["heralded_failure"]), "fidelity": r["fidelity"]}
                for i, r in enumerate(reports)]
        for r in rows:
            validate(r, "shot_row")
        _emit(_csv_text(rows, list(rows[0])), args.out)
    else:
        doc = validate(summarize(code, scheme, params, noise, args.seed, reports), "syndrome_report")
        _emit(json.dumps(doc, indent=2), args.out)
    return EXIT_OK


# -- sweep ----------------------------------------------------------------------------------------


def sweep_rows(scheme, n, theta, lo, hi, points, r3=plans.DEFAULT_R3):
    rows = []
    for x in np.geomspace(lo, hi, points):
        alpha = float(x / theta**2)
        plan = (plans.solve_photon_plan(n, theta, alpha) if scheme == "photon"
                else plans.solve_homodyne_plan(n, theta, alpha, r3))
        rows.append({"scheme": scheme, "n": n, "theta": theta, "alpha": alpha, "alpha_theta2": float(x),
                     "error": float(plans.parity_error(plan))})
    return rows


def cmd_sweep(args):
    if args.points < 2 or not 0 < args.min < args.max:
        raise ConfigError("sweep needs points >= 2 and 0 < min < max")
    rows = [validate(r, "sweep_row") for r in
            sweep_rows(args.scheme, args.n, args.theta, args.min, args.max, args.points, args.r3)]
    if args.format == "json":
        _emit(json.dumps(rows, indent=2), args.out)
    else:
        _emit(_csv_text(rows, list(rows[0])), args.out)
    return EXIT_OK


# -- resources ------------------------------------------------------------------------------------


def cmd_resources(args):
    if not 2 <= args.n_min <= args.n_max:
        raise ConfigError("need 2 <= --n-min <= --n-max")
    schemes = ["photon", "homodyne", "ft", "verification"] if args.scheme == "all" else [args.scheme]
    results, breakdown = [], {}
    for scheme in schemes:
        for n in range(args.n_min, args.n_max + 1):
            reps = args.repetitions if scheme == "ft" else 1
            got = proto.scheme_tally(scheme, n, verify=args.verify, repetitions=reps, rounds=args.rounds)
            want = expected(scheme, n, verify=args.verify, repetitions=reps, rounds=args.rounds)
            results.append((scheme, n, got, want))
            breakdown.setdefault(scheme, {})[str(n)] = got.to_dict()
    rows = [validate(r, "resources_row") for r in comparison_rows(results)]
    if args.format == "json":
        _emit(json.dumps({"rows": rows, "tallies": breakdown}, indent=2), args.out)
    else:
        _emit(_csv_text(rows, ["scheme", "n", "resource", "tally", "expected", "status"]), args.out)
    bad = [r for r in rows if r["status"] != "match"]
    if bad:
        for r in bad:
            print(f"mismatch: {r['scheme']} n={r['n']} {r['resource']}: tally {r['tally']} != {r['expected']}",
                  file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="qubus-qec", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("plan", help="solve a displacement plan and tabulate landing points")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--theta", type=float, required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--scheme", choices=["photon", "homodyne"], default="photon")
    sp.add_argument("--r3", type=float, default=plans.DEFAULT_R3)
    sp.add_argument("--no-displacements", action="store_true", help="a single bare block")
    sp.add_argument("--out", help="output prefix; writes PREFIX.plan.json and PREFIX.landing.csv")
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.set_defaults(func=cmd_plan)

    sy = sub.add_parser("syndrome", help="run QEC cycles and report syndrome statistics")
    sy.add_argument("--code", required=True, help="bitflip3, shor9, steane7 or a code JSON file")
    sy.add_argument("--scheme", choices=["photon", "homodyne", "ft"], default="ft")
    sy.add_argument("--alpha", type=float)
    sy.add_argument("--theta", type=float)
    sy.add_argument("--r3", type=float, default=plans.DEFAULT_R3)
    sy.add_argument("--shots", type=int, default=100)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--noise", help="noise config JSON")
    sy.add_argument("--logical", default="1,0", help="logical amplitudes, e.g. '0.6,0.8j'")
    sy.add_argument("--repetitions", type=int, default=3)
    sy.add_argument("--verify", action="store_true", help="verify cat states (fault-tolerant scheme)")
    sy.add_argument("--out")
    sy.add_argument("--format", choices=["json", "csv"], default="json")
    sy.set_defaults(func=cmd_syndrome)

    sw = sub.add_parser("sweep", help="parity-discrimination error versus alpha*theta^2")
    sw.add_argument("--scheme", choices=["photon", "homodyne"], default="photon")
    sw.add_argument("--n", type=int, default=4)
    sw.add_argument("--theta", type=float, default=0.01)
    sw.add_argument("--r3", type=float, default=plans.DEFAULT_R3)
    sw.add_argument("--min", type=float, default=0.1)
    sw.add_argument("--max", type=float, default=10.0)
    sw.add_argument("--points", type=int, default=25)
    sw.add_argument("--out")
    sw.add_argument("--format", choices=["json", "csv"], default="csv")
    sw.set_defaults(func=cmd_sweep)

    rs = sub.add_parser("resources", help="compare constructed circuits with closed-form counts")
    rs.add_argument("--scheme", choices=["photon", "homodyne", "ft", "verification", "all"], default="all")
    rs.add_argument("--n-min", type=int, default=2)
    rs.add_argument("--n-max", type=int, default=9)
    rs.add_argument("--verify", action="store_true")
    rs.add_argument("--repetitions", type=int, default=1)
    rs.add_argument("--rounds", type=int, default=2)
    rs.add_argument("--out")
    rs.add_argument("--format", choices=["json", "csv"], default="csv")
    rs.set_defaults(func=cmd_resources)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except plans.SolverError as exc:
        print(f"solver failure: {exc} (residual {exc.residual:.3e})", file=sys.stderr)
        return EXIT_SOLVER
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
