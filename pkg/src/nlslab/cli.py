"""Command-line front end: ``nlslab <command> [options]``.

Every command reads an optional JSON config (``--config``), lets command-line
options override individual keys, validates the result against a schema
(unknown keys rejected, exit code 2 on violation) and writes its outputs plus
``manifest.json`` into the output directory (``--out``, overridden by the
``NLSLAB_OUT`` environment variable).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import acceptance
from . import classification as cl
from . import elliptic as el
from . import ode
from . import pde
from . import standard_form as sf
from .errors import ConfigError, NlsLabError
from .io import Manifest, svg_line_plot, to_jsonable, write_csv, write_json
from .system_repr import MODEL_SYSTEM, parse_system, to_matrix_vector

__all__ = ["main", "SCHEMAS", "build_parser"]

# ---------------------------------------------------------------- schemas

_NUM = {"type": "number"}
_COMPLEX = {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}]}
_SYSTEM = {
    "oneOf": [
        {"type": "string", "enum": ["model"]},
        {"type": "object", "additionalProperties": False, "required": ["lambda"],
         "properties": {"lambda": {"type": "array", "items": _NUM, "minItems": 12, "maxItems": 12}}},
        {"type": "object", "additionalProperties": False, "required": ["A", "V"],
         "properties": {"A": {"type": "array", "minItems": 3, "maxItems": 3,
                              "items": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}},
                        "V": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}}},
        {"type": "object", "additionalProperties": False, "required": ["standard"],
         "properties": {"standard": {"type": "object", "additionalProperties": False,
                                     "properties": {k: _NUM for k in
                                                    ("sigma", "eta1", "eta2", "eta3", "lambda0", "q1", "q2", "q3")}}}},
    ]
}
_STATE = {"type": "array", "items": _COMPLEX, "minItems": 2, "maxItems": 2}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "additionalProperties": False, "properties": props, "required": list(required)}


SCHEMAS = {
    "classify": _obj({"system": _SYSTEM, "h": {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4},
                      "samples": {"type": "integer", "minimum": 1}, "seed": {"type": "integer"}}, ["system"]),
    "reduce": _obj({"system": _SYSTEM}, ["system"]),
    "ode": _obj({"system": _SYSTEM, "state": _STATE, "tau_end": {"type": "number", "exclusiveMinimum": 0},
                 "tol": {"type": "number", "minimum": 1e-14, "maximum": 1e-6},
                 "n_out": {"type": "integer", "minimum": 2}, "plot": {"type": "boolean"}},
                ["system", "state", "tau_end"]),
    "model-exact": _obj({"state": _STATE, "tau_end": {"type": "number", "exclusiveMinimum": 0},
                         "n_out": {"type": "integer", "minimum": 2}, "cross_check": {"type": "boolean"},
                         "tol": {"type": "number", "minimum": 1e-14, "maximum": 1e-6}},
                        ["state", "tau_end"]),
    "pde": _obj({
        "system": _SYSTEM,
        "grid": _obj({"L": {"type": "number", "exclusiveMinimum": 0}, "N": {"type": "integer", "minimum": 2}}),
        "data": _obj({"eps": {"type": "number", "exclusiveMinimum": 0}, "c1": _COMPLEX, "c2": _COMPLEX}),
        "schedule": _obj({"dt": {"type": "number", "exclusiveMinimum": 0},
                          "snapshots": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}},
                         ["dt", "snapshots"]),
        "seeds": {"type": "array", "items": {"type": "integer"}},
        "delta": {"type": "number", "exclusiveMinimum": 0},
        "dump_fields": {"type": "boolean"},
        "plot": {"type": "boolean"},
    }, ["system", "schedule"]),
    "verify": _obj({"criteria": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 9}},
                    "seed": {"type": "integer"},
                    "pde": _obj({"T": {"type": "number", "exclusiveMinimum": 0},
                                 "dt": {"type": "number", "exclusiveMinimum": 0},
                                 "L": {"type": "number", "exclusiveMinimum": 0},
                                 "N": {"type": "integer", "minimum": 2}})}),
    "elliptic": _obj({"m": {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 1}]},
                      "u": {"oneOf": [{"type": "array", "items": _NUM, "minItems": 1},
                                      _obj({"start": _NUM, "stop": _NUM, "num": {"type": "integer", "minimum": 1}},
                                           ["start", "stop", "num"])]}}, ["m", "u"]),
}


# ---------------------------------------------------------------- helpers


def _system(spec):
    if spec == "model":
        return MODEL_SYSTEM
    if isinstance(spec, dict) and "standard" in spec:
        return sf.build_standard(sf.StandardFormParams(**{k: (int(v) if k == "sigma" else v)
                                                          for k, v in spec["standard"].items()}))[0]
    return parse_system(spec)


def _complex(v) -> complex:
    return complex(v[0], v[1]) if isinstance(v, list) else complex(v)


def _load_config(args) -> dict:
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from e
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    for key, val in (getattr(args, "overrides", None) or {}).items():
        if val is not None:
            cfg[key] = val
    return cfg


def _json_arg(text: str):
    p = Path(text)
    if p.suffix == ".json" and p.exists():
        return json.loads(p.read_text())
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _out_dir(args) -> Path:
    return Path(os.environ.get("NLSLAB_OUT") or args.out)


# ---------------------------------------------------------------- commands


def cmd_classify(cfg, args, man: Manifest, out: Path) -> int:
    sys_ = _system(cfg["system"])
    rep = to_matrix_vector(sys_)
    h = cl.HermitianCandidate(*cfg["h"]) if "h" in cfg else None
    rpt = cl.classify(sys_, h=h, samples=cfg.get("samples", 1000), seed=cfg.get("seed", args.seed))
    d0 = rpt.d0_verdict.to_json() if rpt.d0_verdict is not None else None
    doc = {
        "rep": rep.to_json(),
        "eigenvalues": [[z.real, z.imag] for z in rpt.eig_A],
        "rank_A": int(np.linalg.matrix_rank(rep.A, tol=1e-10 * max(1.0, np.abs(rep.A).max()))),
        "assumption": {"holds": rpt.assumption_holds, "verdict": rpt.assumption_verdict, "k": rpt.k,
                       "Gamma": None if rpt.Gamma is None else rpt.Gamma.tolist()},
        "S1": rpt.S1_holds,
        "H0": rpt.H0_holds,
        "d0_probe": d0,
        "family": None if rpt.family is None else rpt.family.to_json(),
    }
    man.add(write_json(out / "classify.json", doc))
    print(json.dumps(to_jsonable(doc), sort_keys=True))
    return 0


def cmd_reduce(cfg, args, man, out) -> int:
    cert = sf.reduce(to_matrix_vector(_system(cfg["system"])))
    man.add(write_json(out / "reduce.json", cert.to_json()))
    print(json.dumps(to_jsonable(cert.params.to_json()), sort_keys=True))
    return 0


def cmd_ode(cfg, args, man, out) -> int:
    sys_ = _system(cfg["system"])
    s0 = tuple(_complex(v) for v in cfg["state"])
    tr = ode.integrate(sys_, s0, cfg["tau_end"], tol=cfg.get("tol", 1e-10), n_out=cfg.get("n_out", 201))
    man.add(write_csv(out / "trajectory.csv", ode.TABLE_HEADER, tr.table()))
    Q = tr.quartic
    summary = {"steps": tr.steps, "quad_residual": ode.quad_residual(sys_, tr),
               "quartic_rel_drift": None if Q is None else float(np.max(np.abs(Q - Q[0])) / max(Q[0], 1e-300)),
               "invariant": None if tr.invariant is None else tr.invariant.to_json()}
    man.add(write_json(out / "ode_summary.json", summary))
    if cfg.get("plot", True):
        man.add(svg_line_plot(out / "ode_moduli.svg", {"|A1|": (tr.tau, np.abs(tr.A1)), "|A2|": (tr.tau, np.abs(tr.A2))},
                              title="limit ODE", xlabel="tau", ylabel="modulus"))
    return 0


def cmd_model_exact(cfg, args, man, out) -> int:
    s0 = tuple(_complex(v) for v in cfg["state"])
    p = ode.model_params(*s0)
    tau = np.linspace(0.0, cfg["tau_end"], cfg.get("n_out", 201))
    ex = ode.model_explicit(p, tau)
    rho1, rho2, I = ode.quad_explicit(p, tau)
    rows = np.column_stack([tau, ex.A1.real, ex.A1.imag, ex.A2.real, ex.A2.imag, rho1, rho2, I])
    man.add(write_csv(out / "model_exact.csv", ["tau", "re_A1", "im_A1", "re_A2", "im_A2", "rho1", "rho2", "I"], rows))
    doc = {"params": p.to_json()}
    if 0.0 < p.m < 0.5:
        doc["periodicity"] = ode.periodicity_ratio(p)
    if cfg.get("cross_check", False):
        tr = ode.integrate(MODEL_SYSTEM, s0, cfg["tau_end"], tol=cfg.get("tol", 1e-12), t_eval=tau)
        doc["cross_check_max_deviation"] = float(max(np.abs(tr.A1 - ex.A1).max(), np.abs(tr.A2 - ex.A2).max()))
    man.add(write_json(out / "model_exact.json", doc))
    print(json.dumps(to_jsonable(doc), sort_keys=True))
    return 0


def cmd_pde(cfg, args, man, out) -> int:
    import scipy.fft as sfft

    sys_ = _system(cfg["system"])
    g = cfg.get("grid", {})
    grid = pde.Grid(g.get("L", 400.0 * np.pi), g.get("N", 2**14))
    d = cfg.get("data", {})
    datum = pde.GaussianDatum(d.get("eps", 0.05), _complex(d.get("c1", 0.8)), _complex(d.get("c2", 0.6)))
    sch = pde.Schedule(cfg["schedule"]["dt"], tuple(cfg["schedule"]["snapshots"]))
    with sfft.set_workers(args.jobs):
        res = pde.run(sys_, datum, sch, grid, delta=cfg.get("delta", 0.1))
    man.add(write_csv(out / "diagnostics.csv", pde.DiagnosticRow.FIELDS, res.table()))
    T = res.table()
    t = T[:, 0]
    summary = {"final_t": float(t[-1]), "rows": len(t)}
    late = t >= 10.0
    if late.sum() >= 2:
        summary["r_linf_exponent"] = [pde.fit_exponent(t[late], T[late, 9]), pde.fit_exponent(t[late], T[late, 10])]
        summary["r_l2_exponent"] = [pde.fit_exponent(t[late], T[late, 11]), pde.fit_exponent(t[late], T[late, 12])]
    if sys_ == MODEL_SYSTEM:
        mc = pde.model_conserved_checks(res.states)
        summary["model_conserved"] = {k: mc[k] for k in ("inner_drift", "energy_drift")}
    man.add(write_json(out / "pde_summary.json", summary))
    if cfg.get("dump_fields", False):
        for s in res.states:
            rows = np.column_stack([grid.x, s.u1.real, s.u1.imag, s.u2.real, s.u2.imag])
            man.add(write_csv(out / f"field_t{s.t:g}.csv", ["x", "re_u1", "im_u1", "re_u2", "im_u2"], rows))
    if cfg.get("plot", True):
        pos = t > 0
        man.add(svg_line_plot(out / "remainders.svg",
                              {"|r1|_inf": (t[pos], T[pos, 9]), "|r2|_inf": (t[pos], T[pos, 10])},
                              title="remainder sup norms", xlabel="t", ylabel="sup |r|", logx=True, logy=True))
        man.add(svg_line_plot(out / "decay.svg", {"t^1/2 sum |u|_inf": (t[pos], np.sqrt(t[pos]) * (T[pos, 3] + T[pos, 4]))},
                              title="dispersive decay", xlabel="t", ylabel="t^1/2 ||u||_inf", logx=True))
    print(json.dumps(to_jsonable(summary), sort_keys=True))
    return 0


def cmd_verify(cfg, args, man, out) -> int:
    nums = cfg.get("criteria", list(range(1, 10)))
    pc = acceptance.PdeConfig()
    over = cfg.get("pde", {})
    if over:
        import dataclasses
        pc = dataclasses.replace(pc, **over)
    results = acceptance.run_all(nums, seed=cfg.get("seed", args.seed), pde_config=pc)
    doc = []
    for r in results:
        print(acceptance.format_line(r), flush=True)
        j = r.to_json()
        # wall times go to the manifest so the report stays reproducible
        man.extra.setdefault("runtimes_s", {})[str(r.number)] = j.pop("runtime_s")
        j["checks"].pop("runtime", None)
        doc.append(j)
    man.add(write_json(out / "acceptance.json", doc))
    return 0 if (all(r.passed for r in results) or not args.strict) else 1


def cmd_elliptic(cfg, args, man, out) -> int:
    ms = np.atleast_1d(np.asarray(cfg["m"], dtype=float))
    u = cfg["u"]
    u = np.linspace(u["start"], u["stop"], u["num"]) if isinstance(u, dict) else np.asarray(u, dtype=float)
    rows = []
    for m in ms:
        e = el.jacobi(u, m)
        K = el.complete_K(m)
        rows += [(m, a, s, c, d, K) for a, s, c, d in zip(u, e.sn, e.cn, e.dn)]
    header = ["m", "u", "sn", "cn", "dn", "K"]
    p = write_csv(out / "elliptic.csv", header, rows)
    man.add(p)
    sys.stdout.write(p.read_text())
    return 0


COMMANDS = {"classify": cmd_classify, "reduce": cmd_reduce, "ode": cmd_ode, "model-exact": cmd_model_exact,
            "pde": cmd_pde, "verify": cmd_verify, "elliptic": cmd_elliptic}


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON config file")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory (NLSLAB_OUT overrides)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="FFT worker threads")

    ap = argparse.ArgumentParser(prog="nlslab", parents=[common],
                                 description="Two-component cubic NLS systems: classify, reduce, simulate.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    p = add("classify", "assumption, (S1), (H0), (D0) probe and family of a system")
    p.add_argument("--system", type=_json_arg, help='"model", a JSON object or a .json path')
    p = add("reduce", "reduction certificate to standard form")
    p.add_argument("--system", type=_json_arg)
    p = add("ode", "integrate the limit ODE system")
    p.add_argument("--system", type=_json_arg)
    p.add_argument("--state", type=_json_arg, help="e.g. '[[1,0],[0,1]]'")
    p.add_argument("--tau-end", type=float, dest="tau_end")
    p.add_argument("--tol", type=float)
    p = add("model-exact", "explicit Jacobi-elliptic solution of the model system")
    p.add_argument("--state", type=_json_arg)
    p.add_argument("--tau-end", type=float, dest="tau_end")
    p.add_argument("--cross-check", action="store_const", const=True, dest="cross_check")
    p = add("pde", "split-step simulation with asymptotic diagnostics")
    p.add_argument("--system", type=_json_arg)
    p = add("verify", "run the acceptance suite")
    p.add_argument("--criteria", type=lambda s: [int(x) for x in s.split(",")], help="e.g. 1,2,3")
    p.add_argument("--strict", action="store_true", help="exit 1 if any criterion fails")
    p = add("elliptic", "tabulate sn, cn, dn and K")
    p.add_argument("--m", type=_json_arg)
    p.add_argument("--u", type=_json_arg)
    return ap


_OVERRIDE_KEYS = ("system", "state", "tau_end", "tol", "cross_check", "criteria", "m", "u")


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    for k, v in (("config", None), ("out", "nlslab_out"), ("seed", 0), ("jobs", 1), ("strict", False)):
        if not hasattr(args, k):
            setattr(args, k, v)
    args.overrides = {k: getattr(args, k) for k in _OVERRIDE_KEYS if hasattr(args, k)}
    try:
        cfg = _load_config(args)
        jsonschema.validate(cfg, SCHEMAS[args.command])
    except (ConfigError, jsonschema.ValidationError) as e:
        msg = e.message if isinstance(e, jsonschema.ValidationError) else str(e)
        path = list(e.absolute_path) if isinstance(e, jsonschema.ValidationError) else []
        sys.stderr.write(json.dumps({"error": "ConfigError", "message": msg, "path": path}) + "\n")
        return 2
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    man = Manifest(out, args.command, {"config": cfg, "seed": args.seed, "jobs": args.jobs})
    try:
        code = COMMANDS[args.command](cfg, args, man, out)
    except NlsLabError as e:
        err = {"error": type(e).__name__, "code": getattr(e, "code", None), "message": str(e)}
        if getattr(e, "time", None) is not None:
            err["time"] = e.time
        man.add(write_json(out / "error.json", err))
        man.write(status="error")
        sys.stderr.write(json.dumps(to_jsonable(err)) + "\n")
        return 1
    except ValueError as e:
        err = {"error": "ValueError", "message": str(e)}
        man.add(write_json(out / "error.json", err))
        man.write(status="error")
        sys.stderr.write(json.dumps(err) + "\n")
        return 1
    man.write()
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
