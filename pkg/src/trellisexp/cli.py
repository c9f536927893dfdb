"""Command-line surface: channel files in, CSV/JSON reports out.

Channel spec files are JSON documents:

    {
      "input_alphabet_size": 2,
      "output_alphabet_size": 2,
      "w": [[0.9, 0.1], [0.1, 0.9]],
      "q": [0.5, 0.5],
      "units": "nats",
      "w_tilde": [[...], ...],          # optional mismatched metric
      "memory": {"w": [[[...]]], "w_tilde": null}   # optional W(y|x,x_prev)
    }

Unknown keys are rejected.  All curve output is CSV with the fixed header
`rate,kind,value,rho,s` and 12 significant digits.
"""

import argparse
import json
import math
import statistics
import sys
from dataclasses import dataclass

import numpy as np

from . import exponents, memory as memory_mod, sim, types_opt
from .channels import Dmc, InputDist, validate_channel
from .exponents import CURVE_KINDS, RateOutOfRange
from .memory import MarkovChannel

LN2 = math.log(2.0)

CHANNEL_KEYS = {"input_alphabet_size", "output_alphabet_size", "w", "q",
                "units", "w_tilde", "memory"}
MEMORY_KEYS = {"w", "w_tilde"}


class ChannelSpecError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelSpec:
    dmc: Dmc
    q: InputDist
    units: str = "nats"
    w_tilde: Dmc = None
    memory: MarkovChannel = None


def parse_channel_spec(text: str) -> ChannelSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ChannelSpecError(f"line {e.lineno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise ChannelSpecError("channel spec must be a JSON object")
    unknown = set(doc) - CHANNEL_KEYS
    if unknown:
        raise ChannelSpecError(f"unknown keys: {sorted(unknown)}")
    for key in ("input_alphabet_size", "output_alphabet_size", "w", "q"):
        if key not in doc:
            raise ChannelSpecError(f"missing key {key!r}")
    dmc, q = validate_channel(doc["w"], doc["q"])
    if dmc.num_inputs != doc["input_alphabet_size"]:
        raise ChannelSpecError("input_alphabet_size does not match w")
    if dmc.num_outputs != doc["output_alphabet_size"]:
        raise ChannelSpecError("output_alphabet_size does not match w")
    units = doc.get("units", "nats")
    if units not in ("nats", "bits"):
        raise ChannelSpecError(f"units must be nats or bits, got {units!r}")
    w_tilde = None
    if doc.get("w_tilde") is not None:
        w_tilde = Dmc(np.asarray(doc["w_tilde"], dtype=float))
        if w_tilde.w.shape != dmc.w.shape:
            raise ChannelSpecError("w_tilde shape differs from w")
    mem = None
    if doc.get("memory") is not None:
        block = doc["memory"]
        unknown = set(block) - MEMORY_KEYS
        if unknown:
            raise ChannelSpecError(f"unknown memory keys: {sorted(unknown)}")
        if "w" not in block:
            raise ChannelSpecError("memory block needs a w entry")
        wt = None if block.get("w_tilde") is None else np.asarray(block["w_tilde"], float)
        mem = MarkovChannel(np.asarray(block["w"], dtype=float), w_tilde=wt)
    return ChannelSpec(dmc, q, units, w_tilde, mem)


def format_channel_spec(spec: ChannelSpec) -> str:
    doc = {
        "input_alphabet_size": spec.dmc.num_inputs,
        "output_alphabet_size": spec.dmc.num_outputs,
        "w": spec.dmc.w.tolist(),
        "q": spec.q.q.tolist(),
        "units": spec.units,
    }
    if spec.w_tilde is not None:
        doc["w_tilde"] = spec.w_tilde.w.tolist()
    if spec.memory is not None:
        doc["memory"] = {"w": spec.memory.w.tolist()}
        if not spec.memory.matched:
            doc["memory"]["w_tilde"] = spec.memory.w_tilde.tolist()
    return json.dumps(doc, indent=2)


def load_channel_spec(path: str) -> ChannelSpec:
    with open(path) as f:
        return parse_channel_spec(f.read())


def _fmt(x):
    if x is None:
        return ""
    return f"{x:.12g}"


def cmd_curve(args, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    spec = load_channel_spec(args.channel)
    kinds = [k for k in args.kinds.split(",") if k]
    if not kinds:
        err.write("error: empty kinds list\n")
        return 2
    for kind in kinds:
        if kind not in CURVE_KINDS:
            err.write(f"error: unknown curve kind {kind!r}\n")
            return 2
    scale = LN2 if args.units == "bits" else 1.0
    rmin, rmax = args.rmin * scale, args.rmax * scale  # internal rates in nats
    rates = np.linspace(rmin, rmax, args.points)
    out.write("rate,kind,value,rho,s\n")
    failed = 0
    for kind in kinds:
        for rate in rates:
            try:
                curve = exponents.exponent_curve(kind, spec.dmc, spec.q, [rate])
            except RateOutOfRange as e:
                err.write(f"error: kind={kind} rate={_fmt(rate / scale)}: {e}\n")
                failed += 1
                continue
            r, value, rho = curve.points[0]
            out.write(f"{_fmt(r / scale)},{kind},{_fmt(value / scale)},"
                      f"{_fmt(rho)},\n")
    return 1 if failed else 0


def cmd_simulate(args, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    spec = load_channel_spec(args.channel)
    blocks = args.blocks
    cfg = sim.EnsembleConfig(m=args.m, n=args.n, k=args.k, L=args.L,
                             linear=args.linear, seed=args.seed)
    if args.trials is not None:
        blocks = max(1, math.ceil(args.trials / cfg.L))
    out.write("code,seed,m,n,k,p_e,exponent,no_errors,typical\n")
    p_es, exps = [], []
    for i in range(args.codes):
        code = sim.sample_code(cfg, j=spec.dmc.num_inputs, q=spec.q, code_index=i)
        rng = sim._rng(cfg.seed, i, 1)
        est = sim.estimate_error_exponent(code, spec.dmc, blocks, rng,
                                          metric=spec.w_tilde)
        typical = ""
        if args.lmax > 0:
            rep = sim.typicality_check(code, spec.q, args.epsilon, args.lmax)
            typical = "1" if rep.is_typical else "0"
        p_es.append(est.p_e)
        exps.append(est.exponent)
        out.write(f"{i},{cfg.seed},{cfg.m},{cfg.n},{cfg.k},{_fmt(est.p_e)},"
                  f"{_fmt(est.exponent)},{int(est.no_errors)},{typical}\n")
    out.write(f"summary_mean,{cfg.seed},{cfg.m},{cfg.n},{cfg.k},"
              f"{_fmt(statistics.mean(p_es))},{_fmt(statistics.mean(exps))},,\n")
    out.write(f"summary_median,{cfg.seed},{cfg.m},{cfg.n},{cfg.k},"
              f"{_fmt(statistics.median(p_es))},{_fmt(statistics.median(exps))},,\n")
    return 0


def cmd_audit(args, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    spec = load_channel_spec(args.channel)
    cfg = sim.EnsembleConfig(m=args.m, n=args.n, k=args.k, L=args.L,
                             seed=args.seed)
    frac, reports, bound = sim.typicality_audit(
        cfg, spec.dmc.num_inputs, spec.q, args.codes, args.epsilon, args.lmax)
    out.write("code,is_typical,violations\n")
    for i, rep in enumerate(reports):
        out.write(f"{i},{int(rep.is_typical)},{len(rep.violations)}\n")
    out.write(f"summary,{_fmt(1.0 - frac)},{_fmt(frac)}\n")
    out.write(f"bound,,{_fmt(bound)}\n")
    return 0


def cmd_dominant(args, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    spec = load_channel_spec(args.channel)
    scale = LN2 if spec.units == "bits" else 1.0
    rate = args.rate * scale
    try:
        rho = exponents.solve_rho("trtc", spec.dmc, spec.q, rate).rho
    except RateOutOfRange as e:
        err.write(f"error: {e}\n")
        return 1
    ev = types_opt.dominant_joint_type(spec.dmc, spec.q, rho)
    report = {
        "rate": rate / scale,
        "rho_trtc": rho,
        "p_star": ev.p_star.p.tolist(),
        "divergence": ev.divergence / scale,
        "delta_half": ev.delta_half / scale,
        "critical_length_factor": ev.critical_length_factor,
    }
    out.write(json.dumps(report, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trellisexp",
                                description="Trellis-code error exponents")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("curve", help="emit exponent curves as CSV")
    c.add_argument("--channel", required=True)
    c.add_argument("--kinds", required=True,
                   help="comma list from " + ",".join(CURVE_KINDS))
    c.add_argument("--rmin", type=float, required=True)
    c.add_argument("--rmax", type=float, required=True)
    c.add_argument("--points", type=int, default=50)
    c.add_argument("--units", choices=("nats", "bits"), default="nats")
    c.set_defaults(func=cmd_curve)

    s = sub.add_parser("simulate", help="Monte-Carlo ensemble simulation")
    s.add_argument("--channel", required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--L", type=int, default=None)
    s.add_argument("--blocks", type=int, default=100)
    s.add_argument("--codes", type=int, default=1)
    s.add_argument("--trials", type=int, default=None,
                   help="total node-trial target; overrides --blocks")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--linear", action="store_true")
    s.add_argument("--epsilon", type=float, default=0.3)
    s.add_argument("--lmax", type=int, default=0,
                   help="typicality check depth; 0 skips the flag")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("audit", help="typicality audit of sampled codes")
    a.add_argument("--channel", required=True)
    a.add_argument("--m", type=int, required=True)
    a.add_argument("--n", type=int, required=True)
    a.add_argument("--k", type=int, required=True)
    a.add_argument("--L", type=int, default=None)
    a.add_argument("--codes", type=int, required=True)
    a.add_argument("--epsilon", type=float, required=True)
    a.add_argument("--lmax", type=int, required=True)
    a.add_argument("--seed", type=int, required=True)
    a.set_defaults(func=cmd_audit)

    d = sub.add_parser("dominant", help="dominant error-event report")
    d.add_argument("--channel", required=True)
    d.add_argument("--rate", type=float, required=True)
    d.set_defaults(func=cmd_dominant)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ChannelSpecError as e:
        sys.stderr.write(f"channel spec error: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
