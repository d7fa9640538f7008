"""Command-line front end: ``homtree <command> [--config PATH] [--out DIR] [--seed INT] [--tol FLOAT]``.

Commands: selftest, kernel, dispersive, evolve, scatter, strichartz.
Exit codes: 0 success, 1 invariant failure, 2 config error, 3 resource,
truncation or I/O error.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import os
import re
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import BlowUpError, ConfigError, NonAdmissibleError, TreeSizeError, TruncationError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3
COMMANDS = ("selftest", "kernel", "dispersive", "evolve", "scatter", "strichartz")


# --------------------------------------------------------------------------
# configuration


def _floats(s):
    return [float(x) for x in s.replace(";", ",").split(",") if x.strip()]


def _exponents(s):
    return [math.inf if x.strip().lower() in ("inf", "infinity") else float(x) for x in s.split(",") if x.strip()]


def _pairs(s):
    out = []
    for item in s.split(","):
        if not item.strip():
            continue
        p, q = item.split(":")
        out.append(tuple(math.inf if v.strip().lower() == "inf" else float(v) for v in (p, q)))
    return out


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _form(s):
    s = s.strip()
    if s not in ("power", "non-gauge"):
        raise ValueError("expected 'power' or 'non-gauge'")
    return s


def _precision(s):
    s = s.strip()
    if s not in ("double", "extended"):
        raise ValueError("expected 'double' or 'extended'")
    return s


# section -> key -> (parser, default)
SCHEMA = {
    "tree": {"Q": (int, 2)},
    "kernel": {"t": (_floats, [0.0, 1.0, 5.0]), "n_max": (int, 40), "tol": (float, 1e-10)},
    "dispersive": {
        "q": (_exponents, [4.0, math.inf]),
        "t_start": (float, 10.0),
        "t_stop": (float, 1000.0),
        "t_points": (int, 25),
        "small_t": (_floats, [0.1, 0.5, 0.9]),
    },
    "nls": {"gamma": (float, 3.0), "lam": (float, 1.0), "form": (_form, "power"), "amplitude": (float, 0.1)},
    "evolve": {
        "dt": (float, 1e-3),
        "T": (float, 10.0),
        "stride": (int, 100),
        "precision": (_precision, "double"),
        "dump_states": (_bool, False),
    },
    "scatter": {"dt": (float, 1e-3), "T": (float, 100.0)},
    "strichartz": {
        "pairs": (_pairs, [(4.0, 4.0), (math.inf, 2.0)]),
        "T": (float, 160.0),
        "dt": (float, 0.1),
        "windows": (_floats, [10.0, 20.0, 40.0, 80.0]),
    },
}


@dataclass
class ExperimentConfig:
    command: str
    values: dict
    seed: int = 0
    tol: float | None = None
    source: str | None = None

    def __getitem__(self, key):
        return self.values[key]

    def canonical(self):
        def enc(v):
            if isinstance(v, float) and math.isinf(v):
                return "inf"
            if isinstance(v, (list, tuple)):
                return [enc(x) for x in v]
            if isinstance(v, dict):
                return {k: enc(x) for k, x in v.items()}
            return v

        return {"command": self.command, "seed": self.seed, "tol": self.tol, "values": enc(self.values)}

    @property
    def digest(self):
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _line_of(text, section, key=None):
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return i
            continue
        if key is not None and current == section:
            m = re.match(r"\s*([^=:#;\s][^=:]*?)\s*[=:]", line)
            if m and m.group(1).strip() == key:
                return i
    return None


def parse_config(text, command, seed=0, tol=None, source="<config>"):
    """Parse and validate an INI config before any computation.

    Raises :class:`ConfigError` naming the line and key of the first problem.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        where = f"{source}:{lineno}: " if lineno else f"{source}: "
        raise ConfigError(f"{where}{exc.message if hasattr(exc, 'message') else exc}") from None
    values = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"{source}:{_line_of(text, sec)}: unknown section [{sec}] (known: {', '.join(SCHEMA)})")
        for key, raw in cp.items(sec):
            line = _line_of(text, sec, key)
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{source}:{line}: unknown key '{key}' in [{sec}] (known: {', '.join(SCHEMA[sec])})")
            parser = SCHEMA[sec][key][0]
            try:
                values[sec][key] = parser(raw)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"{source}:{line}: key '{key}' in [{sec}]: cannot parse {raw!r} ({exc})") from None
    _validate(values, source)
    return ExperimentConfig(command, values, seed, tol, source)


def _validate(v, source):
    def bad(sec, key, why):
        raise ConfigError(f"{source}: key '{key}' in [{sec}]: {why}")

    if v["tree"]["Q"] < 2:
        bad("tree", "Q", "branching number must be >= 2")
    if v["kernel"]["n_max"] < 0:
        bad("kernel", "n_max", "must be >= 0")
    if not v["kernel"]["t"]:
        bad("kernel", "t", "empty time list")
    if v["kernel"]["tol"] <= 0:
        bad("kernel", "tol", "must be positive")
    d = v["dispersive"]
    if not d["q"] or any(q <= 2 for q in d["q"]):
        bad("dispersive", "q", "exponents must exceed 2")
    if d["t_points"] < 1 or d["t_start"] <= 0 or d["t_stop"] < d["t_start"]:
        bad("dispersive", "t_points", "empty or invalid time grid")
    if v["nls"]["gamma"] <= 1:
        bad("nls", "gamma", "power must exceed 1")
    for sec in ("evolve", "scatter", "strichartz"):
        if v[sec]["dt"] <= 0 or v[sec]["T"] <= 0:
            bad(sec, "dt", "dt and T must be positive")
    if v["evolve"]["stride"] < 1:
        bad("evolve", "stride", "must be >= 1")
    if not v["strichartz"]["pairs"]:
        bad("strichartz", "pairs", "no pairs given")


# --------------------------------------------------------------------------
# output


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _header(cfg):
    return f"# homtree {__version__} command={cfg.command} config={cfg.digest} seed={cfg.seed}"


def write_csv(path, cfg, columns, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_header(cfg) + "\n")
        fh.write(",".join(columns) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(x) for x in r) + "\n")
    return path


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "inf" if math.isinf(x) and x > 0 else ("-inf" if math.isinf(x) else x)
    return x


def write_json(path, cfg, payload):
    doc = {"meta": {"tool": "homtree", "version": __version__, "command": cfg.command, "config": cfg.digest,
                    "seed": cfg.seed, "schema": 1}}
    doc.update(_jsonable(payload))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# --------------------------------------------------------------------------
# commands


def cmd_kernel(cfg, out):
    from .calibration import constant
    from .kernel import kernel_pointwise_report, schrodinger_kernel

    Q = cfg["tree"]["Q"]
    kc = cfg["kernel"]
    tol = cfg.tol if cfg.tol is not None else kc["tol"]
    rows = []
    cstar = constant("pointwise_C_star")
    worst = 0.0
    for t in kc["t"]:
        s = schrodinger_kernel(Q, t, tol=tol, n_max=max(kc["n_max"], 0))
        rep = kernel_pointwise_report(s, kc["n_max"])
        for n in range(kc["n_max"] + 1):
            v = s.values.values[n]
            rows.append((t, n, v.real, v.imag, abs(v), rep.ratios[n]))
        worst = max(worst, rep.max_ratio)
    write_csv(os.path.join(out, "kernel.csv"), cfg, ["t", "n", "re", "im", "abs", "bound_ratio"], rows)
    if Q == 2 and worst > cstar * (1 + 1e-9):
        print(f"warning: bound ratio {worst:.6g} exceeds the calibrated constant {cstar:.6g}", file=sys.stderr)
    return EXIT_OK


def cmd_dispersive(cfg, out):
    from .calibration import constant
    from .errors import FitError
    from .propagator import dispersive_decay_scan

    Q = cfg["tree"]["Q"]
    d = cfg["dispersive"]
    tol = cfg.tol if cfg.tol is not None else cfg["kernel"]["tol"]
    t = np.geomspace(d["t_start"], d["t_stop"], d["t_points"])
    rows, fits, small = [], {}, {}
    for q in d["q"]:
        try:
            scan = dispersive_decay_scan(q, t, Q=Q, tol=tol)
        except FitError as exc:
            raise ConfigError(f"[dispersive] time grid cannot be fitted: {exc}") from None
        rows += [(ti, q, v) for ti, v in zip(t, scan.norms)]
        fits[_fmt(q)] = {"slope": scan.fit.slope, "ci": list(scan.fit.ci), "stderr": scan.fit.stderr,
                         "in_expected_range": bool(-1.6 <= scan.fit.slope <= -1.4)}
        st = dispersive_decay_scan(q, d["small_t"], Q=Q, tol=tol, fit=False)
        rows += [(ti, q, v) for ti, v in zip(st.t, st.norms)]
        small[_fmt(q)] = float(st.norms.max())
    write_csv(os.path.join(out, "dispersive.csv"), cfg, ["t", "q", "norm"], rows)
    bound = constant("small_time_norm")
    write_json(os.path.join(out, "dispersive.json"), cfg,
               {"Q": Q, "fits": fits, "small_time_max": small, "small_time_bound": bound,
                "t_window": [d["t_start"], d["t_stop"]]})
    return EXIT_OK if all(v <= bound * (1 + 1e-9) for v in small.values()) else EXIT_FAIL


def _spec(cfg):
    from .nls import NonlinearitySpec

    n = cfg["nls"]
    return NonlinearitySpec(n["gamma"], n["lam"], n["form"])


def cmd_evolve(cfg, out):
    from .nls import EvolutionConfig, nls_evolve
    from .tree import RadialFunction

    Q = cfg["tree"]["Q"]
    e = cfg["evolve"]
    f = RadialFunction.delta(Q, 0, 0, cfg["nls"]["amplitude"])
    traj = nls_evolve(f, _spec(cfg), EvolutionConfig(dt=e["dt"], T=e["T"], stride=e["stride"],
                                                     precision=e["precision"]))
    l4 = traj.lq_series(4)
    write_csv(os.path.join(out, "evolve.csv"), cfg, ["t", "mass", "energy", "l4norm"],
              zip(traj.times, traj.mass, traj.energy, l4))
    if e["dump_states"]:
        rows = [(t, n, v.real, v.imag) for t, st in zip(traj.times, traj.values) for n, v in enumerate(st)]
        write_csv(os.path.join(out, "evolve_states.csv"), cfg, ["t", "n", "re", "im"], rows)
    return EXIT_OK


def cmd_scatter(cfg, out):
    from .analysis import scattering_probe
    from .nls import EvolutionConfig, nls_evolve
    from .tree import RadialFunction

    Q = cfg["tree"]["Q"]
    s = cfg["scatter"]
    f = RadialFunction.delta(Q, 0, 0, cfg["nls"]["amplitude"])
    stride = max(1, int(round(0.1 / s["dt"])))
    traj = nls_evolve(f, _spec(cfg), EvolutionConfig(dt=s["dt"], T=s["T"], stride=stride))
    rep = scattering_probe(traj)
    dump = os.path.join(out, "u_plus.csv")
    write_csv(dump, cfg, ["n", "re", "im"], [(n, v.real, v.imag) for n, v in enumerate(rep.u_plus.values)])
    inc = rep.doubling_increments()
    write_json(os.path.join(out, "scatter.json"), cfg,
               {"ladder": rep.times, "doubling_increments": {_fmt(k): v for k, v in inc.items()},
                "distances": rep.distances, "residuals": rep.residuals, "u_plus": os.path.basename(dump)})
    return EXIT_OK


def cmd_strichartz(cfg, out):
    from .analysis import AdmissiblePair, strichartz_norm
    from .nls import EvolutionConfig, NonlinearitySpec, nls_evolve
    from .tree import RadialFunction

    Q = cfg["tree"]["Q"]
    s = cfg["strichartz"]
    try:
        pairs = [AdmissiblePair.from_exponents(p, q) for p, q in s["pairs"]]
    except NonAdmissibleError as exc:
        raise ConfigError(f"[strichartz] pairs: {exc}") from None
    f = RadialFunction.delta(Q, 0, 0, 1.0)
    # Strichartz estimates concern the linear flow
    linear = NonlinearitySpec(cfg["nls"]["gamma"], 0.0)
    traj = nls_evolve(f, linear, EvolutionConfig(dt=s["dt"], T=s["T"], stride=1))
    wins = [(a, 2 * a) for a in s["windows"] if 2 * a <= s["T"] + 1e-9]
    rows = []
    for pair in pairs:
        rep = strichartz_norm(traj, pair, windows=wins)
        label = f"{_fmt(pair.p)}:{_fmt(pair.q)}"
        rows.append((label, f"0:{_fmt(s['T'])}", rep.norm, rep.norm))
        for (a, b), inc in zip(wins, rep.increments):
            tail = strichartz_norm(traj, pair, windows=[(a, s["T"])]).increments[0]
            rows.append((label, f"{_fmt(a)}:{_fmt(b)}", inc, tail))
    write_csv(os.path.join(out, "strichartz.csv"), cfg, ["pair", "window", "norm", "tail"], rows)
    return EXIT_OK


def cmd_selftest(cfg, out, fault=None):
    from .selftest import run_selftest

    results = run_selftest(seed=cfg.seed, fault=fault)
    ok = all(r["passed"] for r in results)
    write_json(os.path.join(out, "selftest.json"), cfg, {"passed": ok, "invariants": results})
    for r in results:
        if not r["passed"]:
            print(f"FAILED {r['name']}: error {r['error']:.3e} > tolerance {r['tolerance']:.1e}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


HANDLERS = {
    "kernel": cmd_kernel,
    "dispersive": cmd_dispersive,
    "evolve": cmd_evolve,
    "scatter": cmd_scatter,
    "strichartz": cmd_strichartz,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="homtree", description="Spherical analysis and Schroedinger flows on homogeneous trees.")
    ap.add_argument("--version", action="version", version=f"homtree {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", help="INI experiment configuration")
        p.add_argument("--out", metavar="DIR", default=".", help="output directory (default: .)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=None, help="kernel truncation tolerance")
        if name == "selftest":
            p.add_argument("--inject-fault", dest="fault", default=None, help=argparse.SUPPRESS)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.tol is not None and not args.tol > 0:
            raise ConfigError("--tol must be positive")
        text = ""
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
        cfg = parse_config(text, args.command, args.seed, args.tol, args.config or "<defaults>")
        os.makedirs(args.out, exist_ok=True)
        if args.command == "selftest":
            return cmd_selftest(cfg, args.out, getattr(args, "fault", None))
        return HANDLERS[args.command](cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TruncationError, TreeSizeError, BlowUpError, MemoryError) as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
