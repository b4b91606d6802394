"""Batch command-line interface: verification, tubes, gates, landscape tables and simulation.

Exit codes: 0 success, 1 usage or configuration error, 2 resource cap exceeded,
3 verification failure (the report holds the counterexamples).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import cycles, geom, landscape, simulate
from .landscape import (
    DEFAULT_CAP, RESTRICTED, TO_OTHERS, TO_TARGET, LandscapeIndex, ResourceCapError, Transition,
)
from .lattice import DomainError, InputError, TorusLattice

EXIT_OK, EXIT_USAGE, EXIT_CAP, EXIT_FAIL = 0, 1, 2, 3
ALL_THEOREMS = landscape.GATE_THEOREMS + cycles.TUBE_THEOREMS + ("prinbound",)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def code_hash() -> str:
    """SHA-256 over the package sources, for report provenance."""
    h = hashlib.sha256()
    for p in sorted(Path(__file__).parent.glob("*.py")):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()


@dataclass
class RunConfig:
    command: str
    q: int
    K: int
    L: int
    options: dict = field(default_factory=dict)

    def validate(self) -> TorusLattice:
        if self.q < 2:
            raise InputError("q must be >= 2")
        return TorusLattice(self.K, self.L)


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"bad beta list {text!r}") from exc
    if not vals or any(not v >= 0 for v in vals):
        raise InputError("beta values must be nonnegative numbers")
    return vals


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _report(config: RunConfig, body: dict) -> str:
    doc = _finite({"config": asdict(config), "code_hash": code_hash(), **body})
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default, allow_nan=False) + "\n"


def _finite(x):
    """Replace NaN and infinities by null so reports stay strict JSON."""
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    if isinstance(x, (float, np.floating)) and not np.isfinite(x):
        return None
    return x


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


def _index(config: RunConfig, lat: TorusLattice, cap: int) -> LandscapeIndex:
    return LandscapeIndex(config.q, lat, cap)


def _texts(idx: LandscapeIndex, states) -> list[str]:
    return [idx.config(int(x)).to_text().replace("\n", "/") for x in states]


def _spin(value: int, q: int, what: str) -> int:
    if not 1 <= value <= q:
        raise InputError(f"{what} spin must be in 1..{q}")
    return value


# -- commands --------------------------------------------------------------------------


def cmd_verify(args, config: RunConfig, lat: TorusLattice) -> int:
    lat.require_standard()
    idx = _index(config, lat, args.cap)
    r, s = _spin(args.r, idx.q, "source"), _spin(args.s, idx.q, "target")
    names = args.theorem or list(ALL_THEOREMS)
    status = EXIT_OK
    for name in names:
        if name in landscape.GATE_THEOREMS:
            rep = landscape.verify_gate_theorems(idx, name, r, s, args.budget)
        elif name in cycles.TUBE_THEOREMS:
            rep = cycles.verify_tube_theorems(idx, name, r, s)
        else:
            rep = cycles.verify_principal_boundary_lemmas(idx, r, s)
        for w in rep.warnings:
            print(f"warning [{name}]: {w}", file=sys.stderr)
        _write(args.out, f"verify-{name}.json", _report(config, rep.as_dict()))
        print(f"{name}: {'PASS' if rep.passed else 'FAIL'}")
        if not rep.passed:
            status = EXIT_FAIL
    return status


def _tube_dot(idx: LandscapeIndex, tube: cycles.TubeResult) -> str:
    parts = tube.partition(idx)
    owner = {}
    for k, c in enumerate(parts):
        for x in c.members.tolist():
            owner[x] = k
    for x in tube.targets.tolist():
        owner[x] = "target"
    lines = ["digraph tube {", '  target [shape=doublecircle, label="target"];']
    for k, c in enumerate(parts):
        lines.append(f'  c{k} [label="{c.kind} H={int(c.level)} n={len(c)}"];')
    for k, c in enumerate(parts):
        principal = set(c.principal.tolist())
        arcs: dict[str, bool] = {}
        for x in c.boundary.tolist():
            d = owner.get(x)
            if d is None or d == k:
                continue
            name = "target" if d == "target" else f"c{d}"
            arcs[name] = arcs.get(name, False) or x in principal
        for name, is_principal in sorted(arcs.items()):
            style = ' [color=red, penwidth=2]' if is_principal else ' [style=dashed]'
            lines.append(f"  c{k} -> {name}{style};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_tube(args, config: RunConfig, lat: TorusLattice) -> int:
    idx = _index(config, lat, args.cap)
    r = _spin(args.source, idx.q, "source")
    if args.to is None:
        tube = cycles.typical_tube(idx, idx.stable(r), [idx.stable(t) for t in range(1, idx.q + 1) if t != r])
    else:
        s = _spin(args.to, idx.q, "target")
        if args.restricted:
            tube = cycles.restricted_tube(idx, r, s)
        else:
            tube = cycles.typical_tube(idx, idx.stable(r), [idx.stable(s)])
    parts = tube.partition(idx)
    body = {
        "tube": _texts(idx, tube.states),
        "targets": _texts(idx, tube.targets),
        "partition": [
            {"kind": c.kind, "level": int(c.level), "members": _texts(idx, c.members)} for c in parts
        ],
        "nonprincipal_boundary": _texts(idx, tube.nonprincipal_boundary(idx)),
    }
    _write(args.out, "tube.json", _report(config, body))
    if args.format == "dot":
        _write(args.out, "tube.dot", _tube_dot(idx, tube))
    elif args.format == "csv":
        rows = ["state,role"] + [f"{t},tube" for t in body["tube"]] + [f"{t},exit" for t in body["nonprincipal_boundary"]]
        _write(args.out, "tube.csv", "\n".join(rows) + "\n")
    print(f"tube: {len(tube.states)} states, {len(parts)} cycles, "
          f"{len(body['nonprincipal_boundary'])} exit states")
    return EXIT_OK


def cmd_gates(args, config: RunConfig, lat: TorusLattice) -> int:
    idx = _index(config, lat, args.cap)
    r = _spin(args.source, idx.q, "source")
    if args.targets == "all":
        tr = Transition(TO_OTHERS, r)
        pairs = [(r, t) for t in range(1, idx.q + 1) if t != r]
    else:
        s = _spin(int(args.targets), idx.q, "target")
        tr = Transition(RESTRICTED if args.restricted else TO_TARGET, r, s)
        pairs = [(r, s)]
    tg = landscape.TransitionGraph(idx, tr)
    reports = []
    for lab in geom.gate_family_labels(lat):
        W = landscape.family_union(idx, lab, pairs)
        if W.size == 0:
            print(f"warning: family {lab} is empty at this size", file=sys.stderr)
            continue
        reports.append(landscape.is_minimal_gate(idx, W, tg, lab).as_dict())
    ess = landscape.essential_saddles(idx, tg, args.budget)
    body = {
        "transition": tr.describe(),
        "phi": int(tg.phi),
        "families": reports,
        "essential_saddles": _texts(idx, ess.essential),
        "inconclusive": _texts(idx, ess.inconclusive),
        "stats": ess.stats,
    }
    _write(args.out, "gates.json", _report(config, body))
    if args.format == "csv":
        rows = ["family,size,is_gate,is_minimal"] + [
            f"{d['family']},{d['size']},{d['is_gate']},{d['is_minimal']}" for d in reports
        ]
        _write(args.out, "gates.csv", "\n".join(rows) + "\n")
    for d in reports:
        print(f"{d['family']}: size {d['size']}, gate {d['is_gate']}, minimal {d['is_minimal']}")
    print(f"essential saddles: {ess.essential.size} (inconclusive {ess.inconclusive.size})")
    return EXIT_OK


def cmd_landscape(args, config: RunConfig, lat: TorusLattice) -> int:
    idx = _index(config, lat, args.cap)
    q = idx.q
    table = []
    for r in range(1, q + 1):
        for s in range(r + 1, q + 1):
            row = {"r": r, "s": s, "phi": int(idx.comm_height(idx.stable(r), idx.stable(s)))}
            if args.saddles:
                row["saddles"] = int(landscape.saddle_set(idx, r, s).size)
            table.append(row)
    body = {
        "states": int(idx.n_states),
        "ground_energy": int(idx.ground_energy),
        "stable": _texts(idx, idx.stable_states),
        "pairs": table,
    }
    _write(args.out, "landscape.json", _report(config, body))
    if args.format == "csv":
        keys = list(table[0])
        rows = [",".join(keys)] + [",".join(str(t[k]) for k in keys) for t in table]
        _write(args.out, "landscape.csv", "\n".join(rows) + "\n")
    for t in table:
        if args.phi or not args.saddles:
            print(f"Phi({t['r']},{t['s']}) = {t['phi']}")
        if args.saddles:
            print(f"saddles({t['r']},{t['s']}) = {t['saddles']}")
    return EXIT_OK


def cmd_simulate(args, config: RunConfig, lat: TorusLattice) -> int:
    betas = _float_list(args.beta)
    if args.trials < 1:
        raise InputError("trials must be >= 1")
    idx = _index(config, lat, args.cap)
    r = _spin(args.source, idx.q, "source")
    common = {"seed": args.seed, "max_moves": args.max_moves}
    if args.what == "gates":
        s = _spin(args.to, idx.q, "target")
        tr = Transition(RESTRICTED, r, s)
        labels = args.families.split(",") if args.families else ["P_bar", "Q_bar", "P_tilde", "Q_tilde"]
        fams = {lab: geom.family_states(idx, lab, r, s) for lab in labels}
        empty = [k for k, v in fams.items() if v.size == 0]
        if empty:
            raise InputError(f"families empty at this size: {', '.join(empty)}")
        rep = simulate.estimate_gate_crossing(idx, tr, fams, betas, args.trials, **common)
    elif args.what == "tube-exit":
        s = _spin(args.to, idx.q, "target")
        exits = cycles.restricted_tube(idx, r, s).nonprincipal_boundary(idx)
        rep = simulate.estimate_tube_exit(idx, r, s, exits, betas, args.trials, **common)
    else:
        if len(betas) != 1:
            raise InputError("split takes a single beta")
        rep = simulate.estimate_stable_split(idx, r, betas[0], args.trials, **common)
    _write(args.out, f"simulate-{args.what}.csv", rep.to_csv())
    _write(args.out, f"simulate-{args.what}.json", _report(config, rep.as_dict()))
    sys.stdout.write(rep.to_csv())
    if rep.slope is not None:
        print(f"slope {rep.slope:.6g} +- {rep.slope_stderr:.6g}")
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pottsgate", description="Potts energy-landscape verification and simulation")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(sp):
        sp.add_argument("--q", type=int, required=True)
        sp.add_argument("--K", type=int, required=True)
        sp.add_argument("--L", type=int, required=True)
        sp.add_argument("--out", type=Path, default=Path("reports"))
        sp.add_argument("--cap", type=int, default=DEFAULT_CAP, help="maximal number of enumerated states")
        sp.add_argument("--format", choices=["json", "csv", "dot"], default="json")

    v = sub.add_parser("verify", help="check theorems on an enumerated instance")
    common(v)
    v.add_argument("--theorem", action="append", choices=ALL_THEOREMS)
    v.add_argument("--r", type=int, default=1)
    v.add_argument("--s", type=int, default=2)
    v.add_argument("--budget", type=int, default=100_000)
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("tube", help="compute a tube of typical paths")
    common(t)
    t.add_argument("--from", dest="source", type=int, default=1)
    t.add_argument("--to", type=int, default=None, help="target spin (default: all other stable states)")
    t.add_argument("--restricted", action="store_true")
    t.set_defaults(func=cmd_tube)

    g = sub.add_parser("gates", help="gate family reports and essential saddles")
    common(g)
    g.add_argument("--from", dest="source", type=int, default=1)
    g.add_argument("--targets", default="2", help="target spin or 'all'")
    g.add_argument("--restricted", action="store_true")
    g.add_argument("--budget", type=int, default=100_000)
    g.set_defaults(func=cmd_gates)

    la = sub.add_parser("landscape", help="communication heights and saddle counts")
    common(la)
    la.add_argument("--phi", action="store_true")
    la.add_argument("--saddles", action="store_true")
    la.set_defaults(func=cmd_landscape)

    s = sub.add_parser("simulate", help="Monte Carlo estimators")
    s.add_argument("what", choices=["gates", "tube-exit", "split"])
    common(s)
    s.add_argument("--beta", required=True, help="comma-separated inverse temperatures")
    s.add_argument("--trials", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--from", dest="source", type=int, default=1)
    s.add_argument("--to", type=int, default=2)
    s.add_argument("--families", default=None, help="comma-separated family labels")
    s.add_argument("--max-moves", type=int, default=simulate.DEFAULT_MAX_STEPS)
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        options = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
                   if k not in ("func", "command", "q", "K", "L")}
        config = RunConfig(args.command, args.q, args.K, args.L, options)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            lat = config.validate()
        return args.func(args, config, lat)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (InputError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
