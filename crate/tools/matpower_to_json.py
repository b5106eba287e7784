#!/usr/bin/env python3
"""Convert a MATPOWER-style case file (e.g. case30.m) to the JSON case format.

Buses, loads (Pd), the reference bus (type 3), branch reactances and ratings
(rateA, 0 = unlimited) come from the .m file. Generator limits and quadratic
costs come from mpc.gen / mpc.gencost unless the overlay replaces them. Wind
farms only exist in the overlay.

Overlay JSON (all keys optional):
    {"name": "...", "source": "...",
     "generators": [{"bus": 1, "pmin_mw": 0, "pmax_mw": 64, "c_quad": 0.02, "d_lin": 2}],
     "wind_farms": [{"bus": 7, "price": 2.65, "forecast_mw": 7.66}]}

Usage: matpower_to_json.py case30.m [--overlay overlay.json] [-o case.json]
"""

import argparse
import json
import re
import sys


def matrix(text, name):
    m = re.search(r"mpc\." + name + r"\s*=\s*\[(.*?)\];", text, re.S)
    if not m:
        return None
    rows = []
    for line in m.group(1).splitlines():
        line = line.split("%", 1)[0].strip().rstrip(";").strip()
        if line:
            rows.append([float(v) for v in line.split()])
    return rows


def scalar(text, name):
    m = re.search(r"mpc\." + name + r"\s*=\s*([-+0-9.eE]+)\s*;", text)
    return float(m.group(1)) if m else None


def convert(text, overlay):
    base = scalar(text, "baseMVA") or 100.0
    bus = matrix(text, "bus")
    branch = matrix(text, "branch")
    gen = matrix(text, "gen") or []
    gencost = matrix(text, "gencost") or []
    if not bus or not branch:
        sys.exit("error: mpc.bus and mpc.branch are required")

    refs = [int(r[0]) for r in bus if int(r[1]) == 3]
    if len(refs) != 1:
        sys.exit(f"error: expected exactly one reference bus (type 3), found {len(refs)}")

    generators = []
    for k, g in enumerate(gen):
        if len(g) > 7 and g[7] <= 0:
            continue  # out of service
        quad, lin = 0.0, 0.0
        if k < len(gencost):
            c = gencost[k]
            if int(c[0]) != 2:
                sys.exit(f"error: generator {k + 1}: only polynomial costs are supported")
            coefs = c[4 : 4 + int(c[3])]
            # highest order first; keep the quadratic and linear terms
            coefs = [0.0] * (3 - len(coefs)) + coefs[-3:]
            quad, lin = coefs[0], coefs[1]
        generators.append(
            {"bus": int(g[0]), "pmin_mw": g[9], "pmax_mw": g[8], "c_quad": quad, "d_lin": lin}
        )

    lines = []
    for b in branch:
        if len(b) > 10 and b[10] <= 0:
            continue
        lines.append(
            {"from": int(b[0]), "to": int(b[1]), "x_pu": b[3], "limit_mw": b[5] if b[5] > 0 else None}
        )

    case = {
        "schema_version": 1,
        "name": overlay.get("name", "converted"),
        "source": overlay.get("source", "converted from a MATPOWER case file"),
        "base_mva": base,
        "reference_bus": refs[0],
        "buses": [{"id": int(r[0]), "load_mw": r[2]} for r in bus],
        "lines": lines,
        "generators": overlay.get("generators", generators),
        "wind_farms": overlay.get("wind_farms", []),
    }
    return case


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("case", help="MATPOWER .m case file")
    ap.add_argument("--overlay", help="JSON with generator and wind farm data")
    ap.add_argument("-o", "--out", help="output path (default stdout)")
    args = ap.parse_args()

    with open(args.case) as f:
        text = f.read()
    overlay = {}
    if args.overlay:
        with open(args.overlay) as f:
            overlay = json.load(f)
    out = json.dumps(convert(text, overlay), indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(out)
    else:
        sys.stdout.write(out)


if __name__ == "__main__":
    main()
