"""Aggregate markdown/JSON summary of saved runs, with figures and plot data."""

from __future__ import annotations

from pathlib import Path

from eulerspec import io as rio
from eulerspec.plotting import PLOTTERS


def _verdicts(kind: str, r: dict) -> dict:
    if kind == "spectrum":
        return {"bound_ok": r["bound_ok"], "symmetry_ok": r["symmetry_ok"], "converged": r["converged"]}
    if kind == "evolution":
        return {"rates_ok": r["ok"]}
    return {"tail_ok": r["tail_ok"], "far_field_ok": r["far_field_ok"]}


def _rows(kind: str, r: dict):
    if kind == "spectrum":
        for s in r["slices"]:
            for re, im in s["eigenvalues"]:
                yield (s["qhat"][0], s["qhat"][1], re, im, s["converged"])
    elif kind == "evolution":
        for tr in r["trials"]:
            for t, n in zip(tr.get("times", []), tr.get("norms", [])):
                yield (tr["trial"], t, n)
    else:
        for t, s in r["samples"]:
            yield (t, s)


def _section(kind: str, r: dict) -> list:
    p, g = r["instance"]["p"], r["instance"]["gamma"]
    lines = [f"## {kind}", "", f"p = ({p[0]}, {p[1]}), Gamma = {g[0]:g}{g[1]:+g}i", ""]
    if kind == "spectrum":
        lines += [f"kappa = {r['kappa']}, nonimaginary count = {r['count']} (bound {2 * r['kappa']})", ""]
        if r["nonimaginary"]:
            lines += ["| lambda | multiplicity | qhat |", "|---|---|---|"]
            for e in r["nonimaginary"]:
                re, im = e["value"]
                lines.append(f"| {re:.10f} {im:+.10f}i | {e['multiplicity']} | ({e['qhat'][0]}, {e['qhat'][1]}) |")
            lines.append("")
    elif kind == "evolution":
        lines += [f"K = {r['K']}, dt = {r['dt']:.6g}, t_final = {r['t_final']:g}, seed = {r['seed']}",
                  f"spectral abscissa = {r['spectral_abscissa']:.10f}", "",
                  "| trial | fitted rate |", "|---|---|"]
        lines += [f"| {t['trial']} | {t['rate']:.10f} |" for t in r["trials"]]
        lines.append("")
    else:
        lines += [f"K = {r['K']}, a = {r['a']:g}, ||L|| = {r['op_norm']:.6f}", "",
                  "| tau | norm |", "|---|---|"]
        lines += [f"| {t:g} | {s:.6g} |" for t, s in r["samples"]]
        lines.append("")
    for name, v in _verdicts(kind, r).items():
        lines.append(f"- {name}: {'PASS' if v else 'FAIL'}")
    lines += ["", f"![{kind}](figures/{kind}.png)", f"Plot data: `{kind}.csv`", ""]
    return lines


def build_report(results: dict, out_dir: Path) -> bool:
    """Write report.md, report.json, <kind>.csv and figures/<kind>.png; True if every verdict passes."""
    out_dir = Path(out_dir)
    md = ["# Linearized Euler spectrum report", ""]
    summary = {"schema": rio.SCHEMA_VERSION, "kind": "report", "sections": {}}
    ok = True
    for kind in rio.RESULT_KINDS:
        if kind not in results:
            continue
        r = results[kind]
        v = _verdicts(kind, r)
        ok = ok and all(v.values())
        rio.write_text(out_dir / f"{kind}.csv", rio.csv_text(rio.CSV_HEADERS[kind], _rows(kind, r)))
        PLOTTERS[kind](r, out_dir / "figures" / f"{kind}.png")
        md += _section(kind, r)
        summary["sections"][kind] = {"instance": r["instance"], "verdicts": v,
                                     "figure": f"figures/{kind}.png", "data": f"{kind}.csv"}
    summary["ok"] = ok
    md.append(f"Overall: {'PASS' if ok else 'FAIL'}")
    rio.write_text(out_dir / "report.md", "\n".join(md) + "\n")
    rio.write_text(out_dir / "report.json", rio.dumps(summary, pretty=True))
    return ok
