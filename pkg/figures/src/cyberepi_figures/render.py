"""Figure rendering for simulator CSV outputs.

Four figure kinds mirror the experiment outputs:

* ``cycle``: the five compartment-count series of one epidemic cycle.
* ``damage-sweep``: total damage vs constant base damage, one panel per
  threshold, one curve per (family, mean degree).
* ``epsilon-sweep``: total damage vs growth rate on a log axis, panels
  threshold x family, with the constant-damage maximum as a horizontal
  dashed reference per curve.
* ``mutating-overlay``: mutating curves solid, logistic curves dashed,
  constant-damage maxima dotted, same panel grid.

Colors encode the mean degree and are shared across families; line
style distinguishes the family (er solid, ba dashed) where both share
a panel.  Rendering is read-only over its inputs and deterministic:
identical CSVs produce identical image bytes.

Invoked as ``cyberepi-render <kind> --in <csv...> --out <img>``.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("cycle", "damage-sweep", "epsilon-sweep", "mutating-overlay")

REQUIRED_COLUMNS = {
    "cycle": ["t", "mean_Su", "mean_Sa", "mean_Iu", "mean_Ia", "mean_Ha"],
    "damage-sweep": ["family", "mean_degree", "theta", "d", "mean_DN"],
    "epsilon-sweep": [
        "family", "mean_degree", "theta", "kind", "epsilon", "mean_DN",
        "const_max_DN",
    ],
    "mutating-overlay": [
        "family", "mean_degree", "theta", "kind", "epsilon", "mean_DN",
        "const_max_DN",
    ],
}

CYCLE_SERIES = [
    ("mean_Su", "Su", "tab:blue"),
    ("mean_Sa", "Sa", "tab:cyan"),
    ("mean_Iu", "Iu", "tab:red"),
    ("mean_Ia", "Ia", "tab:orange"),
    ("mean_Ha", "Ha", "tab:green"),
]

FAMILY_ORDER = ("er", "ba")
FAMILY_STYLE = {"er": "-", "ba": "--"}
DEGREE_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple")


class SchemaError(ValueError):
    """Input CSV does not carry what the figure kind needs."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str  # one of KINDS
    inputs: tuple  # CSV paths
    out: str  # image path

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise SchemaError("no input CSVs given")


@dataclass
class Table:
    """Parsed CSV: named string columns plus float access."""

    columns: list
    rows: list  # list of dicts

    def floats(self, name: str) -> np.ndarray:
        return np.array([float(r[name]) for r in self.rows])

    def subset(self, **match) -> "Table":
        keep = [
            r for r in self.rows
            if all(r[k] == v for k, v in match.items())
        ]
        return Table(self.columns, keep)

    def distinct(self, name: str) -> list:
        seen = []
        for r in self.rows:
            if r[name] not in seen:
                seen.append(r[name])
        return seen


def load_csv(path) -> Table:
    path = Path(path)
    header = None
    rows = []
    for line in path.read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if header is None:
            header = parts
        else:
            rows.append(dict(zip(header, parts)))
    if header is None:
        raise SchemaError(f"{path}: no header row")
    return Table(header, rows)


def _load_inputs(spec: FigureSpec) -> Table:
    required = REQUIRED_COLUMNS[spec.kind]
    merged = None
    for p in spec.inputs:
        table = load_csv(p)
        missing = [c for c in required if c not in table.columns]
        if missing:
            raise SchemaError(
                f"{p}: missing columns {missing} required for {spec.kind}"
            )
        if merged is None:
            merged = Table(table.columns, list(table.rows))
        else:
            merged.rows.extend(table.rows)
    if not merged.rows:
        raise SchemaError(f"{spec.kind}: input carries a header but no data rows")
    return merged


def _degree_color(degrees_sorted: list, degree: str) -> str:
    return DEGREE_COLORS[degrees_sorted.index(degree) % len(DEGREE_COLORS)]


def _families_present(table: Table) -> list:
    present = table.distinct("family")
    return [f for f in FAMILY_ORDER if f in present] + [
        f for f in present if f not in FAMILY_ORDER
    ]


def _sorted_degrees(table: Table) -> list:
    return sorted(table.distinct("mean_degree"), key=float)


def _render_cycle(table: Table):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    t = table.floats("t")
    for column, label, color in CYCLE_SERIES:
        ax.plot(t, table.floats(column), label=label, color=color)
    ax.set_xlabel("t")
    ax.set_ylabel("devices")
    ax.set_title("Epidemic cycle (ensemble mean)")
    ax.legend(loc="center right")
    return fig


def _render_damage_sweep(table: Table):
    thetas = sorted(table.distinct("theta"), key=float)
    families = _families_present(table)
    degrees = _sorted_degrees(table)
    fig, axes = plt.subplots(
        1, len(thetas), figsize=(4.2 * len(thetas), 3.6), squeeze=False, sharey=True
    )
    for j, theta in enumerate(thetas):
        ax = axes[0][j]
        for family in families:
            for k in degrees:
                part = table.subset(family=family, theta=theta, mean_degree=k)
                if not part.rows:
                    continue
                d = part.floats("d")
                order = np.argsort(d)
                ax.plot(
                    d[order],
                    part.floats("mean_DN")[order],
                    FAMILY_STYLE.get(family, "-"),
                    color=_degree_color(degrees, k),
                    label=f"{family} k={float(k):g}",
                )
        ax.set_title(f"theta = {float(theta):g}")
        ax.set_xlabel("d")
        if j == 0:
            ax.set_ylabel("D/N")
    axes[0][-1].legend(fontsize=8)
    fig.suptitle("Total damage vs constant base damage")
    fig.tight_layout()
    return fig


def _eps_panels(table: Table, curve_style):
    """Common panel grid for the growth-rate figures."""
    thetas = sorted(table.distinct("theta"), key=float)
    families = _families_present(table)
    degrees = _sorted_degrees(table)
    fig, axes = plt.subplots(
        len(thetas),
        len(families),
        figsize=(4.2 * len(families), 3.2 * len(thetas)),
        squeeze=False,
        sharey=True,
    )
    for i, theta in enumerate(thetas):
        for j, family in enumerate(families):
            ax = axes[i][j]
            panel = table.subset(family=family, theta=theta)
            for k in degrees:
                part = panel.subset(mean_degree=k)
                if not part.rows:
                    continue
                color = _degree_color(degrees, k)
                curve_style(ax, part, k, color)
            ax.set_xscale("log")
            ax.set_title(f"{family}, theta = {float(theta):g}", fontsize=9)
            if i == len(thetas) - 1:
                ax.set_xlabel("epsilon")
            if j == 0:
                ax.set_ylabel("D/N")
    axes[0][-1].legend(fontsize=8)
    fig.tight_layout()
    return fig


def _reference_line(ax, part: Table, color: str, linestyle: str):
    ref = part.floats("const_max_DN")
    finite = ref[np.isfinite(ref)]
    if finite.size:
        ax.axhline(finite[0], color=color, linestyle=linestyle, linewidth=1.0,
                   label="_const_max")


def _render_epsilon_sweep(table: Table):
    def style(ax, part, k, color):
        for kind, ls in (("logistic", "-"), ("mutating", "-.")):
            sub = part.subset(kind=kind)
            if not sub.rows:
                continue
            eps = sub.floats("epsilon")
            order = np.argsort(eps)
            ax.plot(eps[order], sub.floats("mean_DN")[order], ls, color=color,
                    label=f"{kind} k={float(k):g}")
        _reference_line(ax, part, color, "--")

    fig = _eps_panels(table, style)
    fig.suptitle("Total damage vs damage growth rate", y=1.0)
    return fig


def _render_mutating_overlay(table: Table):
    kinds = set(table.distinct("kind"))
    missing = {"logistic", "mutating"} - kinds
    if missing:
        raise SchemaError(
            f"mutating-overlay needs both damage kinds; missing {sorted(missing)}"
        )

    def style(ax, part, k, color):
        mut = part.subset(kind="mutating")
        eps = mut.floats("epsilon")
        order = np.argsort(eps)
        ax.plot(eps[order], mut.floats("mean_DN")[order], "-", color=color,
                label=f"mutating k={float(k):g}")
        log = part.subset(kind="logistic")
        eps = log.floats("epsilon")
        order = np.argsort(eps)
        ax.plot(eps[order], log.floats("mean_DN")[order], "--", color=color,
                label=f"logistic k={float(k):g}")
        _reference_line(ax, part, color, ":")

    fig = _eps_panels(table, style)
    fig.suptitle("Mutating virus vs internal clock", y=1.0)
    return fig


def render(spec: FigureSpec):
    """Render one figure; writes the image and returns the Figure."""
    table = _load_inputs(spec)
    if spec.kind == "cycle":
        fig = _render_cycle(table)
    elif spec.kind == "damage-sweep":
        fig = _render_damage_sweep(table)
    elif spec.kind == "epsilon-sweep":
        fig = _render_epsilon_sweep(table)
    else:
        fig = _render_mutating_overlay(table)
    fig.savefig(spec.out, dpi=150)
    plt.close(fig)
    return fig


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cyberepi-render",
        description="Render figures from cyberepi CSV outputs.",
    )
    parser.add_argument("kind", choices=KINDS, help="figure kind")
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="CSV", help="input CSV path(s)")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        render(FigureSpec(kind=args.kind, inputs=tuple(args.inputs), out=args.out))
    except (SchemaError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
