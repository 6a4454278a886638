"""Parameter grids, per-point row functions and CSV emission."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .analytic import (
    CLASSICAL_LIMIT,
    DEFAULT_QUAD,
    R_EPP,
    QuadratureSpec,
    avg_fidelity_ecs,
    closed_form_F_ecs,
    closed_form_P_ecs,
    epp_metrics,
    success_prob_ecs,
    threshold_r,
)
from .entanglement import ecs_negativity_closed, ecs_negativity_numeric, epp_negativity_closed

DEFAULT_ALPHAS = "0.5,0.8,1.0,1.6,2.0"
DEFAULT_RS = "0:1:101"
DEFAULT_ETAS = "0.01:1:100"
METHODS = ("quadrature", "closed")
# beyond the plotted range the ECS threshold is expected to settle near 0.7
LARGE_ALPHA = 2.0


def parse_values(text: str) -> list[float]:
    """'start:stop:count' (inclusive linspace) or a comma list; result sorted and deduplicated."""
    text = str(text).strip()
    if not text:
        raise ValueError("empty value list")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:count, got {text!r}")
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
        if count < 1:
            raise ValueError(f"range count must be positive, got {count}")
        vals = np.linspace(start, stop, count).tolist() if count > 1 else [start]
    else:
        vals = [float(x) for x in text.split(",") if x.strip()]
    # round away linspace noise so that e.g. 0.3 prints as 0.3
    vals = sorted({float(f"{v:.15g}") for v in vals})
    if any(math.isnan(v) for v in vals):
        raise ValueError("NaN in value list")
    return vals


def parse_quad(text: str) -> QuadratureSpec:
    try:
        n_polar, n_azimuth = (int(x) for x in str(text).split(","))
    except ValueError as exc:
        raise ValueError(f"--quad expects N_polar,N_azimuth, got {text!r}") from exc
    return QuadratureSpec(n_polar, n_azimuth)


@dataclass(frozen=True)
class SweepGrid:
    alphas: tuple[float, ...]
    rs: tuple[float, ...]
    etas: tuple[float, ...] = (1.0,)
    quad: QuadratureSpec = DEFAULT_QUAD

    def __post_init__(self):
        for name in ("alphas", "rs", "etas"):
            vals = tuple(sorted(getattr(self, name)))
            if not vals:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, vals)
        if self.alphas[0] <= 0:
            raise ValueError("alpha values must be positive")
        if self.rs[0] < 0 or self.rs[-1] > 1:
            raise ValueError("r values must lie in [0, 1]")
        if self.etas[0] <= 0 or self.etas[-1] > 1:
            raise ValueError("eta values must lie in (0, 1]")

    @classmethod
    def parse(cls, alphas: str = DEFAULT_ALPHAS, rs: str = DEFAULT_RS, etas: str = "1",
              quad: QuadratureSpec = DEFAULT_QUAD) -> "SweepGrid":
        return cls(tuple(parse_values(alphas)), tuple(parse_values(rs)), tuple(parse_values(etas)), quad)

    def points(self, with_eta: bool = True) -> list[tuple[float, ...]]:
        if not with_eta:
            return [(a, r) for a in self.alphas for r in self.rs]
        return [(a, r, e) for a in self.alphas for r in self.rs for e in self.etas]


def fmt(x) -> str:
    """Fixed 12-significant-digit decimal rendering."""
    if x is None:
        return "none"
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return str(x)
    if x == 0.0:
        return "0"
    return np.format_float_positional(x, precision=12, unique=False, fractional=False, trim="-")


def _axis(vals: Sequence[float]) -> str:
    if len(vals) <= 6:
        return ",".join(fmt(v) for v in vals)
    return f"{fmt(vals[0])}:{fmt(vals[-1])}:{len(vals)}"


def metadata_line(command: str, grid: SweepGrid | None = None, **extra) -> str:
    parts = [f"ecsepp {__version__}", f"command={command}"]
    if grid is not None:
        parts += [f"alphas={_axis(grid.alphas)}", f"rs={_axis(grid.rs)}", f"etas={_axis(grid.etas)}",
                  f"quad={grid.quad.n_polar},{grid.quad.n_azimuth}"]
    parts += [f"{k}={v}" for k, v in extra.items()]
    return "# " + " ".join(parts)


# --- per-point rows (module level so worker processes can pickle them) ---------

def entanglement_row(point: tuple[float, float]) -> list[float]:
    alpha, r = point
    return [alpha, r, ecs_negativity_closed(alpha, r), ecs_negativity_numeric(alpha, r), epp_negativity_closed(r)]


def fidelity_row(point: tuple[float, float, float], method: str = "quadrature",
                 quad: QuadratureSpec = DEFAULT_QUAD) -> list[float]:
    alpha, r, eta = point
    if method == "closed":
        f_ecs = closed_form_F_ecs(alpha, r, eta)
    else:
        f_ecs = avg_fidelity_ecs(alpha, r, eta, quad)
    return [alpha, r, eta, f_ecs, epp_metrics(r, eta)[0], CLASSICAL_LIMIT]


def success_row(point: tuple[float, float, float], method: str = "quadrature",
                quad: QuadratureSpec = DEFAULT_QUAD) -> list[float]:
    alpha, r, eta = point
    if method == "closed":
        p_ecs = closed_form_P_ecs(alpha, r, eta)
    else:
        p_ecs = success_prob_ecs(alpha, r, eta, quad)
    return [alpha, r, eta, p_ecs, epp_metrics(r, eta)[1]]


def threshold_row(alpha: float, eta: float = 1.0) -> list:
    note = "large-alpha regime, r_ecs expected near 0.7" if alpha > LARGE_ALPHA else ""
    try:
        r_ecs = threshold_r("ecs_classical", eta, alpha)
        r_c = threshold_r("crossover", eta, alpha)
    except Exception as exc:  # report and keep going
        return [alpha, eta, "error", "error", R_EPP, f"root finder failed: {exc}"]
    if r_c is None:
        note = "; ".join(x for x in ("ecs above epp everywhere, r_c ~ 0", note) if x)
    return [alpha, eta, r_ecs, r_c, R_EPP, note]


HEADERS = {
    "entanglement": ["alpha", "r", "E_ecs_closed", "E_ecs_numeric", "E_epp"],
    "fidelity": ["alpha", "r", "eta", "F_ecs", "F_epp", "classical_limit"],
    "success": ["alpha", "r", "eta", "P_ecs", "P_epp"],
    "thresholds": ["alpha", "eta", "r_ecs", "r_c", "r_epp", "note"],
}


def evaluate(fn: Callable, points: Sequence, workers: int = 1) -> list:
    """Map ``fn`` over ``points`` keeping grid order regardless of worker count."""
    if workers <= 1 or len(points) < 2:
        return [fn(p) for p in points]
    chunk = max(1, len(points) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, points, chunksize=chunk))


def render_csv(meta: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(meta + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def sweep(command: str, grid: SweepGrid, method: str = "quadrature", workers: int = 1) -> str:
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if command == "entanglement":
        rows = evaluate(entanglement_row, grid.points(with_eta=False), workers)
        meta = metadata_line(command, grid)
    elif command in ("fidelity", "success"):
        fn = fidelity_row if command == "fidelity" else success_row
        rows = evaluate(partial(fn, method=method, quad=grid.quad), grid.points(), workers)
        meta = metadata_line(command, grid, method=method)
    else:
        raise ValueError(f"unknown sweep {command!r}")
    return render_csv(meta, HEADERS[command], rows)


def thresholds_report(alphas: Sequence[float], eta: float = 1.0, workers: int = 1) -> str:
    rows = evaluate(partial(threshold_row, eta=eta), sorted(alphas), workers)
    meta = metadata_line("thresholds", alphas=_axis(sorted(alphas)), eta=fmt(eta))
    return render_csv(meta, HEADERS["thresholds"], rows)
