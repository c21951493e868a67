"""Bundled demonstrations, each printing a short pass/fail summary.

Four demos execute a bundled scenario file; the rest drive the library
directly.  Every demo returns 0 when all of its assertions hold and 1
otherwise, finishes in well under a minute, and optionally exports its
numbers as CSV into a caller-supplied directory.
"""

from __future__ import annotations

import math
import os
from importlib import resources

import numpy as np

from . import calculus, core, fields as field_ops, spaces
from .conversion import hilbert_system, hilbert_to_metric, metric_to_hilbert
from .scenario import _atomic_write, run_scenario, significant

DEMO_NAMES = (
    "airtraffic_ellipsoid_sphere",
    "airtraffic_hyperboloid",
    "s2_hyperbolic",
    "strips_discontinuous",
    "dc_vs_d_divergence",
    "observer_dependence",
    "slit_plane_nonhomeo",
    "hilbert_roundtrip",
    "mcshane_cutoff",
)

_SCENARIO_DEMOS = DEMO_NAMES[:4]


def _verdict(ok: bool, label: str, detail: str = "") -> bool:
    tail = f"  ({detail})" if detail else ""
    print(f"{'PASS' if ok else 'FAIL'}: {label}{tail}")
    return ok


def _export(out_dir, name, header, rows) -> None:
    if out_dir is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            cell if isinstance(cell, str) else significant(cell)
            for cell in row))
    _atomic_write(os.path.join(out_dir, f"{name}.csv"),
                  "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# scenario-backed demos


def _check_detail(check: dict) -> str:
    kind = check["kind"]
    if kind == "solution_formula":
        return (f"max deviation {check['max_deviation']:.3g}, "
                f"tol {check['tol']:.3g}")
    if kind == "invariance":
        parts = [f"{law['quantity']} (max distance "
                 f"{law['max_distance']:.3g})" for law in check["laws"]]
        return "; ".join(parts) if parts else "no laws detected"
    if kind == "nagumo":
        parts = [f"{law['quantity']} (limsup {law['max_limsup']:.3g})"
                 for law in check["laws"]]
        return "; ".join(parts) if parts else "no laws detected"
    if kind == "feasibility":
        return (f"{check['states']} states, "
                f"{check['violations']} violations")
    if kind == "jump":
        return (f"point jump {check['max_point_jump']:.6g} at step "
                f"{check['jump_index']}, coord step "
                f"{check['max_coord_step']:.3g}")
    if kind == "lipschitz":
        bound = "none" if check["max"] is None else f"{check['max']:.3g}"
        return f"estimate {check['estimate']:.3g}, bound {bound}"
    if kind == "convergence":
        return (f"d_C gap {check['dc_first']:.4g} -> {check['dc_final']:.4g}"
                f", d gap {check['d_first']:.4g} -> {check['d_final']:.4g}")
    return ""


def _scenario_demo(name: str, out_dir) -> int:
    ref = resources.files("metrikos").joinpath("data", "scenarios",
                                               f"{name}.toml")
    with resources.as_file(ref) as path:
        outcome = run_scenario(str(path), out_dir=out_dir)
    report = outcome.report
    ok = True
    for run in report["runs"]:
        detail = f"status={run['status']}, rows={run['rows']}"
        if run["meta"].get("jumps"):
            detail += f", jumps at {run['meta']['jumps']}"
        ok = _verdict(run["ok"], f"run {run['name']}", detail) and ok
    for check in report["checks"]:
        ok = _verdict(check["passed"], f"{check['kind']} {check['name']}",
                      _check_detail(check)) and ok
    return 0 if ok and report["ok"] else 1


# ---------------------------------------------------------------------------
# library-driven demos


def demo_dc_vs_d_divergence(out_dir=None) -> int:
    """Coordinate gaps can vanish while the ambient distance blows up."""
    space = spaces.euclidean(2)
    system = core.CoordinateSystem(
        space,
        (spaces.point(space, [0.0, 0.0]), spaces.point(space, [1.0, 0.0])),
        spaces.point(space, [0.5, 0.5]), labels=("a", "b"))
    rows = []
    gaps = []
    for n in (1, 3, 5, 10, 15):
        x = spaces.point(space, [n, 2.0 ** n])
        y = spaces.point(space, [-n, 2.0 ** n])
        d = spaces.distance(space, x, y)
        dc = core.d_C(system, x, y)
        rows.append((n, d, dc))
        gaps.append(dc)
        print(f"  n={n:>2}: d = {d:g}, d_C = {dc:.6e}")
    _export(out_dir, "dc_vs_d_divergence", ("n", "d", "d_C"), rows)
    expected = 60.0 / (math.sqrt(14.0 ** 2 + 4.0 ** 15)
                       + math.sqrt(16.0 ** 2 + 4.0 ** 15))
    ok = _verdict(abs(gaps[-1] - expected) <= 0.02 * expected,
                  "n=15 coordinate gap",
                  f"d_C = {gaps[-1]:.6e}, closed form {expected:.6e}")
    ok = _verdict(all(g2 < g1 for g1, g2 in zip(gaps, gaps[1:])),
                  "d_C decreases while d grows") and ok
    return 0 if ok else 1


def demo_observer_dependence(out_dir=None) -> int:
    """Differentiability of t -> (t, |t|) depends on where the observer sits."""
    space = spaces.euclidean(2)
    base = spaces.point(space, [0.0, 0.0])
    curve = calculus.Curve(lambda t: spaces.point(space, [t, abs(t)]),
                           (-1.0, 1.0))

    def one_point_system(c):
        return core.CoordinateSystem(space, (spaces.point(space, c),), base,
                                     labels=("c",))

    smooth = calculus.central_derivative(curve, one_point_system([-2.0, 0.0]),
                                         0.0)
    corner = calculus.central_derivative(curve, one_point_system([1.0, 1.0]),
                                         0.0)
    print(f"  observer (-2, 0): flags={smooth.flags}, "
          f"velocity={smooth.tangent.velocity[0]:.6f}")
    print(f"  observer (1, 1):  flags={corner.flags}, "
          f"left={corner.left[0]:.6f}, right={corner.right[0]:.6f}")
    _export(out_dir, "observer_dependence",
            ("observer", "flag", "left", "right"),
            [("(-2,0)", smooth.flags[0], smooth.left[0], smooth.right[0]),
             ("(1,1)", corner.flags[0], corner.left[0], corner.right[0])])
    ok = _verdict(smooth.all_differentiable
                  and abs(smooth.tangent.velocity[0] - 1.0) <= 1e-3,
                  "differentiable with velocity 1 seen from (-2, 0)")
    ok = _verdict(corner.flags[0] == "non_differentiable",
                  "non-differentiable seen from (1, 1)") and ok
    ok = _verdict(abs(corner.left[0]) <= 1e-3
                  and abs(corner.right[0] + math.sqrt(2.0)) <= 1e-3,
                  "one-sided quotients 0 and -sqrt(2)",
                  f"left {corner.left[0]:.6f}, right {corner.right[0]:.6f}"
                  ) and ok
    return 0 if ok else 1


def demo_slit_plane_nonhomeo(out_dir=None) -> int:
    """d_C convergence without d convergence on the slit-plane subset."""
    space = spaces.euclidean(2, spaces.Subset("slit_plane"))
    system = core.CoordinateSystem(
        space,
        (spaces.point(space, [0.0, 0.0]), spaces.point(space, [1.0, 0.0])),
        spaces.point(space, [2.0, 2.0]), labels=("a", "b"))
    seq = [spaces.point(space, [1.0 / n, 1.0 + 1.0 / n])
           for n in range(1, 51)]
    candidate = spaces.point(space, [0.0, -1.0])
    report = core.compare_convergence(system, seq, candidate)
    print(f"  d_C gaps: {report.dC_gaps[0]:.4f} -> {report.dC_gaps[-1]:.6f}")
    print(f"  d gaps:   {report.d_gaps[0]:.4f} -> {report.d_gaps[-1]:.6f}")
    _export(out_dir, "slit_plane_nonhomeo", ("n", "dC_gap", "d_gap"),
            [(n + 1, report.dC_gaps[n], report.d_gaps[n])
             for n in range(len(seq))])
    ok = _verdict(report.dC_gaps[-1] < 0.05
                  and report.dC_gaps[-1] < report.dC_gaps[0] / 10.0,
                  "coordinate gaps vanish",
                  f"final d_C gap {report.dC_gaps[-1]:.6f}")
    ok = _verdict(abs(report.d_gaps[-1] - 2.0) < 0.05,
                  "ambient gaps approach 2",
                  f"final d gap {report.d_gaps[-1]:.6f}") and ok
    return 0 if ok else 1


def demo_hilbert_roundtrip(out_dir=None) -> int:
    """Cartesian -> metric -> Cartesian is the identity to high accuracy."""
    corner = hilbert_system(2)
    pt = spaces.point(corner.space, [3.0, 4.0])
    got = core.coords_of(corner, pt).values
    expected = np.array([math.sqrt(20.0), math.sqrt(18.0), 5.0])
    print("  corner coords of (3, 4): "
          + ", ".join(f"{v:.12f}" for v in got))
    ok = _verdict(float(np.max(np.abs(got - expected))) <= 1e-12,
                  "corner-system coords equal (sqrt(20), sqrt(18), 5)")
    rows = []
    for n in (2, 3, 10):
        rng = np.random.default_rng(n)
        pts = rng.uniform(-5.0, 5.0, size=(1000, n))
        worst = 0.0
        for w in pts:
            back = metric_to_hilbert(hilbert_to_metric(w))
            worst = max(worst, float(np.max(np.abs(back - w))))
        rows.append((n, worst))
        print(f"  n={n:>2}: worst roundtrip error {worst:.3e} "
              f"over {len(pts)} points")
        ok = _verdict(worst < 1e-9, f"roundtrip in dimension {n}",
                      f"max error {worst:.3e}") and ok
    _export(out_dir, "hilbert_roundtrip", ("n", "max_error"), rows)
    return 0 if ok else 1


def demo_mcshane_cutoff(out_dir=None) -> int:
    """Extend sampled data without raising its Lipschitz constant, then taper."""
    space = spaces.euclidean(2, spaces.Subset("half_space"))
    system = core.CoordinateSystem(
        space,
        (spaces.point(space, [0.0, 0.0]), spaces.point(space, [1.0, 0.0])),
        spaces.point(space, [0.5, 1.0]), labels=("a", "b"))
    K = 1.0
    sample_pts = core.sample_box_points(system, 150, 3, [-2.0, 0.0],
                                        [3.0, 3.0])
    embedded = [core.embed(system, p) for p in sample_pts]

    def f(w):
        v = core.as_vector(w)
        return 0.7 * v[0] - 0.3 * v[1]

    mcshane = field_ops.mcshane_extend([(w, f(w)) for w in embedded], K)
    on_data = max(abs(mcshane(w) - f(w)) for w in embedded)
    probes = core.sample_box_points(system, 200, 4, [-3.0, 0.0], [4.0, 4.0])
    vecs = np.array([core.embed(system, p).values for p in probes])
    ratio = 0.0
    for i in range(len(vecs)):
        gaps = np.max(np.abs(vecs[i + 1:] - vecs[i]), axis=1)
        vals = np.array([mcshane(v) for v in vecs[i + 1:]])
        here = mcshane(vecs[i])
        with np.errstate(invalid="ignore", divide="ignore"):
            ratios = np.abs(vals - here) / gaps
        if len(ratios):
            ratio = max(ratio, float(np.nanmax(ratios)))
    print(f"  extension error on data: {on_data:.3e}")
    print(f"  sampled Lipschitz ratio: {ratio:.12f} (K = {K})")
    ok = _verdict(on_data <= 1e-12, "extension exact on the sample")
    ok = _verdict(ratio <= K + 1e-9, "extension stays K-Lipschitz",
                  f"ratio {ratio:.9f}") and ok

    field_data = [(w, np.array([0.5 * w.values[0], -0.5 * w.values[1]]))
                  for w in embedded]
    G = field_ops.mcshane_extend_vector(field_data, 0.5)
    center = core.embed(system, spaces.point(space, [0.5, 2.0]))
    r = 0.3
    tapered = field_ops.cutoff(G, center, r)
    rng = np.random.default_rng(7)
    local = center.values + rng.uniform(-1.5 * r, 1.5 * r,
                                        size=(400, len(center)))
    M = max(float(np.max(np.abs(G(v)))) for v in local
            if float(np.max(np.abs(v - center.values))) <= r)
    bound = 4.0 * 0.5 + (2.0 / r) * M
    constant = 0.0
    for i in range(len(local)):
        gaps = np.max(np.abs(local[i + 1:] - local[i]), axis=1)
        vals = np.array([np.max(np.abs(tapered(v) - tapered(local[i])))
                         for v in local[i + 1:]])
        with np.errstate(invalid="ignore", divide="ignore"):
            ratios = vals / gaps
        if len(ratios):
            constant = max(constant, float(np.nanmax(ratios)))
    far = center.values + np.array([1.1 * r, 1.1 * r])
    print(f"  cutoff constant: {constant:.6f}, bound {bound:.6f}")
    ok = _verdict(constant <= bound + 1e-6,
                  "tapered field constant within 4K + (2/r)M",
                  f"{constant:.6f} <= {bound:.6f}") and ok
    ok = _verdict(float(np.max(np.abs(tapered(far)))) == 0.0,
                  "tapered field vanishes outside radius r") and ok
    _export(out_dir, "mcshane_cutoff",
            ("quantity", "value"),
            [("extension_error_on_data", on_data),
             ("lipschitz_ratio", ratio),
             ("cutoff_constant", constant),
             ("cutoff_bound", bound)])
    return 0 if ok else 1


_LIBRARY_DEMOS = {
    "dc_vs_d_divergence": demo_dc_vs_d_divergence,
    "observer_dependence": demo_observer_dependence,
    "slit_plane_nonhomeo": demo_slit_plane_nonhomeo,
    "hilbert_roundtrip": demo_hilbert_roundtrip,
    "mcshane_cutoff": demo_mcshane_cutoff,
}


def run_demo(name: str, out_dir=None) -> int:
    """Run one bundled demo by name; returns 0 on pass, 1 on failure."""
    if name in _SCENARIO_DEMOS:
        return _scenario_demo(name, out_dir)
    if name in _LIBRARY_DEMOS:
        return _LIBRARY_DEMOS[name](out_dir)
    raise KeyError(name)
