"""Scenario configs: a TOML schema for systems, fields, runs, and checks.

A scenario file declares one coordinate system, named vector fields given by
coordinate formulas, a list of integration runs, and a list of checks over
the resulting trajectories.  ``run_scenario`` executes everything, writes
one trajectory file per run plus a JSON report, and is deterministic for a
fixed seed: identical config + seed produces byte-identical outputs.

Schema (version = 1 is mandatory):

    version = 1
    seed = 0                       # optional, default 0

    [space]
    kind = "euclidean"             # euclidean | sup_plane | sphere | grid_l2 | discrete
    dim = 3                        # euclidean only
    subset = "half_space"          # optional; a name or {kind=..., normal=..., offset=...}
    # grid_l2 instead takes: lo, hi, cells;  discrete takes: points

    [[coords]]
    name = "a"
    point = [1.0, 0.0, 0.0]

    [base]
    point = [0.0, 0.0, 1.0]

    [fields.drift]                 # one key V_<name> per coordinate
    V_a = "1"
    V_b = "-1"
    V_c = "0"

    [[runs]]
    name = "main"
    field = "drift"
    start = [0.5, 0.5, 1.0]
    t_end = 0.5
    step = 1e-3
    method = "rk4"                 # optional: rk4 | euler
    recover = false                # optional: multilaterate ambient points
    ambient = false                # optional: sphere-only ambient integration
    expect_status = "completed"    # optional assertion on the outcome

    [[checks]]                     # kinds: feasibility | invariance | nagumo |
    kind = "feasibility"           #   lipschitz | convergence | solution_formula | jump
    run = "main"

    [[loci]]
    name = "shell"
    kind = "sphere"                # any locus kind; i/j accept names or indices
    i = "a"
    r = 1.0

Expressions use the arithmetic language of the exprlang module; field
formulas see x_<name> for every coordinate, solution formulas additionally
see x0_<name> (start coordinates) and t.
"""

from __future__ import annotations

import concurrent.futures
import json
import os
import tempfile
from dataclasses import dataclass, field as _field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import core, fields as field_ops, invariance, loci as locus_ops, spaces
from .errors import ExpressionError, MetrikosError, ScenarioError
from .exprlang import compile_expression

SCHEMA_VERSION = 1

CHECK_KINDS = ("feasibility", "invariance", "nagumo", "lipschitz",
               "convergence", "solution_formula", "jump")

#: default number of probe tuples for conservation-law detection
PROBE_COUNT = 64

_MISSING = object()


def significant(x: float) -> str:
    """17 significant digits, '.' separator, no locale dependence."""
    return format(float(x), ".17g")


def worker_cap() -> int:
    """Worker-count cap from METRIKOS_THREADS, else the CPU count."""
    raw = os.environ.get("METRIKOS_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        cap = int(raw)
    except ValueError:
        raise ScenarioError(f"METRIKOS_THREADS must be an integer, got {raw!r}")
    if cap < 1:
        raise ScenarioError(f"METRIKOS_THREADS must be >= 1, got {cap}")
    return cap


# ---------------------------------------------------------------------------
# schema access helpers


def _get(table, key, where, default=_MISSING):
    if key not in table:
        if default is not _MISSING:
            return default
        raise ScenarioError(f"{where}: missing required key {key!r}")
    return table[key]


def _string(table, key, where, default=_MISSING) -> str:
    val = _get(table, key, where, default)
    if val is default and default is not _MISSING:
        return val
    if not isinstance(val, str):
        raise ScenarioError(f"{where}.{key}: expected a string, "
                            f"got {type(val).__name__}")
    return val


def _number(table, key, where, default=_MISSING) -> float:
    val = _get(table, key, where, default)
    if val is default and default is not _MISSING:
        return val
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ScenarioError(f"{where}.{key}: expected a number, "
                            f"got {type(val).__name__}")
    return float(val)


def _integer(table, key, where, default=_MISSING) -> int:
    val = _get(table, key, where, default)
    if val is default and default is not _MISSING:
        return val
    if isinstance(val, bool) or not isinstance(val, int):
        raise ScenarioError(f"{where}.{key}: expected an integer, "
                            f"got {type(val).__name__}")
    return val


def _boolean(table, key, where, default=_MISSING) -> bool:
    val = _get(table, key, where, default)
    if val is default and default is not _MISSING:
        return val
    if not isinstance(val, bool):
        raise ScenarioError(f"{where}.{key}: expected true/false, "
                            f"got {type(val).__name__}")
    return val


def _vector(table, key, where, default=_MISSING):
    val = _get(table, key, where, default)
    if val is default and default is not _MISSING:
        return val
    if not isinstance(val, list) or not val or any(
            isinstance(v, bool) or not isinstance(v, (int, float))
            for v in val):
        raise ScenarioError(f"{where}.{key}: expected a nonempty number array")
    return [float(v) for v in val]


def _table(value, where) -> dict:
    if not isinstance(value, dict):
        raise ScenarioError(f"{where}: expected a table, "
                            f"got {type(value).__name__}")
    return value


def _reject_extras(table, allowed, where) -> None:
    extras = sorted(set(table) - set(allowed))
    if extras:
        raise ScenarioError(f"{where}: unknown keys {extras}")


# ---------------------------------------------------------------------------
# builders


def _build_subset(value, where) -> spaces.Subset:
    if value is None:
        return spaces.ALL
    try:
        if isinstance(value, str):
            return spaces.Subset(value)
        if isinstance(value, dict):
            _reject_extras(value, ("kind", "normal", "offset"), where)
            kind = _string(value, "kind", where)
            normal = tuple(_vector(value, "normal", where, default=[]))
            offset = _number(value, "offset", where, default=0.0)
            return spaces.Subset(kind, normal=normal, offset=offset)
    except MetrikosError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc
    raise ScenarioError(f"{where}: expected a subset name or table")


def _build_space(table) -> spaces.SpaceDescriptor:
    table = _table(table, "space")
    kind = _string(table, "kind", "space")
    subset = _build_subset(table.get("subset"), "space.subset")
    try:
        if kind == "euclidean":
            _reject_extras(table, ("kind", "dim", "subset"), "space")
            return spaces.euclidean(_integer(table, "dim", "space"), subset)
        if kind == "sup_plane":
            _reject_extras(table, ("kind", "subset"), "space")
            return spaces.sup_metric_plane(subset)
        if kind == "sphere":
            _reject_extras(table, ("kind", "subset"), "space")
            return spaces.sphere_geodesic(subset)
        if kind == "grid_l2":
            _reject_extras(table, ("kind", "lo", "hi", "cells"), "space")
            return spaces.grid_function_space(_number(table, "lo", "space"),
                                              _number(table, "hi", "space"),
                                              _integer(table, "cells", "space"))
        if kind == "discrete":
            _reject_extras(table, ("kind", "points"), "space")
            return spaces.discrete_space(_integer(table, "points", "space"))
    except MetrikosError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"space: {exc}") from exc
    raise ScenarioError(f"space.kind: unknown kind {kind!r}")


def _build_point(space, value, where) -> spaces.SpacePoint:
    try:
        return spaces.point(space, value)
    except MetrikosError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def _build_system(raw) -> core.CoordinateSystem:
    space = _build_space(_get(raw, "space", "scenario"))
    entries = _get(raw, "coords", "scenario")
    if not isinstance(entries, list) or not entries:
        raise ScenarioError("coords: expected at least one [[coords]] table")
    names, points = [], []
    for k, entry in enumerate(entries):
        where = f"coords[{k}]"
        entry = _table(entry, where)
        _reject_extras(entry, ("name", "point"), where)
        name = _string(entry, "name", where)
        if name in names:
            raise ScenarioError(f"{where}: duplicate coordinate name {name!r}")
        names.append(name)
        value = _get(entry, "point", where)
        if space.kind == "discrete":
            points.append(_build_point(space, _integer(entry, "point", where),
                                       where))
        else:
            points.append(_build_point(space, _vector(entry, "point", where),
                                       where))
    base_table = _table(_get(raw, "base", "scenario"), "base")
    _reject_extras(base_table, ("point",), "base")
    if space.kind == "discrete":
        base = _build_point(space, _integer(base_table, "point", "base"),
                            "base")
    else:
        base = _build_point(space, _vector(base_table, "point", "base"),
                            "base")
    try:
        return core.CoordinateSystem(space, tuple(points), base,
                                     labels=tuple(names))
    except MetrikosError as exc:
        raise ScenarioError(f"coords: {exc}") from exc


def _expression_env(labels, prefix="x_"):
    return [f"{prefix}{name}" for name in labels]


def _component(fn, var_names):
    def component(c):
        return fn({name: c[k] for k, name in enumerate(var_names)})
    return component


def _build_fields(raw, labels) -> dict:
    tables = _get(raw, "fields", "scenario", default={})
    tables = _table(tables, "fields")
    var_names = _expression_env(labels)
    out = {}
    for name, table in tables.items():
        where = f"fields.{name}"
        table = _table(table, where)
        _reject_extras(table, [f"V_{lab}" for lab in labels], where)
        components = []
        for lab in labels:
            text = _string(table, f"V_{lab}", where)
            try:
                fn = compile_expression(text, var_names)
            except ExpressionError as exc:
                raise ScenarioError(
                    f"{where}.V_{lab}: {exc}") from exc
            components.append(_component(fn, var_names))
        out[name] = field_ops.CoordField(tuple(components), label=name)
    return out


@dataclass(frozen=True)
class RunSpec:
    name: str
    field: str
    start: spaces.SpacePoint
    t_end: float
    step: float
    method: str = "rk4"
    recover: bool = False
    ambient: bool = False
    expect_status: str = None


def _build_runs(raw, system, fields) -> list:
    entries = _get(raw, "runs", "scenario", default=[])
    if not isinstance(entries, list):
        raise ScenarioError("runs: expected an array of tables")
    runs, seen = [], set()
    for k, entry in enumerate(entries):
        where = f"runs[{k}]"
        entry = _table(entry, where)
        _reject_extras(entry, ("name", "field", "start", "t_end", "step",
                               "method", "recover", "ambient",
                               "expect_status"), where)
        name = _string(entry, "name", where, default=f"run{k}")
        if name in seen:
            raise ScenarioError(f"{where}: duplicate run name {name!r}")
        seen.add(name)
        fname = _string(entry, "field", where)
        if fname not in fields:
            raise ScenarioError(f"{where}: unknown field {fname!r}")
        if system.space.kind == "discrete":
            raise ScenarioError(f"{where}: runs need a continuous space")
        start = _build_point(system.space, _vector(entry, "start", where),
                             f"{where}.start")
        if not system.member(start):
            raise ScenarioError(f"{where}: start point is outside the subset")
        method = _string(entry, "method", where, default="rk4")
        if method not in ("rk4", "euler"):
            raise ScenarioError(f"{where}.method: expected rk4 or euler")
        recover = _boolean(entry, "recover", where, default=False)
        ambient = _boolean(entry, "ambient", where, default=False)
        if ambient and system.space.kind != "sphere":
            raise ScenarioError(f"{where}: ambient runs need a sphere space")
        if recover and system.space.kind not in ("euclidean", "sphere"):
            raise ScenarioError(f"{where}: recovery needs euclidean or sphere")
        runs.append(RunSpec(
            name=name, field=fname, start=start,
            t_end=_number(entry, "t_end", where),
            step=_number(entry, "step", where),
            method=method, recover=recover, ambient=ambient,
            expect_status=_string(entry, "expect_status", where,
                                  default=None)))
    return runs


def _coord_index(value, labels, where) -> int:
    if isinstance(value, str):
        if value not in labels:
            raise ScenarioError(f"{where}: unknown coordinate name {value!r}")
        return labels.index(value)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where}: expected a coordinate name or index")
    return value


def _build_loci(raw, system) -> dict:
    entries = _get(raw, "loci", "scenario", default=[])
    if not isinstance(entries, list):
        raise ScenarioError("loci: expected an array of tables")
    labels = list(system.labels)
    out = {}
    for k, entry in enumerate(entries):
        where = f"loci[{k}]"
        entry = _table(entry, where)
        _reject_extras(entry, ("name", "kind", "i", "j", "r", "theta"), where)
        name = _string(entry, "name", where, default=f"locus{k}")
        if name in out:
            raise ScenarioError(f"{where}: duplicate locus name {name!r}")
        kind = _string(entry, "kind", where)
        i = _coord_index(_get(entry, "i", where), labels, f"{where}.i")
        j = entry.get("j")
        if j is not None:
            j = _coord_index(j, labels, f"{where}.j")
        r = _number(entry, "r", where, default=None)
        theta = _number(entry, "theta", where, default=None)
        try:
            locus = locus_ops.Locus(kind, i, j=j, r=r, theta=theta)
            locus_ops.validate_locus(locus, system)
        except MetrikosError as exc:
            raise ScenarioError(f"{where}: {exc}") from exc
        out[name] = locus
    return out


def _build_checks(raw, labels, fields, runs, default_tol) -> list:
    entries = _get(raw, "checks", "scenario", default=[])
    if not isinstance(entries, list):
        raise ScenarioError("checks: expected an array of tables")
    run_names = {r.name: r for r in runs}
    checks = []
    for k, entry in enumerate(entries):
        where = f"checks[{k}]"
        entry = _table(entry, where)
        kind = _string(entry, "kind", where)
        if kind not in CHECK_KINDS:
            raise ScenarioError(f"{where}.kind: unknown kind {kind!r}; "
                                f"expected one of {', '.join(CHECK_KINDS)}")
        spec = {"kind": kind,
                "name": _string(entry, "name", where, default=f"{kind}_{k}")}

        def need_run():
            rname = _string(entry, "run", where)
            if rname not in run_names:
                raise ScenarioError(f"{where}: unknown run {rname!r}")
            spec["run"] = rname
            return run_names[rname]

        def explicit_laws():
            entries = entry.get("laws")
            if entries is None:
                return None
            if not isinstance(entries, list) or not entries:
                raise ScenarioError(f"{where}.laws: expected an array of "
                                    f"law tables")
            laws = []
            for m, law in enumerate(entries):
                lw = f"{where}.laws[{m}]"
                law = _table(law, lw)
                _reject_extras(law, ("kind", "i", "j"), lw)
                lkind = _string(law, "kind", lw)
                if lkind not in ("sphere", "ellipsoid", "hyperboloid"):
                    raise ScenarioError(f"{lw}.kind: expected sphere, "
                                        f"ellipsoid, or hyperboloid")
                i = _coord_index(_get(law, "i", lw), labels, f"{lw}.i")
                if lkind == "sphere":
                    indices = (i,)
                else:
                    j = _coord_index(_get(law, "j", lw), labels, f"{lw}.j")
                    indices = (i, j)
                try:
                    laws.append(field_ops.ConservationLaw(lkind, indices))
                except MetrikosError as exc:
                    raise ScenarioError(f"{lw}: {exc}") from exc
            return laws

        if kind == "feasibility":
            _reject_extras(entry, ("kind", "name", "run", "tol"), where)
            need_run()
            spec["tol"] = _number(entry, "tol", where, default=default_tol(
                field_ops.FEASIBILITY_GUARD_TOL))
        elif kind == "invariance":
            _reject_extras(entry, ("kind", "name", "run", "tol", "laws"),
                           where)
            need_run()
            spec["tol"] = _number(entry, "tol", where,
                                  default=default_tol(1e-6))
            spec["laws"] = explicit_laws()
        elif kind == "nagumo":
            _reject_extras(entry, ("kind", "name", "run", "K", "tol",
                                   "stride", "laws"), where)
            need_run()
            spec["K"] = _number(entry, "K", where, default=0.0)
            spec["tol"] = _number(entry, "tol", where, default=default_tol(
                invariance.NAGUMO_TOL))
            spec["stride"] = _integer(entry, "stride", where, default=0)
            spec["laws"] = explicit_laws()
        elif kind == "lipschitz":
            _reject_extras(entry, ("kind", "name", "field", "samples",
                                   "seed", "max"), where)
            fname = _string(entry, "field", where)
            if fname not in fields:
                raise ScenarioError(f"{where}: unknown field {fname!r}")
            spec["field"] = fname
            spec["samples"] = _integer(entry, "samples", where, default=64)
            spec["seed"] = _integer(entry, "seed", where, default=None)
            spec["max"] = _number(entry, "max", where, default=None)
        elif kind == "convergence":
            _reject_extras(entry, ("kind", "name", "sequence", "candidate",
                                   "dc_final_max", "d_final_min"), where)
            seq = _get(entry, "sequence", where)
            if not isinstance(seq, list) or not seq:
                raise ScenarioError(f"{where}.sequence: expected an array of "
                                    f"points")
            spec["sequence"] = seq
            spec["candidate"] = _vector(entry, "candidate", where)
            spec["dc_final_max"] = _number(entry, "dc_final_max", where,
                                           default=None)
            spec["d_final_min"] = _number(entry, "d_final_min", where,
                                          default=None)
        elif kind == "solution_formula":
            allowed = ["kind", "name", "run", "tol"] + \
                [f"x_{lab}" for lab in labels]
            _reject_extras(entry, allowed, where)
            need_run()
            spec["tol"] = _number(entry, "tol", where,
                                  default=default_tol(1e-9))
            var_names = [f"x0_{lab}" for lab in labels] + ["t"]
            formulas = []
            for lab in labels:
                text = _string(entry, f"x_{lab}", where)
                formulas.append(compile_expression(text, var_names))
            spec["formulas"] = formulas
            spec["texts"] = [entry[f"x_{lab}"] for lab in labels]
        elif kind == "jump":
            _reject_extras(entry, ("kind", "name", "run", "min_point_jump",
                                   "max_coord_step"), where)
            run = need_run()
            if not (run.recover or run.ambient):
                raise ScenarioError(f"{where}: jump checks need a run with "
                                    f"recovered points")
            spec["min_point_jump"] = _number(entry, "min_point_jump", where)
            spec["max_coord_step"] = _number(entry, "max_coord_step", where,
                                             default=None)
        checks.append(spec)
    return checks


@dataclass
class Scenario:
    name: str
    seed: int
    system: core.CoordinateSystem
    fields: dict
    runs: list
    checks: list
    loci: dict


def load_scenario(config_path, seed=None, tol=None) -> Scenario:
    """Parse and validate a scenario file.

    seed overrides the file's seed; tol overrides the default tolerance of
    every check that does not state its own.  All schema errors are raised
    as ScenarioError with a dotted location path.
    """
    try:
        with open(config_path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read config: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"config parse error: {exc}") from exc

    _reject_extras(raw, ("version", "name", "seed", "space", "coords",
                         "base", "fields", "runs", "checks", "loci"),
                   "scenario")
    version = _integer(raw, "version", "scenario")
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"scenario.version: expected {SCHEMA_VERSION}, "
                            f"got {version}")
    stem = os.path.splitext(os.path.basename(str(config_path)))[0]
    name = _string(raw, "name", "scenario", default=stem)
    if seed is None:
        seed = _integer(raw, "seed", "scenario", default=0)

    def default_tol(builtin):
        return builtin if tol is None else tol

    system = _build_system(raw)
    labels = list(system.labels)
    fields = _build_fields(raw, labels)
    runs = _build_runs(raw, system, fields)
    checks = _build_checks(raw, labels, fields, runs, default_tol)
    loci = _build_loci(raw, system)
    return Scenario(name=name, seed=int(seed), system=system, fields=fields,
                    runs=runs, checks=checks, loci=loci)


# ---------------------------------------------------------------------------
# execution


def _execute_run(scenario: Scenario, spec: RunSpec) -> field_ops.Trajectory:
    field = scenario.fields[spec.field]
    system = scenario.system
    if spec.ambient:
        return field_ops.integrate_on_sphere(field, system, spec.start,
                                             spec.t_end, spec.step,
                                             method=spec.method)
    if spec.recover:
        return field_ops.integrate_points(field, system, spec.start,
                                          spec.t_end, spec.step,
                                          method=spec.method)
    return field_ops.integrate_coords(field, system, spec.start, spec.t_end,
                                      spec.step, method=spec.method)


def _meta_summary(meta: dict) -> dict:
    out = {}
    if "jumps" in meta:
        out["jumps"] = [int(k) for k in meta["jumps"]]
    if "exit_point" in meta:
        out["exit_point"] = [float(v) for v in
                             np.atleast_1d(core.as_vector(meta["exit_point"]))]
    if "infeasible_state" in meta:
        out["infeasible_state"] = [float(v) for v in meta["infeasible_state"]]
    if "max_prenorm_drift" in meta:
        out["max_prenorm_drift"] = float(meta["max_prenorm_drift"])
    return out


def _run_entry(scenario, spec, traj) -> dict:
    entry = {
        "name": spec.name,
        "field": spec.field,
        "method": spec.method,
        "status": traj.status,
        "rows": len(traj),
        "final_t": float(traj.times[-1]),
        "final_coords": {lab: float(v) for lab, v in
                         zip(scenario.system.labels,
                             traj.final_coords().values)},
        "meta": _meta_summary(traj.meta),
    }
    if spec.expect_status is not None:
        entry["expect_status"] = spec.expect_status
        entry["ok"] = traj.status == spec.expect_status
    else:
        entry["ok"] = True
    return entry


def _detected_laws(scenario, field):
    probes = field_ops.default_probes(scenario.system, count=PROBE_COUNT,
                                      seed=scenario.seed)
    return field_ops.conserved_quantities(field, probes)


def _check_feasibility(scenario, spec, trajectories) -> dict:
    traj = trajectories[spec["run"]]
    bad = 0
    for c in traj.coords:
        if not core.check_feasible(scenario.system, c, tol=spec["tol"]):
            bad += 1
    return {"passed": bad == 0, "states": len(traj), "violations": bad,
            "tol": spec["tol"]}


def _check_invariance(scenario, spec, trajectories) -> dict:
    traj = trajectories[spec["run"]]
    run = next(r for r in scenario.runs if r.name == spec["run"])
    field = scenario.fields[run.field]
    laws = spec["laws"] if spec["laws"] is not None else \
        _detected_laws(scenario, field)
    n = len(scenario.system)
    results = []
    ok = True
    for law in laws:
        S = invariance.law_level_set(law, traj.coords[0], n)
        res = invariance.invariance_test(traj, S, spec["tol"])
        ok = ok and res.invariant
        results.append({
            "quantity": law.quantity(scenario.system.labels),
            "kind": law.kind,
            "invariant": res.invariant,
            "max_distance": float(res.max_distance),
            "first_exit": None if res.first_exit is None
                          else int(res.first_exit),
        })
    return {"passed": ok, "laws": results, "law_count": len(laws),
            "tol": spec["tol"]}


def _check_nagumo(scenario, spec, trajectories) -> dict:
    traj = trajectories[spec["run"]]
    run = next(r for r in scenario.runs if r.name == spec["run"])
    field = scenario.fields[run.field]
    laws = spec["laws"] if spec["laws"] is not None else \
        _detected_laws(scenario, field)
    n = len(scenario.system)
    stride = spec["stride"] or max(1, len(traj) // 20)
    samples = [c.values for c in traj.coords[::stride]]
    fv = field_ops.field_on_vectors(field)
    results = []
    ok = True
    for law in laws:
        S = invariance.law_level_set(law, traj.coords[0], n)
        report = invariance.nagumo_check(fv, S, samples, K=spec["K"],
                                         tol=spec["tol"])
        ok = ok and report.ok
        results.append({
            "quantity": law.quantity(scenario.system.labels),
            "max_limsup": float(np.max(report.limsups)),
            "violations": len(report.violations),
        })
    return {"passed": ok, "laws": results, "law_count": len(laws),
            "K": spec["K"], "tol": spec["tol"]}


def _default_box(system):
    stacked = np.asarray(system._stacked, dtype=float)
    cmin = stacked.min(axis=0)
    cmax = stacked.max(axis=0)
    diam = float(np.max(cmax - cmin)) or 1.0
    return cmin - diam, cmax + diam


def _check_lipschitz(scenario, spec, trajectories) -> dict:
    field = scenario.fields[spec["field"]]
    seed = spec["seed"] if spec["seed"] is not None else scenario.seed
    lo, hi = _default_box(scenario.system)
    pts = core.sample_box_points(scenario.system, spec["samples"], seed,
                                 lo, hi)
    report = field_ops.lipschitz_estimate(field, scenario.system, pts)
    passed = spec["max"] is None or report.estimate <= spec["max"]
    return {"passed": bool(passed), "estimate": float(report.estimate),
            "max": spec["max"], "samples": spec["samples"]}


def _check_convergence(scenario, spec, trajectories) -> dict:
    space = scenario.system.space
    seq = [spaces.point(space, v) for v in spec["sequence"]]
    candidate = spaces.point(space, spec["candidate"])
    report = core.compare_convergence(scenario.system, seq, candidate)
    passed = True
    if spec["dc_final_max"] is not None:
        passed = passed and report.dC_gaps[-1] <= spec["dc_final_max"]
    if spec["d_final_min"] is not None:
        passed = passed and report.d_gaps[-1] >= spec["d_final_min"]
    return {"passed": bool(passed),
            "dc_first": float(report.dC_gaps[0]),
            "dc_final": float(report.dC_gaps[-1]),
            "d_first": float(report.d_gaps[0]),
            "d_final": float(report.d_gaps[-1])}


def _check_solution_formula(scenario, spec, trajectories) -> dict:
    traj = trajectories[spec["run"]]
    labels = scenario.system.labels
    start = traj.coords[0].values
    env0 = {f"x0_{lab}": float(v) for lab, v in zip(labels, start)}
    actual = traj.coord_array()
    expected = np.empty_like(actual)
    for row, t in enumerate(traj.times):
        env = dict(env0)
        env["t"] = float(t)
        for k, formula in enumerate(spec["formulas"]):
            expected[row, k] = formula(env)
    max_dev = float(np.max(np.abs(actual - expected)))
    return {"passed": max_dev <= spec["tol"], "max_deviation": max_dev,
            "tol": spec["tol"], "formulas": list(spec["texts"])}


def _check_jump(scenario, spec, trajectories) -> dict:
    traj = trajectories[spec["run"]]
    space = scenario.system.space
    if traj.points is None or len(traj.points) < 2:
        raise ScenarioError(f"check {spec['name']}: run has no point data")
    point_gaps = np.array([
        spaces.distance(space, traj.points[k], traj.points[k + 1])
        for k in range(len(traj.points) - 1)])
    arr = traj.coord_array()
    coord_gaps = np.max(np.abs(np.diff(arr, axis=0)), axis=1)
    jump_at = int(np.argmax(point_gaps))
    passed = bool(point_gaps[jump_at] >= spec["min_point_jump"])
    if spec["max_coord_step"] is not None:
        passed = passed and float(np.max(coord_gaps)) <= spec["max_coord_step"]
    return {"passed": passed,
            "max_point_jump": float(point_gaps[jump_at]),
            "jump_index": jump_at,
            "max_coord_step": float(np.max(coord_gaps)),
            "min_point_jump": spec["min_point_jump"]}


_CHECK_RUNNERS = {
    "feasibility": _check_feasibility,
    "invariance": _check_invariance,
    "nagumo": _check_nagumo,
    "lipschitz": _check_lipschitz,
    "convergence": _check_convergence,
    "solution_formula": _check_solution_formula,
    "jump": _check_jump,
}


# ---------------------------------------------------------------------------
# output files


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".metrikos-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _trajectory_csv(scenario, traj) -> str:
    labels = scenario.system.labels
    header = ["t"] + [f"x_{lab}" for lab in labels]
    ambient = traj.points is not None
    if ambient:
        dim = len(core.as_vector(
            spaces.as_data(scenario.system.space, traj.points[0])))
        header += [f"p{k}" for k in range(dim)]
    header.append("status")
    lines = [",".join(header)]
    arr = traj.coord_array()
    for row, t in enumerate(traj.times):
        cells = [significant(t)] + [significant(v) for v in arr[row]]
        if ambient:
            data = spaces.as_data(scenario.system.space, traj.points[row])
            cells += [significant(v) for v in np.atleast_1d(data)]
        cells.append(traj.status)
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _trajectory_json(scenario, traj) -> dict:
    labels = scenario.system.labels
    arr = traj.coord_array()
    out = {
        "t": [float(v) for v in traj.times],
        "coords": {lab: [float(v) for v in arr[:, k]]
                   for k, lab in enumerate(labels)},
        "status": traj.status,
    }
    if traj.points is not None:
        out["points"] = [[float(v) for v in np.atleast_1d(
            spaces.as_data(scenario.system.space, p))] for p in traj.points]
    return out


@dataclass
class ScenarioOutcome:
    ok: bool
    report: dict
    paths: list = _field(default_factory=list)


def run_scenario(config_path, out_dir=None, seed=None, fmt="csv",
                 tol=None, only_run=None, only_check=None) -> ScenarioOutcome:
    """Execute a scenario file: all runs, then all checks.

    Runs execute concurrently (capped by METRIKOS_THREADS); checks and
    report assembly are serialized in config order.  When out_dir is given,
    writes one trajectory file per run plus report.json, atomically.

    only_run restricts execution to one named run and skips every check;
    only_check keeps all runs but evaluates a single named check.
    """
    if fmt not in ("csv", "json"):
        raise ScenarioError(f"format must be csv or json, got {fmt!r}")
    scenario = load_scenario(config_path, seed=seed, tol=tol)
    if only_run is not None:
        kept = [r for r in scenario.runs if r.name == only_run]
        if not kept:
            known = ", ".join(r.name for r in scenario.runs) or "none"
            raise ScenarioError(f"unknown run {only_run!r}; "
                                f"scenario defines: {known}")
        scenario.runs = kept
        scenario.checks = []
    if only_check is not None:
        kept = [c for c in scenario.checks if c["name"] == only_check]
        if not kept:
            known = ", ".join(c["name"] for c in scenario.checks) or "none"
            raise ScenarioError(f"unknown check {only_check!r}; "
                                f"scenario defines: {known}")
        scenario.checks = kept

    cap = worker_cap()
    trajectories = {}
    if scenario.runs:
        workers = max(1, min(len(scenario.runs), cap))
        with concurrent.futures.ThreadPoolExecutor(workers) as pool:
            futures = [(spec, pool.submit(_execute_run, scenario, spec))
                       for spec in scenario.runs]
            for spec, future in futures:
                trajectories[spec.name] = future.result()

    run_entries = [_run_entry(scenario, spec, trajectories[spec.name])
                   for spec in scenario.runs]
    check_entries = []
    for spec in scenario.checks:
        detail = _CHECK_RUNNERS[spec["kind"]](scenario, spec, trajectories)
        entry = {"name": spec["name"], "kind": spec["kind"]}
        entry.update(detail)
        check_entries.append(entry)

    ok = all(e["ok"] for e in run_entries) and \
        all(e["passed"] for e in check_entries)
    report = {
        "scenario": scenario.name,
        "version": SCHEMA_VERSION,
        "seed": scenario.seed,
        "ok": ok,
        "runs": run_entries,
        "checks": check_entries,
    }

    paths = []
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for spec in scenario.runs:
            traj = trajectories[spec.name]
            if fmt == "csv":
                path = os.path.join(out_dir, f"{spec.name}.csv")
                _atomic_write(path, _trajectory_csv(scenario, traj))
            else:
                path = os.path.join(out_dir, f"{spec.name}.json")
                _atomic_write(path, json.dumps(
                    _trajectory_json(scenario, traj), indent=2,
                    sort_keys=True) + "\n")
            paths.append(path)
        report_path = os.path.join(out_dir, "report.json")
        _atomic_write(report_path,
                      json.dumps(report, indent=2, sort_keys=True) + "\n")
        paths.append(report_path)
    return ScenarioOutcome(ok=ok, report=report, paths=paths)
