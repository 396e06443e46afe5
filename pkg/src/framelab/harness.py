"""Experiment registry: schema-validated configs, seeded runs, atomic output.

Each experiment is a pure function of its configuration and seed; identical
config + seed produce byte-identical CSV output.  Result files are written
via temp-file + rename.
"""

from __future__ import annotations

import json
import os
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np
import jsonschema

from .errors import (ArgumentError, CapabilityError, ConfigurationError,
                     FramelabError, SchemaError)
from . import models as M
from . import geometry as geo
from . import frameflow as ff
from . import clifford as cl
from . import exterior as ex
from . import transport as tp
from . import quantization as qz
from .commutant import commutant, match_labels

__all__ = ["run", "suite", "ResultRecord", "validate_config", "EXPERIMENTS"]


# ---------------------------------------------------------------------------
# config schemas

_MODEL_SCHEMA = {
    "type": "object",
    "properties": {
        "tag": {"enum": ["flat-torus", "round-sphere", "genus2-hyperbolic",
                          "kaehler-torus"]},
        "n": {"type": "integer", "minimum": 2},
        "periods": {"type": "array", "items": {"type": "number"}},
        "potential": {"type": "array"},
    },
    "required": ["tag"],
    "additionalProperties": False,
}

_BUNDLE_SCHEMA = {
    "type": "object",
    "properties": {
        "n": {"type": "integer", "enum": [2, 3]},
        "r": {"type": "integer", "minimum": 1},
        "K": {"type": "integer", "minimum": 1},
        "shift": {"type": "number"},
        "A": {"type": "array"},
        "V": {"type": "array"},
    },
    "required": ["n", "r", "K"],
    "additionalProperties": False,
}

SCHEMAS = {
    "frameflow": {
        "type": "object",
        "properties": {
            "experiment": {"const": "frameflow"},
            "model": _MODEL_SCHEMA,
            "k": {"type": "integer", "minimum": 1},
            "T": {"type": "number", "exclusiveMinimum": 0},
            "h": {"type": "number", "exclusiveMinimum": 0},
            "ensemble": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer"},
            "out": {"type": "string"},
            "max_deviation": {"type": "number"},
        },
        "required": ["experiment", "model", "k", "T"],
        "additionalProperties": False,
    },
    "commutant": {
        "type": "object",
        "properties": {
            "experiment": {"const": "commutant"},
            "algebra": {"enum": ["spinor", "forms"]},
            "n": {"type": "integer", "minimum": 2},
            "p": {"type": "integer", "minimum": 1},
            "restrict": {"enum": ["plus", "minus", "P", "Pplus", "Pminus"]},
            "seed": {"type": "integer"},
            "out": {"type": "string"},
        },
        "required": ["experiment", "algebra", "n"],
        "additionalProperties": False,
    },
    "states": {
        "type": "object",
        "properties": {
            "experiment": {"const": "states"},
            "connection": {"enum": ["genus2-spinor", "torus-bundle"]},
            "bundle": _BUNDLE_SCHEMA,
            "t_values": {"type": "array", "items": {"type": "number"}},
            "samples": {"type": "integer", "minimum": 16},
            "seed": {"type": "integer"},
            "h": {"type": "number", "exclusiveMinimum": 0},
            "out": {"type": "string"},
        },
        "required": ["experiment", "connection"],
        "additionalProperties": False,
    },
    "decay": {
        "type": "object",
        "properties": {
            "experiment": {"const": "decay"},
            "connection": {"enum": ["genus2-spinor", "flat-torus-control"]},
            "state": {"type": "string"},
            "T_grid": {"type": "array", "items": {"type": "number"}},
            "trajectories": {"type": "integer", "minimum": 4},
            "seed": {"type": "integer"},
            "h": {"type": "number", "exclusiveMinimum": 0},
            "out": {"type": "string"},
        },
        "required": ["experiment", "connection"],
        "additionalProperties": False,
    },
    "egorov": {
        "type": "object",
        "properties": {
            "experiment": {"const": "egorov"},
            "bundle": _BUNDLE_SCHEMA,
            "t": {"type": "number"},
            "shells": {"type": "array", "items": {"type": "number"}},
            "symbol": {"type": "object"},
            "seed": {"type": "integer"},
            "out": {"type": "string"},
            "max_rel_err": {"type": "number"},
        },
        "required": ["experiment", "bundle", "t", "shells"],
        "additionalProperties": False,
    },
    "weyl": {
        "type": "object",
        "properties": {
            "experiment": {"const": "weyl"},
            "bundle": _BUNDLE_SCHEMA,
            "N": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer"},
            "out": {"type": "string"},
            "max_deviation": {"type": "number"},
        },
        "required": ["experiment", "bundle"],
        "additionalProperties": False,
    },
    "variance": {
        "type": "object",
        "properties": {
            "experiment": {"const": "variance"},
            "bundle": _BUNDLE_SCHEMA,
            "Ns": {"type": "array", "items": {"type": "integer"}},
            "seed": {"type": "integer"},
            "out": {"type": "string"},
        },
        "required": ["experiment", "bundle"],
        "additionalProperties": False,
    },
    "suite": {
        "type": "object",
        "properties": {
            "experiment": {"const": "suite"},
            "name": {"enum": ["algebra", "dynamics", "egorov", "all"]},
            "seed": {"type": "integer"},
            "out": {"type": "string"},
        },
        "required": ["experiment", "name"],
        "additionalProperties": False,
    },
}


def validate_config(config):
    exp = config.get("experiment")
    if exp not in SCHEMAS:
        raise SchemaError(f"unknown experiment {exp!r}")
    try:
        jsonschema.validate(config, SCHEMAS[exp])
    except jsonschema.ValidationError as e:
        raise SchemaError(str(e.message)) from e
    return exp


@dataclass
class ResultRecord:
    config: dict
    metrics: dict = field(default_factory=dict)
    passed: bool | None = None
    wall_clock: float = 0.0
    payload: object = None

    def to_json(self):
        body = {
            "config": self.config,
            "metrics": self.metrics,
            "passed": self.passed,
            "wall_clock_s": round(self.wall_clock, 3),
        }
        for v in _iter_numbers(self.metrics):
            if not np.isfinite(v):
                raise ConfigurationError("non-finite metric in result record")
        return json.dumps(body, indent=2, sort_keys=True)


def _iter_numbers(obj):
    if isinstance(obj, dict):
        for v in obj.values():
            yield from _iter_numbers(v)
    elif isinstance(obj, (list, tuple)):
        for v in obj:
            yield from _iter_numbers(v)
    elif isinstance(obj, (int, float)):
        yield float(obj)


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(rows, header):
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, float):
                cells.append(f"{v:.12g}")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# experiment bodies


def _build_model(mc):
    params = {k: v for k, v in mc.items() if k != "tag"}
    if "potential" in params:
        params["potential"] = [tuple(p) for p in params["potential"]]
    return M.make_model(mc["tag"], **params)


def _exp_frameflow(cfg):
    model = _build_model(cfg["model"])
    k = cfg["k"]
    T = float(cfg["T"])
    h = float(cfg.get("h", 5e-3))
    ensemble = int(cfg.get("ensemble", 20))
    seed = int(cfg.get("seed", 0))
    obs = _standard_observables(model, k)
    rep = ff.ergodicity_report(model, k, ensemble, T, obs, seed, h=h)
    rows = rep.rows()
    metrics = {}
    for i, lab in enumerate(rep.labels):
        metrics[lab] = {
            "mean_deviation": float(rep.mean_deviation[i, -1]),
            "space_average": float(rep.space_averages[i]),
        }
    passed = None
    if "max_deviation" in cfg:
        lim = float(cfg["max_deviation"])
        passed = all(float(rep.mean_deviation[i, -1]) <= lim
                     for i, lab in enumerate(rep.labels) if lab != "one")
    header = ("observable", "trajectory", "T", "time_avg", "space_avg", "deviation")
    return metrics, (header, rows), passed


def _standard_observables(model, k):
    obs = [ff.FrameObservable(lambda m, xs, covs: np.ones(xs.shape[0]), "one")]

    def base_fn(m, xs, covs):
        if m.tag in ("flat-torus", "kaehler-torus"):
            periods = m.params["periods"]
            return np.cos(2 * np.pi * (xs[:, 0] / periods[0] + 2 * xs[:, 1] / periods[1]))
        return xs[:, 0] ** 2 - xs[:, 1] ** 2

    obs.append(ff.FrameObservable(base_fn, "base"))
    if k >= 2:
        def fiber_fn(m, xs, covs):
            comps = tp.frame_components(m, xs, covs[:, 1])
            return comps[:, 0]

        obs.append(ff.FrameObservable(fiber_fn, "fiber"))
    return obs


def _exp_commutant(cfg):
    n = cfg["n"]
    seed = int(cfg.get("seed", 0))
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal(n)
    xi /= np.linalg.norm(xi)
    if cfg["algebra"] == "spinor":
        rep = cl.build_clifford(n)
        gens = cl.spin_stabilizer_generators(rep, xi)
        Pp, Pm = cl.projections_pm(rep, xi)
        restrict = {"plus": Pp, "minus": Pm}.get(cfg.get("restrict"))
        cands = {"P+": Pp, "P-": Pm, "Id": np.eye(rep.rank)}
        if rep.chirality is not None:
            cands["Gamma"] = rep.chirality
    else:
        p = cfg.get("p")
        if p is None:
            raise SchemaError("forms algebra requires p")
        fiber = ex.ExteriorFiber(n, p)
        gens = ex.so_stabilizer_generators(fiber, xi)
        P = ex.projection_P(fiber, xi)
        cands = {"P": P, "1-P": np.eye(fiber.dim) - P, "Id": np.eye(fiber.dim)}
        restrict = None
        which = cfg.get("restrict")
        if which == "P":
            restrict = P
        elif which in ("Pplus", "Pminus"):
            Pp, Pm = ex.projections_pm_forms(fiber, xi)
            cands["P+"] = Pp
            cands["P-"] = Pm
            restrict = Pp if which == "Pplus" else Pm
        elif 2 * p == n - 1:
            Pp, Pm = ex.projections_pm_forms(fiber, xi)
            cands["P+"] = Pp
            cands["P-"] = Pm
    res = commutant(gens, restriction=restrict)
    labels = match_labels(res, cands)
    payload = {"n": n, "dimension": res.dimension, "basis_labels": labels,
               "gap": res.gap if np.isfinite(res.gap) else None}
    if cfg["algebra"] == "forms":
        payload["p"] = cfg["p"]
    metrics = {"dimension": res.dimension}
    return metrics, payload, None


def _genus2_spinor_setup():
    model = M.genus2_hyperbolic()
    rep = cl.build_clifford(2)
    conn = tp.levi_civita_spinor(model, rep)
    symbols = [
        tp.scalar_symbol(lambda xs, xis: np.cos(2 * xs[:, 0]) + 0.5 * np.sin(3 * xs[:, 1]),
                         2, "f(x) Id"),
        tp.spinor_symbol(model, rep, fn=lambda xs, xis: np.cos(2 * xs[:, 0]),
                         label="f(x) gamma(xi)"),
        tp.constant_symbol(np.array([[0, 1], [1, 0]], dtype=complex), "gauge gamma_1"),
    ]
    return model, conn, symbols


def _exp_states(cfg):
    samples = int(cfg.get("samples", 2000))
    seed = int(cfg.get("seed", 0))
    h = float(cfg.get("h", 5e-3))
    t_values = [float(t) for t in cfg.get("t_values", [1.0, 5.0])]
    if cfg["connection"] == "genus2-spinor":
        model, conn, symbols = _genus2_spinor_setup()
        kinds = ["omega", "omega_plus", "omega_minus", "omega_1", "omega_2"]
    else:
        bundle = _parse_bundle(cfg.get("bundle"))
        model = bundle.base_model()
        conn = bundle.connection()
        symbols = [_default_bundle_symbol(bundle)]
        kinds = ["omega"]
    rows = []
    worst = 0.0
    for a in symbols:
        for kind in kinds:
            v0, e0 = tp.state_integrate(model, conn, kind, a, samples, seed)
            for t in t_values:
                bt = tp.beta_evolve(conn, a, t, h=h)
                v1, e1 = tp.state_integrate(model, conn, kind, bt, samples, seed)
                resid = abs(v1 - v0)
                band = 3.0 * float(np.hypot(e0, e1))
                worst = max(worst, resid / max(band, 1e-300))
                rows.append((a.label, kind, t, v0, e0, v1, e1, resid, band))
    metrics = {"worst_residual_over_3se": worst}
    header = ("symbol", "state", "t", "value_0", "stderr_0", "value_t",
              "stderr_t", "residual", "band_3se")
    return metrics, (header, rows), worst <= 1.0


def _exp_decay(cfg):
    seed = int(cfg.get("seed", 0))
    T_grid = [float(t) for t in cfg.get("T_grid", [1.0, 10.0, 100.0, 2000.0])]
    ntraj = int(cfg.get("trajectories", 48))
    h = float(cfg.get("h", 0.02))
    if cfg["connection"] == "genus2-spinor":
        model, conn, symbols = _genus2_spinor_setup()
        kind = cfg.get("state", "omega_plus")
    else:
        model = M.flat_torus(2, 2 * np.pi)
        conn = tp.flat_connection(model, 2)
        s3 = np.array([[1, 0], [0, -1]], dtype=complex)
        symbols = [tp.constant_symbol(s3, "const traceless"),
                   tp.SymbolField(lambda xs, xis: (xis[:, 0] / np.linalg.norm(xis, axis=1))[:, None, None] * s3,
                                  2, "xihat-dep")]
        kind = cfg.get("state", "omega")
    tables = tp.cesaro_and_decay(model, conn, kind, symbols, T_grid,
                                 trajectories=ntraj, seed=seed, h=h)
    rows = []
    metrics = {}
    for a, table in zip(symbols, tables):
        first = table[0][1]
        last = table[-1][1]
        metrics[a.label] = {"first": first, "last": last,
                            "ratio": last / max(first, 1e-300)}
        for T, est, err in table:
            rows.append((a.label, T, est, err))
    header = ("symbol", "T", "estimate", "stderr")
    return metrics, (header, rows), None


def _parse_matrix(entry, r):
    arr = np.asarray(entry, dtype=float)
    if arr.shape != (r, r, 2):
        raise SchemaError(f"matrix coefficient must be shape ({r},{r},2) [re,im]")
    return arr[..., 0] + 1j * arr[..., 1]


def _parse_bundle(bc):
    if bc is None:
        raise SchemaError("bundle model configuration required")
    n, r = bc["n"], bc["r"]
    A = []
    for comp in bc.get("A", [[] for _ in range(n)]):
        d = {}
        for item in comp:
            d[tuple(item["m"])] = _parse_matrix(item["matrix"], r)
        A.append(d)
    while len(A) < n:
        A.append({})
    V = {}
    for item in bc.get("V", []):
        V[tuple(item["m"])] = _parse_matrix(item["matrix"], r)
    return qz.TorusBundleModel(n, r, A, V, shift=float(bc.get("shift", 1.0)),
                               K=int(bc["K"]))


def _default_bundle_symbol(bundle):
    r = bundle.r
    base = np.eye(r, dtype=complex)
    if r >= 2:
        base = np.zeros((r, r), dtype=complex)
        base[0, 1] = base[1, 0] = 1.0
        base[0, 0] = 0.4
        base[1, 1] = -0.4
    return qz.trig_symbol({(0,) * bundle.n: base}, r, "const matrix")


def _exp_egorov(cfg):
    bundle = _parse_bundle(cfg["bundle"])
    b = _symbol_from_config(cfg.get("symbol"), bundle)
    rows = qz.egorov_compare(bundle, b, float(cfg["t"]),
                             [float(s) for s in cfg["shells"]])
    metrics = {f"shell_{int(s)}": {"max_rel_err": mx, "mean_rel_err": me}
               for s, mx, me in rows}
    passed = None
    if "max_rel_err" in cfg:
        passed = rows[-1][1] <= float(cfg["max_rel_err"])
    header = ("shell", "max_rel_err", "mean_rel_err")
    return metrics, (header, rows), passed


def _symbol_from_config(sc, bundle):
    if sc is None:
        return _default_bundle_symbol(bundle)
    modes = {}
    for item in sc["modes"]:
        modes[tuple(item["m"])] = _parse_matrix(item["matrix"], bundle.r)
    return qz.TrigSymbol(modes, bundle.r, sc.get("label", "symbol"))


def weyl_test_symbols(n, r):
    """Five standard scalar test symbols for Weyl-mean experiments."""
    def h4(u):
        return (u[:, 0] ** 4 + u[:, 1] ** 4)[:, None, None] * np.ones((1, 1, 1))

    def h2(u):
        return (u[:, 0] ** 2)[:, None, None] * np.ones((1, 1, 1))

    def hmix(u):
        return (u[:, 0] * u[:, 1] + 0.5)[:, None, None] * np.ones((1, 1, 1))

    zero = (0,) * n
    e1 = tuple([1] + [0] * (n - 1))
    me1 = tuple([-1] + [0] * (n - 1))
    return [
        qz.trig_symbol({zero: np.eye(1)}, 1, "identity"),
        qz.trig_symbol({e1: [[0.5]], me1: [[0.5]]}, 1, "cos_x1"),
        qz.trig_symbol({zero: h4}, 1, "xi4"),
        qz.trig_symbol({zero: h2}, 1, "xi1sq"),
        qz.trig_symbol({zero: hmix, e1: [[0.25]], me1: [[0.25]]}, 1, "mixed"),
    ]


def _exp_weyl(cfg):
    bundle = _parse_bundle(cfg["bundle"])
    sd = qz.SpectralData(qz.assemble_P(bundle))
    N = int(cfg.get("N", sd.safe_count()))
    rows = []
    metrics = {}
    for b in weyl_test_symbols(bundle.n, bundle.r):
        mean, target, dev = qz.weyl_mean(bundle, b, N, spectral=sd)
        rows.append((b.label, N, mean, target, dev))
        metrics[b.label] = {"mean": mean, "target": target, "deviation": dev}
    slope = qz.weyl_counting_exponent(sd)
    metrics["counting_exponent"] = slope
    passed = None
    if "max_deviation" in cfg:
        lim = float(cfg["max_deviation"])
        passed = all(dev <= lim * max(abs(target), 1.0)
                     for _, _, _, target, dev in rows)
        passed = passed and abs(slope - bundle.n / 2.0) <= lim * (bundle.n / 2.0)
    header = ("symbol", "N", "mean", "target", "deviation")
    return metrics, (header, rows), passed


def _exp_variance(cfg):
    bundle = _parse_bundle(cfg["bundle"])
    sd = qz.SpectralData(qz.assemble_P(bundle))
    Ns = cfg.get("Ns") or [100, sd.safe_count()]
    Ns = [min(int(v), sd.safe_count()) for v in Ns]

    def h4(u):
        return (u[:, 0] ** 4 + u[:, 1] ** 4)[:, None, None] * np.eye(bundle.r)

    b = qz.trig_symbol({(0,) * bundle.n: h4}, bundle.r, "xi4")
    rows = qz.qe_variance(bundle, b, Ns, spectral=sd)
    ratio = rows[-1][1] / max(rows[0][1], 1e-300)
    metrics = {"first": rows[0][1], "last": rows[-1][1], "ratio": ratio}
    header = ("N", "cesaro_abs_deviation")
    return metrics, (header, rows), None


def _exp_suite(cfg):
    from . import acceptance
    name = cfg["name"]
    seed = int(cfg.get("seed", 0))
    results = acceptance.run_suite(name, seed=seed)
    rows = [(r.criterion, r.description, "PASS" if r.passed else "FAIL",
             f"{r.value:.6g}", f"{r.limit:.6g}") for r in results]
    metrics = {f"criterion_{r.criterion}": {"passed": bool(r.passed)} for r in results}
    header = ("criterion", "check", "status", "value", "limit")
    return metrics, (header, rows), all(r.passed for r in results)


EXPERIMENTS = {
    "frameflow": _exp_frameflow,
    "commutant": _exp_commutant,
    "states": _exp_states,
    "decay": _exp_decay,
    "egorov": _exp_egorov,
    "weyl": _exp_weyl,
    "variance": _exp_variance,
    "suite": _exp_suite,
}


def run(config):
    """Validate, dispatch, and persist one experiment run."""
    exp = validate_config(config)
    t0 = time.perf_counter()
    metrics, payload, passed = EXPERIMENTS[exp](config)
    record = ResultRecord(config=config, metrics=metrics, passed=passed,
                          wall_clock=time.perf_counter() - t0, payload=payload)
    out = config.get("out")
    if out:
        if isinstance(payload, tuple):
            header, rows = payload
            _atomic_write(out, _csv(rows, header))
        else:
            _atomic_write(out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        _atomic_write(out + ".meta.json", record.to_json() + "\n")
    return record


def suite(name, seed=0, out=None):
    return run({"experiment": "suite", "name": name, "seed": seed,
                **({"out": out} if out else {})})
