"""Command line front end: ``qsc run``, ``qsc demo`` and ``qsc kernel-eval``.

Exit codes: 0 all checks pass, 1 at least one conclusive failure,
2 configuration or usage error, 3 only inconclusive outcomes.
"""
from __future__ import annotations

import argparse
import copy
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import jsonschema
import numpy as np

from . import numcore, semigroups, verify
from .errors import ConfigError, QSCError, UnknownDemo
from .kernels import CocycleKernel, StepFunction, partition
from .numcore import Tolerances
from .opspace import full_algebra, operator_space
from .serial import decode_matrix, decode_vector, encode_matrix, encode_vector, to_jsonable
from .verify import REGISTRY, Report, SampleSpec

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_INCONCLUSIVE = 0, 1, 2, 3

_complex = {"anyOf": [{"type": "number"},
                      {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}]}
_vector = {"anyOf": [_complex, {"type": "array", "items": _complex, "minItems": 1}]}
_matrix = {"anyOf": [_complex, {"type": "array", "items": {"type": "array", "items": _complex, "minItems": 1},
                                "minItems": 1}]}

_family = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["trivial", "product", "scaled", "counterexample", "weyl", "explicit"]},
        "target": {"enum": ["map", "operator"]},
        "c": _vector,
        "hamiltonian": _matrix,
        "jumps": {"type": "array", "items": _matrix},
        "check": {"type": "boolean"},
        "base": {"$ref": "#/$defs/family"},
        "generators": {
            "type": "array",
            "items": {"type": "object", "required": ["x", "y", "matrix"],
                      "properties": {"x": {"type": "integer", "minimum": 0},
                                     "y": {"type": "integer", "minimum": 0},
                                     "matrix": _matrix},
                      "additionalProperties": False},
        },
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {"family": _family},
    "type": "object",
    "required": ["family", "suites"],
    "properties": {
        "version": {"type": "string"},
        "space": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": ["full", "system", "space", "cstar"]},
                           "m": {"type": "integer", "minimum": 1},
                           "m_in": {"type": "integer", "minimum": 1},
                           "basis": {"type": "array", "items": _matrix, "minItems": 1}},
            "additionalProperties": False,
        },
        "noise": {
            "type": "object",
            "required": ["T"],
            "properties": {"d": {"type": "integer", "minimum": 1},
                           "T": {"type": "array", "items": _vector, "minItems": 1}},
            "additionalProperties": False,
        },
        "family": {"$ref": "#/$defs/family"},
        "suites": {
            "type": "array", "minItems": 1,
            "items": {"oneOf": [
                {"enum": sorted(REGISTRY)},
                {"type": "object", "required": ["name"],
                 "properties": {"name": {"enum": sorted(REGISTRY)},
                                "property": {"type": "string"},
                                "zeta": _vector,
                                "t_grid": {"type": "array", "items": {"type": "number", "minimum": 0}},
                                "require_nondegenerate": {"type": "boolean"}},
                 "additionalProperties": False},
            ]},
        },
        "sample": {
            "type": "object",
            "properties": {"n_max": {"type": "integer", "minimum": 1},
                           "t_grid": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                           "trials": {"type": "integer", "minimum": 1},
                           "seed": {"type": "integer", "minimum": 0}},
            "additionalProperties": False,
        },
        "tolerances": {
            "type": "object",
            "properties": {k: {"type": "number", "minimum": 0} for k in ("eig_tol", "eq_tol", "pinv_tol")},
            "additionalProperties": False,
        },
        "output": {"type": "string"},
    },
    "additionalProperties": False,
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["version", "conclusion", "reports"],
    "properties": {
        "version": {"type": "string"},
        "conclusion": {"enum": ["pass", "fail", "inconclusive"]},
        "reports": {"type": "array", "items": {
            "type": "object",
            "required": ["verifier", "conclusion", "checks", "spec"],
            "properties": {
                "verifier": {"type": "string"},
                "conclusion": {"enum": ["pass", "fail", "inconclusive"]},
                "checks": {"type": "array", "items": {
                    "type": "object", "required": ["label", "passed", "worst_violation", "witness"],
                    "properties": {"label": {"type": "string"}, "passed": {"type": "boolean"},
                                   "worst_violation": {"type": "number"}}}},
                "spec": {"type": "object"},
            }}},
    },
}


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path) if path else "/"


@dataclass
class Config:
    version: str
    space: dict
    T: np.ndarray
    family: dict
    suites: list
    sample: SampleSpec = field(default_factory=SampleSpec)
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: str | None = None

    def to_dict(self) -> dict:
        out = {
            "version": self.version,
            "space": copy.deepcopy(self.space),
            "noise": {"d": int(self.T.shape[1]), "T": [encode_vector(x) for x in self.T]},
            "family": copy.deepcopy(self.family),
            "suites": copy.deepcopy(self.suites),
            "sample": {**asdict(self.sample), "t_grid": list(self.sample.t_grid)},
            "tolerances": asdict(self.tolerances),
        }
        if self.output is not None:
            out["output"] = self.output
        return out


def parse_config(raw: dict) -> Config:
    """Validate a config dictionary; errors carry a JSON pointer to the offending entry."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: _pointer(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(e.message, _pointer(e.absolute_path))
    fam = copy.deepcopy(raw["family"])
    if fam["kind"] == "counterexample":
        T = np.array([[0.0], [1.0]], dtype=complex)
        if "noise" in raw:
            given = [decode_vector(v) for v in raw["noise"]["T"]]
            if len(given) != 2 or any(g.shape != (1,) for g in given) or \
                    not np.allclose(np.array(given), T):
                raise ConfigError("the counterexample family uses T = [0, 1] in C^1", "/noise/T")
    else:
        if "noise" not in raw:
            raise ConfigError("noise.T is required", "/noise")
        try:
            vecs = [decode_vector(v) for v in raw["noise"]["T"]]
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc), "/noise/T")
        d = raw["noise"].get("d", vecs[0].size)
        for i, v in enumerate(vecs):
            if v.size != d:
                raise ConfigError(f"vector of dimension {v.size}, expected d = {d}", f"/noise/T/{i}")
        T = np.array(vecs, dtype=complex)
        if np.any(T[0] != 0):
            raise ConfigError("T[0] must be the zero vector", "/noise/T/0")
        for i in range(len(T)):
            for j in range(i):
                if np.allclose(T[i], T[j], atol=1e-12, rtol=0):
                    raise ConfigError(f"T[{i}] repeats T[{j}]", f"/noise/T/{i}")
    suites = [{"name": s} if isinstance(s, str) else dict(s) for s in raw["suites"]]
    for i, s in enumerate(suites):
        if s["name"] == "dichotomy_scan" and "property" not in s:
            raise ConfigError("dichotomy_scan needs a property", f"/suites/{i}")
        if s["name"] == "verify_global_rank_one" and "zeta" not in s:
            raise ConfigError("verify_global_rank_one needs zeta", f"/suites/{i}")
    try:
        sample = SampleSpec(**{**raw.get("sample", {}),
                               "t_grid": tuple(raw.get("sample", {}).get("t_grid", SampleSpec().t_grid))})
        tols = Tolerances(**raw.get("tolerances", {}))
    except ValueError as exc:
        raise ConfigError(str(exc), "/sample")
    space = copy.deepcopy(raw.get("space", {"kind": "full", "m": 1}))
    return Config(raw.get("version", "1"), space, T, fam, suites, sample, tols, raw.get("output"))


def load_config(path: str) -> Config:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", "/")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "/")
    return parse_config(raw)


def build_space(spec: dict, tol: Tolerances):
    kind = spec["kind"]
    if kind == "full":
        return full_algebra(spec.get("m", 1), spec.get("m_in"))
    if "basis" not in spec:
        raise ConfigError(f"space kind {kind!r} needs a basis", "/space/basis")
    try:
        V = operator_space([decode_matrix(b) for b in spec["basis"]], tol)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), "/space/basis")
    if kind == "system" and not V.is_system:
        raise ConfigError("basis does not span an operator system", "/space/basis")
    if kind == "cstar" and (not V.is_adjoint_closed or V.is_system):
        raise ConfigError("cstar spaces must be adjoint-closed and must not contain the identity", "/space/basis")
    return V


@dataclass
class Subject:
    """What the verifiers run on: a map family, an operator family, or a global generator."""

    family: semigroups.AssociatedFamily | None = None
    operator_family: semigroups.OperatorFamily | None = None
    global_generator: semigroups.Generator | None = None
    T: np.ndarray | None = None


def _build_family(fam: dict, V, T, tol, path="/family"):
    kind = fam["kind"]
    target = fam.get("target", "operator" if kind == "weyl" else "map")
    if kind == "trivial":
        if target == "operator":
            return semigroups.trivial_operator_family(V.m_out, T)
        return semigroups.trivial_family(V, T)
    if kind == "product":
        if not (V.is_full_algebra and V.m_out == V.m_in):
            raise ConfigError("product families need a full square matrix algebra", "/space")
        H = decode_matrix(fam["hamiltonian"]) if "hamiltonian" in fam else None
        S = semigroups.lindblad_generator(V.m_out, H, [decode_matrix(K) for K in fam.get("jumps", [])])
        return semigroups.product_family(S, T, check=fam.get("check", True), tol=tol)
    if kind == "scaled":
        if "base" not in fam or "c" not in fam:
            raise ConfigError("scaled families need 'base' and 'c'", path)
        base = _build_family(fam["base"], V, T, tol, path + "/base")
        c = decode_vector(fam["c"])
        if c.size != 1:
            raise ConfigError("scale c must be a number", path + "/c")
        c = c[0] if c[0].imag else c[0].real
        return semigroups.contraction_scaled(base, c)
    if kind == "weyl":
        c = decode_vector(fam.get("c", [0.0] * T.shape[1]))
        if c.size != T.shape[1]:
            raise ConfigError(f"c has dimension {c.size}, noise dimension is {T.shape[1]}", path + "/c")
        return semigroups.weyl_scalar_family(c, T)
    if kind == "explicit":
        gens = {}
        size = V.dim if target == "map" else V.m_out
        for i, g in enumerate(fam.get("generators", [])):
            M = decode_matrix(g["matrix"])
            if M.shape != (size, size):
                raise ConfigError(f"generator of shape {M.shape}, expected {(size, size)}",
                                  f"{path}/generators/{i}/matrix")
            if g["x"] >= len(T) or g["y"] >= len(T):
                raise ConfigError("generator index outside T", f"{path}/generators/{i}")
            gens[g["x"], g["y"]] = M
        missing = [(i, j) for i in range(len(T)) for j in range(len(T)) if (i, j) not in gens]
        if missing:
            raise ConfigError(f"missing generators for pairs {missing}", path + "/generators")
        if target == "operator":
            return semigroups.OperatorFamily(V.m_out, T, gens, label="explicit")
        return semigroups.AssociatedFamily(V, T, gens, label="explicit")
    raise ConfigError(f"family kind {kind!r} cannot be nested here", path)


def build_subject(cfg: Config) -> Subject:
    fam = cfg.family
    if fam["kind"] == "counterexample":
        c = decode_vector(fam.get("c", 0.5))[0].real
        L, meta = semigroups.counterexample_family(c)
        return Subject(global_generator=L, T=meta["T"])
    V = build_space(cfg.space, cfg.tolerances)
    try:
        F = _build_family(fam, V, cfg.T, cfg.tolerances)
    except QSCError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), "/family")
    if isinstance(F, semigroups.OperatorFamily):
        return Subject(operator_family=F, T=F.T)
    return Subject(family=F, T=F.T)


def _need(value, what, name):
    if value is None:
        raise ConfigError(f"{name} needs {what}", "/suites")
    return value


def run_suite(subject: Subject, suite: dict, spec: SampleSpec, tol: Tolerances) -> Report:
    name = suite["name"]
    fn = REGISTRY[name]
    if name in ("verify_prop_PP", "verify_theorem_Q", "verify_theorem_S"):
        return fn(_need(subject.family, "a map family", name), spec, tol)
    if name == "verify_cstar_interval":
        return fn(_need(subject.family, "a map family", name), spec, tol,
                  require_nondegenerate=suite.get("require_nondegenerate", False))
    if name in ("verify_theorem_W", "verify_left_contraction"):
        return fn(_need(subject.operator_family, "an operator family", name), spec, tol)
    if name in ("verify_theorem_R", "verify_global_rank_one"):
        P = subject.global_generator
        if P is None:
            P = semigroups.global_generator(_need(subject.family, "a map family or global generator", name))
        if name == "verify_theorem_R":
            return fn(P, subject.T, spec, tol)
        return fn(P, subject.T, decode_vector(suite["zeta"]), spec, tol)
    # dichotomy scan
    if subject.operator_family is not None and suite["property"] in verify.WEYL_PROPERTIES \
            and "weyl_c" in subject.operator_family.metadata:
        target = subject.operator_family
    elif subject.family is not None:
        target = CocycleKernel(subject.family)
    elif subject.operator_family is not None:
        target = CocycleKernel(subject.operator_family)
    else:
        raise ConfigError("dichotomy_scan needs a family", "/suites")
    return fn(target, suite["property"], tuple(suite.get("t_grid", verify.DICHOTOMY_GRID)), spec, tol)


def run_all(subject: Subject, cfg: Config, threads: int = 1) -> list:
    def one(suite):
        try:
            return run_suite(subject, suite, cfg.sample, cfg.tolerances)
        except ConfigError:
            raise
        except QSCError as exc:
            raise ConfigError(f"{suite['name']}: {exc}", "/suites")

    if threads <= 1:
        return [one(s) for s in cfg.suites]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, cfg.suites))


def overall(reports) -> str:
    conclusions = [r.conclusion for r in reports]
    if "fail" in conclusions:
        return "fail"
    if "inconclusive" in conclusions:
        return "inconclusive"
    return "pass"


def exit_code(conclusion: str) -> int:
    return {"pass": EXIT_PASS, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}[conclusion]


def report_document(cfg: Config, reports) -> dict:
    return {"version": cfg.version, "conclusion": overall(reports), "config": to_jsonable(cfg.to_dict()),
            "reports": [r.to_dict() for r in reports]}


def _print_reports(reports):
    for r in reports:
        print(r.summary())
        for label, v in r.checks:
            if not v.passed and v.witness:
                w = {k: v.witness[k] for k in ("pair", "t", "x", "ratio", "min_eig", "commutator_norm")
                     if k in v.witness}
                print(f"  witness for {label}: {json.dumps(to_jsonable(w), sort_keys=True)}")


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.sample = SampleSpec(cfg.sample.n_max, cfg.sample.t_grid, cfg.sample.trials, args.seed)
    out = args.out or cfg.output
    reports = run_all(build_subject(cfg), cfg, args.threads)
    doc = report_document(cfg, reports)
    if out:
        with open(out, "w") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
            fh.write("\n")
    _print_reports(reports)
    print(f"overall: {doc['conclusion']}")
    return exit_code(doc["conclusion"])


def cmd_kernel_eval(args) -> int:
    cfg = load_config(args.config)
    subject = build_subject(cfg)
    F = subject.family if subject.family is not None else subject.operator_family
    if F is None:
        raise ConfigError("kernel-eval needs a map or operator family", "/family")
    try:
        f = StepFunction.from_json(json.loads(args.f))
        g = StepFunction.from_json(json.loads(args.g))
        a_raw = json.loads(args.a)
        refine = json.loads(args.refine) if args.refine else []
    except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad argument: {exc}", "/")
    K = CocycleKernel(F)
    a = decode_vector(a_raw).reshape(-1, 1) if isinstance(F, semigroups.OperatorFamily) else decode_matrix(a_raw)
    if a.shape != K.space.shape:
        raise ConfigError(f"a has shape {a.shape}, expected {K.space.shape}", "/")
    result = K.eval(f, g, args.t, a, refine)
    doc = {"partition": partition([f, g], args.t, refine).tolist(),
           "factors": [[i, j, dt] for i, j, dt in K.factors(f, g, args.t, refine)],
           "result": encode_matrix(result)}
    print(json.dumps(doc, sort_keys=True))
    return EXIT_PASS


# demos

def _demo_config(name: str) -> dict:
    sample = {"n_max": 3, "trials": 40, "seed": 0}
    T3 = [[0, 0], [1, 0], [0, 1]]
    if name == "trivial":
        return {"space": {"kind": "full", "m": 1}, "noise": {"d": 1, "T": [[0, 0], [1, 0]]},
                "family": {"kind": "trivial"}, "suites": ["verify_prop_PP", "verify_theorem_Q", "verify_theorem_S"],
                "sample": sample}
    if name == "product-dephasing":
        return {"space": {"kind": "full", "m": 2}, "noise": {"d": 1, "T": T3},
                "family": {"kind": "product", "jumps": [[[1, 0], [0, -1]]]},
                "suites": ["verify_prop_PP", "verify_theorem_Q", "verify_theorem_R",
                           {"name": "dichotomy_scan", "property": "unital"}],
                "sample": sample}
    if name == "counterexample":
        return {"family": {"kind": "counterexample", "c": 0.5}, "suites": ["verify_theorem_R"], "sample": sample}
    if name == "weyl":
        return {"space": {"kind": "full", "m": 1}, "noise": {"d": 1, "T": T3},
                "family": {"kind": "weyl", "c": [[0.7, 0.2]]},
                "suites": ["verify_left_contraction", {"name": "dichotomy_scan", "property": "isometric"}],
                "sample": sample}
    if name == "violator":
        return {"space": {"kind": "full", "m": 1}, "noise": {"d": 1, "T": [[0, 0], [1, 0]]},
                "family": {"kind": "scaled", "c": -1, "base": {"kind": "trivial"}},
                "suites": ["verify_prop_PP", "verify_theorem_Q", "verify_theorem_S"], "sample": sample}
    raise UnknownDemo(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")


DEMOS = {
    "trivial": ("family exp(-t chi(x, y)) id of the cocycle a -> a (x) I", "pass"),
    "product-dephasing": ("dephasing Lindblad semigroup times the coherent Grammian", "pass"),
    "counterexample": ("unital CP semigroup on Mat_2 without Schur-action", "fail"),
    "weyl": ("scalar semigroups of the Weyl cocycle W(c 1_[0,t))", "pass"),
    "violator": ("trivial family scaled by exp(+t): not a contraction", "fail"),
}


def _fmt(M) -> str:
    return np.array2string(np.real_if_close(np.asarray(M)), precision=5, suppress_small=True)


def _demo_preamble(name: str, subject: Subject):
    if name == "counterexample":
        L, meta = semigroups.counterexample_family(0.5)
        P1 = semigroups.evolve(L, 1.0)
        print("P_1(box_2) =")
        print(_fmt(P1(numcore.box(2))))
        print("P_1(p_0) =")
        print(_fmt(P1(np.diag([1.0, 0.0]))))
    elif name == "weyl":
        F = subject.operator_family
        c = F.metadata["weyl_c"]
        print("   t    |T^00_t|      exp(-t|c|^2/2)")
        for t in (0.25, 0.5, 1.0, 2.0):
            print(f"{t:5.2f}  {abs(F.op(0, 0, t)[0, 0]):.10f}  {np.exp(-t * np.vdot(c, c).real / 2):.10f}")
    elif name == "trivial":
        F = subject.family
        print("   t    ||P^x_t(I (x) box) - I (x) w||   x = all of T")
        x = list(range(F.size))
        for t in (0.25, 0.5, 1.0, 2.0):
            P = semigroups.schur_tuple(F, x, t)
            d = numcore.op_norm(P(numcore.box(len(x))) - F.gram(x, t))
            print(f"{t:5.2f}  {d:.3e}")


def cmd_demo(args) -> int:
    if args.name not in DEMOS:
        raise UnknownDemo(f"unknown demo {args.name!r}; choose from {', '.join(DEMOS)}")
    title, expected = DEMOS[args.name]
    print(f"demo {args.name}: {title}")
    cfg = parse_config(_demo_config(args.name))
    subject = build_subject(cfg)
    _demo_preamble(args.name, subject)
    reports = run_all(subject, cfg)
    _print_reports(reports)
    got = overall(reports)
    print(f"overall: {got} (expected {expected})")
    return EXIT_PASS if got == expected else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsc", description="Verify semigroup families of quantum stochastic cocycles.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the suites listed in a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--out")
    d = sub.add_parser("demo", help="run a bundled demonstration")
    d.add_argument("name")
    k = sub.add_parser("kernel-eval", help="evaluate k^{f,g}_t(a) through the semigroup decomposition")
    k.add_argument("--config", required=True)
    k.add_argument("--f", required=True, help="step function as JSON")
    k.add_argument("--g", required=True, help="step function as JSON")
    k.add_argument("--t", required=True, type=float)
    k.add_argument("--a", required=True, help="matrix (or vector for operator families) as JSON")
    k.add_argument("--refine", help="extra partition points as a JSON list")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    handlers = {"run": cmd_run, "demo": cmd_demo, "kernel-eval": cmd_kernel_eval}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error at {exc.path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnknownDemo as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QSCError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
