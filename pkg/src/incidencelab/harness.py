"""Experiment harness: flat-file configuration, seeded instance generation,
sweep execution over a worker pool, and CSV/JSON emission.

Every experiment produces one row per (modulus, trial) plus a summary row,
against a fixed column schema whose header tags each column as int, float,
rational, or str.  Rows are derived only from (seed, experiment, modulus,
trial), so reruns and different worker counts emit byte-identical files.
Hard checks (identities, proven inequalities, oracle equivalences) feed the
hard_ok column and the process exit status; comparison quantities for the
asymptotic claims are report-only columns and never fail a run.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product as _cartesian

import numpy as np

from .charsums import (
    bilinear_form,
    bilinear_form_direct,
    energy_t2k,
    enumerate_gl2,
    group_twisted_sum,
    hyperbola_group,
    hyperbola_sum,
    intersection_char_sum,
    kloosterman,
    matrix_family,
    projective_lift_check,
    twisted_bound_rhs,
)
from .errors import Error, InvalidParamsError
from .incidence import IncidenceInstance, check_inequality, second_eigenvalue_bound
from .modring import coprime_tuples, is_prime, make_character, units
from .setops import point_set
from .spectra import build_matrix, spectrum_report
from .zaremba import (
    cf_expand,
    cf_value,
    energy_bound_report,
    find_in_subgroup,
    full_group,
    interval_union,
    minimal_feasible_bound,
    mult_energy,
    quadratic_residues,
    subgroup,
    zaremba_set,
)

EXPERIMENTS = (
    "dot-incidence",
    "det-incidence",
    "crossratio-incidence",
    "spectrum",
    "kloosterman",
    "bilinear",
    "hyperbola",
    "lift-energy",
    "intersection-charsum",
    "zaremba",
    "energy",
)

# experiments whose mathematics lives over a prime field
_PRIME_ONLY = frozenset(EXPERIMENTS) - {"dot-incidence", "det-incidence", "spectrum"}

_PARAM_DEFAULTS = {
    "dot-incidence": {"n": 2, "lam": "random", "size_a": 0, "size_b": 0},
    "det-incidence": {"d": 2, "lam": "random", "size_a": 0, "size_b": 0},
    "crossratio-incidence": {"lam": "random", "size_a": 0, "size_b": 0},
    "spectrum": {"kind": "dot", "n": 2, "lam": 1, "cluster_tol": 0.0},
    "kloosterman": {},
    "bilinear": {"size_a": 0, "size_b": 0, "weights": "disk"},
    "hyperbola": {"size_a": 0, "size_b": 0, "size_x": 0, "size_y": 0,
                  "weights": "disk"},
    "lift-energy": {"size_a": 0, "size_b": 0, "size_g": 0, "weights": "disk",
                      "k": 2},
    "intersection-charsum": {"variant": "multiplicative", "structure": "random",
                             "size_a": 0, "n_len": 5, "size_lambda": 4},
    "zaremba": {"m_bound": 5, "subgroup": "full", "c0": 1.0, "c_star": 1.0,
                "n_value": 1},
    "energy": {"kind": "residue", "size_z": 0, "w": 0.8, "n_len": 4},
}

DEFAULT_MATRIX_CAP = 5000


@dataclass(frozen=True)
class ExperimentConfig:
    """One fully resolved sweep: experiment, moduli, trial count, seed,
    experiment parameters, and output settings."""

    experiment: str
    moduli: tuple
    trials: int
    seed: int
    params: dict
    out: str | None = None
    fmt: str = "csv"
    threads: int = 1
    matrix_cap: int = DEFAULT_MATRIX_CAP


@dataclass(frozen=True)
class ExperimentRecord:
    """One emitted row plus its wall time.

    Wall time is kept only in memory: it never enters the CSV/JSON, which
    must be byte-identical across reruns.
    """

    values: dict
    wall_time: float


def _coerce_scalar(text):
    if isinstance(text, str):
        s = text.strip()
        low = s.lower()
        if low == "true":
            return True
        if low == "false":
            return False
        try:
            return int(s)
        except ValueError:
            pass
        try:
            return float(s)
        except ValueError:
            return s
    return text


def _coerce_value(text):
    if isinstance(text, str) and "," in text:
        return tuple(_coerce_scalar(part) for part in text.split(","))
    return _coerce_scalar(text)


def parse_config_text(text: str) -> dict:
    """Flat `key = value` lines; lists are comma-separated; # starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParamsError(f"config line {lineno} is not `key = value`: {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = _coerce_value(value.strip())
    return out


def load_config_file(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def make_config(mapping=None, **overrides) -> ExperimentConfig:
    """Validate a flat mapping into an ExperimentConfig.

    Unknown parameter keys are rejected rather than ignored, so a typo in a
    config file fails fast instead of silently running defaults.
    """
    merged = dict(mapping or {})
    merged.update(overrides)
    merged = {k: _coerce_value(v) for k, v in merged.items()}

    experiment = merged.pop("experiment", None)
    if experiment not in EXPERIMENTS:
        raise InvalidParamsError(
            f"experiment must be one of {', '.join(EXPERIMENTS)}, got {experiment!r}")

    moduli = merged.pop("moduli", (7,))
    if isinstance(moduli, (int, bool)):
        moduli = (int(moduli),)
    moduli = tuple(int(q) for q in moduli)
    if any(q < 2 for q in moduli):
        raise InvalidParamsError(f"moduli must all be >= 2, got {moduli}")
    if experiment in _PRIME_ONLY:
        bad = [q for q in moduli if not is_prime(q) or q < 3]
        if bad:
            raise InvalidParamsError(
                f"{experiment} needs odd prime moduli, got {bad}")
    if experiment == "det-incidence" and any(q % 2 == 0 for q in moduli):
        raise InvalidParamsError("determinant counting needs odd moduli")

    trials = int(merged.pop("trials", 5))
    if trials < 1:
        raise InvalidParamsError(f"trials must be >= 1, got {trials}")
    seed = int(merged.pop("seed", 0))
    if not 0 <= seed < 2 ** 64:
        raise InvalidParamsError(f"seed must fit in 64 bits, got {seed}")
    out = merged.pop("out", None)
    fmt = merged.pop("format", "csv")
    if fmt not in ("csv", "json"):
        raise InvalidParamsError(f"format must be csv or json, got {fmt!r}")
    threads = int(merged.pop("threads", 1))
    if threads < 1:
        raise InvalidParamsError(f"threads must be >= 1, got {threads}")
    matrix_cap = int(merged.pop("matrix_cap", DEFAULT_MATRIX_CAP))
    if matrix_cap < 1:
        raise InvalidParamsError(f"matrix cap must be >= 1, got {matrix_cap}")

    params = dict(_PARAM_DEFAULTS[experiment])
    unknown = set(merged) - set(params)
    if unknown:
        raise InvalidParamsError(
            f"unknown keys for {experiment}: {', '.join(sorted(unknown))}")
    user_keys = set(merged)
    params.update(merged)
    if (experiment == "spectrum" and params["kind"] == "crossratio"
            and "lam" not in user_keys):
        params["lam"] = "random"  # the dot/det default target 1 is degenerate here
    if experiment == "spectrum" and params["kind"] not in ("dot", "det", "crossratio"):
        raise InvalidParamsError(f"spectrum kind must be dot/det/crossratio, "
                                 f"got {params['kind']!r}")
    if experiment == "spectrum" and params["kind"] == "crossratio":
        bad = [q for q in moduli if not is_prime(q)]
        if bad:
            raise InvalidParamsError(f"cross-ratio spectra need prime moduli, got {bad}")
    if experiment == "lift-energy" and params["k"] not in (2, 3):
        raise InvalidParamsError(f"k must be 2 or 3, got {params['k']}")
    if experiment == "intersection-charsum" and params["variant"] not in (
            "multiplicative", "shifted"):
        raise InvalidParamsError(f"variant must be multiplicative or shifted, "
                                 f"got {params['variant']!r}")
    return ExperimentConfig(experiment, moduli, trials, seed, params,
                            None if out in (None, "") else str(out),
                            fmt, threads, matrix_cap)


# ---------------------------------------------------------------------------
# seeded sampling


def trial_rng(seed: int, experiment: str, q: int, trial: int) -> random.Random:
    """Independent generator per (seed, experiment, modulus, trial), so the
    trial grid can be evaluated in any order."""
    key = f"{seed}:{experiment}:{q}:{trial}".encode()
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big"))


def disk_weight(rng: random.Random) -> complex:
    """One weight uniform on the closed unit disk (area measure)."""
    r = math.sqrt(rng.random())
    theta = 2.0 * math.pi * rng.random()
    return complex(r * math.cos(theta), r * math.sin(theta))


def disk_weights(rng: random.Random, elements) -> dict:
    return {el: disk_weight(rng) for el in sorted(elements)}


def _weights_or_none(rng, elements, mode):
    if mode == "unit":
        return None
    if mode == "disk":
        return disk_weights(rng, elements)
    raise InvalidParamsError(f"weights must be disk or unit, got {mode!r}")


def _sample_size(rng, requested, limit, label):
    if requested:
        if not 1 <= requested <= limit:
            raise InvalidParamsError(
                f"{label} = {requested} is outside the domain size {limit}")
        return requested
    return rng.randint(1, limit)


@lru_cache(maxsize=32)
def _coprime_domain(q: int, n: int) -> tuple:
    return tuple(coprime_tuples(q, n))


@lru_cache(maxsize=32)
def _full_domain(q: int, width: int) -> tuple:
    if q ** width > 10 ** 6:
        raise InvalidParamsError(f"domain of size {q}^{width} is too large to sample")
    if width == 1:
        return tuple(range(q))
    return tuple(_cartesian(range(q), repeat=width))


def _sample_dot(rng, q, p):
    domain = _coprime_domain(q, p["n"])
    sa = _sample_size(rng, p["size_a"], len(domain), "size_a")
    sb = _sample_size(rng, p["size_b"], len(domain), "size_b")
    lam = p["lam"] if isinstance(p["lam"], int) else rng.choice(units(q))
    return {"a": tuple(sorted(rng.sample(domain, sa))),
            "b": tuple(sorted(rng.sample(domain, sb))),
            "lam": lam}


def _sample_det(rng, q, p):
    d = p["d"]
    if d < 2:
        raise InvalidParamsError(f"determinant size must be >= 2, got {d}")
    dom_a = _full_domain(q, d)
    dom_b = _full_domain(q, d * (d - 1))
    sa = _sample_size(rng, p["size_a"], len(dom_a), "size_a")
    sb = _sample_size(rng, p["size_b"], len(dom_b), "size_b")
    lam = p["lam"] if isinstance(p["lam"], int) else rng.choice(units(q))
    return {"a": tuple(sorted(rng.sample(dom_a, sa))),
            "b": tuple(sorted(rng.sample(dom_b, sb))),
            "lam": lam}


def _sample_crossratio(rng, q, p):
    domain = _full_domain(q, 2)
    sa = _sample_size(rng, p["size_a"], len(domain), "size_a")
    sb = _sample_size(rng, p["size_b"], len(domain), "size_b")
    lam = p["lam"] if isinstance(p["lam"], int) else rng.randrange(2, q)
    return {"a": tuple(sorted(rng.sample(domain, sa))),
            "b": tuple(sorted(rng.sample(domain, sb))),
            "lam": lam}


def _sample_spectrum(rng, q, p):
    lam = p["lam"]
    if not isinstance(lam, int):
        if p["kind"] == "crossratio":
            lam = rng.randrange(2, q)
        else:
            lam = rng.choice(units(q))
    return {"lam": lam}


def _sample_kloosterman(rng, q, p):
    case = rng.choice(("gauss", "weil-principal", "weil-twisted", "complete"))
    if case == "gauss":
        index = rng.randrange(1, q - 1)
        n, m = rng.randrange(1, q), 0
    elif case == "weil-principal":
        index = 0
        n, m = rng.randrange(1, q), rng.randrange(1, q)
    elif case == "weil-twisted":
        index = rng.randrange(1, q - 1)
        n, m = 0, 0
        while (n, m) == (0, 0):
            n, m = rng.randrange(q), rng.randrange(q)
    else:
        index = rng.randrange(q - 1)
        n, m = 0, 0
    return {"char_index": index, "coef_n": n, "coef_m": m, "reference_kind": case}


def _sample_bilinear(rng, q, p):
    sa = _sample_size(rng, p["size_a"], q, "size_a")
    sb = _sample_size(rng, p["size_b"], q, "size_b")
    pos_a = sorted(rng.sample(range(q), sa))
    pos_b = sorted(rng.sample(range(q), sb))
    alpha = np.zeros(q, dtype=complex)
    beta = np.zeros(q, dtype=complex)
    for pos in pos_a:
        alpha[pos] = disk_weight(rng) if p["weights"] == "disk" else 1.0
    for pos in pos_b:
        beta[pos] = disk_weight(rng) if p["weights"] == "disk" else 1.0
    return {"char_index": rng.randrange(q - 1), "alpha": alpha, "beta": beta,
            "support_a": sa, "support_b": sb}


def _sample_hyperbola(rng, q, p):
    sizes = {}
    sets = {}
    for name in ("a", "b", "x", "y"):
        sizes[name] = _sample_size(rng, p[f"size_{name}"], q, f"size_{name}")
        sets[name] = tuple(sorted(rng.sample(range(q), sizes[name])))
    return {"char_index": rng.randrange(q - 1),
            "a": sets["a"], "b": sets["b"], "x": sets["x"], "y": sets["y"],
            "weights_a": _weights_or_none(rng, sets["a"], p["weights"]),
            "weights_b": _weights_or_none(rng, sets["b"], p["weights"])}


def _sample_lift_energy(rng, q, p):
    ambient = enumerate_gl2(q)
    limit = min(40, len(ambient))
    sg = _sample_size(rng, p["size_g"], limit, "size_g")
    sa = _sample_size(rng, p["size_a"], q, "size_a")
    sb = _sample_size(rng, p["size_b"], q, "size_b")
    a = tuple(sorted(rng.sample(range(q), sa)))
    b = tuple(sorted(rng.sample(range(q), sb)))
    return {"char_index": rng.randrange(q - 1),
            "g": tuple(sorted(rng.sample(ambient, sg))),
            "a": a, "b": b,
            "weights_a": _weights_or_none(rng, a, p["weights"]),
            "weights_b": _weights_or_none(rng, b, p["weights"])}


def _sample_intersection(rng, q, p):
    if p["structure"] == "random":
        sa = _sample_size(rng, p["size_a"], q - 1, "size_a")
        return {"a": tuple(sorted(rng.sample(range(1, q), sa))),
                "n_len": 0, "lambda_size": 0, "char_index": rng.randrange(1, q - 1)}
    if p["structure"] != "interval-union":
        raise InvalidParamsError(
            f"structure must be random or interval-union, got {p['structure']!r}")
    n_len = p["n_len"]
    lam_size = p["size_lambda"]
    if n_len * lam_size >= q:
        raise InvalidParamsError(
            f"{lam_size} translates of length {n_len} cannot be disjoint mod {q}")
    for _ in range(500):
        translates = point_set(q, rng.sample(range(q), lam_size))
        try:
            union = interval_union(translates, n_len)
        except Error:
            continue
        return {"a": tuple(union.points.sorted_elements()), "n_len": n_len,
                "lambda_size": lam_size, "char_index": rng.randrange(1, q - 1)}
    raise InvalidParamsError(
        f"could not place {lam_size} disjoint translates of length {n_len} mod {q}")


def _sample_zaremba(rng, q, p):
    return {}


def _sample_energy(rng, q, p):
    if p["kind"] == "subgroup":
        g = full_group(q)
        divisors = sorted(d for d in range(1, q) if (q - 1) % d == 0)
        order = rng.choice(divisors)
        gamma = subgroup(q, pow(g.generator, (q - 1) // order, q))
        return {"kind": "subgroup", "z": tuple(sorted(gamma.elements)),
                "subgroup_order": len(gamma)}
    if p["kind"] != "residue":
        raise InvalidParamsError(f"energy kind must be residue or subgroup, "
                                 f"got {p['kind']!r}")
    limit = min(q - 1, 40)
    sz = _sample_size(rng, p["size_z"], limit, "size_z")
    return {"kind": "residue", "z": tuple(sorted(rng.sample(range(1, q), sz))),
            "subgroup_order": 0}


_SAMPLERS = {
    "dot-incidence": _sample_dot,
    "det-incidence": _sample_det,
    "crossratio-incidence": _sample_crossratio,
    "spectrum": _sample_spectrum,
    "kloosterman": _sample_kloosterman,
    "bilinear": _sample_bilinear,
    "hyperbola": _sample_hyperbola,
    "lift-energy": _sample_lift_energy,
    "intersection-charsum": _sample_intersection,
    "zaremba": _sample_zaremba,
    "energy": _sample_energy,
}


def random_instance(seed: int, params) -> dict:
    """Sets, weights, and targets for one trial, uniform over the valid
    domain and fully determined by (seed, experiment, q, trial)."""
    p = dict(params)
    experiment = p.pop("experiment", None)
    if experiment not in EXPERIMENTS:
        raise InvalidParamsError(f"unknown experiment {experiment!r}")
    if "q" not in p:
        raise InvalidParamsError("params must include the modulus q")
    q = int(p.pop("q"))
    trial = int(p.pop("trial", 0))
    merged = dict(_PARAM_DEFAULTS[experiment])
    unknown = set(p) - set(merged)
    if unknown:
        raise InvalidParamsError(
            f"unknown keys for {experiment}: {', '.join(sorted(unknown))}")
    merged.update(p)
    rng = trial_rng(seed, experiment, q, trial)
    return _SAMPLERS[experiment](rng, q, merged)


# ---------------------------------------------------------------------------
# per-experiment runners


def _base_row(config, q, trial) -> dict:
    return {"experiment": config.experiment, "q": q, "trial": trial,
            "row_kind": "trial"}


def _instance(config, q, trial) -> dict:
    return random_instance(config.seed,
                           {"experiment": config.experiment, "q": q,
                            "trial": trial, **config.params})


def _run_dot(config, q, trial) -> dict:
    inst = _instance(config, q, trial)
    n = config.params["n"]
    pair = IncidenceInstance("dot",
                             point_set(q, inst["a"], dimension=n),
                             point_set(q, inst["b"], dimension=n),
                             inst["lam"])
    rep = check_inequality(pair)
    row = _base_row(config, q, trial)
    row.update(n=n, lam=inst["lam"], size_a=len(pair.a), size_b=len(pair.b),
               count=rep.count, main_term=rep.main_term, error=rep.error_lhs,
               bound_rhs=rep.bound_rhs, slack=rep.slack,
               warn_small_prime=int(bool(rep.warnings)),
               hard_ok=int(rep.holds))
    return row


def _run_det(config, q, trial) -> dict:
    inst = _instance(config, q, trial)
    d = config.params["d"]
    pair = IncidenceInstance("det",
                             point_set(q, inst["a"], dimension=d),
                             point_set(q, inst["b"], dimension=d * (d - 1)),
                             inst["lam"])
    rep = check_inequality(pair)
    row = _base_row(config, q, trial)
    row.update(d=d, lam=inst["lam"], size_a=len(pair.a), size_b=len(pair.b),
               count=rep.count, main_term=rep.main_term,
               main_alt=rep.extras["main_per_unit_group"],
               error_scaled=rep.error_lhs, bound_rhs=rep.bound_rhs,
               slack=rep.slack, better_fit=rep.extras["better_fit"],
               hard_ok=int(rep.holds))
    return row


def _run_crossratio(config, q, trial) -> dict:
    inst = _instance(config, q, trial)
    pair = IncidenceInstance("crossratio",
                             point_set(q, inst["a"], dimension=2),
                             point_set(q, inst["b"], dimension=2),
                             inst["lam"])
    rep = check_inequality(pair)
    row = _base_row(config, q, trial)
    row.update(lam=inst["lam"], size_a=len(pair.a), size_b=len(pair.b),
               count=rep.count, main_term=rep.main_term, error=rep.error_lhs,
               bound_rhs=rep.bound_rhs, slack=rep.slack, hard_ok=int(rep.holds))
    return row


def _run_spectrum(config, q, trial) -> dict:
    inst = _instance(config, q, trial)
    kind = config.params["kind"]
    n = config.params["n"]
    lam = inst["lam"]
    matrix = build_matrix(kind, q, lam, n=n if kind == "dot" else None,
                          cap=config.matrix_cap)
    tol = config.params["cluster_tol"] or None
    rep = spectrum_report(matrix, cluster_tol=tol)

    checks = []
    if rep.fourth_moment_exact:
        fourth_rel = (abs(rep.fourth_moment_float - rep.fourth_moment_exact)
                      / rep.fourth_moment_exact)
    else:
        fourth_rel = 0.0 if rep.fourth_moment_float == 0 else math.inf
    checks.append(fourth_rel < 1e-6)

    top_expected = None
    second_bound = None
    min_mult = None
    slack = None
    if kind == "dot":
        top_expected = float(q) ** (n - 1)
        second_bound = second_eigenvalue_bound(q, n)
        checks.append(abs(rep.top_value - top_expected) <= 1e-8 * top_expected)
        checks.append(rep.second_value <= second_bound * (1 + 1e-12) + 1e-9)
        slack = (second_bound / rep.second_value if rep.second_value > 0
                 else math.inf)
        if is_prime(q) and n == 2 and len(rep.clusters) > 1:
            min_mult = min(mult for _, mult in rep.clusters[1:])
            checks.append(min_mult >= (q - 1) / 2)

    row = _base_row(config, q, trial)
    row.update(kind=kind, n=n, lam=lam, dim=len(rep.spectral_values),
               top_value=rep.top_value, top_expected=top_expected,
               second_value=rep.second_value, second_bound=second_bound,
               cluster_count=len(rep.clusters), min_nontop_mult=min_mult,
               fourth_exact=rep.fourth_moment_exact,
               fourth_float=rep.fourth_moment_float, fourth_rel=fourth_rel,
               symmetric=int(rep.symmetric), slack=slack,
               hard_ok=int(all(checks)))
    return row


def _run_kloosterman(config, q, trial) -> dict:
    inst = _instance(config, q, trial)
    chi = make_character(q, inst["char_index"])
    value = kloosterman(chi, inst["coef_n"], inst["coef_m"])
    abs_value = abs(value)
    case = inst["reference_kind"]
    if case == "gauss":
        reference = math.sqrt(q)
        deviation = abs(abs_value - reference)
        ok = deviation <= 1e-8
    elif case in ("weil-principal", "weil-twisted"):
        reference = 2.0 * math.sqrt(q)
        deviation = max(0.0, abs_value - reference)
        ok = deviation <= 1e-9
    else:
        reference = float(q - 1) if chi.is_principal else 0.0
        deviation = abs(value - reference)
        ok = deviation <= 1e-9 * q
    row = _base_row(config, q, trial)
    row.update(char_index=inst["char_index"], coef_n=inst["coef_n"],
               coef_m=inst["coef_m"], value_re=value.real, value_im=value.imag,
               abs_value=abs_value, reference_kind=case,
               reference_value=reference, deviation=deviation,
               hard_ok=int(ok))
    return row


def _run_bilinear(config, q, trial) -> dict:
    inst = _instance(config, q, trial)
    chi = make_character(q, inst["char_index"])
    via_table = bilinear_form(chi, inst["alpha"], inst["beta"])
    direct = bilinear_form_direct(chi, inst["alpha"], inst["beta"])
    rel_err = abs(via_table - direct) / max(abs(via_table), abs(direct), 1.0)
    row = _base_row(config, q, trial)
    row.update(char_index=inst["char_index"], support_a=inst["support_a"],
               support_b=inst["support_b"], table_re=via_table.real,
               table_im=via_table.imag, direct_re=direct.real,
               direct_im=direct.imag, rel_err=rel_err, tol=1e-6,
               hard_ok=int(rel_err <= 1e-6))
    return row


def _run_hyperbola(config, q, trial) -> dict:
    inst = _instance(config, q, trial)
    chi = make_character(q, inst["char_index"])
    res = hyperbola_sum(chi, inst["a"], inst["b"], inst["x"], inst["y"],
                        inst["weights_a"], inst["weights_b"])
    # cross-encoding oracle, run with unit weights where it is an identity
    plain = hyperbola_sum(chi, inst["a"], inst["b"], inst["x"], inst["y"]).value
    encoded = group_twisted_sum(chi, hyperbola_group(q, inst["a"], inst["b"]),
                                inst["x"], inst["y"])
    encode_tol = 1e-9 * (1 + len(inst["a"]) * len(inst["b"]) * len(inst["x"]))
    encode_diff = abs(plain - encoded)
    row = _base_row(config, q, trial)
    row.update(char_index=inst["char_index"], size_a=len(inst["a"]),
               size_b=len(inst["b"]), size_x=len(inst["x"]),
               size_y=len(inst["y"]), value_re=res.value.real,
               value_im=res.value.imag, abs_value=abs(res.value),
               trivial_bound=res.trivial_bound,
               cancellation=abs(res.value) / res.trivial_bound,
               encode_diff=encode_diff, encode_tol=encode_tol,
               hard_ok=int(encode_diff <= encode_tol))
    return row


def _run_lift_energy(config, q, trial) -> dict:
    inst = _instance(config, q, trial)
    k = config.params["k"]
    chi = make_character(q, inst["char_index"])
    family = matrix_family(q, inst["g"])
    twisted = group_twisted_sum(chi, family, inst["a"], inst["b"],
                                inst["weights_a"], inst["weights_b"])
    lift = projective_lift_check(chi, family, inst["a"], inst["b"],
                                 inst["weights_a"], inst["weights_b"])
    t2k_raw = energy_t2k(family, k)
    gl2_size = (q * q - 1) * (q * q - q)
    # balanced energy via the exact expansion T(f_G) = T(G) - |G|^(4k)/|GL2|
    t2k_fg = max(0.0, float(Fraction(t2k_raw)
                            - Fraction(len(family) ** (4 * k), gl2_size)))
    bound = twisted_bound_rhs(k, len(inst["a"]), len(inst["b"]), len(family), t2k_fg)
    lhs_quarter = 0.25 * abs(twisted)
    ratio = bound / lhs_quarter if lhs_quarter > 0 else math.inf
    row = _base_row(config, q, trial)
    row.update(char_index=inst["char_index"], size_a=len(inst["a"]),
               size_b=len(inst["b"]), size_g=len(family),
               lhs_re=twisted.real, lhs_im=twisted.imag,
               lifted_re=lift.lifted.real, lifted_im=lift.lifted.imag,
               residual=lift.residual, lift_tol=lift.tolerance,
               t2k_raw=t2k_raw, t2k_fg=t2k_fg, bound_rhs=bound,
               lhs_quarter=lhs_quarter, slack_ratio=ratio,
               hard_ok=int(lift.passed))
    return row


def _run_intersection(config, q, trial) -> dict:
    inst = _instance(config, q, trial)
    chi = make_character(q, inst["char_index"])
    variant = config.params["variant"]
    res = intersection_char_sum(chi, inst["a"], variant)
    abs_value = abs(res.value)
    row = _base_row(config, q, trial)
    row.update(variant=variant, structure=config.params["structure"],
               char_index=inst["char_index"], size_a=len(inst["a"]),
               n_len=inst["n_len"], intersection_size=res.intersection_size,
               dropped=res.dropped, value_re=res.value.real,
               value_im=res.value.imag, abs_value=abs_value,
               comparison=res.comparison,
               cancellation=abs_value / max(1, res.intersection_size),
               hard_ok=int(abs_value <= res.intersection_size + 1e-9))
    return row


def _run_zaremba(config, q, trial) -> dict:
    p = config.params
    bound = p["m_bound"]
    if p["subgroup"] == "full":
        gamma = full_group(q)
    elif p["subgroup"] == "squares":
        gamma = quadratic_residues(q)
    elif isinstance(p["subgroup"], int):
        gamma = subgroup(q, p["subgroup"])
    else:
        raise InvalidParamsError(
            f"subgroup must be full, squares, or a generator, got {p['subgroup']!r}")
    rep = find_in_subgroup(q, bound, gamma, p["c0"], p["c_star"], p["n_value"])
    minimal = minimal_feasible_bound(q, gamma)

    bounded = sorted(zaremba_set(q, bound))
    round_trip = all(cf_value(cf_expand(a, q).quotients) == (a, q) for a in bounded)
    monotone = set(bounded) <= zaremba_set(q, bound + 1)

    row = _base_row(config, q, trial)
    row.update(m_bound=bound, set_size=rep.bounded_set_size,
               subgroup_order=len(gamma),
               witness=-1 if rep.witness is None else rep.witness,
               intersection_size=rep.intersection_size,
               n_value=p["n_value"],
               n_decay=float(p["n_value"]) ** (-p["c_star"]),
               lower_bound=rep.lower_bound, min_feasible_m=minimal,
               elements=";".join(map(str, rep.intersection))
               if rep.intersection_size <= 64 else "",
               hard_ok=int(round_trip and monotone))
    return row


def _run_energy(config, q, trial) -> dict:
    inst = _instance(config, q, trial)
    z = inst["z"]
    energy = mult_energy(z, q)
    brute = None
    if len(z) <= 12:
        brute = sum(1 for z1 in z for z2 in z for z3 in z for z4 in z
                    if z1 * z2 % q == z3 * z4 % q)
    checks = [energy >= len(z) ** 2]
    if brute is not None:
        checks.append(energy == brute)
    subgroup_exact = -1
    if inst["kind"] == "subgroup":
        subgroup_exact = int(energy == len(z) ** 3)
        checks.append(subgroup_exact == 1)
    ebr = energy_bound_report(z, config.params["n_len"], config.params["w"], q)
    row = _base_row(config, q, trial)
    row.update(kind=inst["kind"], size_z=len(z), energy=energy, brute=brute,
               subgroup_exact=subgroup_exact, w=config.params["w"],
               n_len=config.params["n_len"], bound_rhs=ebr.bound_rhs,
               trivial_bound=ebr.trivial_bound, baseline=ebr.random_baseline,
               regime_ok=int(ebr.regime_ok), within_bound=int(ebr.within_bound),
               hard_ok=int(all(checks)))
    return row


_RUNNERS = {
    "dot-incidence": _run_dot,
    "det-incidence": _run_det,
    "crossratio-incidence": _run_crossratio,
    "spectrum": _run_spectrum,
    "kloosterman": _run_kloosterman,
    "bilinear": _run_bilinear,
    "hyperbola": _run_hyperbola,
    "lift-energy": _run_lift_energy,
    "intersection-charsum": _run_intersection,
    "zaremba": _run_zaremba,
    "energy": _run_energy,
}


# ---------------------------------------------------------------------------
# schemas and emission


def _schema(*cols) -> tuple:
    head = (("experiment", "str"), ("q", "int"), ("trial", "int"),
            ("row_kind", "str"))
    tail = (("hard_ok", "int"), ("slack_min", "float"), ("slack_median", "float"))
    return head + cols + tail


SCHEMAS = {
    "dot-incidence": _schema(
        ("n", "int"), ("lam", "int"), ("size_a", "int"), ("size_b", "int"),
        ("count", "int"), ("main_term", "rational"), ("error", "rational"),
        ("bound_rhs", "float"), ("slack", "float"), ("warn_small_prime", "int")),
    "det-incidence": _schema(
        ("d", "int"), ("lam", "int"), ("size_a", "int"), ("size_b", "int"),
        ("count", "int"), ("main_term", "rational"), ("main_alt", "rational"),
        ("error_scaled", "rational"), ("bound_rhs", "float"), ("slack", "float"),
        ("better_fit", "str")),
    "crossratio-incidence": _schema(
        ("lam", "int"), ("size_a", "int"), ("size_b", "int"), ("count", "int"),
        ("main_term", "rational"), ("error", "rational"),
        ("bound_rhs", "float"), ("slack", "float")),
    "spectrum": _schema(
        ("kind", "str"), ("n", "int"), ("lam", "int"), ("dim", "int"),
        ("top_value", "float"), ("top_expected", "float"),
        ("second_value", "float"), ("second_bound", "float"),
        ("cluster_count", "int"), ("min_nontop_mult", "int"),
        ("fourth_exact", "int"), ("fourth_float", "float"),
        ("fourth_rel", "float"), ("symmetric", "int"), ("slack", "float")),
    "kloosterman": _schema(
        ("char_index", "int"), ("coef_n", "int"), ("coef_m", "int"),
        ("value_re", "float"), ("value_im", "float"), ("abs_value", "float"),
        ("reference_kind", "str"), ("reference_value", "float"),
        ("deviation", "float")),
    "bilinear": _schema(
        ("char_index", "int"), ("support_a", "int"), ("support_b", "int"),
        ("table_re", "float"), ("table_im", "float"), ("direct_re", "float"),
        ("direct_im", "float"), ("rel_err", "float"), ("tol", "float")),
    "hyperbola": _schema(
        ("char_index", "int"), ("size_a", "int"), ("size_b", "int"),
        ("size_x", "int"), ("size_y", "int"), ("value_re", "float"),
        ("value_im", "float"), ("abs_value", "float"),
        ("trivial_bound", "float"), ("cancellation", "float"),
        ("encode_diff", "float"), ("encode_tol", "float")),
    "lift-energy": _schema(
        ("char_index", "int"), ("size_a", "int"), ("size_b", "int"),
        ("size_g", "int"), ("lhs_re", "float"), ("lhs_im", "float"),
        ("lifted_re", "float"), ("lifted_im", "float"), ("residual", "float"),
        ("lift_tol", "float"), ("t2k_raw", "int"), ("t2k_fg", "float"),
        ("bound_rhs", "float"), ("lhs_quarter", "float"),
        ("slack_ratio", "float")),
    "intersection-charsum": _schema(
        ("variant", "str"), ("structure", "str"), ("char_index", "int"),
        ("size_a", "int"), ("n_len", "int"), ("intersection_size", "int"),
        ("dropped", "int"), ("value_re", "float"), ("value_im", "float"),
        ("abs_value", "float"), ("comparison", "float"),
        ("cancellation", "float")),
    "zaremba": _schema(
        ("m_bound", "int"), ("set_size", "int"), ("subgroup_order", "int"),
        ("witness", "int"), ("intersection_size", "int"), ("n_value", "int"),
        ("n_decay", "float"), ("lower_bound", "float"),
        ("min_feasible_m", "int"), ("elements", "str")),
    "energy": _schema(
        ("kind", "str"), ("size_z", "int"), ("energy", "int"), ("brute", "int"),
        ("subgroup_exact", "int"), ("w", "float"), ("n_len", "int"),
        ("bound_rhs", "float"), ("trivial_bound", "int"), ("baseline", "float"),
        ("regime_ok", "int"), ("within_bound", "int")),
}


def _format_cell(value, typ: str) -> str:
    if value is None:
        return ""
    if typ == "int":
        return str(int(value))
    if typ == "float":
        return format(float(value), ".17g")
    if typ == "rational":
        fr = Fraction(value)
        return f"{fr.numerator}/{fr.denominator}"
    return str(value)


def emit_csv(columns, rows) -> str:
    lines = [",".join(f"{name}[{typ}]" for name, typ in columns)]
    for row in rows:
        lines.append(",".join(_format_cell(row.get(name), typ)
                              for name, typ in columns))
    return "\n".join(lines) + "\n"


def _json_cell(value, typ: str):
    if value is None:
        return None
    if typ == "int":
        return int(value)
    if typ == "float":
        f = float(value)
        # JSON has no literal for infinities, so fall back to the CSV spelling
        return f if math.isfinite(f) else format(f, ".17g")
    if typ == "rational":
        fr = Fraction(value)
        return f"{fr.numerator}/{fr.denominator}"
    return str(value)


def emit_json(experiment: str, columns, rows) -> str:
    payload = {
        "experiment": experiment,
        "columns": [{"name": name, "type": typ} for name, typ in columns],
        "rows": [{name: _json_cell(row.get(name), typ) for name, typ in columns}
                 for row in rows],
    }
    return json.dumps(payload, indent=2) + "\n"


def schema_text(experiment: str, columns) -> str:
    payload = {
        "experiment": experiment,
        "columns": [{"name": name, "type": typ} for name, typ in columns],
        "row_kinds": ["trial", "summary"],
        "notes": {
            "float": "printed with %.17g, lossless round-trip",
            "rational": "exact numerator/denominator",
            "summary": "slack_min/slack_median filled only on the summary row",
        },
    }
    return json.dumps(payload, indent=2) + "\n"


def _summary_row(config, rows) -> dict:
    names = [name for name, _ in SCHEMAS[config.experiment]]
    row = dict.fromkeys(names)
    row["experiment"] = config.experiment
    row["row_kind"] = "summary"
    row["hard_ok"] = int(all(r["hard_ok"] == 1 for r in rows))
    slacks = [r["slack"] for r in rows if r.get("slack") is not None]
    if slacks:
        row["slack_min"] = min(slacks)
        row["slack_median"] = statistics.median(slacks)
    return row


@dataclass(frozen=True)
class RunResult:
    """Everything a caller needs after a sweep: the records, the formatted
    emission, the aggregate hard-check verdict, and total wall time (kept
    out of the emitted bytes)."""

    config: ExperimentConfig
    columns: tuple
    records: tuple
    text: str
    hard_ok: bool
    elapsed: float

    @property
    def rows(self) -> list:
        return [record.values for record in self.records]


def run(config: ExperimentConfig) -> RunResult:
    """Execute the sweep and emit its table.

    Trials are independent, so the worker pool changes only wall time,
    never content; rows are ordered by (modulus, trial) with the summary
    row last.
    """
    started = time.perf_counter()
    runner = _RUNNERS[config.experiment]
    tasks = [(q, t) for q in config.moduli for t in range(config.trials)]

    def work(task):
        q, t = task
        t0 = time.perf_counter()
        values = runner(config, q, t)
        return ExperimentRecord(values, time.perf_counter() - t0)

    if config.threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            records = list(pool.map(work, tasks))
    else:
        records = [work(task) for task in tasks]
    records.sort(key=lambda r: (r.values["q"], r.values["trial"]))

    elapsed = time.perf_counter() - started
    if records:
        summary = _summary_row(config, [r.values for r in records])
        records.append(ExperimentRecord(summary, elapsed))
    columns = SCHEMAS[config.experiment]
    rows = [r.values for r in records]
    if config.fmt == "csv":
        text = emit_csv(columns, rows)
    else:
        text = emit_json(config.experiment, columns, rows)
    hard_ok = all(r["hard_ok"] == 1 for r in rows)

    if config.out:
        with open(config.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        if config.fmt == "csv":
            with open(config.out + ".schema.json", "w", encoding="utf-8",
                      newline="") as fh:
                fh.write(schema_text(config.experiment, columns))
    return RunResult(config, columns, tuple(records), text, hard_ok,
                     time.perf_counter() - started)
