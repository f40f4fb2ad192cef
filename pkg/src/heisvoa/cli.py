"""Command-line driver.

Subcommands: ``verify`` (run check suites), ``table`` (exact tables),
``matrix`` (operator matrices on graded pieces) and ``selftest``.

Exit codes: 0 all checks pass, 1 some check fails, 2 configuration error,
3 a budget was exceeded (weight cut, window, or a search bound).

Exact values print as ``num/den`` per cyclotomic coordinate, coordinates
separated by ``;``.
"""
from __future__ import annotations

import argparse
import ast
import json
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from . import formal
from .dplus import (
    DiffOp,
    L_symbol,
    Lbar_symbol,
    NotInSubalgebra,
    bernoulli_correction,
    bracket,
    corollary_mismatch,
    expand_in_Lbar,
    lbar_central,
    offdiag_mismatch,
    pure_monomial_central,
    realization,
    rep_bracket_mismatch,
    zeta_bernoulli_mismatch,
    zeta_table,
)
from .exact import CycNum, as_rat
from .heis import SetupError, WeightOverflow, make_setup, preset
from .report import FAIL, NOT_FOUND, Report, Timer, verdict
from .twist import (
    check_twisted_identity,
    construction_mismatch,
    delta_x_terms,
    exp_delta_x,
    g_eigen,
    module_for,
    permutation_mismatch,
    twisted_virasoro,
    twisted_virasoro_mismatch,
)
from .voa import (
    CertificateFailure,
    OperatorSlice,
    check_untwisted_identity,
    virasoro_bracket_mismatch,
    virasoro_mode,
    voa_for,
)

SUITES = (
    "delta-identities",
    "untwisted",
    "twisted",
    "construction-equivalence",
    "dplus-abstract",
    "dplus-representations",
    "corollary",
)
TABLES = ("g", "corrections", "delta_x", "zeta")
BUDGET_ERRORS = (WeightOverflow, formal.FormalError, CertificateFailure)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config


CONFIG_KEYS = {
    "preset", "name", "d", "p", "gram", "nu", "weight_cut", "window",
    "max_weight", "max_mode", "max_r", "x_order",
}
_NUMBER = re.compile(r"(?<![\w/\"'])([+-]?\d+(?:/\d+)?)(?![\w/])")


def _to_frac(x):
    if isinstance(x, list):
        return [_to_frac(y) for y in x]
    if isinstance(x, str):
        return Fraction(x)
    raise ConfigError(f"not a number: {x!r}")


def parse_value(text: str):
    """A number (``3``, ``-1/2``), a bracket matrix literal, or a bare word."""
    text = text.strip()
    if text.startswith("["):
        try:
            tree = ast.literal_eval(_NUMBER.sub(r'"\1"', text))
        except (ValueError, SyntaxError) as exc:
            raise ConfigError(f"bad matrix literal {text!r}") from exc
        if not isinstance(tree, list):
            raise ConfigError(f"bad matrix literal {text!r}")
        return _to_frac(tree)
    try:
        return Fraction(text)
    except ValueError:
        if re.fullmatch(r"[A-Za-z_][\w-]*", text):
            return text
        raise ConfigError(f"bad value {text!r}") from None


def load_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {no}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {no}: unknown key {key!r}")
        v = parse_value(val)
        if isinstance(v, Fraction) and v.denominator == 1:
            v = int(v)
        out[key] = v
    return out


@dataclass
class RunConfig:
    setup: object
    weight_cut: Fraction = Fraction(64)
    window: int = 2
    max_weight: int = 3
    max_mode: int = 2
    max_r: int = 2
    x_order: int = 8
    rows: int = 4
    suites: tuple = SUITES
    fmt: str = "human"
    jobs: int = 1
    timing: bool = True
    extra: dict = field(default_factory=dict)

    def budgets(self) -> str:
        return (f"weight_cut={self.weight_cut} window={self.window} max_weight={self.max_weight} "
                f"max_mode={self.max_mode} max_r={self.max_r} x_order={self.x_order}")


def _int_budget(name, value):
    if value is None:
        return None
    v = as_rat(value)
    if v.denominator != 1 or v <= 0:
        raise ConfigError(f"{name} must be a positive integer")
    return int(v)


def build_config(ns) -> RunConfig:
    file_cfg = {}
    if ns.setup:
        try:
            with open(ns.setup, encoding="utf-8") as fh:
                file_cfg = load_config_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read {ns.setup}: {exc.strerror}") from exc
    explicit = any(k in file_cfg for k in ("gram", "nu"))
    name = ns.preset or file_cfg.get("preset")
    if name and explicit:
        raise ConfigError("give either a preset or explicit matrices, not both")
    if ns.preset and file_cfg.get("preset") and ns.preset != file_cfg["preset"]:
        raise ConfigError("conflicting presets")

    def pick(key, default):
        v = getattr(ns, key, None)
        return file_cfg.get(key, default) if v is None else v

    weight_cut = as_rat(pick("weight_cut", 64))
    if weight_cut <= 0:
        raise ConfigError("weight_cut must be positive")
    d = pick("d", None)
    try:
        if explicit:
            for k in ("gram", "nu", "p"):
                if k not in file_cfg:
                    raise ConfigError(f"explicit setup needs {k!r}")
            gram = file_cfg["gram"]
            d = d if d is not None else len(gram)
            setup = make_setup(int(d), gram, file_cfg["nu"], int(file_cfg["p"]), weight_cut,
                               name=str(file_cfg.get("name", "custom")))
        else:
            setup = preset(name or "neg1", int(d) if d is not None else None, weight_cut)
    except SetupError as exc:
        raise ConfigError(str(exc)) from exc
    cfg = RunConfig(setup=setup, weight_cut=weight_cut)
    for key in ("window", "max_weight", "max_mode", "max_r", "x_order", "rows"):
        v = _int_budget(key, pick(key, None))
        if v is not None:
            setattr(cfg, key, v)
    if ns.jobs is not None:
        cfg.jobs = _int_budget("jobs", ns.jobs)
    cfg.fmt = ns.format
    cfg.timing = not ns.no_timing
    if getattr(ns, "suite", None):
        bad = [s for s in ns.suite if s not in SUITES]
        if bad:
            raise ConfigError(f"unknown suite {bad[0]!r}")
        cfg.suites = tuple(s for s in SUITES if s in ns.suite)
    return cfg


# ---------------------------------------------------------------------------
# formatting


def fmt_exact(x) -> str:
    if isinstance(x, CycNum):
        return x.to_text()
    q = as_rat(x)
    return f"{q.numerator}/{q.denominator}"


def fmt_mono(mono, p: int) -> str:
    if not mono:
        return "1"
    return "".join(f"e{a}({Fraction(k, p)})" for a, k in mono)


def emit(cfg: RunConfig, obj: dict, human: str):
    if cfg.fmt == "json":
        print(json.dumps(obj, sort_keys=False))
    else:
        print(human)


# ---------------------------------------------------------------------------
# suites


def _rep(cid, eq, mismatch, **detail):
    return verdict(cid, eq, mismatch, **detail)


def _delta_checks(cfg):
    R = cfg.window
    ps = sorted({1, 2, 3, cfg.setup.p})
    out = [(f"delta-root-average p={p}", lambda p=p: formal.verify_delta_identity_1(p, R)) for p in ps]
    for p in ps:
        for r in range(p):
            out.append((f"delta-fractional-shift p={p} r={r}",
                        lambda p=p, r=r: formal.verify_delta_identity_2(p, r, R)))
    out.append(("delta-shift", lambda: formal.verify_delta_shift(R)))
    out.append(("delta-three-term", lambda: formal.verify_three_term(R)))
    out.append(("delta-substitution", lambda: formal.verify_substitution_property(R)))
    return out


def _generator_pairs(setup):
    d = setup.d
    return [(i, j) for i in range(d) for j in range(i, d)]


def _untwisted_checks(cfg):
    S = cfg.setup
    voa = voa_for(S)
    one = voa.vacuum()
    out = [("untwisted-virasoro", lambda: _rep(
        "untwisted-virasoro", "virasoro", virasoro_bracket_mismatch(voa, cfg.max_mode, cfg.max_weight)))]
    ws = [one] + [voa.generator(a) for a in range(S.d)]
    for i, j in _generator_pairs(S):
        a, b = voa.generator(i), voa.generator(j)
        for kind in ("jacobi", "skew", "weak_comm", "weak_assoc", "L-1_bracket", "mwa", "varwass"):
            def run(kind=kind, a=a, b=b, i=i, j=j):
                rep = check_untwisted_identity(kind, a, b, ws, voa, window=cfg.window)
                rep.check_id += f" e{i},e{j}"
                return rep
            out.append((f"untwisted-{kind} e{i},e{j}", run))
    return out


def _twisted_checks(cfg):
    S = cfg.setup
    M = module_for(S)
    vac = M.vacuum()
    p = S.p
    h = sum(Fraction(dim) * Fraction(k, p) * (1 - Fraction(k, p)) for k, dim in enumerate(S.eigen.dims)) / 4

    def vacuum_weight():
        got = twisted_virasoro(S, 0, vac)
        want = vac * h
        return _rep("twisted-vacuum-weight", "vacuum-weight", None if got == want else
                    ({"w": "vacuum"}, repr(got), repr(want)), value=fmt_exact(h))

    def delta_x_omega():
        om = M.voa.conformal_vector()
        got = exp_delta_x(om, M.voa)
        want = {0: om}
        if h:
            want[-2] = M.voa.vacuum() * h
        return _rep("twisted-delta-x-omega", "delta-x-omega", None if got == want else
                    ({"x": sorted(set(got) ^ set(want)) or "coeff"}, repr(got), repr(want)))

    out = [
        ("twisted-virasoro", lambda: _rep("twisted-virasoro", "twisted-virasoro",
                                          twisted_virasoro_mismatch(S, cfg.max_mode, cfg.max_weight))),
        ("twisted-vacuum-weight", vacuum_weight),
        ("twisted-delta-x-omega", delta_x_omega),
    ]
    ws = [vac]
    K = S.eigen.pairing
    for i, j in _generator_pairs(S):
        a, b = M.voa.generator(i), M.voa.generator(j)

        def weak_comm(a=a, b=b, i=i, j=j):
            rep = check_twisted_identity("weak_comm_t", a, b, ws, 0, S, window=cfg.window)
            rep.check_id += f" e{i},e{j}"
            expect = 2 if K[i][j] or K[j][i] else 0
            if rep.ok and rep.detail.get("k") != expect:
                return Report(rep.check_id, rep.eq, FAIL, f"minimal k {rep.detail.get('k')} != {expect}")
            return rep

        def jacobi(a=a, b=b, i=i, j=j):
            rep = check_twisted_identity("twisted_jacobi", a, b, ws, 0, S, window=cfg.window)
            rep.check_id += f" e{i},e{j}"
            return rep

        out.append((f"twisted-weak_comm_t e{i},e{j}", weak_comm))
        out.append((f"twisted-twisted_jacobi e{i},e{j}", jacobi))
    for i in range(S.d):
        a = M.voa.generator(i)
        for s in range(p):
            def transnu(a=a, s=s, i=i):
                rep = check_twisted_identity("transnu", a, None, ws, s, S, window=cfg.window)
                rep.check_id += f" e{i} s={s}"
                return rep
            out.append((f"twisted-transnu e{i} s={s}", transnu))

        def support(a=a, i=i):
            rep = check_twisted_identity("mode_support", a, None, ws, 0, S, window=cfg.window)
            rep.check_id += f" e{i}"
            return rep
        out.append((f"twisted-mode_support e{i}", support))
    return out


def _construction_checks(cfg):
    S = cfg.setup
    w = cfg.max_weight
    return [
        ("construction-equivalence", lambda: _rep(
            "construction-equivalence", "pairing-vs-recursive",
            construction_mismatch(S, u_weight=w, w_weight=w, max_mode=cfg.max_mode))),
        ("construction-permutations", lambda: _rep(
            "construction-permutations", "factor-permutations",
            permutation_mismatch(S, max_factors=3, max_index=2, w_weight=min(w, 2), max_mode=cfg.max_mode))),
    ]


def _pure_monomial_mismatch(max_r, max_m):
    for r in range(max_r + 1):
        for s in range(max_r + 1):
            for m in range(1, max_m + 1):
                a, b = lbar_central(m, r, s), pure_monomial_central(m, r, s)
                if a != b:
                    return ({"m": m, "r": r, "s": s}, str(a), str(b))
    return None


def _virasoro_symbol_mismatch(max_m):
    for m in range(-max_m, max_m + 1):
        for n in range(-max_m, max_m + 1):
            br = bracket(L_symbol(m, 0), L_symbol(n, 0))
            c = Fraction(m**3 - m, 12) if m + n == 0 else 0
            if br.central != c or br.terms != L_symbol(m + n, 0).scale(m - n).terms:
                return ({"m": m, "n": n, "basis": "L"}, repr(br), str(c))
            k, coeffs, central = expand_in_Lbar(bracket(Lbar_symbol(m, 0), Lbar_symbol(n, 0)))
            c = Fraction(m**3, 12) if m + n == 0 else 0
            if central != c or coeffs != ({0: m - n} if m != n else {}):
                return ({"m": m, "n": n, "basis": "Lbar"}, str(central), str(c))
    return None


def _closure_mismatch(max_r, max_m):
    for r in range(max_r + 1):
        for s in range(max_r + 1):
            for m in range(-max_m, max_m + 1):
                for n in range(-max_m, max_m + 1):
                    try:
                        expand_in_Lbar(bracket(Lbar_symbol(m, r), Lbar_symbol(n, s)))
                    except NotInSubalgebra as exc:
                        return ({"m": m, "r": r, "n": n, "s": s}, str(exc), "in span")
    return None


def _symbol_jacobi_mismatch(max_r, max_m):
    gens = [(m, r) for r in range(max_r + 1) for m in range(-max_m, max_m + 1)]
    for a in gens[:: max(1, len(gens) // 6)]:
        for b in gens:
            for c in gens[:: max(1, len(gens) // 6)]:
                A, B, C = Lbar_symbol(*a), Lbar_symbol(*b), Lbar_symbol(*c)
                tot = bracket(A, bracket(B, C)) + bracket(B, bracket(C, A)) + bracket(C, bracket(A, B))
                if tot != DiffOp():
                    return ({"a": a, "b": b, "c": c}, repr(tot), "0")
    return None


def _dplus_abstract_checks(cfg):
    R, M = cfg.max_r, 5
    return [
        ("dplus-pure-monomial-central", lambda: _rep(
            "dplus-pure-monomial-central", "pure-monomial-cocycle", _pure_monomial_mismatch(R, M))),
        ("dplus-virasoro-specialization", lambda: _rep(
            "dplus-virasoro-specialization", "virasoro-cocycle", _virasoro_symbol_mismatch(4))),
        ("dplus-bracket-closure", lambda: _rep(
            "dplus-bracket-closure", "lbar-closure", _closure_mismatch(R, cfg.max_mode))),
        ("dplus-lie-jacobi", lambda: _rep(
            "dplus-lie-jacobi", "lie-jacobi", _symbol_jacobi_mismatch(R, cfg.max_mode))),
        ("dplus-zeta-bernoulli", lambda: _rep(
            "dplus-zeta-bernoulli", "zeta-bernoulli", zeta_bernoulli_mismatch(R + 2))),
    ]


def _dplus_rep_checks(cfg):
    S = cfg.setup
    w = cfg.max_weight
    return [
        ("dplus-rep-untwisted", lambda: _rep(
            "dplus-rep-untwisted", "representation", rep_bracket_mismatch(S, False, cfg.max_mode, cfg.max_r, w))),
        ("dplus-rep-twisted", lambda: _rep(
            "dplus-rep-twisted", "twisted-representation",
            rep_bracket_mismatch(S, True, cfg.max_mode, cfg.max_r, w))),
        ("dplus-offdiag", lambda: _rep(
            "dplus-offdiag", "offdiag-central", offdiag_mismatch(S, 1, 1, min(w, 2), min(w, 2)))),
    ]


def _corollary_checks(cfg):
    S = cfg.setup

    def corr():
        want = [bernoulli_correction(S, r) for r in range(cfg.max_r + 1)]
        got = [realization(S, True).scalar(0, r, r) for r in range(cfg.max_r + 1)]
        bad = next((({"r": r}, str(a), str(b)) for r, (a, b) in enumerate(zip(got, want)) if a != b), None)
        return _rep("bernoulli-corrections", "bernoulli-correction", bad)

    def coro():
        with Timer() as t:
            rep = _rep("corollary", "delta-generating-function", corollary_mismatch(S, cfg.x_order),
                       x_order=cfg.x_order)
        rep.millis = t.millis
        return rep

    return [("bernoulli-corrections", corr), ("corollary", coro)]


SUITE_BUILDERS = {
    "delta-identities": _delta_checks,
    "untwisted": _untwisted_checks,
    "twisted": _twisted_checks,
    "construction-equivalence": _construction_checks,
    "dplus-abstract": _dplus_abstract_checks,
    "dplus-representations": _dplus_rep_checks,
    "corollary": _corollary_checks,
}


def _guarded(cid, thunk):
    with Timer() as t:
        try:
            rep = thunk()
        except BUDGET_ERRORS as exc:
            rep = Report(cid, "budget", NOT_FOUND, f"{type(exc).__name__}: {exc}")
    if not rep.millis:
        rep.millis = t.millis
    return rep


def run_checks(cfg: RunConfig, checks) -> list:
    """Run (id, thunk) pairs; results come back in the listed order."""
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(lambda c: _guarded(*c), checks))
    return [_guarded(*c) for c in checks]


def _exit_code(reports) -> int:
    if any(r.status == FAIL for r in reports):
        return EXIT_FAIL
    if any(r.status == NOT_FOUND for r in reports):
        return EXIT_BUDGET
    return EXIT_OK


def _print_reports(cfg, reports):
    for r in reports:
        emit(cfg, r.to_json(cfg.timing), r.line() + (f" ({r.millis:.0f} ms)" if cfg.timing else ""))
        if r.status == NOT_FOUND:
            print(f"budget exceeded in {r.check_id}: {r.witness}", file=sys.stderr)


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.fmt == "human":
        print(f"# setup {cfg.setup.summary()}")
        print(f"# budgets {cfg.budgets()}")
    checks = [c for s in cfg.suites for c in SUITE_BUILDERS[s](cfg)]
    reports = run_checks(cfg, checks)
    _print_reports(cfg, reports)
    return _exit_code(reports)


# ---------------------------------------------------------------------------
# tables


def table_rows(cfg: RunConfig, which: str) -> list:
    S = cfg.setup
    n = cfg.rows
    if which == "zeta":
        return [{"r": r, "value": fmt_exact(z)} for r, z in zeta_table(n - 1)]
    if which == "corrections":
        return [{"r": r, "value": fmt_exact(bernoulli_correction(S, r))} for r in range(n)]
    if which == "g":
        return [
            {"m": m, "n": k, "a": a, "b": b, "value": fmt_exact(g_eigen(S, a, m, b, k))}
            for m in range(1, n + 1) for k in range(1, n + 1)
            for a in range(S.d) for b in range(S.d)
        ]
    if which == "delta_x":
        rows = []
        for M, items in sorted(delta_x_terms(S, n).items()):
            for coef, c, m, e, k in sorted(items, key=lambda t: (t[1], t[2], t[3], t[4])):
                rows.append({"x": -M, "coeff": fmt_exact(coef), "op": f"e{c}({m})e{e}({k})"})
        return rows
    raise ConfigError(f"unknown table {which!r}")


def cmd_table(cfg: RunConfig, which: str) -> int:
    rows = table_rows(cfg, which)
    if cfg.fmt == "human" and rows:
        keys = list(rows[0])
        print("\t".join(keys))
    for row in rows:
        emit(cfg, row, "\t".join(str(v) for v in row.values()))
    return EXIT_OK


# ---------------------------------------------------------------------------
# matrices


_OP_RE = re.compile(r"^\s*([A-Za-z_]+)\s*\(([^()]*)\)\s*$")


def operator_for(cfg: RunConfig, op_text: str):
    """Parse a operator string into an OperatorSlice.

    ``L(n)``            Virasoro mode on S
    ``LM(n)``           twisted Virasoro mode on S[nu]
    ``Lbar(n,r)``       image of Lbar_n^(r) on S[nu]; ``Lbar(n,r1,r2)`` off-diagonal
    ``Lbar_u(n,r)``     image of Lbar_n^(r) on S
    ``alpha(a,n)``      twisted vertex mode of the eigen-generator e_a(-1)1 on S[nu]
    """
    m = _OP_RE.match(op_text)
    if not m:
        raise ConfigError(f"bad operator {op_text!r}")
    name = m.group(1)
    try:
        args = [Fraction(x.strip()) for x in m.group(2).split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad operator arguments in {op_text!r}") from exc
    S = cfg.setup

    def ints(k):
        if len(args) not in k or any(a.denominator != 1 for a in args):
            raise ConfigError(f"{name} expects {k} integer arguments")
        return [int(a) for a in args]

    if name == "L":
        (n,) = ints((1,))
        return virasoro_mode(S, n)
    if name == "LM":
        (n,) = ints((1,))
        M = module_for(S)
        return OperatorSlice(M.space, lambda w: twisted_virasoro(S, n, w), -n)
    if name in ("Lbar", "Lbar_u"):
        vals = ints((2, 3) if name == "Lbar" else (2,))
        n, r1 = vals[0], vals[1]
        r2 = vals[2] if len(vals) == 3 else r1
        if r1 < 0 or r2 < 0:
            raise ConfigError("r must be nonnegative")
        R = realization(S, name == "Lbar")
        return OperatorSlice(R.space, lambda w: R.apply(n, r1, r2, w), -n)
    if name == "alpha":
        if len(args) != 2 or args[0].denominator != 1 or not 0 <= args[0] < S.d:
            raise ConfigError("alpha expects (index, mode)")
        a, n = int(args[0]), args[1]
        if (n * S.p).denominator != 1:
            raise ConfigError(f"mode {n} not in (1/{S.p})Z")
        M = module_for(S)
        u = M.voa.generator(a)
        return OperatorSlice(M.space, lambda w: M.Y.mode(u, n, w), -n)
    raise ConfigError(f"unknown operator {name!r}")


def cmd_matrix(cfg: RunConfig, op_text: str, weight) -> int:
    try:
        weight = Fraction(weight)
    except ValueError as exc:
        raise ConfigError(f"bad weight {weight!r}") from exc
    if weight < 0 or weight > cfg.weight_cut:
        raise ConfigError(f"weight {weight} outside [0, {cfg.weight_cut}]")
    op = operator_for(cfg, op_text)
    p = op.space.p
    if (weight * p).denominator != 1:
        raise ConfigError(f"weight {weight} not in (1/{p})Z")
    src, dst, rows = op.matrix(weight)
    obj = {
        "op": op_text,
        "source_weight": fmt_exact(weight),
        "target_weight": fmt_exact(weight + op.shift),
        "source": [fmt_mono(m, p) for m in src],
        "target": [fmt_mono(m, p) for m in dst],
        "rows": [[fmt_exact(x) for x in row] for row in rows],
    }
    if cfg.fmt == "json":
        print(json.dumps(obj))
    else:
        print(f"# {op_text}: weight {obj['source_weight']} -> {obj['target_weight']} ({cfg.setup.summary()})")
        print("# columns: " + " ".join(obj["source"]))
        print("# rows:    " + " ".join(obj["target"]))
        for row in obj["rows"]:
            print("\t".join(row))
    return EXIT_OK


# ---------------------------------------------------------------------------
# selftest


def cmd_selftest(cfg: RunConfig) -> int:
    """Fast end-to-end smoke run on small reference setups."""
    n1 = preset("neg1", 1)
    small = RunConfig(setup=n1, window=1, max_weight=2, max_mode=1, max_r=1, x_order=6,
                      fmt=cfg.fmt, timing=cfg.timing)
    checks = []
    for s in ("delta-identities", "dplus-abstract", "corollary"):
        checks.extend(SUITE_BUILDERS[s](small))

    def known_values():
        got = [
            [z for _, z in zeta_table(2)],
            bernoulli_correction(n1, 0),
            virasoro_mode(preset("identity", 1), 0).matrix(2)[2],
        ]
        want = [
            [Fraction(-1, 12), Fraction(1, 120), Fraction(-1, 252)],
            Fraction(1, 48),
            [[2, 0], [0, 2]],
        ]
        bad = next(((i, str(a), str(b)) for i, (a, b) in enumerate(zip(got, want)) if a != b), None)
        return _rep("selftest-known-values", "examples", bad)

    checks.append(("selftest-known-values", known_values))
    reports = run_checks(small, checks)
    _print_reports(small, reports)
    return _exit_code(reports)


# ---------------------------------------------------------------------------
# entry point


def parse_args(argv):
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("setup")
    src.add_argument("--setup", metavar="FILE", help="config file with key = value lines")
    src.add_argument("--preset", metavar="NAME", help="identity | neg1 | cyclic")
    src.add_argument("--d", type=int, help="dimension for a preset")
    b = common.add_argument_group("budgets")
    b.add_argument("--weight-cut", dest="weight_cut", metavar="N", help="Fock space weight ceiling")
    b.add_argument("--window", type=int, metavar="N", help="exponent window radius")
    b.add_argument("--max-weight", dest="max_weight", type=int, metavar="N", help="graded pieces checked")
    b.add_argument("--max-mode", dest="max_mode", type=int, metavar="N")
    b.add_argument("--max-r", dest="max_r", type=int, metavar="N")
    b.add_argument("--x-order", dest="x_order", type=int, metavar="N")
    b.add_argument("--rows", type=int, metavar="N", help="table size")
    o = common.add_argument_group("output")
    o.add_argument("--jobs", type=int, default=None, metavar="N")
    o.add_argument("--format", choices=("human", "json"), default="human")
    o.add_argument("--no-timing", action="store_true", help="omit timings (bit-identical reruns)")

    ap = argparse.ArgumentParser(prog="heisvoa", description="Exact checks for twisted Heisenberg modules.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    v = sub.add_parser("verify", parents=[common], help="run verification suites")
    v.add_argument("--suite", action="append", metavar="NAME", help="one of: " + ", ".join(SUITES))
    t = sub.add_parser("table", parents=[common], help="print an exact table")
    t.add_argument("which", choices=TABLES)
    m = sub.add_parser("matrix", parents=[common], help="dump an operator matrix")
    m.add_argument("op", help="L(n), LM(n), Lbar(n,r[,r2]), Lbar_u(n,r), alpha(a,n)")
    m.add_argument("--weight", required=True, help="source graded piece")
    sub.add_parser("selftest", parents=[common], help="quick smoke run")
    ns = ap.parse_args(argv)
    if ns.jobs is None:
        ns.jobs = 1
    return ns


def main(argv=None) -> int:
    try:
        ns = parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = build_config(ns)
        if ns.cmd == "verify":
            return cmd_verify(cfg)
        if ns.cmd == "table":
            return cmd_table(cfg, ns.which)
        if ns.cmd == "matrix":
            return cmd_matrix(cfg, ns.op, ns.weight)
        return cmd_selftest(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BUDGET_ERRORS as exc:
        print(f"budget exceeded: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
