"""Scenario files and report generation.

A scenario is an INI file:

    [scenario]
    name = hkr_mu_p3
    p = 3
    task = hkr-force            ; ext hh cyclic hodge-bg derham-bg crys-bg
                                ; tp-account hkr-force tate pgl-omega1
    [object]
    group = mu x mu             ; or: algebra = truncated 3 1 | dual alpha | dual mu x mu
    [window]
    deg_min = 0
    deg_max = 8
    [abutment]                  ; optional
    degrees = -6..6
    dims = 0:3
    [options]                   ; task specific, e.g. page = hkr, r_max = 3
"""
from __future__ import annotations

import configparser
import csv
import io
import json
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .algebra import (
    PresentedAlgebra,
    alpha_p_functions,
    cartier_dual,
    mu_p_functions,
    tensor,
    truncated_poly,
)
from .ext import ResourceError, bar_resolution_oracle, ext_dims, ext_ring
from .fp import check_prime
from .graded import GradedSpace, GradeIndex, INDETERMINATE, Window
from .hochschild import cyclic_window, hochschild_bar, hochschild_small
from .spectral import AbutmentSpec, AbutmentUnreachable, PageError, forced_search, tate_page
from . import stacks

TASKS = ("ext", "hh", "cyclic", "hodge-bg", "derham-bg", "crys-bg", "tp-account",
         "hkr-force", "tate", "pgl-omega1")


class ScenarioError(ValueError):
    """The file does not parse or misses a required field."""


class PreconditionError(ValueError):
    """The scenario parses but its inputs violate a precondition."""


@dataclass
class Scenario:
    name: str
    p: int
    task: str
    obj: dict = field(default_factory=dict)
    window: dict = field(default_factory=dict)
    abutment: dict | None = None
    options: dict = field(default_factory=dict)
    path: str | None = None

    def echo(self) -> dict:
        out = {"name": self.name, "p": self.p, "task": self.task, "object": self.obj, "window": self.window,
               "options": self.options}
        if self.abutment is not None:
            out["abutment"] = self.abutment
        return out

    def wint(self, key: str, default=None):
        return _int(self.window, key, default)

    def oint(self, key: str, default=None):
        return _int(self.options, key, default)


def _int(d: dict, key: str, default):
    if key not in d:
        if default is None:
            raise ScenarioError(f"missing required field {key}")
        return default
    try:
        return int(d[key])
    except ValueError:
        raise ScenarioError(f"{key} must be an integer, got {d[key]!r}") from None


def parse_scenario(text: str, path: str | None = None) -> Scenario:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"cannot parse scenario: {exc}") from None
    if not cp.has_section("scenario"):
        raise ScenarioError("missing [scenario] section")
    head = dict(cp["scenario"])
    for key in ("name", "p", "task"):
        if key not in head:
            raise ScenarioError(f"[scenario] needs {key}")
    p = _int(head, "p", None)
    try:
        check_prime(p)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    task = head["task"].strip()
    if task not in TASKS:
        raise ScenarioError(f"unknown task {task!r}; expected one of {', '.join(TASKS)}")
    if not re.fullmatch(r"[A-Za-z0-9_.-]+", head["name"]):
        raise ScenarioError(f"scenario name {head['name']!r} must be a plain file stem")
    sec = lambda s: dict(cp[s]) if cp.has_section(s) else {}
    scn = Scenario(head["name"], p, task, sec("object"), sec("window"),
                   sec("abutment") if cp.has_section("abutment") else None, sec("options"), path)
    needs_group = task in ("hodge-bg", "derham-bg", "crys-bg", "tp-account", "hkr-force")
    needs_algebra = task in ("ext", "hh", "cyclic", "tate")
    if needs_group and "group" not in scn.obj:
        raise ScenarioError(f"task {task} needs [object] group")
    if needs_algebra and "algebra" not in scn.obj:
        raise ScenarioError(f"task {task} needs [object] algebra")
    if task == "pgl-omega1" and "n" not in scn.obj:
        raise ScenarioError("task pgl-omega1 needs [object] n")
    return scn


def load_scenario(path: str | os.PathLike) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    return parse_scenario(text, str(path))


# -- object specs ---------------------------------------------------------------------

def build_algebra(spec: str, p: int) -> PresentedAlgebra:
    """'truncated N [WEIGHT]', 'dual GROUP', 'functions GROUP'."""
    words = spec.split()
    if not words:
        raise ScenarioError("empty algebra spec")
    kind, rest = words[0].lower(), words[1:]
    if kind == "truncated":
        if not 1 <= len(rest) <= 2:
            raise ScenarioError("truncated needs N and an optional weight")
        return truncated_poly(p, int(rest[0]), int(rest[1]) if len(rest) > 1 else 0)
    if kind in ("dual", "functions"):
        try:
            G = stacks.parse_group(" ".join(rest), p)
        except stacks.UnsupportedInput as exc:
            raise PreconditionError(str(exc)) from None
        alg = None
        for f in G.factors:
            alg = f.functions if alg is None else tensor(alg, f.functions)
        return cartier_dual(alg) if kind == "dual" else alg
    raise ScenarioError(f"unknown algebra kind {kind!r}")


def build_group(scn: Scenario) -> stacks.GroupScheme:
    try:
        return stacks.parse_group(scn.obj["group"], scn.p)
    except stacks.UnsupportedInput as exc:
        raise PreconditionError(str(exc)) from None
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None


def parse_abutment(sec: dict) -> AbutmentSpec:
    degrees: tuple = ()
    if "degrees" in sec:
        m = re.fullmatch(r"\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*", sec["degrees"])
        if m:
            degrees = tuple(range(int(m.group(1)), int(m.group(2)) + 1))
        else:
            degrees = tuple(int(x) for x in sec["degrees"].split(","))
    dims = {}
    for item in filter(None, (x.strip() for x in sec.get("dims", "").split(","))):
        key, _, val = item.rpartition(":")
        if "/" in key:
            n, w = key.split("/")
            dims[(int(n), int(w))] = int(val)
        else:
            dims[int(key)] = int(val)
    vanish = tuple(x.strip() for x in sec.get("must_vanish", "").split(",") if x.strip())
    wdb = int(sec["weight_divisible_by"]) if "weight_divisible_by" in sec else None
    periodic = sec.get("periodic", "no").lower() in ("1", "yes", "true")
    return AbutmentSpec(degrees, dims, wdb, vanish, periodic)


# -- report assembly ------------------------------------------------------------------

def _degrees(space: GradedSpace) -> dict:
    out = {}
    for n, d in space.degree_dims().items():
        out[str(n)] = "indeterminate" if d is INDETERMINATE else d
    return out


def _report(scn: Scenario, space: GradedSpace | None, rings=None, search=None, extra=None) -> dict:
    rep = {"scenario": scn.echo(), "grades": [], "rings": rings or [], "search": search or []}
    if space is not None:
        rep["grades"] = space.to_rows()
        rep["window"] = space.window.as_dict()
        rep["degrees"] = _degrees(space)
    if extra:
        rep["extra"] = extra
    return rep


def _window(scn: Scenario, deg_min=0, deg_max=None, weight_max=None) -> Window:
    wmax = scn.window.get("weight_max")
    return Window(scn.wint("deg_min", deg_min), scn.wint("deg_max", deg_max),
                  int(wmax) if wmax is not None else weight_max)


def run_ext(scn: Scenario, budget_cells: int) -> dict:
    a = build_algebra(scn.obj["algebra"], scn.p)
    top = scn.wint("deg_max", 10)
    ring = ext_ring(a, top)
    space = GradedSpace.from_dims({(n, 0, w): d for (n, w), d in ring.dims().items()}, Window(0, top))
    gens = []
    for g in ring.generators:
        entry = {"name": g.name, "degree": g.degree, "weight": g.weight, "kind": g.kind}
        if g.degree * 2 <= top:
            entry["square_nonzero"] = bool(ring.mul_vectors(g.degree, g.vector, g.degree, g.vector).any())
        gens.append(entry)
    extra = {}
    oracle = scn.oint("oracle_degree", 0)
    if oracle:
        from .algebra import adapted
        b = adapted(a) if not a.is_adapted() else a
        bar = bar_resolution_oracle(b, oracle + 1, budget=budget_cells)
        extra["bar_oracle_agrees"] = ext_dims(bar, oracle) == {k: v for k, v in ring.dims().items() if k[0] <= oracle}
    return _report(scn, space, gens, extra=extra)


def run_hh(scn: Scenario, budget_cells: int) -> dict:
    a = build_algebra(scn.obj["algebra"], scn.p)
    top = scn.wint("deg_max", 6)
    model = scn.options.get("model", "bar")
    extra = {}
    if model == "small":
        hh = hochschild_small(a, top)
    else:
        hh = hochschild_bar(a, top, budget=budget_cells)
        if model == "both":
            extra["models_agree"] = hh.weight_table() == hochschild_small(a, top).weight_table()
    return _report(scn, hh.to_graded(), extra=extra)


def run_cyclic(scn: Scenario, budget_cells: int) -> dict:
    a = build_algebra(scn.obj["algebra"], scn.p)
    w = _window(scn, deg_max=0, weight_max=6)
    columns = scn.oint("columns", 0) or None
    space = cyclic_window(a, scn.options.get("variant", "HP"), w, columns=columns, budget=budget_cells)
    return _report(scn, space)


def run_hodge(scn: Scenario, budget_cells: int) -> dict:
    G = build_group(scn)
    h = stacks.hodge_BG(G, scn.wint("s_max", 8), scn.wint("t_max", scn.wint("s_max", 8)))
    extra = {"divided_power_flags": [list(x) for x in h.divided_power_flags()]}
    return _report(scn, h.table(), h.presentation(), extra=extra)


def run_derham(scn: Scenario, budget_cells: int) -> dict:
    G = build_group(scn)
    dr = stacks.derham_BG(G, scn.wint("deg_max", 8))
    search = [dr.search.as_dict()] if dr.search else []
    extra = {"route": dr.route}
    if scn.options.get("conjugate", "no").lower() in ("yes", "true", "1"):
        rep, space = stacks.conjugate_route(G, scn.wint("deg_max", 8))
        search.append(rep.as_dict())
        extra["conjugate_agrees"] = space.dims_table() == dr.space.dims_table()
    return _report(scn, dr.space, dr.ring, search, extra)


def run_crys(scn: Scenario, budget_cells: int) -> dict:
    G = build_group(scn)
    m = scn.oint("m", 3)
    top = scn.wint("deg_max", 8)
    try:
        crys = stacks.crys_BG(G, m, top)
    except ValueError as exc:
        raise PreconditionError(str(exc)) from None
    modules = [{"deg": n, "invariant_factors": list(mod.invariant_factors()), "module": mod.describe(scn.p)}
               for n, mod in sorted(crys.items())]
    extra = {"modules": modules, "m_stable": stacks.crys_m_stable(G, m, top)}
    if scn.options.get("check_mod_p", "yes").lower() in ("yes", "true", "1"):
        extra["mod_p_defect"] = {str(k): list(v) for k, v in stacks.mod_p_defect(G, m, top).items()}
    return _report(scn, None, extra=extra)


def run_tp(scn: Scenario, budget_cells: int) -> dict:
    G = build_group(scn)
    ab = scn.abutment or {}
    flag = lambda k, d: ab.get(k, d).lower() in ("1", "yes", "true")
    declared = stacks.TPAbutment(flag("even_only", "yes"), flag("torsion_free", "yes"), flag("odd_nonzero", "no"))
    try:
        rep = stacks.tp_accounting(G, scn.wint("deg_max", 8), scn.oint("m", 3), declared)
    except stacks.InconsistentAbutment as exc:
        raise PreconditionError(str(exc)) from None
    return _report(scn, None, extra=rep.as_dict())


def run_force(scn: Scenario, budget_cells: int, budget_branches: int) -> dict:
    G = build_group(scn)
    page = scn.options.get("page", "hkr")
    top = scn.wint("deg_max", 6)
    r_max = scn.oint("r_max", scn.p if page in ("hkr", "dr-hp") else 3)
    if page == "hkr":
        pres, r_max = stacks.hkr_page(G, top, r_max)
        default = stacks.hkr_abutment(G, top)
    elif page == "hdr":
        pres = stacks.hdr_page(G, top, r_max)
        default = AbutmentSpec(weight_divisible_by=G.p)
    elif page == "conjugate":
        pres = stacks.conjugate_page(G, top, r_max)
        dims = stacks.derham_BG(G, top).degree_dims()
        default = AbutmentSpec(degrees=tuple(dims), dims=dims)
    elif page == "dr-hp":
        pres = stacks.dr_hp_page(G, r_max)
        default = stacks.dr_hp_abutment(G)
    else:
        raise ScenarioError(f"unknown page {page!r}")
    ab = parse_abutment(scn.abutment) if scn.abutment is not None else default
    from .spectral import ExpandedPage, admissible_differentials
    cells = len(ExpandedPage(pres).monomials)
    if cells > budget_cells:
        raise ResourceError(f"page has {cells} monomials (budget {budget_cells})")
    candidates = {str(r): [f"{s} -> {t}" for s, t in admissible_differentials(pres, r)]
                  for r in range(pres.r, r_max + 1)}
    rep = forced_search(pres, ab, r_max, max_branches=budget_branches)
    space = rep.patterns[0].e_infinity if rep.unique else None
    return _report(scn, space, search=[rep.as_dict()], extra={"candidates": candidates, "page_monomials": cells})


def run_tate(scn: Scenario, budget_cells: int) -> dict:
    a = build_algebra(scn.obj["algebra"], scn.p)
    top = scn.wint("deg_max", 3)
    hh = hochschild_bar(a, top + 1, representatives=True, budget=budget_cells)
    tp = tate_page(hh)
    from .fp import rank
    ranks = [{"n": n, "weight": w, "rank": rank(m)} for (n, w), m in sorted(tp.d2.items()) if m.rows and m.cols]
    space = GradedSpace.from_dims({(-n, 0, w): d for (n, w), d in tp.e3_dims().items()}, Window(-top, 0))
    return _report(scn, space, extra={"degenerate": tp.is_degenerate(), "d2_ranks": ranks})


def run_pgl(scn: Scenario, budget_cells: int) -> dict:
    try:
        space = stacks.pgl_omega1(int(scn.obj["n"]), scn.p)
    except ValueError as exc:
        raise PreconditionError(str(exc)) from None
    return _report(scn, space)


def run_scenario(scn: Scenario, budget_cells: int = 10**6, budget_branches: int = 100_000) -> dict:
    runners = {"ext": run_ext, "hh": run_hh, "cyclic": run_cyclic, "hodge-bg": run_hodge,
               "derham-bg": run_derham, "crys-bg": run_crys, "tp-account": run_tp, "tate": run_tate,
               "pgl-omega1": run_pgl}
    try:
        if scn.task == "hkr-force":
            return run_force(scn, budget_cells, budget_branches)
        return runners[scn.task](scn, budget_cells)
    except (ScenarioError, ResourceError, AbutmentUnreachable, PreconditionError):
        raise
    except (PageError, stacks.UnsupportedInput, stacks.NonUniquePattern) as exc:
        raise PreconditionError(str(exc)) from None


# -- serialization --------------------------------------------------------------------

def to_json(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=True, ensure_ascii=True) + "\n"


def to_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["deg", "wedge", "weight", "dim", "labels"])
    for row in report["grades"]:
        w.writerow([row["deg"], "" if row["wedge"] is None else row["wedge"],
                    "" if row["weight"] is None else row["weight"], row["dim"], ";".join(row["labels"])])
    return buf.getvalue()


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def grade_key(row: dict) -> tuple:
    return (row["deg"], row["wedge"], row["weight"])


def diff_reports(expected: dict, actual: dict) -> list[str]:
    """Human-readable differences, naming table cells first."""
    out = []
    exp = {grade_key(r): r for r in expected.get("grades", [])}
    act = {grade_key(r): r for r in actual.get("grades", [])}
    for key in sorted(set(exp) | set(act), key=lambda k: tuple((x is None, x) for x in k)):
        e, a = exp.get(key), act.get(key)
        if e != a:
            ed = e["dim"] if e else 0
            ad = a["dim"] if a else 0
            what = f"dim {ed} -> {ad}" if ed != ad else "labels differ"
            out.append(f"cell (deg={key[0]}, wedge={key[1]}, weight={key[2]}): {what}")
    for k in sorted(set(expected) | set(actual)):
        if k != "grades" and expected.get(k) != actual.get(k):
            out.append(f"field {k} differs")
    return out
