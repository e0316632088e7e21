"""Stopping-time sparse domination of the weighted square function energy.

Starting from the root, descend the dyadic tree and stop at the maximal
intervals L where either
  (1) || <W>_L^{1/2} <W>_R^{-1/2} || exceeds C1 against the current root R, or
  (2) the running sum over the chain R down to L of
      || <W>_R^{1/2} (f, h_I) ||^2 / |I| exceeds C2 <|| <W>_R^{1/2} f ||>_R^2.
Each stopping interval becomes the root of the next generation, with both
conditions reset against the new root. The collected intervals form a sparse
family and dominate the full energy with constant C1^2 C2.

Both conditions use strict inequalities, so equality never stops. All
verifications below recheck, instance by instance, each inequality the
construction is supposed to guarantee: sparseness of the E-sets, the
domination itself, the trace argument bounding the norm-triggered mass, and
the weak-type containment behind the sum-triggered mass.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import ROOT, DyadicInterval
from .haar import HaarCoefficients, analyze, s3w_norm_squared, sw_norm_squared
from .linalg import hs_norm, operator_norm, operator_norm_stack, psd_power, trace_of
from .weights import MatrixWeight

DOMINATION_SLACK = 1e-9
REL_TOL = 1e-9


@dataclass(frozen=True)
class StoppingConfig:
    """Stopping thresholds. c1^2 > 2d is the regime where the trace budget bites."""

    c1: float
    c2: float = 256.0
    sparseness_target: float = 0.5
    max_generations: int = 64
    weak_type_budget: float = 4.0

    def __post_init__(self):
        if self.c1 <= 1.0 or self.c2 <= 1.0:
            raise ValueError("stopping constants must exceed 1")
        if not 0.0 < self.sparseness_target <= 1.0:
            raise ValueError("sparseness target must lie in (0, 1]")

    def to_json_dict(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "sparseness_target": self.sparseness_target,
                "max_generations": self.max_generations, "weak_type_budget": self.weak_type_budget}


def default_stopping_config(dim: int) -> StoppingConfig:
    """c1 = 2 sqrt(d) caps norm-triggered mass per node at 1/4; c2 = 256 with
    weak-type budget 4 caps sum-triggered mass at 1/4, giving 1/2-sparseness."""
    return StoppingConfig(c1=2.0 * math.sqrt(dim))


@dataclass
class SparseNode:
    interval: DyadicInterval
    trigger: str  # root | type1 | type2 | both
    parent: DyadicInterval | None
    children: list[DyadicInterval] = field(default_factory=list)
    e_ratio: float = 1.0

    def to_json_dict(self) -> dict:
        return {
            "interval": [self.interval.level, self.interval.index],
            "trigger": self.trigger,
            "parent": None if self.parent is None else [self.parent.level, self.parent.index],
            "children": [[c.level, c.index] for c in sorted(self.children)],
            "e_ratio": self.e_ratio,
        }


@dataclass
class SparseFamily:
    depth: int
    dim: int
    config: StoppingConfig
    nodes: dict[DyadicInterval, SparseNode]
    generations: list[list[DyadicInterval]]

    def intervals(self) -> list[DyadicInterval]:
        return sorted(self.nodes)

    def node(self, interval: DyadicInterval) -> SparseNode:
        return self.nodes[interval]

    def to_json_dict(self) -> dict:
        return {
            "depth": self.depth,
            "dim": self.dim,
            "nodes": [self.nodes[iv].to_json_dict() for iv in self.intervals()],
            "generations": [[[iv.level, iv.index] for iv in sorted(gen)] for gen in self.generations],
        }


class _GenerationScan:
    """Per-level condition data for one generation rooted at `root`.

    For every interval strictly below the root (down to the leaves) this holds
    the chain sums, the norm-condition values, and the trigger masks, plus the
    blocking mask marking intervals below an already-triggered ancestor.
    """

    def __init__(self, weight: MatrixWeight, coeffs: HaarCoefficients,
                 f_values: np.ndarray, root: DyadicInterval, cfg: StoppingConfig):
        depth = weight.depth
        self.root = root
        self.depth = depth
        avg_root = weight.average(root)
        self.inv_sqrt_root = psd_power(avg_root, -0.5, weight.eps_pd)
        sqrt_root = weight.sqrt_average(root)
        block = f_values[root.leaf_slice(depth)]
        mean_norm = float(np.mean(np.linalg.norm(block @ sqrt_root, axis=1)))
        self.threshold = cfg.c2 * mean_norm * mean_norm
        c_root = coeffs.levels[root.level][root.index]
        self.root_chain = float(c_root @ avg_root @ c_root) * 2.0**root.level

        self.offsets: dict[int, int] = {}
        self.chains: dict[int, np.ndarray] = {}
        self.norms: dict[int, np.ndarray] = {}
        self.cond1: dict[int, np.ndarray] = {}
        self.cond2: dict[int, np.ndarray] = {}
        self.stopping: dict[int, np.ndarray] = {}

        chain_prev = np.array([self.root_chain])
        blocked_prev = np.array([False])
        for level in range(root.level + 1, depth + 1):
            lo = root.index << (level - root.level)
            hi = (root.index + 1) << (level - root.level)
            self.offsets[level] = lo
            if level < depth:
                c = coeffs.levels[level][lo:hi]
                q = np.einsum("ni,ij,nj->n", c, avg_root, c) * 2.0**level
            else:
                q = np.zeros(hi - lo)
            chain = np.repeat(chain_prev, 2) + q
            sqrt_w = weight.sqrt_level_averages(level)[lo:hi]
            norms = operator_norm_stack(sqrt_w @ self.inv_sqrt_root)
            cond1 = norms > cfg.c1
            cond2 = chain > self.threshold
            triggered = cond1 | cond2
            blocked = np.repeat(blocked_prev, 2)
            self.chains[level] = chain
            self.norms[level] = norms
            self.cond1[level] = cond1
            self.cond2[level] = cond2
            self.stopping[level] = triggered & ~blocked
            blocked_prev = blocked | triggered
            chain_prev = chain

    def stopping_intervals(self) -> list[tuple[DyadicInterval, str]]:
        out = []
        for level in sorted(self.stopping):
            lo = self.offsets[level]
            for j in np.nonzero(self.stopping[level])[0]:
                c1_hit = bool(self.cond1[level][j])
                c2_hit = bool(self.cond2[level][j])
                tag = "both" if c1_hit and c2_hit else ("type1" if c1_hit else "type2")
                out.append((DyadicInterval(level, lo + int(j)), tag))
        return out

    def chain_at(self, interval: DyadicInterval) -> float:
        if interval == self.root:
            return self.root_chain
        return float(self.chains[interval.level][interval.index - self.offsets[interval.level]])

    def norm_at(self, interval: DyadicInterval) -> float:
        return float(self.norms[interval.level][interval.index - self.offsets[interval.level]])


def stopping_children(root: DyadicInterval, weight: MatrixWeight, f,
                      cfg: StoppingConfig) -> list[tuple[DyadicInterval, str]]:
    """Maximal intervals strictly inside `root` violating either stopping condition."""
    if root.level >= weight.depth:
        return []
    scan = _GenerationScan(weight, analyze(f), f.values, root, cfg)
    return scan.stopping_intervals()


def build_sparse_family(weight: MatrixWeight, f, cfg: StoppingConfig) -> SparseFamily:
    """Iterate the stopping construction generation by generation from the root."""
    coeffs = analyze(f)
    root_node = SparseNode(ROOT, "root", None)
    nodes = {ROOT: root_node}
    generations = [[ROOT]]
    current = [ROOT]
    for _ in range(cfg.max_generations):
        nxt: list[DyadicInterval] = []
        for parent in current:
            if parent.level >= weight.depth:
                continue
            scan = _GenerationScan(weight, coeffs, f.values, parent, cfg)
            for interval, tag in scan.stopping_intervals():
                nodes[interval] = SparseNode(interval, tag, parent)
                nodes[parent].children.append(interval)
                nxt.append(interval)
        if not nxt:
            break
        generations.append(nxt)
        current = nxt
    else:
        raise RuntimeError("max_generations exceeded: stopping children failed to shrink")
    for node in nodes.values():
        covered = sum(c.measure for c in node.children)
        node.e_ratio = (node.interval.measure - covered) / node.interval.measure
    return SparseFamily(weight.depth, weight.dim, cfg, nodes, generations)


@dataclass
class SparsenessReport:
    ok: bool
    min_ratio: float
    offending: list[DyadicInterval]

    def to_json_dict(self) -> dict:
        return {"ok": self.ok, "min_ratio": self.min_ratio,
                "offending": [[iv.level, iv.index] for iv in self.offending]}


def verify_sparseness(family: SparseFamily, target: float | None = None) -> SparsenessReport:
    """Every node must own at least `target` of its measure outside its children."""
    if target is None:
        target = family.config.sparseness_target
    min_ratio, offending = 1.0, []
    for interval in family.intervals():
        ratio = family.node(interval).e_ratio
        min_ratio = min(min_ratio, ratio)
        if ratio < target:
            offending.append(interval)
    return SparsenessReport(not offending, min_ratio, offending)


@dataclass
class DominationReport:
    ok: bool
    lhs: float
    rhs: float
    slack: float

    def to_json_dict(self) -> dict:
        return {"ok": self.ok, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack}


def verify_domination(weight: MatrixWeight, f, family: SparseFamily,
                      cfg: StoppingConfig | None = None) -> DominationReport:
    """Full energy against C1^2 C2 times the sparse square function energy."""
    if cfg is None:
        cfg = family.config
    lhs = sw_norm_squared(weight, f).total
    rhs = cfg.c1 * cfg.c1 * cfg.c2 * s3w_norm_squared(weight, f, family)
    return DominationReport(lhs <= rhs * (1.0 + DOMINATION_SLACK), lhs, rhs, rhs - lhs)


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= REL_TOL * max(1.0, abs(a), abs(b))


def _leq(a: float, b: float) -> bool:
    return a <= b + REL_TOL * max(1.0, abs(a), abs(b))


@dataclass
class TraceBoundReport:
    ok: bool
    per_node: list[dict]

    def to_json_dict(self) -> dict:
        return {"ok": self.ok, "per_node": self.per_node}


def verify_type1_trace_bound(family: SparseFamily, weight: MatrixWeight) -> TraceBoundReport:
    """Recheck, step by step, that norm-triggered children carry mass <= d/C1^2.

    Chain per parent node R with norm-triggered children {L}:
      C1^2 sum |L|  <  sum |L| ||<W>_L^{1/2} <W>_R^{-1/2}||^2
                    <= sum |L| ||.||_{HS}^2
                     = sum |L| tr(<W>_R^{-1/2} <W>_L <W>_R^{-1/2})
                     = sum_L int_L tr(<W>_R^{-1/2} W(x) <W>_R^{-1/2}) dx
                    <= int_R tr(...) = d |R|.
    """
    c1 = family.config.c1
    rows, all_ok = [], True
    for parent in family.intervals():
        kids = [family.node(c) for c in family.node(parent).children
                if family.node(c).trigger in ("type1", "both")]
        if not kids:
            continue
        inv_sqrt_parent = psd_power(weight.average(parent), -0.5, weight.eps_pd)
        mass = sum(k.interval.measure for k in kids)
        opnorm_sum = hs_sum = trace_sum = 0.0
        for k in kids:
            prod = weight.sqrt_average(k.interval) @ inv_sqrt_parent
            opnorm_sum += k.interval.measure * operator_norm(prod) ** 2
            hs_sum += k.interval.measure * hs_norm(prod) ** 2
            trace_sum += k.interval.measure * trace_of(
                inv_sqrt_parent @ weight.average(k.interval) @ inv_sqrt_parent)
        leaf_traces = np.einsum("ij,njk,ki->n", inv_sqrt_parent,
                                weight.field.values, inv_sqrt_parent)
        leaf_measure = 2.0 ** -weight.depth
        leaf_integral = float(sum(
            np.sum(leaf_traces[k.interval.leaf_slice(weight.depth)]) for k in kids) * leaf_measure)
        full_integral = float(np.sum(leaf_traces[parent.leaf_slice(weight.depth)]) * leaf_measure)
        d_measure = weight.dim * parent.measure
        steps = {
            "norm_exceeds_threshold": _leq(c1 * c1 * mass, opnorm_sum),
            "opnorm_le_hs": _leq(opnorm_sum, hs_sum),
            "hs_equals_trace": _close(hs_sum, trace_sum),
            "trace_equals_integral": _close(trace_sum, leaf_integral),
            "integral_monotone": _leq(leaf_integral, full_integral),
            "integral_equals_d_measure": _close(full_integral, d_measure),
            "mass_within_budget": _leq(mass, weight.dim * parent.measure / (c1 * c1)),
        }
        node_ok = all(steps.values())
        all_ok &= node_ok
        rows.append({
            "interval": [parent.level, parent.index], "ok": node_ok,
            "type1_mass": mass, "c1_sq_mass": c1 * c1 * mass,
            "opnorm_sum": opnorm_sum, "hs_sum": hs_sum, "trace_sum": trace_sum,
            "leaf_integral": leaf_integral, "full_integral": full_integral,
            "d_measure": d_measure, "mass_fraction": mass / parent.measure,
            "steps": steps,
        })
    return TraceBoundReport(all_ok, rows)


@dataclass
class WeakBoundReport:
    ok: bool
    max_weak_quotient: float
    per_node: list[dict]

    def to_json_dict(self) -> dict:
        return {"ok": self.ok, "max_weak_quotient": self.max_weak_quotient,
                "per_node": self.per_node}


def verify_type2_weak_bound(family: SparseFamily, weight: MatrixWeight, f,
                            cfg: StoppingConfig | None = None) -> WeakBoundReport:
    """Sum-triggered children sit inside the super-level set of the localized
    square function of g = <W>_R^{1/2} f; their mass gives a lower estimate of
    the weak (1,1) norm of the square function, reported per node."""
    if cfg is None:
        cfg = family.config
    coeffs = analyze(f)
    rows, all_ok = [], True
    max_quotient = 0.0
    for parent in family.intervals():
        kids = [family.node(c) for c in family.node(parent).children
                if family.node(c).trigger in ("type2", "both")]
        if not kids:
            continue
        scan = _GenerationScan(weight, coeffs, f.values, parent, cfg)
        depth = weight.depth
        leaf_chain = scan.chains[depth] if parent.level < depth else np.array([])
        contained = True
        for k in kids:
            sl = k.interval.leaf_slice(depth)
            lo = scan.offsets[depth]
            seg = leaf_chain[sl.start - lo:sl.stop - lo]
            contained &= bool(np.all(seg > scan.threshold))
        mass = sum(k.interval.measure for k in kids)
        fraction = mass / parent.measure
        quotient = math.sqrt(cfg.c2) * fraction
        max_quotient = max(max_quotient, quotient)
        node_ok = contained and quotient <= cfg.weak_type_budget
        all_ok &= node_ok
        rows.append({
            "interval": [parent.level, parent.index], "ok": node_ok,
            "contained_in_level_set": contained, "type2_mass": mass,
            "mass_fraction": fraction, "weak_quotient": quotient,
            "threshold": scan.threshold,
        })
    return WeakBoundReport(all_ok, max_quotient, rows)


@dataclass
class MaximalityReport:
    ok: bool
    violations: list[dict]

    def to_json_dict(self) -> dict:
        return {"ok": self.ok, "violations": self.violations}


def verify_maximality(family: SparseFamily, weight: MatrixWeight, f) -> MaximalityReport:
    """Every strict ancestor of a stopping child, within its generation,
    satisfies both conditions with <=."""
    cfg = family.config
    coeffs = analyze(f)
    violations = []
    for parent in family.intervals():
        children = family.node(parent).children
        if not children:
            continue
        scan = _GenerationScan(weight, coeffs, f.values, parent, cfg)
        for child in children:
            ancestor = child.parent() if child.level > parent.level + 1 else None
            while ancestor is not None and ancestor != parent:
                if scan.norm_at(ancestor) > cfg.c1:
                    violations.append({"ancestor": [ancestor.level, ancestor.index],
                                       "child": [child.level, child.index], "condition": "norm"})
                if scan.chain_at(ancestor) > scan.threshold:
                    violations.append({"ancestor": [ancestor.level, ancestor.index],
                                       "child": [child.level, child.index], "condition": "chain"})
                ancestor = ancestor.parent() if ancestor.level > parent.level + 1 else None
    return MaximalityReport(not violations, violations)


def certify(weight: MatrixWeight, f, cfg: StoppingConfig) -> dict:
    """Build the family and recheck every inequality; self-contained report."""
    family = build_sparse_family(weight, f, cfg)
    sparseness = verify_sparseness(family)
    domination = verify_domination(weight, f, family)
    type1 = verify_type1_trace_bound(family, weight)
    type2 = verify_type2_weak_bound(family, weight, f)
    maximality = verify_maximality(family, weight, f)
    ok = all([sparseness.ok, domination.ok, type1.ok, type2.ok, maximality.ok])
    return {
        "schema": "matw.certificate/1",
        "ok": ok,
        "config": cfg.to_json_dict(),
        "instance": {"depth": weight.depth, "dim": weight.dim},
        "family": family.to_json_dict(),
        "sparseness": sparseness.to_json_dict(),
        "domination": domination.to_json_dict(),
        "type1_trace": type1.to_json_dict(),
        "type2_weak": type2.to_json_dict(),
        "maximality": maximality.to_json_dict(),
    }


def _config_from_json(obj: dict) -> StoppingConfig:
    return StoppingConfig(c1=obj["c1"], c2=obj["c2"],
                          sparseness_target=obj["sparseness_target"],
                          max_generations=obj["max_generations"],
                          weak_type_budget=obj["weak_type_budget"])


def recheck_certificate(cert: dict, weight: MatrixWeight, f) -> dict:
    """Independently validate a certificate's claims against the raw instance.

    Does not rerun the builder blindly: the claimed family is checked node by
    node (each stopping child really fires its tagged condition against its
    parent, nothing above it fires, and no stopping interval was omitted),
    then every reported inequality is recomputed from the instance data and
    compared with the certificate's own numbers.
    """
    problems: list[str] = []
    cfg = _config_from_json(cert["config"])
    if cert["instance"]["depth"] != weight.depth or cert["instance"]["dim"] != weight.dim:
        return {"ok": False, "problems": ["instance shape does not match certificate"]}

    nodes = {tuple(n["interval"]): n for n in cert["family"]["nodes"]}
    if (0, 0) not in nodes:
        problems.append("family misses the root")
    coeffs = analyze(f)
    for key, node in sorted(nodes.items()):
        parent = node["parent"]
        if parent is None:
            if node["trigger"] != "root":
                problems.append(f"non-root trigger on {key}")
            continue
        if tuple(parent) not in nodes:
            problems.append(f"dangling parent for {key}")
    # each parent's claimed children must be exactly the maximal violators
    for key, node in sorted(nodes.items()):
        interval = DyadicInterval(*key)
        claimed = {tuple(c): nodes[tuple(c)]["trigger"] for c in node["children"]}
        if interval.level >= weight.depth:
            found = {}
        else:
            scan = _GenerationScan(weight, coeffs, f.values, interval, cfg)
            found = {(iv.level, iv.index): tag for iv, tag in scan.stopping_intervals()}
        if claimed != found:
            problems.append(f"stopping children of {key} differ: "
                            f"claimed {sorted(claimed)} found {sorted(found)}")
        covered = sum(2.0 ** -c[0] for c in claimed)
        ratio = (interval.measure - covered) / interval.measure
        if abs(ratio - node["e_ratio"]) > 1e-12:
            problems.append(f"e_ratio mismatch on {key}")

    family = build_sparse_family(weight, f, cfg)
    checks = {
        "sparseness": (verify_sparseness(family).to_json_dict(), cert["sparseness"]),
        "domination": (verify_domination(weight, f, family).to_json_dict(), cert["domination"]),
        "type1_trace": (verify_type1_trace_bound(family, weight).to_json_dict(),
                        cert["type1_trace"]),
        "type2_weak": (verify_type2_weak_bound(family, weight, f).to_json_dict(),
                       cert["type2_weak"]),
        "maximality": (verify_maximality(family, weight, f).to_json_dict(),
                       cert["maximality"]),
    }
    for name, (recomputed, claimed) in checks.items():
        if not recomputed["ok"]:
            problems.append(f"{name} fails on recheck")
        if json.dumps(recomputed, sort_keys=True) != json.dumps(claimed, sort_keys=True):
            problems.append(f"{name} report differs from certificate")
    if bool(cert["ok"]) != all(cert[name]["ok"] for name in checks):
        problems.append("top-level ok flag inconsistent with sub-reports")
    return {"ok": not problems, "problems": problems}
