"""Post-processing an allocation into a top-k set.

Elimination selectors scan the ranking and skip nodes that sit too close to an
already chosen node; when the scan runs dry they refill from the ranking in
order (``fallback`` phase). Discount selectors instead pick the current argmax
and shrink the values of the pick's neighbors.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from critnodes.errors import ConfigError, GraphModelError
from critnodes.games import Allocation, Ranking, tie_keys
from critnodes.graph import Graph

__all__ = [
    "StepRecord", "Selection", "ThresholdSpec", "DiscountMethod",
    "select_naive", "select_eliminate_always", "select_eliminate_threshold",
    "select_eliminate_local", "select_discount", "read_selection_csv",
]

PRIMARY = "primary"
FALLBACK = "fallback"


@dataclass
class StepRecord:
    step: int
    node: str
    phase: str = PRIMARY
    skipped: list = field(default_factory=list)      # (node, reason)
    discounts: list = field(default_factory=list)    # (node, old, new)
    gain: float | None = None


@dataclass
class Selection:
    chosen: list
    audit: list
    method: str = ""
    final_values: dict = field(default_factory=dict, repr=False)

    @property
    def phases(self) -> list[str]:
        return [r.phase for r in self.audit]

    def __len__(self) -> int:
        return len(self.chosen)

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "node", "phase"])
        for r in self.audit:
            w.writerow([r.step, r.node, FALLBACK if r.phase == FALLBACK else PRIMARY])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    def audit_lines(self) -> str:
        """One JSON object per step."""
        out = []
        for r in self.audit:
            d = asdict(r)
            d["method"] = self.method
            d["skipped"] = [{"node": x, "reason": why} for x, why in r.skipped]
            d["discounts"] = [{"node": x, "old": old, "new": new} for x, old, new in r.discounts]
            out.append(json.dumps(d, sort_keys=True))
        return "".join(line + "\n" for line in out)


def read_selection_csv(fh) -> list[tuple[int, str, str]]:
    if isinstance(fh, str):
        fh = io.StringIO(fh)
    return [(int(r["rank"]), r["node"], r["phase"]) for r in csv.DictReader(fh)]


def _check_k(k: int) -> None:
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")


def select_naive(ranking: Ranking, k: int) -> Selection:
    _check_k(k)
    chosen = list(ranking.order[:k])
    return Selection(chosen, [StepRecord(t + 1, x, PRIMARY) for t, x in enumerate(chosen)], "naive")


def _eliminate(g: Graph, ranking: Ranking, k: int, blocker: Callable[[int, int], str | None],
               on_choose: Callable[[int], None], method: str) -> Selection:
    """Shared two-pass scan. ``blocker(x, y)`` returns a skip reason or None."""
    _check_k(k)
    k = min(k, len(ranking))
    chosen: list[str] = []
    chosen_idx: set[int] = set()
    audit: list[StepRecord] = []
    skipped: list = []
    for x in ranking.order:
        if len(chosen) >= k:
            break
        ix = g.index(x)
        reason = None
        for iy in g._neighbors(ix, "all"):
            iy = int(iy)
            if iy in chosen_idx:
                reason = blocker(ix, iy)
                if reason:
                    break
        if reason:
            skipped.append((x, reason))
            continue
        chosen.append(x)
        chosen_idx.add(ix)
        on_choose(ix)
        audit.append(StepRecord(len(chosen), x, PRIMARY, skipped))
        skipped = []
    if len(chosen) < k:
        taken = set(chosen)
        for x in ranking.order:
            if len(chosen) >= k:
                break
            if x not in taken:
                chosen.append(x)
                taken.add(x)
                audit.append(StepRecord(len(chosen), x, FALLBACK, skipped))
                skipped = []
    return Selection(chosen, audit, method)


def select_eliminate_always(g: Graph, ranking: Ranking, k: int) -> Selection:
    """Skip any node adjacent (in either direction) to a chosen node."""
    def blocker(ix, iy):
        return f"neighbor of {g.label(iy)}"
    return _eliminate(g, ranking, k, blocker, lambda iy: None, "eliminate-always")


@dataclass(frozen=True)
class ThresholdSpec:
    """Edge-weight threshold above which a chosen node eliminates a neighbor.

    ``fixed``: threshold ``tau``. ``value_scaled``: threshold for chosen ``y``
    is ``lam * phi_y / phi_max`` clipped to [0, 1].
    """

    kind: str = "fixed"
    tau: float = 0.5
    lam: float = 1.0

    def __post_init__(self):
        if self.kind == "fixed":
            if not 0.0 <= self.tau <= 1.0:
                raise ConfigError(f"threshold tau must lie in [0, 1], got {self.tau}")
        elif self.kind == "value_scaled":
            if not self.lam >= 0.0:
                raise ConfigError(f"threshold lambda must be >= 0, got {self.lam}")
        else:
            raise ConfigError(f"unknown threshold kind {self.kind!r}")

    def threshold(self, value: float, max_value: float) -> float:
        if self.kind == "fixed":
            return self.tau
        if max_value <= 0.0:
            return 0.0
        return min(1.0, max(0.0, self.lam * value / max_value))


def select_eliminate_threshold(g: Graph, ranking: Ranking, k: int, spec: ThresholdSpec,
                               alloc: Allocation | None = None) -> Selection:
    """Skip a node whose mutual weight with some chosen neighbor exceeds that neighbor's threshold."""
    if spec.kind == "value_scaled":
        if alloc is None:
            raise ConfigError("value_scaled threshold needs the allocation")
        vmax = max(alloc.values.values())
    else:
        vmax = 1.0
    thresholds: dict[int, float] = {}

    def on_choose(iy):
        val = alloc.values[g.label(iy)] if spec.kind == "value_scaled" else 0.0
        thresholds[iy] = spec.threshold(val, vmax)

    def blocker(ix, iy):
        w = max(g._weight(ix, iy), g._weight(iy, ix))
        th = thresholds[iy]
        if w > th:
            return f"weight {w!r} to {g.label(iy)} exceeds threshold {th!r}"
        return None

    return _eliminate(g, ranking, k, blocker, on_choose, "eliminate-threshold")


def _local_front(g: Graph, iy: int, fraction: float) -> dict[int, tuple[int, int]]:
    """Neighbors of ``iy`` in the eliminated front: ``{index: (position, degree)}``."""
    nbrs = [int(v) for v in g._neighbors(iy, "all")]
    d = len(nbrs)
    nbrs.sort(key=lambda v: (-max(g._weight(iy, v), g._weight(v, iy)), v))
    # Guard against fraction * d landing a hair above an integer (0.1 * 30).
    cut = math.ceil(fraction * d - 1e-9)
    return {v: (pos + 1, d) for pos, v in enumerate(nbrs[:cut])}


def select_eliminate_local(g: Graph, ranking: Ranking, k: int, fraction: float = 0.5) -> Selection:
    """Skip a node that lies in the heaviest ``fraction`` of some chosen neighbor's neighbor list.

    Neighbor lists are sorted by descending mutual weight, ties by ascending node index.
    """
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"fraction must lie in (0, 1], got {fraction}")
    fronts: dict[int, dict[int, tuple[int, int]]] = {}

    def on_choose(iy):
        fronts[iy] = _local_front(g, iy, fraction)

    def blocker(ix, iy):
        hit = fronts[iy].get(ix)
        if hit is None:
            return None
        return f"position {hit[0]} of {hit[1]} among neighbors of {g.label(iy)}"

    return _eliminate(g, ranking, k, blocker, on_choose, "eliminate-local")


@dataclass(frozen=True)
class DiscountMethod:
    kind: str = "d1"
    weights: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.kind not in ("d1", "d2", "d3", "combo"):
            raise ConfigError(f"unknown discount method {self.kind!r}")
        if self.kind == "combo":
            w = self.weights
            if w is None or len(w) != 3 or any(x < 0 for x in w) or abs(math.fsum(w) - 1.0) > 1e-12:
                raise ConfigError(f"combo weights must be three non-negative numbers summing to 1, got {w}")
        elif self.weights is not None:
            raise ConfigError("weights are only allowed for the combo method")

    @classmethod
    def parse(cls, text: str) -> "DiscountMethod":
        """``d1``, ``d2``, ``d3`` or ``combo:l1,l2,l3``."""
        text = text.strip().lower()
        if text.startswith("discount-"):
            text = text[len("discount-"):]
        if text.startswith("combo"):
            _, _, rest = text.partition(":")
            if not rest:
                raise ConfigError("combo needs weights, e.g. combo:0.5,0.25,0.25")
            try:
                w = tuple(float(v) for v in rest.split(","))
            except ValueError:
                raise ConfigError(f"bad combo weights {rest!r}") from None
            return cls("combo", w)
        return cls(text)

    @property
    def mix(self) -> tuple[float, float, float]:
        return {"d1": (1.0, 0.0, 0.0), "d2": (0.0, 1.0, 0.0), "d3": (0.0, 0.0, 1.0)}.get(self.kind, self.weights)

    @property
    def uses_d2(self) -> bool:
        return self.mix[1] > 0.0

    @property
    def label(self) -> str:
        if self.kind == "combo":
            return "discount-combo:" + ",".join(repr(w) for w in self.weights)
        return f"discount-{self.kind}"


def select_discount(g: Graph, alloc: Allocation, k: int, method: DiscountMethod, tie_seed: int,
                    clamp: bool = False, prechosen: Sequence[tuple[str, float]] = ()) -> Selection:
    """Pick the current argmax k times, discounting the pick's unchosen neighbors each step.

    ``prechosen`` lists ``(node, value)`` pairs already in the top-k set. Their
    discounts are replayed first, in order, and they lead the returned list
    with phase ``prechosen``. With ``clamp`` the D2 factor is floored at 0,
    which lifts the LT-validity requirement.
    """
    _check_k(k)
    if method.uses_d2 and not clamp and not g.lt_valid:
        try:
            g.require_lt_valid()
        except GraphModelError as exc:
            raise GraphModelError(f"{method.label} needs an LT-valid graph (or clamp): {exc}") from None
    l1, l2, l3 = method.mix

    nodes = list(alloc.nodes) + [x for x, _ in prechosen]
    pos = {x: i for i, x in enumerate(nodes)}
    if len(pos) != len(nodes):
        raise ConfigError("prechosen nodes must not appear in the allocation")
    gidx = g.indices(nodes)
    local = {int(gi): i for i, gi in enumerate(gidx)}
    phi = np.array([alloc.values[x] for x in alloc.nodes] + [v for _, v in prechosen], dtype=np.float64)
    phi0 = phi.copy()
    in_sum = np.zeros(len(nodes))
    keys = np.concatenate([tie_keys(len(alloc), tie_seed), np.zeros(len(prechosen), dtype=np.int64)])
    is_chosen = np.zeros(len(nodes), dtype=bool)
    total = min(k, len(nodes))

    def apply(i: int) -> list:
        is_chosen[i] = True
        iy = int(gidx[i])
        events = []
        for ix in g._neighbors(iy, "all"):
            j = local.get(int(ix))
            if j is None or is_chosen[j]:
                continue
            b_yx = g._weight(iy, int(ix))
            b_xy = g._weight(int(ix), iy)
            old = float(phi[j])
            in_sum[j] += b_yx
            f2 = 1.0 - in_sum[j]
            if clamp:
                f2 = max(0.0, f2)
            d1 = (1.0 - b_yx) * old
            d2 = f2 * phi0[j]
            d3 = old - b_xy * phi[i]
            if method.kind == "d1":
                new = d1
            elif method.kind == "d2":
                new = d2
            elif method.kind == "d3":
                new = d3
            else:
                new = l1 * d1 + l2 * d2 + l3 * d3
            phi[j] = new
            events.append((nodes[j], old, float(new)))
        return events

    chosen: list[str] = []
    audit: list[StepRecord] = []
    for x, _ in prechosen:
        i = pos[x]
        chosen.append(x)
        audit.append(StepRecord(len(chosen), x, "prechosen", [], apply(i)))
    while len(chosen) < total:
        cand = np.flatnonzero(~is_chosen)
        vals = phi[cand]
        tied = cand[vals == vals.max()]
        i = int(tied[np.argmin(keys[tied])])
        value = float(phi[i])
        chosen.append(nodes[i])
        audit.append(StepRecord(len(chosen), nodes[i], PRIMARY, [], apply(i), value))
    return Selection(chosen, audit, method.label, {x: float(phi[i]) for i, x in enumerate(nodes)})
