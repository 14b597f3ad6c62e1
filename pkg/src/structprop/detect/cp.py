"""Detectors for the six classic constraint families.

Each detector takes a :class:`ModelView` and returns fully assembled
:class:`SemanticRecord` objects.  Matching is structural and strict: a record
is emitted only when every defining row of the pattern is present, so a
partial or contaminated encoding yields no record rather than a wrong one.
"""

from __future__ import annotations

import math
from collections import defaultdict

from ..model import INF
from ..records import (
    AllDifferentParams,
    CardinalityParams,
    ChannelParams,
    CumulativeParams,
    CumulativeTask,
    Family,
    NValueParams,
    SemanticRecord,
    StretchParams,
)
from .rowview import ModelView, uniform_coefficient


def detect_cardinality(view: ModelView, config) -> list[SemanticRecord]:
    """Two-sided counting rows: L <= sum of >= 3 binaries <= U."""
    tol = view.tolerance
    records = []
    for row in view.active_rows:
        u = view.unit_view(row)
        if u is None or len(u.support) < 3 or not view.all_binary(u.support):
            continue
        n = len(u.support)
        lower = 0.0 if u.lower == -INF else max(0.0, float(math.ceil(u.lower - tol)))
        upper = float(n) if u.upper == INF else min(float(n), float(math.floor(u.upper + tol)))
        if lower > upper:
            continue
        support = tuple(sorted(u.support))
        records.append(
            SemanticRecord(
                Family.CARDINALITY,
                support,
                CardinalityParams(support, lower, upper),
                (row.id,),
            )
        )
    return records


def _components(rows: list[tuple[int, tuple[int, ...]]]) -> list[list[int]]:
    """Group row indices by shared variables (union-find)."""
    parent = list(range(len(rows)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict[int, int] = {}
    for idx, (_, support) in enumerate(rows):
        for var in support:
            if var in owner:
                parent[find(idx)] = find(owner[var])
            else:
                owner[var] = idx
    groups: dict[int, list[int]] = defaultdict(list)
    for idx in range(len(rows)):
        groups[find(idx)].append(idx)
    return sorted(groups.values())


def detect_alldifferent(view: ModelView, config) -> list[SemanticRecord]:
    """Square assignment grids: n exact-one rows crossed by n value rows."""
    eq = [(u.row, u.support) for u in view.exact_one_rows(min_size=3)]
    am = [(u.row, u.support) for u in view.at_most_one_facets(min_size=3)]
    pool = eq + am
    n_eq = len(eq)
    records = []
    for comp in _components(pool):
        eq_part = [pool[i] for i in comp if i < n_eq]
        am_part = [pool[i] for i in comp if i >= n_eq]
        if am_part:
            items, values, symmetric = eq_part, am_part, False
        elif eq_part:
            # all rows are equalities: split into the two disjointness classes
            first_sup = set(eq_part[0][1])
            items = [r for r in eq_part if not first_sup & set(r[1])] + [eq_part[0]]
            values = [r for r in eq_part if first_sup & set(r[1]) and r != eq_part[0]]
            symmetric = True
        else:
            continue
        record = _check_grid(items, values, symmetric)
        if record is not None:
            records.append(record)
    return records


def _check_grid(items, values, symmetric) -> SemanticRecord | None:
    n = len(items)
    if n < 3 or len(values) != n:
        return None
    item_sets = [set(sup) for _, sup in items]
    value_sets = [set(sup) for _, sup in values]
    if any(len(s) != n for s in item_sets + value_sets):
        return None
    item_union: set[int] = set()
    for s in item_sets:
        if item_union & s:
            return None
        item_union |= s
    value_union: set[int] = set()
    for s in value_sets:
        if value_union & s:
            return None
        value_union |= s
    if item_union != value_union or len(item_union) != n * n:
        return None
    for iset in item_sets:
        for vset in value_sets:
            if len(iset & vset) != 1:
                return None
    params = AllDifferentParams(
        item_groups=tuple(tuple(sorted(s)) for s in item_sets),
        value_groups=tuple(tuple(sorted(s)) for s in value_sets),
        symmetric=symmetric,
    )
    evidence = tuple(rid for rid, _ in items) + tuple(rid for rid, _ in values)
    return SemanticRecord(
        Family.ALL_DIFFERENT, tuple(sorted(item_union)), params, evidence
    )


def detect_channel(view: ModelView, config) -> list[SemanticRecord]:
    """An integer variable equated with a value-weighted one-hot group."""
    tol = view.tolerance
    one_by_support: dict[frozenset[int], int] = {}
    for u in view.exact_one_rows(min_size=2):
        one_by_support.setdefault(frozenset(u.support), u.row)
    records = []
    for row in view.equalities:
        if abs(row.rhs) > tol:
            continue
        linked = [(v, c) for v, c in row.terms if not view.is_binary[v]]
        if len(linked) != 1:
            continue
        link_var, link_coeff = linked[0]
        if not view.model.variables[link_var].is_integer:
            continue
        bins = [(v, c) for v, c in row.terms if view.is_binary[v]]
        if len(bins) < 2:
            continue
        values = [(-c / link_coeff, v) for v, c in bins]
        seen = {value for value, _ in values}
        if len(seen) != len(values) or 0.0 in seen:
            continue
        onehot = one_by_support.get(frozenset(v for v, _ in bins))
        if onehot is None:
            continue
        params = ChannelParams(link_var, tuple(sorted(values, key=lambda t: t[0])))
        scope = (link_var,) + tuple(sorted(v for v, _ in bins))
        records.append(
            SemanticRecord(Family.CHANNEL, scope, params, (row.id, onehot))
        )
    return records


def detect_cumulative(view: ModelView, config) -> list[SemanticRecord]:
    """Start-indicator scheduling grids sharing per-period capacity rows."""
    tol = view.tolerance
    tasks = [(u.row, u.support) for u in view.exact_one_rows(min_size=3)]
    caps = []
    for facet in view.facets:
        sup = facet.support()
        if (len(facet.terms) >= 2 and view.all_binary(sup)
                and all(c > 0 for _, c in facet.terms)):
            caps.append(facet)
    pool = tasks + [(f.row, f.support()) for f in caps]
    n_tasks = len(tasks)
    records = []
    for comp in _components(pool):
        task_part = [tasks[i] for i in comp if i < n_tasks]
        cap_part = [caps[i - n_tasks] for i in comp if i >= n_tasks]
        if not task_part or not cap_part:
            continue
        task_of: dict[int, int] = {}
        clean = True
        for rid, sup in task_part:
            for v in sup:
                if v in task_of:
                    clean = False
                task_of[v] = rid
        if not clean:
            continue
        capacity = cap_part[0].bound
        if any(abs(f.bound - capacity) > tol for f in cap_part):
            continue
        if any(v not in task_of for f in cap_part for v in f.support()):
            continue
        # per-variable appearance lists decide each task's duration and demand
        hits: dict[int, list[float]] = defaultdict(list)
        for f in cap_part:
            for v, c in f.terms:
                hits[v].append(c)
        specs = []
        for rid, sup in sorted(task_part):
            per_var = [hits.get(v, []) for v in sup]
            counts = {len(h) for h in per_var}
            demands = {c for h in per_var for c in h}
            if len(counts) != 1 or len(demands) != 1:
                clean = False
                break
            duration = counts.pop()
            if duration < 2:
                clean = False
                break
            specs.append(CumulativeTask(tuple(sorted(sup)), duration, demands.pop()))
        if not clean:
            continue
        periods = tuple(
            (f.row, tuple(sorted(f.support()))) for f in sorted(cap_part, key=lambda f: f.row)
        )
        params = CumulativeParams(tuple(specs), capacity, periods)
        scope = tuple(sorted(task_of))
        evidence = tuple(rid for rid, _ in task_part) + tuple(f.row for f in cap_part)
        records.append(SemanticRecord(Family.CUMULATIVE, scope, params, evidence))
    return records


def detect_nvalue(view: ModelView, config) -> list[SemanticRecord]:
    """A distinct-value counter: count var tied to used-value indicators."""
    tol = view.tolerance
    implications: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for facet in view.facets:
        if len(facet.terms) != 2 or abs(facet.bound) > tol:
            continue
        (va, ca), (vb, cb) = facet.terms
        if ca != -cb or not view.is_binary[va] or not view.is_binary[vb]:
            continue
        pos, neg = (va, vb) if ca > 0 else (vb, va)
        implications[pos].append((neg, facet.row))

    ones = view.exact_one_rows(min_size=2)
    records = []
    for row in view.equalities:
        if abs(row.rhs) > tol:
            continue
        counters = [(v, c) for v, c in row.terms if not view.is_binary[v]]
        if len(counters) != 1:
            continue
        count_var, count_coeff = counters[0]
        if not view.model.variables[count_var].is_integer:
            continue
        bins = [(v, c) for v, c in row.terms if view.is_binary[v]]
        if len(bins) < 2:
            continue
        if uniform_coefficient(bins) != -count_coeff:
            continue
        zset = {v for v, _ in bins}
        items = []
        evidence = [row.id]
        for u in ones:
            targets = []
            for y in u.support:
                hits = [(z, rid) for z, rid in implications.get(y, ()) if z in zset]
                if len(hits) != 1:
                    targets = None
                    break
                targets.append((y, hits[0]))
            if targets is None or len(targets) != len(zset):
                continue
            zs = [z for _, (z, _) in targets]
            if len(set(zs)) != len(zs):
                continue
            items.append(tuple((z, y) for y, (z, _) in targets))
            evidence.append(u.row)
            evidence.extend(rid for _, (_, rid) in targets)
        if len(items) < 2:
            continue
        scope = tuple(sorted({y for pairs in items for _, y in pairs})) + tuple(
            sorted(zset)
        ) + (count_var,)
        params = NValueParams(count_var, tuple(sorted(zset)), tuple(items))
        records.append(
            SemanticRecord(Family.NVALUE, scope, params, tuple(evidence))
        )
    return records


def detect_stretch(view: ModelView, config) -> list[SemanticRecord]:
    """Run-length chains over a binary level sequence with run-start markers."""
    tol = view.tolerance
    opp: dict[tuple[int, int], list[int]] = defaultdict(list)  # (u, w): u <= w
    same2: dict[frozenset[int], list[int]] = defaultdict(list)  # u + w <= 1
    trips = []  # (rid, positive var, (negative, negative))
    windows = []  # (rid, support, scaled bound)
    for facet in view.facets:
        sup = facet.support()
        if not view.all_binary(sup):
            continue
        coeffs = [c for _, c in facet.terms]
        if len(facet.terms) == 2:
            (va, ca), (vb, cb) = facet.terms
            if abs(facet.bound) <= tol and ca == -cb:
                u, w = (va, vb) if ca > 0 else (vb, va)
                opp[(u, w)].append(facet.row)
                continue
            if ca == cb and ca > 0 and abs(facet.bound - ca) <= tol:
                same2[frozenset(sup)].append(facet.row)
                continue
        if len(facet.terms) == 3 and abs(facet.bound) <= tol:
            pos = [v for v, c in facet.terms if c > 0]
            neg = [v for v, c in facet.terms if c < 0]
            if len(pos) == 1 and len({abs(c) for c in coeffs}) == 1:
                trips.append((facet.row, pos[0], tuple(neg)))
                continue
        shared = uniform_coefficient(facet.terms)
        if shared is not None and shared > 0 and len(facet.terms) >= 3:
            bound = facet.bound / shared
            if bound >= 2 - tol:
                windows.append((facet.row, sup, bound))

    # successor edges between level vars, derived from the 3-var rows
    succ: dict[int, tuple[int, int, int]] = {}
    poisoned: set[int] = set()
    for rid, level, negs in trips:
        starts = [v for v in negs if (v, level) in opp]
        prevs = [v for v in negs if v not in starts]
        if len(starts) != 1 or len(prevs) != 1:
            poisoned.update((level,) + negs)
            continue
        start, prev = starts[0], prevs[0]
        if prev in succ:
            poisoned.update({level, start, prev})
            continue
        succ[prev] = (level, start, rid)

    heads = [v for v in succ if v not in {lvl for lvl, _, _ in succ.values()}]
    records = []
    for head in sorted(heads):
        levels = [head]
        starts_seq: list[int] = []
        used_rows: set[int] = set()
        node = head
        while node in succ:
            nxt, start, rid = succ[node]
            if nxt in levels:
                levels = []
                break
            levels.append(nxt)
            starts_seq.append(start)
            used_rows.add(rid)
            node = nxt
        if len(levels) < 2:
            continue
        # anchor the first run-start: mutual ordering rows with the head level
        mutual = [w for (u, w) in opp if u == head and (w, head) in opp]
        if len(mutual) != 1:
            continue
        starts_seq = [mutual[0]] + starts_seq
        used_rows.update(opp[(head, starts_seq[0])])
        chain_vars = set(levels) | set(starts_seq)
        if poisoned & chain_vars or len(chain_vars) != 2 * len(levels):
            continue
        if not _stretch_rows_consistent(
            levels, starts_seq, opp, same2, windows, used_rows, tol
        ):
            continue
        horizon = len(levels)
        min_run = sum(
            1 for (u, w) in opp if u == starts_seq[0] and w in chain_vars
        )
        max_run = None
        for rid, sup, bound in windows:
            if set(sup) <= set(levels):
                max_run = int(round(bound))
                break
        if max_run is None:
            continue
        params = StretchParams(
            tuple(levels), tuple(starts_seq), min_run, max_run
        )
        scope = tuple(levels) + tuple(starts_seq)
        records.append(
            SemanticRecord(
                Family.STRETCH, scope, params, tuple(sorted(used_rows))
            )
        )
    return records


def _stretch_rows_consistent(levels, starts_seq, opp, same2, windows,
                             used_rows: set[int], tol: float) -> bool:
    """Verify the full chain is present and collect its row ids."""
    horizon = len(levels)
    chain_vars = set(levels) | set(starts_seq)
    position = {v: t for t, v in enumerate(levels)}

    # ordering rows from each run-start: its own level plus the next
    # min_run - 1 levels (truncated at the horizon)
    min_run = sum(1 for (u, w) in opp if u == starts_seq[0] and w in chain_vars)
    if min_run < 1:
        return False
    expected_opp: set[tuple[int, int]] = {(levels[0], starts_seq[0])}
    for t in range(horizon):
        stop = min(t + min_run, horizon)
        for k in range(t, stop):
            expected_opp.add((starts_seq[t], levels[k]))
    actual_opp = {
        key for key in opp if key[0] in chain_vars and key[1] in chain_vars
    }
    if actual_opp != expected_opp:
        return False
    for key in expected_opp:
        rids = opp[key]
        if len(rids) != 1:
            return False
        used_rows.update(rids)

    expected_off = {
        frozenset({starts_seq[t], levels[t - 1]}) for t in range(1, horizon)
    }
    actual_off = {key for key in same2 if key <= chain_vars}
    if actual_off != expected_off:
        return False
    for key in expected_off:
        rids = same2[key]
        if len(rids) != 1:
            return False
        used_rows.update(rids)

    touching = [
        (rid, sup, bound) for rid, sup, bound in windows if set(sup) & chain_vars
    ]
    if not touching:
        return False
    sizes = {len(sup) for _, sup, _ in touching}
    if len(sizes) != 1:
        return False
    width = sizes.pop()
    max_run = width - 1
    if max_run < min_run or max_run > horizon - 1:
        return False
    expected_windows = {
        frozenset(levels[i:i + width]) for i in range(horizon - max_run)
    }
    seen: set[frozenset[int]] = set()
    for rid, sup, bound in touching:
        key = frozenset(sup)
        if key not in expected_windows or key in seen:
            return False
        if abs(bound - max_run) > tol:
            return False
        seen.add(key)
        used_rows.add(rid)
    return seen == expected_windows
