"""Radial feeder model: buses, lines, sector partition and per-unit view.

The bundled dataset is the standard IEEE 33-bus feeder. Line resistances and
reactances are kept in ohms so the base voltage can be changed without
touching the data (11 kV by default, 12.66 kV is the customary base for this
feeder).
"""

from __future__ import annotations

import csv
import io
import math
from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from importlib import resources
from os import PathLike
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, SchemaError, TopologyError

BUS_COLUMNS = ("bus_id", "p_kw", "q_kvar", "n_residences")
LINE_COLUMNS = ("from", "to", "r_ohm", "x_ohm", "ampacity_a")
SECTOR_COLUMNS = ("bus_id", "sector_id")

DEFAULT_BASE_KV = 11.0
DEFAULT_BASE_MVA = 1.0

# Documented default 7-way partition of the 33-bus feeder (bus ranges inclusive).
IEEE33_SECTORS = {
    1: range(2, 6),
    2: range(6, 10),
    3: range(10, 15),
    4: range(15, 19),
    5: range(19, 23),
    6: range(23, 26),
    7: range(26, 34),
}


@dataclass(frozen=True)
class Bus:
    id: int
    p_load_kw: float = 0.0
    q_load_kvar: float = 0.0
    n_residences: int = 0
    sector_id: int = 0

    def __post_init__(self):
        if self.p_load_kw < 0 or self.q_load_kvar < 0 or self.n_residences < 0:
            raise SchemaError(f"bus {self.id}: loads and residence count must be non-negative")


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    r_ohm: float
    x_ohm: float
    ampacity_a: float

    def __post_init__(self):
        if self.r_ohm < 0 or self.x_ohm < 0:
            raise SchemaError(f"line {self.from_bus}->{self.to_bus}: negative impedance")
        if self.r_ohm == 0 and self.x_ohm == 0:
            raise SchemaError(f"line {self.from_bus}->{self.to_bus}: zero impedance")
        if not self.ampacity_a > 0:
            raise SchemaError(f"line {self.from_bus}->{self.to_bus}: ampacity must be positive")


@dataclass(frozen=True)
class SectorMap:
    """Assignment of every non-slack bus to a sector in ``1..sector_count``."""

    assignments: Mapping[int, int]
    sector_count: int

    def buses_in(self, sector: int) -> list[int]:
        return sorted(b for b, s in self.assignments.items() if s == sector)

    def validate(self, net: RadialNetwork) -> None:
        non_slack = {b.id for b in net.buses if b.id != net.slack_id}
        if set(self.assignments) != non_slack:
            missing = sorted(non_slack - set(self.assignments))
            extra = sorted(set(self.assignments) - non_slack)
            raise ConfigurationError(
                f"sector map must cover exactly the non-slack buses (missing {missing}, extra {extra})"
            )
        for s in range(1, self.sector_count + 1):
            members = self.buses_in(s)
            if not members:
                raise ConfigurationError(f"sector {s} is empty")
            if not net.is_connected_subset(members):
                raise ConfigurationError(f"sector {s} is not a connected subtree")
        bad = [b for b, s in self.assignments.items() if not 1 <= s <= self.sector_count]
        if bad:
            raise ConfigurationError(f"buses {sorted(bad)} have sector ids outside 1..{self.sector_count}")

    def index_vector(self, net: RadialNetwork) -> np.ndarray:
        """Sector id per bus in network order (0 at the slack)."""
        return np.array([self.assignments.get(b.id, 0) for b in net.buses], dtype=int)


@dataclass(frozen=True)
class RadialNetwork:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    base_kv: float = DEFAULT_BASE_KV
    base_mva: float = DEFAULT_BASE_MVA
    v_rated_pu: float = 1.0
    slack_id: int = 1
    name: str = ""
    # sector map read together with the dataset, if any
    sectors: SectorMap | None = field(default=None, compare=False)

    def __post_init__(self):
        _validate_tree(self.buses, self.lines, self.slack_id)

    # -- indexing helpers -------------------------------------------------

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    @cached_property
    def bus_ids(self) -> tuple[int, ...]:
        return tuple(b.id for b in self.buses)

    @cached_property
    def index(self) -> dict[int, int]:
        return {b.id: i for i, b in enumerate(self.buses)}

    @cached_property
    def slack_index(self) -> int:
        return self.index[self.slack_id]

    @cached_property
    def line_ends(self) -> tuple[np.ndarray, np.ndarray]:
        """(parent index, child index) per line, oriented away from the slack."""
        parents = self.parent_of
        frm, to = [], []
        for ln in self.lines:
            a, b = self.index[ln.from_bus], self.index[ln.to_bus]
            if parents[b] != a:
                a, b = b, a
            frm.append(a)
            to.append(b)
        return np.array(frm), np.array(to)

    @cached_property
    def parent_of(self) -> dict[int, int]:
        """Child bus index -> parent bus index."""
        adj = self._adjacency()
        parent = {}
        seen = {self.slack_index}
        queue = deque([self.slack_index])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    parent[v] = u
                    queue.append(v)
        return parent

    @cached_property
    def bfs_order(self) -> tuple[int, ...]:
        """Bus indices in breadth-first order from the slack."""
        adj = self._adjacency()
        order = [self.slack_index]
        seen = {self.slack_index}
        for u in order:
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    order.append(v)
        return tuple(order)

    @cached_property
    def path_matrix(self) -> np.ndarray:
        """Line-by-bus incidence: entry [k, j] is 1 when bus j lies downstream of line k.

        Branch currents are ``path_matrix @ bus_currents`` and the cumulative
        drop at bus j is ``path_matrix[:, j] @ (z * branch_currents)``.
        """
        frm, to = self.line_ends
        line_into = {int(c): k for k, c in enumerate(to)}
        m = np.zeros((self.n_lines, self.n_buses))
        for j in range(self.n_buses):
            node = j
            while node != self.slack_index:
                k = line_into[node]
                m[k, j] = 1.0
                node = int(frm[k])
        return m

    @cached_property
    def depth(self) -> int:
        parents = self.parent_of
        best = 0
        for j in range(self.n_buses):
            d, node = 0, j
            while node in parents:
                node = parents[node]
                d += 1
            best = max(best, d)
        return best

    def _adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in self.buses]
        for ln in self.lines:
            a, b = self.index[ln.from_bus], self.index[ln.to_bus]
            adj[a].append(b)
            adj[b].append(a)
        return adj

    def is_connected_subset(self, bus_ids: Iterable[int]) -> bool:
        members = {self.index[b] for b in bus_ids}
        if not members:
            return False
        # a vertex set of a tree is connected iff exactly one member lacks a parent inside the set
        parents = self.parent_of
        tops = [m for m in members if parents.get(m) not in members]
        return len(tops) == 1

    # -- array views ------------------------------------------------------

    @cached_property
    def p_load_kw(self) -> np.ndarray:
        return np.array([b.p_load_kw for b in self.buses], dtype=float)

    @cached_property
    def q_load_kvar(self) -> np.ndarray:
        return np.array([b.q_load_kvar for b in self.buses], dtype=float)

    @cached_property
    def n_residences(self) -> np.ndarray:
        return np.array([b.n_residences for b in self.buses], dtype=int)

    @cached_property
    def r_ohm(self) -> np.ndarray:
        return np.array([ln.r_ohm for ln in self.lines], dtype=float)

    @cached_property
    def x_ohm(self) -> np.ndarray:
        return np.array([ln.x_ohm for ln in self.lines], dtype=float)

    @cached_property
    def ampacity_a(self) -> np.ndarray:
        return np.array([ln.ampacity_a for ln in self.lines], dtype=float)

    @property
    def z_base_ohm(self) -> float:
        return self.base_kv**2 / self.base_mva

    @property
    def i_base_a(self) -> float:
        return 1000.0 * self.base_mva / (math.sqrt(3.0) * self.base_kv)

    def with_base(self, base_kv: float | None = None, base_mva: float | None = None) -> RadialNetwork:
        kv = self.base_kv if base_kv is None else base_kv
        mva = self.base_mva if base_mva is None else base_mva
        _check_bases(kv, mva)
        return replace(self, base_kv=kv, base_mva=mva)

    def with_loads(self, p_kw: Sequence[float], q_kvar: Sequence[float]) -> RadialNetwork:
        buses = tuple(
            replace(b, p_load_kw=float(p), q_load_kvar=float(q)) for b, p, q in zip(self.buses, p_kw, q_kvar)
        )
        return replace(self, buses=buses)


def _check_bases(base_kv, base_mva):
    if not (base_kv > 0 and base_mva > 0):
        raise ConfigurationError(f"base values must be positive (base_kv={base_kv}, base_mva={base_mva})")


def _validate_tree(buses, lines, slack_id):
    ids = [b.id for b in buses]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise SchemaError(f"duplicate bus ids: {dupes}")
    if slack_id not in ids:
        raise TopologyError(f"slack bus {slack_id} is not in the bus table", bus_id=slack_id)
    known = set(ids)
    seen_pairs = set()
    for ln in lines:
        for end in (ln.from_bus, ln.to_bus):
            if end not in known:
                raise SchemaError(f"line {ln.from_bus}->{ln.to_bus} references unknown bus {end}")
        if ln.from_bus == ln.to_bus:
            raise TopologyError(f"self-loop at bus {ln.from_bus}", bus_id=ln.from_bus)
        pair = frozenset((ln.from_bus, ln.to_bus))
        if pair in seen_pairs:
            raise SchemaError(f"duplicate line {ln.from_bus}-{ln.to_bus}")
        seen_pairs.add(pair)

    adj: dict[int, list[int]] = {i: [] for i in ids}
    for ln in lines:
        adj[ln.from_bus].append(ln.to_bus)
        adj[ln.to_bus].append(ln.from_bus)

    # depth-first walk; meeting an already-visited bus other than the parent means a cycle
    parent = {slack_id: None}
    stack = [slack_id]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v == parent[u]:
                continue
            if v in parent:
                raise TopologyError(f"cycle detected through bus {v}", bus_id=v)
            parent[v] = u
            stack.append(v)
    unreached = [i for i in ids if i not in parent]
    if unreached:
        raise TopologyError(f"bus {unreached[0]} is not connected to the slack bus", bus_id=unreached[0])
    if len(lines) != len(buses) - 1:
        raise TopologyError(f"expected {len(buses) - 1} lines for {len(buses)} buses, got {len(lines)}")


# -- reading tabular data -------------------------------------------------


def _read_rows(source, required: Sequence[str], what: str) -> list[dict[str, str]]:
    if isinstance(source, (str, PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            return _read_rows(fh, required, what)
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        reader = csv.DictReader(source)
        header = [h.strip() for h in (reader.fieldnames or [])]
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"{what} table is missing columns {missing}")
        return [{k.strip(): (v or "").strip() for k, v in row.items() if k is not None} for row in reader]
    rows = [dict(r) for r in source]
    for r in rows:
        missing = [c for c in required if c not in r]
        if missing:
            raise SchemaError(f"{what} table is missing columns {missing}")
    return rows


def _num(row, key, what, cast=float):
    try:
        return cast(row[key]) if cast is not int else int(float(row[key]))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{what}: bad value {row[key]!r} in column {key!r}") from exc


def load_network(
    buses,
    lines,
    *,
    sectors=None,
    base_kv: float = DEFAULT_BASE_KV,
    base_mva: float = DEFAULT_BASE_MVA,
    slack_id: int = 1,
    name: str = "",
) -> RadialNetwork:
    """Build and validate a network from bus and line tables.

    Each table may be a CSV path, an open text stream, or an iterable of
    row mappings using the column names in ``BUS_COLUMNS`` / ``LINE_COLUMNS``.
    An optional ``bus_id,sector_id`` table assigns sectors.
    """
    _check_bases(base_kv, base_mva)
    bus_rows = _read_rows(buses, BUS_COLUMNS, "bus")
    line_rows = _read_rows(lines, LINE_COLUMNS, "line")
    smap = None
    if sectors is not None:
        smap = read_sector_map(sectors)
    assigned = smap.assignments if smap else {}

    bus_objs = tuple(
        Bus(
            id=_num(r, "bus_id", "bus", int),
            p_load_kw=_num(r, "p_kw", "bus"),
            q_load_kvar=_num(r, "q_kvar", "bus"),
            n_residences=_num(r, "n_residences", "bus", int),
            sector_id=assigned.get(_num(r, "bus_id", "bus", int), 0),
        )
        for r in bus_rows
    )
    line_objs = tuple(
        Line(
            from_bus=_num(r, "from", "line", int),
            to_bus=_num(r, "to", "line", int),
            r_ohm=_num(r, "r_ohm", "line"),
            x_ohm=_num(r, "x_ohm", "line"),
            ampacity_a=_num(r, "ampacity_a", "line"),
        )
        for r in line_rows
    )
    net = RadialNetwork(
        buses=bus_objs, lines=line_objs, base_kv=base_kv, base_mva=base_mva, slack_id=slack_id, name=name
    )
    if smap is not None:
        smap.validate(net)
        net = replace(net, sectors=smap)
    return net


def read_sector_map(source) -> SectorMap:
    rows = _read_rows(source, SECTOR_COLUMNS, "sector")
    assignments: dict[int, int] = {}
    for r in rows:
        b = _num(r, "bus_id", "sector", int)
        if b in assignments:
            raise SchemaError(f"bus {b} assigned to more than one sector")
        assignments[b] = _num(r, "sector_id", "sector", int)
    if not assignments:
        raise SchemaError("sector table is empty")
    return SectorMap(assignments=assignments, sector_count=max(assignments.values()))


def write_sector_map(smap: SectorMap, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("bus_id,sector_id\n")
        for b in sorted(smap.assignments):
            fh.write(f"{b},{smap.assignments[b]}\n")


def ieee33(base_kv: float = DEFAULT_BASE_KV, base_mva: float = DEFAULT_BASE_MVA) -> RadialNetwork:
    """The bundled 33-bus feeder with 92 residences per load bus and the default sectors."""
    data = resources.files("gridbatt") / "data"
    with (data / "ieee33_buses.csv").open(encoding="utf-8") as b, (data / "ieee33_lines.csv").open(
        encoding="utf-8"
    ) as ln, (data / "ieee33_sectors.csv").open(encoding="utf-8") as s:
        return load_network(b, ln, sectors=s, base_kv=base_kv, base_mva=base_mva, name="ieee33")


# -- per-unit ---------------------------------------------------------------


@dataclass(frozen=True)
class PerUnitNetwork:
    """Impedances and spot loads of a network expressed on its base."""

    r_pu: np.ndarray
    x_pu: np.ndarray
    p_pu: np.ndarray
    q_pu: np.ndarray
    z_base_ohm: float
    base_mva: float

    def to_physical(self) -> dict[str, np.ndarray]:
        return {
            "r_ohm": self.r_pu * self.z_base_ohm,
            "x_ohm": self.x_pu * self.z_base_ohm,
            "p_kw": self.p_pu * self.base_mva * 1000.0,
            "q_kvar": self.q_pu * self.base_mva * 1000.0,
        }


def to_per_unit(net: RadialNetwork) -> PerUnitNetwork:
    _check_bases(net.base_kv, net.base_mva)
    zb = net.z_base_ohm
    kw_base = net.base_mva * 1000.0
    return PerUnitNetwork(
        r_pu=net.r_ohm / zb,
        x_pu=net.x_ohm / zb,
        p_pu=net.p_load_kw / kw_base,
        q_pu=net.q_load_kvar / kw_base,
        z_base_ohm=zb,
        base_mva=net.base_mva,
    )


# -- sectors ----------------------------------------------------------------


def _is_ieee33(net: RadialNetwork) -> bool:
    if net.n_buses != 33 or net.slack_id != 1:
        return False
    expected = {frozenset(p) for p in _IEEE33_EDGES}
    return {frozenset((ln.from_bus, ln.to_bus)) for ln in net.lines} == expected


_IEEE33_EDGES = [(i, i + 1) for i in range(1, 18)] + [(2, 19), (19, 20), (20, 21), (21, 22)]
_IEEE33_EDGES += [(3, 23), (23, 24), (24, 25), (6, 26)] + [(i, i + 1) for i in range(26, 33)]


def default_sector_map(net: RadialNetwork, sector_count: int = 7) -> SectorMap:
    """Partition the non-slack buses into ``sector_count`` connected subtrees.

    The 33-bus feeder with seven sectors gets the fixed documented
    partition. Otherwise buses are grown into sectors by repeatedly merging
    the pair of adjacent sectors with the smallest combined size, which keeps every
    sector connected.
    """
    non_slack = [b.id for b in net.buses if b.id != net.slack_id]
    if sector_count < 1:
        raise ConfigurationError("sector_count must be at least 1")
    if len(non_slack) < sector_count:
        raise ConfigurationError(
            f"cannot split {len(non_slack)} non-slack buses into {sector_count} sectors"
        )
    if sector_count == 7 and _is_ieee33(net):
        assignments = {b: s for s, rng in IEEE33_SECTORS.items() for b in rng}
        return SectorMap(assignments=assignments, sector_count=7)

    parents = net.parent_of
    ids = net.bus_ids
    group = {net.index[b]: net.index[b] for b in non_slack}  # bus index -> group representative
    members = {g: [g] for g in group}

    def mergeable():
        # groups whose top bus hangs off another group (not off the slack)
        out = []
        for g, mem in members.items():
            p = parents.get(g)
            if p is not None and p != net.slack_index:
                out.append((len(mem) + len(members[group[p]]), net.bfs_order.index(g), g))
        return sorted(out)

    while len(members) > sector_count:
        cands = mergeable()
        if not cands:
            raise ConfigurationError(
                f"feeder has more slack-adjacent branches than {sector_count} sectors"
            )
        _, _, g = cands[0]
        target = group[parents[g]]
        moved = members.pop(g)
        for m in moved:
            group[m] = target
        members[target].extend(moved)

    reps = sorted(members, key=lambda g: net.bfs_order.index(g))
    sector_of = {g: s + 1 for s, g in enumerate(reps)}
    assignments = {ids[i]: sector_of[group[i]] for i in group}
    return SectorMap(assignments=assignments, sector_count=sector_count)
