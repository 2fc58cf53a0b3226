"""Objective and constraint evaluation.

Everything the search modules optimize or must respect is defined here:
total hop distance, cut size, per-FPGA I/O usage, and the validator.  The
cost of a net is the sum, over the FPGAs hosting its drains, of the hop
distance from the nearest copy of the source; without replication this is
exactly the classic source-to-drain-FPGA hop sum.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .model import Hypergraph, Placement, ResourceVector
from .topology import HopMatrix, MfsTopology, compute_hop_matrix


@dataclass(frozen=True)
class Violation:
    """One constraint breach.  `index` is an FPGA id for resource/io kinds,
    an edge id for hop kinds, and a vertex id for placement kinds."""

    kind: str  # resource | io | hop | placement
    index: int
    observed: int
    limit: int
    detail: str = ""

    def __post_init__(self):
        assert self.observed > self.limit, "violations must actually exceed the limit"


@dataclass
class MetricsReport:
    total_hop_distance: int
    cut_size: int
    fpga_usage: list[ResourceVector]
    fpga_io: list[int]
    max_hop_used: int
    replica_count: int

    def to_text(self) -> str:
        """Flat key/value JSON, deterministic byte-for-byte."""
        payload = {
            "total_hop_distance": self.total_hop_distance,
            "cut_size": self.cut_size,
            "fpga_usage": [list(u.values) for u in self.fpga_usage],
            "fpga_io": list(self.fpga_io),
            "max_hop_used": self.max_hop_used,
            "replica_count": self.replica_count,
        }
        return json.dumps(payload, sort_keys=True, separators=(", ", ": ")) + "\n"


def _source_hosts(p: Placement, src: int) -> tuple[int, set[int]]:
    return p.original[src], p.replicas[src]


def net_hop_distance(h: Hypergraph, e: int, p: Placement, hm: HopMatrix) -> int:
    """Unweighted cost of net e: per drain FPGA, the hop distance from the
    nearest copy of the source."""
    edge = h.edges[e]
    so, sreps = _source_hosts(p, edge.source)
    dist = hm.dist
    total = 0
    seen: set[int] = set()
    for d in edge.drains:
        for f in p.hosts(d):
            if f in seen:
                continue
            seen.add(f)
            best = dist[so][f]
            for s in sreps:
                ds = dist[s][f]
                if ds < best:
                    best = ds
            total += best
    return total


def total_hop_distance(h: Hypergraph, p: Placement, hm: HopMatrix) -> int:
    """Sum over nets of weight times net hop distance."""
    return sum(e.weight * net_hop_distance(h, e.id, p, hm) for e in h.edges)


def cut_size(h: Hypergraph, p: Placement) -> int:
    """Number of nets no single FPGA can serve locally.

    A net is uncut iff some one FPGA hosts a copy of the source and a copy
    of every drain.
    """
    cut = 0
    for e in h.edges:
        common = p.hosts(e.source)
        for d in e.drains:
            common = common & p.hosts(d)
            if not common:
                break
        if not common:
            cut += 1
    return cut


def net_io_contrib_hosts(edge, hosts_of, dist) -> dict[int, int]:
    """Per-FPGA signal units a net adds under an arbitrary hosts accessor:
    w_e per importing FPGA (hosts a drain, no local source copy) and w_e
    per exporting FPGA (the nearest source copy serving at least one
    importer; ties to the lowest id)."""
    src_hosts = hosts_of(edge.source)
    importers: set[int] = set()
    for d in edge.drains:
        for f in hosts_of(d):
            if f not in src_hosts:
                importers.add(f)
    if not importers:
        return {}
    contrib: dict[int, int] = {}
    exporters: set[int] = set()
    src_sorted = sorted(src_hosts)
    for f in importers:
        contrib[f] = edge.weight
        server = min(src_sorted, key=lambda s: (dist[s][f], s))
        exporters.add(server)
    for s in exporters:
        contrib[s] = contrib.get(s, 0) + edge.weight
    return contrib


def _net_io_contrib(
    h: Hypergraph, e: int, p: Placement, hm: HopMatrix
) -> dict[int, int]:
    return net_io_contrib_hosts(h.edges[e], p.hosts, hm.dist)


def io_usage_all(h: Hypergraph, p: Placement, hm: HopMatrix, k_fpgas: int) -> list[int]:
    """I/O signal units per FPGA, across all nets."""
    io = [0] * k_fpgas
    for e in h.edges:
        for f, units in _net_io_contrib(h, e.id, p, hm).items():
            io[f] += units
    return io


def io_usage(h: Hypergraph, p: Placement, hm: HopMatrix, f: int) -> int:
    return io_usage_all(h, p, hm, hm.k_fpgas)[f]


def _placement_violations(p: Placement, k_fpgas: int) -> list[Violation]:
    out: list[Violation] = []
    for v in range(p.num_vertices):
        o = p.original[v]
        bad = 0
        detail = []
        if not (0 <= o < k_fpgas):
            bad += 1
            detail.append(f"original {o} out of range")
        for r in sorted(p.replicas[v]):
            if not (0 <= r < k_fpgas):
                bad += 1
                detail.append(f"replica {r} out of range")
            elif r == o:
                bad += 1
                detail.append("replica coincides with original")
        if bad:
            out.append(Violation("placement", v, bad, 0, "; ".join(detail)))
    return out


def fpga_usage(h: Hypergraph, p: Placement, k_fpgas: int) -> list[ResourceVector]:
    """Per-FPGA resource usage summed over every hosted copy."""
    k = h.num_resource_types
    usage = [[0] * k for _ in range(k_fpgas)]
    for v in range(h.num_vertices):
        w = h.vertices[v].weight
        for f in p.hosts(v):
            row = usage[f]
            for i in range(k):
                row[i] += w[i]
    return [ResourceVector(row) for row in usage]


def validate(
    h: Hypergraph, t: MfsTopology, p: Placement, hm: HopMatrix | None = None
) -> list[Violation]:
    """Empty iff the placement is well-formed and meets every resource,
    I/O, and max-hop constraint.  Violations are data, never exceptions."""
    placement_bad = _placement_violations(p, t.k_fpgas)
    if placement_bad:
        # The remaining checks index by FPGA id and would be meaningless.
        return placement_bad
    if hm is None:
        hm = compute_hop_matrix(t)
    out: list[Violation] = []
    usage = fpga_usage(h, p, t.k_fpgas)
    for f in range(t.k_fpgas):
        cap = t.capacities[f]
        for i in range(t.num_resource_types):
            if usage[f][i] > cap[i]:
                out.append(
                    Violation("resource", f, usage[f][i], cap[i], f"resource type {i}")
                )
    io = io_usage_all(h, p, hm, t.k_fpgas)
    for f in range(t.k_fpgas):
        lim = t.io_limits[f]
        if lim is not None and io[f] > lim:
            out.append(Violation("io", f, io[f], lim))
    if t.hop_max is not None:
        dist = hm.dist
        for e in h.edges:
            so, sreps = _source_hosts(p, e.source)
            worst = 0
            seen: set[int] = set()
            for d in e.drains:
                for f in p.hosts(d):
                    if f in seen:
                        continue
                    seen.add(f)
                    best = dist[so][f]
                    for s in sreps:
                        ds = dist[s][f]
                        if ds < best:
                            best = ds
                    if best > worst:
                        worst = best
            if worst > t.hop_max:
                out.append(Violation("hop", e.id, worst, t.hop_max))
    return out


def report(
    h: Hypergraph, t: MfsTopology, p: Placement, hm: HopMatrix | None = None
) -> MetricsReport:
    if hm is None:
        hm = compute_hop_matrix(t)
    dist = hm.dist
    thd = 0
    max_hop = 0
    for e in h.edges:
        so, sreps = _source_hosts(p, e.source)
        units = 0
        seen: set[int] = set()
        for d in e.drains:
            for f in p.hosts(d):
                if f in seen:
                    continue
                seen.add(f)
                best = dist[so][f]
                for s in sreps:
                    ds = dist[s][f]
                    if ds < best:
                        best = ds
                units += best
                if best > max_hop:
                    max_hop = best
        thd += e.weight * units
    return MetricsReport(
        total_hop_distance=thd,
        cut_size=cut_size(h, p),
        fpga_usage=fpga_usage(h, p, t.k_fpgas),
        fpga_io=io_usage_all(h, p, hm, t.k_fpgas),
        max_hop_used=max_hop,
        replica_count=p.replica_count(),
    )
