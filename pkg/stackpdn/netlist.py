#!/usr/bin/env python
""" Builds the resistive PDN network of a bank from its layout.

    Every DRAM tier carries one rail grid per net.  Each TSV is a series
    chain from the package bump (merged into the supply terminal) up through
    the tiers, tapping its net's grid on every tier.  Subarray loads attach
    to the top tier.

    See the file "LICENSE" for the full license governing this code.
    Copyright 2021 Ken Farmer
"""
import dataclasses
from dataclasses import dataclass
import logging
import math
from typing import Dict, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from stackpdn import common as comm
from stackpdn.geometry import PdnLayout, PdnParams, StackConfig


logger = logging.getLogger(__name__)

NET_P = 0
NET_G = 1
NET_NAMES = ('P', 'G')
BUMP_LAYER = 0



class Node(NamedTuple):
    id: int
    net: str
    layer: int
    grid_x: Optional[int]
    grid_y: Optional[int]


class LoadPoint(NamedTuple):
    """ Grid taps a subarray draws its current from (P) and returns it to (G).

        The current is split evenly over the taps.
    """
    p_nodes: Tuple[int, ...]
    g_nodes: Tuple[int, ...]



@dataclass(frozen=True)
class LoadSet:
    """ Concurrently active subarrays and the current each one draws, in amps.
    """
    entries: Tuple[Tuple[int, float], ...] = ()

    def __post_init__(self) -> None:
        ordered = tuple(sorted((int(sa), float(amps)) for sa, amps in self.entries))
        ids = [sa for sa, _ in ordered]
        if len(set(ids)) != len(ids):
            raise comm.InvalidParamsError(f'duplicate subarray ids in load set: {ids}')
        for sa, amps in ordered:
            if not amps >= 0 or math.isinf(amps):
                raise comm.InvalidParamsError(f'load current for subarray {sa} must be >= 0: {amps}')
        object.__setattr__(self, 'entries', ordered)

    @classmethod
    def uniform(cls, subarray_ids: Iterable[int], current: float = 0.1) -> 'LoadSet':
        return cls(tuple((sa, current) for sa in subarray_ids))

    @classmethod
    def from_dict(cls, entries: Mapping[int, float]) -> 'LoadSet':
        return cls(tuple(entries.items()))

    @property
    def subarrays(self) -> List[int]:
        return [sa for sa, _ in self.entries]

    def as_dict(self) -> Dict[int, float]:
        return dict(self.entries)

    def __len__(self) -> int:
        return len(self.entries)



@dataclass(frozen=True, eq=False)
class ResistorNetwork:
    """ Undirected conductance graph of both nets of a bank PDN.

        Node attributes and edges are held as read-only numpy arrays indexed
        by node id and edge id.  Identity is the equality, so networks can
        key caches of factorizations.
    """
    node_net: np.ndarray
    node_layer: np.ndarray
    node_gx: np.ndarray
    node_gy: np.ndarray
    edge_a: np.ndarray
    edge_b: np.ndarray
    edge_g: np.ndarray
    supply_p: int
    supply_g: int
    load_points: Mapping[int, LoadPoint]
    tsv_edges: Tuple[Tuple[int, ...], ...]
    tsv_chain_resistance: float
    per_tsv_extra: float = 0.0
    supply_voltage: float = 1.5
    top_grid_p: Optional[np.ndarray] = None
    top_grid_g: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        for name in ('node_net', 'node_layer', 'node_gx', 'node_gy', 'edge_a', 'edge_b', 'edge_g',
                     'top_grid_p', 'top_grid_g'):
            value = getattr(self, name)
            if value is not None:
                value = np.array(value)
                value.setflags(write=False)
                object.__setattr__(self, name, value)

    @classmethod
    def from_edges(cls,
                   nets: Sequence[str],
                   edges: Sequence[Tuple[int, int, float]],
                   supply_p: int,
                   supply_g: int,
                   load_points: Mapping[int, Tuple[Sequence[int], Sequence[int]]],
                   tsv_edges: Sequence[Sequence[int]] = (),
                   tsv_chain_resistance: float = 0.25,
                   layers: Optional[Sequence[int]] = None,
                   supply_voltage: float = 1.5) -> 'ResistorNetwork':
        """ Builds a small network by hand; used for fixtures and toy circuits.
        """
        net_ids = np.array([NET_NAMES.index(x) for x in nets], dtype=np.int8)
        n_nodes = len(nets)
        network = cls(node_net=net_ids,
                      node_layer=np.array(layers if layers is not None else [BUMP_LAYER] * n_nodes, dtype=np.int16),
                      node_gx=np.full(n_nodes, -1, dtype=np.int32),
                      node_gy=np.full(n_nodes, -1, dtype=np.int32),
                      edge_a=np.array([e[0] for e in edges], dtype=np.int64),
                      edge_b=np.array([e[1] for e in edges], dtype=np.int64),
                      edge_g=np.array([e[2] for e in edges], dtype=float),
                      supply_p=supply_p,
                      supply_g=supply_g,
                      load_points={sa: LoadPoint(tuple(p), tuple(g)) for sa, (p, g) in load_points.items()},
                      tsv_edges=tuple(tuple(x) for x in tsv_edges),
                      tsv_chain_resistance=tsv_chain_resistance,
                      supply_voltage=supply_voltage)
        check_network(network)
        return network

    @property
    def node_count(self) -> int:
        return len(self.node_net)

    @property
    def edge_count(self) -> int:
        return len(self.edge_g)

    @property
    def grid_shape(self) -> Optional[Tuple[int, int]]:
        if self.top_grid_p is None:
            return None
        return self.top_grid_p.shape

    def node(self, node_id: int) -> Node:
        gx = int(self.node_gx[node_id])
        gy = int(self.node_gy[node_id])
        return Node(id=node_id,
                    net=NET_NAMES[self.node_net[node_id]],
                    layer=int(self.node_layer[node_id]),
                    grid_x=gx if gx >= 0 else None,
                    grid_y=gy if gy >= 0 else None)

    @property
    def nodes(self) -> List[Node]:
        return [self.node(i) for i in range(self.node_count)]

    @property
    def edges(self) -> List[Tuple[int, int, float]]:
        return [(int(a), int(b), float(g)) for a, b, g in zip(self.edge_a, self.edge_b, self.edge_g)]

    def tsv_edge_ids(self) -> np.ndarray:
        return np.array([e for chain in self.tsv_edges for e in chain], dtype=np.int64)

    def observed_pairs(self) -> Tuple[np.ndarray, np.ndarray]:
        """ Co-located (P node, G node) pairs at which droop is reported.

            That is the top-tier grid when there is one, otherwise every
            load tap.
        """
        if self.top_grid_p is not None:
            return self.top_grid_p.ravel(), self.top_grid_g.ravel()
        p_nodes: List[int] = []
        g_nodes: List[int] = []
        for sa in sorted(self.load_points):
            point = self.load_points[sa]
            for p, g in zip(point.p_nodes, point.g_nodes):
                p_nodes.append(p)
                g_nodes.append(g)
        return np.array(p_nodes, dtype=np.int64), np.array(g_nodes, dtype=np.int64)



def check_network(network: ResistorNetwork) -> None:
    """ Confirms conductances are valid and each net is one connected piece.
    """
    g = network.edge_g
    if len(g) and (not np.all(np.isfinite(g)) or not np.all(g > 0)):
        raise comm.InvalidParamsError('every edge conductance must be > 0 and finite')
    nets = network.node_net
    if np.any(nets[network.edge_a] != nets[network.edge_b]):
        raise comm.DisconnectedNetError('network has an edge joining the P and G nets')
    if nets[network.supply_p] != NET_P or nets[network.supply_g] != NET_G:
        raise comm.InvalidParamsError('supply terminals are on the wrong nets')

    n = network.node_count
    graph = sp.coo_matrix((np.ones(len(g)), (network.edge_a, network.edge_b)), shape=(n, n))
    _, labels = csgraph.connected_components(graph, directed=False)
    for net, supply in ((NET_P, network.supply_p), (NET_G, network.supply_g)):
        stranded = np.flatnonzero((nets == net) & (labels != labels[supply]))
        if len(stranded):
            raise comm.DisconnectedNetError(f'{len(stranded)} {NET_NAMES[net]}-net nodes cannot reach '
                                            f'the supply, first is node {stranded[0]}')



def _snap(coord: float, step: float, count: int) -> int:
    return min(max(int(math.floor(coord / step + 0.5)), 0), count - 1)


def build_network(layout: PdnLayout,
                  params: PdnParams,
                  stack: StackConfig) -> ResistorNetwork:
    """ Builds the 3D resistor mesh of a layout.

        Node ids: 0 is the P supply, 1 the G supply, then the grid nodes
        ordered by (net, tier, grid_y, grid_x).  Edge ids: per (net, tier)
        the horizontal then vertical rail segments, followed by the TSV
        chain segments in tsv_sites order.
    """
    params.validate()
    stack.validate()
    nx_, ny_ = params.vertical_rails, params.horizontal_rails
    tiers = stack.dram_layers
    dx = layout.bank_width / (nx_ - 1)
    dy = layout.bank_height / (ny_ - 1)
    per_grid = nx_ * ny_
    first_tier_layer = 1 + stack.logic_layers

    def grid_base(net: int, tier: int) -> int:
        return 2 + (net * tiers + tier) * per_grid

    n_nodes = 2 + 2 * tiers * per_grid
    node_net = np.empty(n_nodes, dtype=np.int8)
    node_layer = np.empty(n_nodes, dtype=np.int16)
    node_gx = np.full(n_nodes, -1, dtype=np.int32)
    node_gy = np.full(n_nodes, -1, dtype=np.int32)
    node_net[0:2] = (NET_P, NET_G)
    node_layer[0:2] = BUMP_LAYER
    gx_pattern = np.tile(np.arange(nx_, dtype=np.int32), ny_)
    gy_pattern = np.repeat(np.arange(ny_, dtype=np.int32), nx_)
    for net in (NET_P, NET_G):
        for tier in range(tiers):
            base = grid_base(net, tier)
            node_net[base:base+per_grid] = net
            node_layer[base:base+per_grid] = first_tier_layer + tier
            node_gx[base:base+per_grid] = gx_pattern
            node_gy[base:base+per_grid] = gy_pattern

    segment_width = params.rail_width * params.rail_parallel_straps
    g_horizontal = segment_width / (params.sheet_resistance * dx)
    g_vertical = segment_width / (params.sheet_resistance * dy)

    local = np.arange(per_grid).reshape(ny_, nx_)
    h_a = local[:, :-1].ravel()
    v_a = local[:-1, :].ravel()
    edge_a: List[np.ndarray] = []
    edge_b: List[np.ndarray] = []
    edge_g: List[np.ndarray] = []
    for net in (NET_P, NET_G):
        for tier in range(tiers):
            base = grid_base(net, tier)
            edge_a.extend([base + h_a, base + v_a])
            edge_b.extend([base + h_a + 1, base + v_a + nx_])
            edge_g.extend([np.full(len(h_a), g_horizontal), np.full(len(v_a), g_vertical)])
    edge_count = sum(len(x) for x in edge_g)

    if params.tsv_resistance_mode == 'column':
        chain_resistance = params.tsv_c4_resistance
    else:
        chain_resistance = params.tsv_c4_resistance * tiers
    g_segment = tiers / chain_resistance

    tsv_edges = []
    chain_a: List[int] = []
    chain_b: List[int] = []
    for site in layout.tsv_sites:
        gx = _snap(site.x, dx, nx_)
        gy = _snap(site.y, dy, ny_)
        if math.hypot(gx * dx - site.x, gy * dy - site.y) > max(dx, dy):
            raise comm.DegenerateGeometryError(f'TSV at ({site.x}, {site.y}) has no rail grid node '
                                               f'within one rail pitch')
        net = NET_P if site.polarity == 'P' else NET_G
        previous = 0 if net == NET_P else 1
        chain = []
        for tier in range(tiers):
            node = grid_base(net, tier) + gy * nx_ + gx
            chain_a.append(previous)
            chain_b.append(node)
            chain.append(edge_count + len(chain_a) - 1)
            previous = node
        tsv_edges.append(tuple(chain))
    edge_a.append(np.array(chain_a, dtype=np.int64))
    edge_b.append(np.array(chain_b, dtype=np.int64))
    edge_g.append(np.full(len(chain_a), g_segment))

    top = tiers - 1
    load_points = {}
    for sa in layout.subarray_ids:
        x, y = layout.center(sa)
        gy = _snap(y, dy, ny_)
        if params.load_spread == 'row':
            columns = range(nx_)
        else:
            columns = range(_snap(x, dx, nx_), _snap(x, dx, nx_) + 1)
        load_points[sa] = LoadPoint(tuple(grid_base(NET_P, top) + gy * nx_ + gx for gx in columns),
                                    tuple(grid_base(NET_G, top) + gy * nx_ + gx for gx in columns))

    network = ResistorNetwork(node_net=node_net,
                              node_layer=node_layer,
                              node_gx=node_gx,
                              node_gy=node_gy,
                              edge_a=np.concatenate(edge_a).astype(np.int64),
                              edge_b=np.concatenate(edge_b).astype(np.int64),
                              edge_g=np.concatenate(edge_g),
                              supply_p=0,
                              supply_g=1,
                              load_points=load_points,
                              tsv_edges=tuple(tsv_edges),
                              tsv_chain_resistance=chain_resistance,
                              supply_voltage=params.supply_voltage,
                              top_grid_p=grid_base(NET_P, top) + local,
                              top_grid_g=grid_base(NET_G, top) + local)
    check_network(network)
    logger.info('%s network: %d nodes, %d edges, %d TSV chains',
                layout.design, network.node_count, network.edge_count, len(tsv_edges))
    return network



def apply_tsv_resistance(network: ResistorNetwork,
                         per_tsv_extra: float) -> ResistorNetwork:
    """ Returns a copy whose TSV chains each total tsv_chain_resistance + per_tsv_extra.

        The extra is relative to the nominal chain, not to any earlier
        extra, and is spread evenly over the chain's segments.
    """
    if per_tsv_extra < 0:
        raise comm.NegativeDeltaError(f'per-TSV resistance increase must be >= 0: {per_tsv_extra}')
    if math.isinf(per_tsv_extra) or math.isnan(per_tsv_extra):
        raise comm.InvalidParamsError('per-TSV resistance increase must be finite')
    edge_g = np.array(network.edge_g)
    for chain in network.tsv_edges:
        edge_g[list(chain)] = len(chain) / (network.tsv_chain_resistance + per_tsv_extra)
    return dataclasses.replace(network, edge_g=edge_g, per_tsv_extra=float(per_tsv_extra))



def netlist_lines(network: ResistorNetwork) -> Iterator[str]:
    """ Flat SPICE-like resistor list, one 'R<edge_id> <node_a> <node_b> <ohms>' per edge.

        Nodes are written as n<id> so that node 0 is not read as ground.
    """
    yield '* stackpdn resistor netlist'
    yield (f'* supply_p=n{network.supply_p} supply_g=n{network.supply_g} '
           f'supply_voltage={network.supply_voltage:g} per_tsv_extra={network.per_tsv_extra:g}')
    for edge_id, (a, b, g) in enumerate(zip(network.edge_a, network.edge_b, network.edge_g)):
        yield f'R{edge_id} n{a} n{b} {comm.fmt_sig(1.0 / g)}'
    yield '.end'


def write_netlist(network: ResistorNetwork,
                  path: str) -> int:
    """ Writes the netlist dump to path and returns the resistor count.
    """
    with open(path, 'wt', encoding='utf-8', newline='\n') as outfile:
        for line in netlist_lines(network):
            outfile.write(line + '\n')
    return network.edge_count
