#!/usr/bin/env python
""" IR-drop maps, worst-case activation placement, NAPSAA and resistance headroom.

    Droop is reported as the loop droop at each co-located pair of top-tier
    grid nodes: P-rail sag plus G-rail bounce.  All public droop values are
    in millivolts.

    See the file "LICENSE" for the full license governing this code.
    Copyright 2021 Ken Farmer
"""
from dataclasses import dataclass
import enum
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from stackpdn import common as comm
from stackpdn.geometry import PdnLayout, Section
from stackpdn.netlist import LoadSet, ResistorNetwork
from stackpdn import solver


logger = logging.getLogger(__name__)

NAPSAA_LEVELS = (32, 16, 8, 4, 2, 1)
HEADROOM_CEILING = 100.0
HEADROOM_RESOLUTION = 1e-4
# Woodbury columns solved per batch
_TSV_BATCH = 64



class PlacementPolicy(str, enum.Enum):
    adversarial_greedy = 'adversarial_greedy'
    uniform_per_section = 'uniform_per_section'


def default_policy(design: str) -> PlacementPolicy:
    if design == 'distributed':
        return PlacementPolicy.uniform_per_section
    return PlacementPolicy.adversarial_greedy



@dataclass(frozen=True, eq=False)
class IrDropMap:
    design: str
    n_saa: int
    placement: LoadSet
    grid: np.ndarray
    max_droop: float
    argmax_location: Tuple[int, int]
    delta_r: float = 0.0



class BankAnalyzer(object):
    """ Fast droop evaluation for one network.

        Holds the droop field each subarray produces at 1 A, so any placement
        is a weighted sum of fields.  A uniform change of TSV resistance is a
        low-rank update of the nodal matrix (one rank per TSV segment), and
        is applied with the Woodbury identity instead of a new factorization.
    """

    def __init__(self, network: ResistorNetwork) -> None:
        self.network = network
        self.system = solver.get_system(network)
        self.obs_p, self.obs_g = network.observed_pairs()
        self.subarray_ids = sorted(network.load_points)

        rhs = np.column_stack([self.system.load_vector(LoadSet(((sa, 1.0),)))
                               for sa in self.subarray_ids])
        droops_u = self.system.solve_unknowns(rhs[self.system.unknown_nodes])
        if droops_u.ndim == 1:
            droops_u = droops_u[:, np.newaxis]
        droops = np.zeros((network.node_count, len(self.subarray_ids)))
        droops[self.system.unknown_nodes] = droops_u
        self._fields = {sa: droops[self.obs_p, k] + droops[self.obs_g, k]
                        for k, sa in enumerate(self.subarray_ids)}

        tsv_ids = network.tsv_edge_ids()
        self._tsv_a = network.edge_a[tsv_ids]
        self._tsv_b = network.edge_b[tsv_ids]
        self._tsv_incidence = {sa: droops[self._tsv_a, k] - droops[self._tsv_b, k]
                               for k, sa in enumerate(self.subarray_ids)}
        self._woodbury: Optional[Tuple[np.ndarray, np.ndarray]] = None
        logger.debug('analyzer ready: %d subarrays, %d observed pairs',
                     len(self.subarray_ids), len(self.obs_p))


    def _tsv_update(self) -> Tuple[np.ndarray, np.ndarray]:
        """ Returns (observed rows of A^-1 U, U^T A^-1 U) for the TSV segment incidence U.
        """
        if self._woodbury is None:
            index = self.system.unknown_index
            a_u = index[self._tsv_a]
            b_u = index[self._tsv_b]
            obs_p_u = index[self.obs_p]
            obs_g_u = index[self.obs_g]
            n_u = len(self.system.unknown_nodes)
            m = len(a_u)
            y_obs = np.zeros((len(self.obs_p), m))
            gram = np.zeros((m, m))
            for start in range(0, m, _TSV_BATCH):
                stop = min(start + _TSV_BATCH, m)
                cols = np.arange(start, stop)
                incidence = np.zeros((n_u, stop - start))
                keep = a_u[cols] >= 0
                incidence[a_u[cols][keep], np.flatnonzero(keep)] += 1.0
                keep = b_u[cols] >= 0
                incidence[b_u[cols][keep], np.flatnonzero(keep)] -= 1.0
                solved = self.system.solve_unknowns(incidence)
                if solved.ndim == 1:
                    solved = solved[:, np.newaxis]
                padded = np.vstack([solved, np.zeros((1, stop - start))])
                y_obs[:, start:stop] = padded[obs_p_u] + padded[obs_g_u]
                gram[:, start:stop] = padded[a_u] - padded[b_u]
            self._woodbury = (y_obs, gram)
        return self._woodbury


    def _segment_conductance_delta(self, per_tsv_extra: float) -> float:
        network = self.network
        segments = len(network.tsv_edges[0])
        base = network.tsv_chain_resistance + network.per_tsv_extra
        return segments / (base + per_tsv_extra) - segments / base


    def field(self,
              loads: LoadSet,
              per_tsv_extra: float = 0.0) -> np.ndarray:
        """ Droop (V) at every observed pair, optionally with extra per-TSV resistance.
        """
        if per_tsv_extra < 0:
            raise comm.NegativeDeltaError(f'per-TSV resistance increase must be >= 0: {per_tsv_extra}')
        droop = np.zeros(len(self.obs_p))
        incidence = np.zeros(len(self._tsv_a))
        for sa, amps in loads.entries:
            if sa not in self._fields:
                raise comm.InvalidParamsError(f'subarray {sa} has no load point in this network')
            droop += amps * self._fields[sa]
            incidence += amps * self._tsv_incidence[sa]
        if per_tsv_extra == 0 or not len(loads) or not self.network.tsv_edges:
            return droop
        if math.isinf(per_tsv_extra):
            return np.where(droop > 0, math.inf, 0.0)
        y_obs, gram = self._tsv_update()
        delta_g = self._segment_conductance_delta(per_tsv_extra)
        capacitance = gram + np.eye(len(gram)) / delta_g
        z = np.linalg.solve(capacitance, incidence)
        return droop - y_obs @ z


    def max_droop(self,
                  loads: LoadSet,
                  per_tsv_extra: float = 0.0) -> float:
        """ Worst droop in mV.
        """
        if not len(loads):
            return 0.0
        return float(self.field(loads, per_tsv_extra).max()) * 1000.0


    def single_field(self, subarray_id: int) -> np.ndarray:
        return self._fields[subarray_id]



_analyzers: Dict[int, BankAnalyzer] = {}


def get_analyzer(network: ResistorNetwork) -> BankAnalyzer:
    """ One analyzer per live network.
    """
    analyzer = _analyzers.get(id(network))
    if analyzer is None or analyzer.network is not network:
        if len(_analyzers) >= 4:
            _analyzers.clear()
        analyzer = BankAnalyzer(network)
        _analyzers[id(network)] = analyzer
    return analyzer



def compute_irdrop_map(network: ResistorNetwork,
                       loads: LoadSet,
                       design: str = '',
                       per_tsv_extra: float = 0.0) -> IrDropMap:
    """ Droop map of the top tier.

        At nominal TSV resistance this is one nodal solve.  An aged map
        (per_tsv_extra > 0) comes from the analyzer's low-rank TSV update.
    """
    if per_tsv_extra > 0:
        field = get_analyzer(network).field(loads, per_tsv_extra)
        droop_mv = np.maximum(field * 1000.0, 0.0)
    elif per_tsv_extra == 0:
        result = solver.solve_node_voltages(network, loads)
        obs_p, obs_g = network.observed_pairs()
        v = result.voltages
        droop_mv = np.maximum((network.supply_voltage - v[obs_p] + v[obs_g]) * 1000.0, 0.0)
    else:
        raise comm.NegativeDeltaError(f'per-TSV resistance increase must be >= 0: {per_tsv_extra}')
    shape = network.grid_shape or (1, len(droop_mv))
    grid = droop_mv.reshape(shape)
    gy, gx = np.unravel_index(int(np.argmax(grid)), shape)
    return IrDropMap(design=design,
                     n_saa=len(loads),
                     placement=loads,
                     grid=grid,
                     max_droop=float(grid[gy, gx]),
                     argmax_location=(int(gy), int(gx)),
                     delta_r=per_tsv_extra)



def _p_lines(layout: PdnLayout, section: Section) -> List[float]:
    """ The y positions of the P TSV lines that feed a section.
    """
    if layout.design == 'distributed':
        return [section.y_max]
    lines = sorted({site.y for site in layout.tsv_sites
                    if site.polarity == 'P' and site.y in (section.y_min, section.y_max)})
    return lines or [section.y_max]


def _uniform_per_section(layout: PdnLayout, n: int) -> List[int]:
    sections = layout.sections
    base, extra = divmod(n, len(sections))
    chosen: List[int] = []
    spill = 0
    for i, section in enumerate(sections):
        wanted = base + (1 if i < extra else 0) + spill
        lines = _p_lines(layout, section)
        by_distance = sorted(section.subarray_ids,
                             key=lambda sa: (-round(min(abs(layout.center(sa)[1] - y) for y in lines), 6), sa))
        take = by_distance[:wanted]
        spill = wanted - len(take)
        chosen.extend(take)
    if spill:
        leftovers = [sa for sa in layout.subarray_ids if sa not in chosen]
        chosen.extend(leftovers[:spill])
    return sorted(chosen)


def _adversarial_greedy(analyzer: BankAnalyzer,
                        subarray_ids: Sequence[int],
                        n: int,
                        current: float) -> List[int]:
    chosen: List[int] = []
    field = np.zeros(len(analyzer.obs_p))
    for _ in range(n):
        best_sa, best_droop = 0, -1.0
        for sa in subarray_ids:
            if sa in chosen:
                continue
            droop = float((field + current * analyzer.single_field(sa)).max())
            if droop > best_droop * (1 + solver.TIE_TOLERANCE):
                best_sa, best_droop = sa, droop
        chosen.append(best_sa)
        field = field + current * analyzer.single_field(best_sa)
    logger.debug('greedy order: %s', chosen)
    return sorted(chosen)


def place_saas(layout: PdnLayout,
               network: ResistorNetwork,
               n: int,
               policy: PlacementPolicy,
               current: float = 0.1) -> LoadSet:
    """ Chooses which n subarrays activate together.

        adversarial_greedy adds, one at a time, the subarray that raises the
        worst droop most (lowest id on ties).  uniform_per_section spreads n
        over the sections, earlier sections taking any remainder, and picks
        the subarrays farthest from their section's P line.
    """
    if not 1 <= n <= len(layout.subarray_ids):
        raise comm.InvalidParamsError(f'invalid n: {n} must be within 1..{len(layout.subarray_ids)}')
    policy = PlacementPolicy(policy)
    if policy is PlacementPolicy.uniform_per_section:
        chosen = _uniform_per_section(layout, n)
    else:
        chosen = _adversarial_greedy(get_analyzer(network), layout.subarray_ids, n, current)
    return LoadSet.uniform(chosen, current)



def find_napsaa(layout: PdnLayout,
                network: ResistorNetwork,
                margin: float,
                policy: Optional[PlacementPolicy] = None,
                current: float = 0.1,
                per_tsv_extra: float = 0.0) -> int:
    """ Largest swept level whose placed map stays within margin (mV), or 0.
    """
    if not margin > 0:
        raise comm.InvalidParamsError(f'margin must be > 0: {margin}')
    policy = policy or default_policy(layout.design)
    analyzer = get_analyzer(network)
    for n in NAPSAA_LEVELS:
        if n > len(layout.subarray_ids):
            continue
        loads = place_saas(layout, network, n, policy, current)
        droop = analyzer.max_droop(loads, per_tsv_extra)
        logger.debug('%s n=%d max droop %.2f mV', layout.design, n, droop)
        if droop <= margin:
            logger.info('%s NAPSAA = %d', layout.design or 'network', n)
            return n
    return 0



def resistance_headroom(layout: PdnLayout,
                        network: ResistorNetwork,
                        n: int,
                        margin: float,
                        policy: Optional[PlacementPolicy] = None,
                        current: float = 0.1) -> float:
    """ Largest uniform per-TSV resistance increase (ohms) that keeps n SAAs within margin.

        Found by bisection over [0, 100] ohms to 1e-4 ohms; droop rises
        monotonically with TSV resistance, so the feasible set is an interval.
    """
    policy = policy or default_policy(layout.design)
    analyzer = get_analyzer(network)
    loads = place_saas(layout, network, n, policy, current)
    initial = analyzer.max_droop(loads)
    if initial > margin:
        raise comm.UnachievableLevelError(f'{n} SAAs already exceed the {margin} mV margin '
                                          f'({initial:.2f} mV) with no aging')
    low, high = 0.0, HEADROOM_CEILING
    if analyzer.max_droop(loads, high) <= margin:
        return high
    while high - low > HEADROOM_RESOLUTION:
        middle = (low + high) / 2.0
        if analyzer.max_droop(loads, middle) <= margin:
            low = middle
        else:
            high = middle
    logger.debug('%s headroom at n=%d: %.4f ohm', layout.design, n, low)
    return low



def irdrop_csv_lines(irmap: IrDropMap) -> List[str]:
    """ Header line then one line per grid row, row 0 being the bank bottom edge.
    """
    header = f'# design={irmap.design},n_saa={irmap.n_saa},max_droop_mv={irmap.max_droop:.2f}'
    if irmap.delta_r:
        header += f',delta_r_ohm={comm.fmt_sig(irmap.delta_r)}'
    lines = [header]
    for row in irmap.grid:
        lines.append(','.join(f'{value:.2f}' for value in row))
    return lines


def read_irdrop_csv(path: str) -> IrDropMap:
    with open(path, 'rt', encoding='utf-8') as infile:
        header = infile.readline().strip()
        rows = [[float(x) for x in line.split(',')] for line in infile if line.strip()]
    if not header.startswith('#'):
        raise comm.InvalidParamsError(f'{path} has no IR-drop map header')
    fields = dict(item.split('=', 1) for item in header.lstrip('# ').split(','))
    grid = np.array(rows)
    gy, gx = np.unravel_index(int(np.argmax(grid)), grid.shape)
    return IrDropMap(design=fields.get('design', ''),
                     n_saa=int(fields.get('n_saa', 0)),
                     placement=LoadSet(),
                     grid=grid,
                     max_droop=float(fields['max_droop_mv']),
                     argmax_location=(int(gy), int(gx)),
                     delta_r=float(fields.get('delta_r_ohm', 0.0)))
