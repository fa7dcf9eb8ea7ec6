#!/usr/bin/env python
""" Nodal analysis of a ResistorNetwork.

    Both supply terminals are ideal sources, so the system is solved in droop
    variables: P-net droop is supply_voltage - v and G-net droop (ground
    bounce) is v.  Both are zero at the terminals and obey L * d = I, where
    L is the network Laplacian with the terminal rows and columns removed and
    I holds the load currents at their taps.  That reduced matrix is
    symmetric positive definite for a connected network and is factorized
    once per network with SuperLU.

    See the file "LICENSE" for the full license governing this code.
    Copyright 2021 Ken Farmer
"""
import functools
import logging
import math
from typing import NamedTuple, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from stackpdn import common as comm
from stackpdn.netlist import LoadSet, ResistorNetwork, NET_P


logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-9
MAX_REFINEMENTS = 3
# droops or resistances closer than this (relative) count as ties
TIE_TOLERANCE = 1e-9



class SolveResult(NamedTuple):
    voltages: np.ndarray
    residual: float
    iterations: int



class NodalSystem(object):
    """ Factorized reduced nodal system of one network.
    """

    def __init__(self, network: ResistorNetwork) -> None:
        self.network = network
        n = network.node_count
        terminals = np.array([network.supply_p, network.supply_g])
        self.unknown = np.ones(n, dtype=bool)
        self.unknown[terminals] = False
        self.unknown_nodes = np.flatnonzero(self.unknown)
        self.unknown_index = np.full(n, -1, dtype=np.int64)
        self.unknown_index[self.unknown_nodes] = np.arange(len(self.unknown_nodes))

        self.matrix = self._reduced_matrix()
        try:
            self.lu = spla.splu(self.matrix, permc_spec='MMD_AT_PLUS_A')
        except RuntimeError as err:
            raise comm.SingularSystemError(f'nodal matrix is singular: {err}')
        logger.debug('factorized %d unknowns, %d factor nonzeros',
                     len(self.unknown_nodes), self.lu.L.nnz + self.lu.U.nnz)


    def _reduced_matrix(self) -> sp.csc_matrix:
        network = self.network
        n = network.node_count
        a, b, g = network.edge_a, network.edge_b, network.edge_g
        rows = np.concatenate([a, b, a, b])
        cols = np.concatenate([b, a, a, b])
        data = np.concatenate([-g, -g, g, g])
        laplacian = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
        reduced = laplacian[self.unknown_nodes][:, self.unknown_nodes]
        return reduced.tocsc()


    def load_vector(self, loads: LoadSet) -> np.ndarray:
        """ Full-length current vector: each subarray's current split over its taps.
        """
        rhs = np.zeros(self.network.node_count)
        for sa, amps in loads.entries:
            if sa not in self.network.load_points:
                raise comm.InvalidParamsError(f'subarray {sa} has no load point in this network')
            point = self.network.load_points[sa]
            np.add.at(rhs, list(point.p_nodes), amps / len(point.p_nodes))
            np.add.at(rhs, list(point.g_nodes), amps / len(point.g_nodes))
        return rhs


    def solve_unknowns(self, rhs: np.ndarray) -> np.ndarray:
        """ Solves A x = rhs for rhs given in unknown ordering (vector or matrix).
        """
        return self.lu.solve(np.ascontiguousarray(rhs))


    def droop(self, rhs_full: np.ndarray) -> np.ndarray:
        """ Full-length droop vector for a full-length current vector; terminals are 0.
        """
        droop, _, _ = self._refined_droop(rhs_full, DEFAULT_TOLERANCE)
        return droop


    def _refined_droop(self,
                       rhs_full: np.ndarray,
                       tolerance: float) -> Tuple[np.ndarray, float, int]:
        rhs = rhs_full[self.unknown_nodes]
        rhs_norm = np.linalg.norm(rhs)
        droop_u = self.solve_unknowns(rhs)
        if rhs_norm == 0:
            residual, refinements = 0.0, 0
        else:
            refinements = 0
            while True:
                remainder = rhs - self.matrix @ droop_u
                residual = float(np.linalg.norm(remainder) / rhs_norm)
                if residual <= tolerance or refinements >= MAX_REFINEMENTS:
                    break
                droop_u = droop_u + self.solve_unknowns(remainder)
                refinements += 1
        if not np.all(np.isfinite(droop_u)):
            raise comm.SingularSystemError('nodal solve produced non-finite droops')
        if residual > tolerance:
            raise comm.NonConvergenceError('nodal solve missed the residual tolerance', residual)
        droop = np.zeros(self.network.node_count)
        droop[self.unknown_nodes] = droop_u
        return droop, residual, refinements


    def solve(self,
              loads: LoadSet,
              tolerance: float = DEFAULT_TOLERANCE) -> SolveResult:
        droop, residual, refinements = self._refined_droop(self.load_vector(loads), tolerance)
        voltages = np.where(self.network.node_net == NET_P,
                            self.network.supply_voltage - droop,
                            droop)
        return SolveResult(voltages=voltages, residual=residual, iterations=refinements)



@functools.lru_cache(maxsize=4)
def get_system(network: ResistorNetwork) -> NodalSystem:
    """ Returns the cached factorized system of a network.
    """
    return NodalSystem(network)


def solve_node_voltages(network: ResistorNetwork,
                        loads: LoadSet,
                        tolerance: float = DEFAULT_TOLERANCE) -> SolveResult:
    return get_system(network).solve(loads, tolerance)


def droop_at(network: ResistorNetwork,
             result: SolveResult,
             subarray_id: int) -> float:
    """ Worst loop droop (P sag plus G bounce) over a subarray's taps, in volts.
    """
    point = network.load_points[subarray_id]
    v = result.voltages
    return max(network.supply_voltage - v[p] + v[g] for p, g in zip(point.p_nodes, point.g_nodes))


def effective_resistance(network: ResistorNetwork,
                         subarray_id: int) -> float:
    """ Loop resistance supply -> P net -> subarray -> G net -> supply, in ohms.
    """
    if subarray_id not in network.load_points:
        raise comm.InvalidParamsError(f'subarray {subarray_id} has no load point in this network')
    result = solve_node_voltages(network, LoadSet(((subarray_id, 1.0),)))
    return droop_at(network, result, subarray_id)


def worst_effective_resistance(network: ResistorNetwork) -> Tuple[int, float]:
    """ Returns (subarray id, resistance) of the worst subarray, lowest id on ties.
    """
    worst_sa, worst_r = 0, -1.0
    for sa in sorted(network.load_points):
        r = effective_resistance(network, sa)
        if r > worst_r * (1 + TIE_TOLERANCE):
            worst_sa, worst_r = sa, r
    return worst_sa, worst_r


def peak_current(r_worst: float,
                 margin: float) -> float:
    """ Largest current (A) the PDN delivers within the margin (mV).
    """
    if not r_worst > 0:
        raise comm.NonPositiveResistanceError(f'resistance must be > 0: {r_worst}')
    return margin / 1000.0 / r_worst


def lumped_napsaa(r_worst: float,
                  margin: float,
                  current_per_saa: float) -> int:
    """ Lumped estimate of parallel activations: floor(peak current / per-SAA current).

        current_per_saa is in mA.
    """
    ratio = peak_current(r_worst, margin) / (current_per_saa / 1000.0)
    return int(math.floor(ratio + 1e-12))
