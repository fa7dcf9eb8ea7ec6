#!/usr/bin/env python
""" See the file "LICENSE" for the full license governing this code.
    Copyright 2021 Ken Farmer
"""
#adjust pylint for pytest oddities:
#pylint: disable=missing-docstring
#pylint: disable=unused-argument
#pylint: disable=attribute-defined-outside-init
#pylint: disable=protected-access
#pylint: disable=no-self-use
#pylint: disable=empty-docstring

from pprint import pprint as pp

import numpy as np
import pytest

import stackpdn.common as comm
import stackpdn.geometry as geometry
from stackpdn.netlist import LoadSet, ResistorNetwork
import stackpdn.solver as mod
import stackpdn.test_tools as test_tools

SUPPLY = 1.5



def grid_fixture():
    """ 3x3 single-tier P and G grids, each fed by two TSVs from its supply.

        Nodes: 0 P supply, 1 G supply, 2-10 P grid, 11-19 G grid (row major).
    """
    nets = ['P', 'G'] + ['P'] * 9 + ['G'] * 9
    edges = []
    k = 0
    for base in (2, 11):
        for row in range(3):
            for col in range(3):
                node = base + row * 3 + col
                if col < 2:
                    edges.append((node, node + 1, 1.0 + 0.1 * k))
                    k += 1
                if row < 2:
                    edges.append((node, node + 3, 1.0 + 0.1 * k))
                    k += 1
    tsvs = [(0, 2, 5.0), (0, 10, 4.0), (1, 11, 5.0), (1, 19, 4.0)]
    load_points = {1: ([6], [15]),
                   2: ([4], [13]),
                   3: ([3, 9], [12, 18])}
    return ResistorNetwork.from_edges(nets, edges + tsvs, 0, 1, load_points,
                                      tsv_edges=[(len(edges),), (len(edges) + 1,),
                                                 (len(edges) + 2,), (len(edges) + 3,)],
                                      tsv_chain_resistance=0.2,
                                      supply_voltage=SUPPLY)


def dense_oracle(network, loads):
    """ Node voltages by Gaussian elimination on the full KCL equations.
    """
    n = network.node_count
    matrix = [[0.0] * n for _ in range(n)]
    rhs = [0.0] * n
    for a, b, g in network.edges:
        matrix[a][a] += g
        matrix[b][b] += g
        matrix[a][b] -= g
        matrix[b][a] -= g
    for sa, amps in loads.entries:
        point = network.load_points[sa]
        for p in point.p_nodes:
            rhs[p] -= amps / len(point.p_nodes)
        for g_node in point.g_nodes:
            rhs[g_node] += amps / len(point.g_nodes)
    for terminal, volts in ((network.supply_p, SUPPLY), (network.supply_g, 0.0)):
        matrix[terminal] = [0.0] * n
        matrix[terminal][terminal] = 1.0
        rhs[terminal] = volts

    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(matrix[r][col]))
        matrix[col], matrix[pivot] = matrix[pivot], matrix[col]
        rhs[col], rhs[pivot] = rhs[pivot], rhs[col]
        for row in range(col + 1, n):
            factor = matrix[row][col] / matrix[col][col]
            if factor:
                for c in range(col, n):
                    matrix[row][c] -= factor * matrix[col][c]
                rhs[row] -= factor * rhs[col]
    voltages = [0.0] * n
    for row in range(n - 1, -1, -1):
        total = rhs[row] - sum(matrix[row][c] * voltages[c] for c in range(row + 1, n))
        voltages[row] = total / matrix[row][row]
    return voltages


def droops(network, loads):
    v = mod.solve_node_voltages(network, loads).voltages
    return np.where(network.node_net == 0, SUPPLY - v, v)


def series_network(p_ohms=1.0, g_ohms=1.0):
    return ResistorNetwork.from_edges(['P', 'G', 'P', 'G'],
                                      [(0, 2, 1.0 / p_ohms), (1, 3, 1.0 / g_ohms)],
                                      0, 1, {1: ([2], [3])},
                                      tsv_edges=[(0,), (1,)],
                                      tsv_chain_resistance=p_ohms,
                                      supply_voltage=SUPPLY)



class TestDenseOracle(object):

    def setup_method(self, method):
        self.network = grid_fixture()

    def test_single_load(self):
        loads = LoadSet(((1, 0.1),))
        expected = dense_oracle(self.network, loads)
        actual = mod.solve_node_voltages(self.network, loads).voltages
        assert np.allclose(actual, expected, rtol=0, atol=1e-10)

    def test_mixed_loads(self):
        loads = LoadSet(((1, 0.05), (2, 0.2), (3, 0.13)))
        expected = dense_oracle(self.network, loads)
        actual = mod.solve_node_voltages(self.network, loads).voltages
        assert np.allclose(actual, expected, rtol=0, atol=1e-10)

    def test_terminals_fixed(self):
        result = mod.solve_node_voltages(self.network, LoadSet(((2, 0.3),)))
        assert result.voltages[0] == pytest.approx(SUPPLY)
        assert result.voltages[1] == pytest.approx(0.0)
        assert result.residual <= mod.DEFAULT_TOLERANCE



class TestProperties(object):

    def setup_method(self, method):
        self.network = grid_fixture()
        self.rng = np.random.default_rng(17)
        self.atol = 10 * mod.DEFAULT_TOLERANCE

    def random_loads(self):
        return LoadSet.from_dict({sa: float(self.rng.uniform(0.0, 0.2)) for sa in (1, 2, 3)})

    def test_superposition(self):
        for _ in range(50):
            first = self.random_loads()
            second = self.random_loads()
            combined = LoadSet.from_dict({sa: first.as_dict()[sa] + second.as_dict()[sa]
                                          for sa in (1, 2, 3)})
            assert np.allclose(droops(self.network, combined),
                               droops(self.network, first) + droops(self.network, second),
                               rtol=0, atol=self.atol)

    def test_scaling(self):
        for _ in range(50):
            loads = self.random_loads()
            factor = float(self.rng.uniform(0.5, 4.0))
            scaled = LoadSet.from_dict({sa: amps * factor for sa, amps in loads.entries})
            assert np.allclose(droops(self.network, scaled),
                               droops(self.network, loads) * factor,
                               rtol=0, atol=self.atol)

    def test_monotonic(self):
        for _ in range(50):
            loads = self.random_loads()
            more = LoadSet.from_dict({sa: amps + float(self.rng.uniform(0.0, 0.1))
                                      for sa, amps in loads.entries})
            assert np.all(droops(self.network, more) >= droops(self.network, loads) - self.atol)

    def test_resistance_independent_of_injected_current(self):
        for sa in (1, 2, 3):
            expected = mod.effective_resistance(self.network, sa)
            for _ in range(10):
                amps = float(self.rng.uniform(0.01, 5.0))
                result = mod.solve_node_voltages(self.network, LoadSet(((sa, amps),)))
                assert mod.droop_at(self.network, result, sa) / amps == pytest.approx(expected, rel=1e-9)

    def test_transfer_droops_are_reciprocal(self):
        from_first = mod.solve_node_voltages(self.network, LoadSet(((1, 1.0),)))
        from_second = mod.solve_node_voltages(self.network, LoadSet(((2, 1.0),)))
        assert mod.droop_at(self.network, from_first, 2) == pytest.approx(
            mod.droop_at(self.network, from_second, 1), rel=1e-9)

    def test_empty_load_set(self):
        v = mod.solve_node_voltages(self.network, LoadSet()).voltages
        p_nodes = self.network.node_net == 0
        assert np.all(v[p_nodes] == SUPPLY)
        assert np.all(v[~p_nodes] == 0.0)



class TestToyCircuits(object):

    def test_ohms_law(self):
        network = series_network(1.0, 1e-9)
        v = mod.solve_node_voltages(network, LoadSet(((1, 0.1),))).voltages
        assert SUPPLY - v[2] == pytest.approx(0.1, abs=1e-12)

    def test_series_effective_resistance(self):
        assert mod.effective_resistance(series_network(), 1) == pytest.approx(2.0)

    def test_unknown_subarray(self):
        with pytest.raises(comm.InvalidParamsError):
            mod.effective_resistance(series_network(), 9)

    def test_factorization_cached(self):
        network = series_network()
        assert mod.get_system(network) is mod.get_system(network)



class TestPeakCurrent(object):

    def test_margin_over_resistance(self):
        assert mod.peak_current(0.12, 75.0) == pytest.approx(0.625)
        assert mod.peak_current(0.03, 75.0) == pytest.approx(2.5)
        assert mod.peak_current(1.0, 75.0) == pytest.approx(0.075)

    def test_non_positive_resistance(self):
        with pytest.raises(comm.NonPositiveResistanceError):
            mod.peak_current(0.0, 75.0)

    def test_lumped_napsaa(self):
        assert mod.lumped_napsaa(0.12, 75.0, 100.0) == 6



class TestCanonicalResistance(object):

    def test_clustered_worst(self):
        bank = test_tools.canonical_bank('clustered')
        sa, r_worst = mod.worst_effective_resistance(bank.network)
        assert sa == 16
        assert 0.09 <= r_worst <= 0.15

    def test_distributed_below_clustered_on_the_same_rails(self):
        clustered_bank = test_tools.canonical_bank('clustered')
        distributed_bank = test_tools.canonical_bank('distributed')
        assert (geometry.canonical_params('clustered').rail_parallel_straps
                == geometry.canonical_params('distributed').rail_parallel_straps)
        _, clustered = mod.worst_effective_resistance(clustered_bank.network)
        _, distributed = mod.worst_effective_resistance(distributed_bank.network)
        pp((clustered, distributed))
        assert 0 < distributed < clustered
