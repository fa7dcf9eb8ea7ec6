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

import dataclasses
from pprint import pprint as pp

import pytest

import stackpdn.aging as mod
from stackpdn.aging import WorkloadProfile
import stackpdn.common as comm
import stackpdn.configulator as configulator
import stackpdn.em as em
import stackpdn.geometry as geometry
import stackpdn.irdrop as irdrop
from stackpdn.irdrop import PlacementPolicy
import stackpdn.netlist as netlist
from stackpdn.netlist import ResistorNetwork
import stackpdn.test_tools as test_tools

YEAR = comm.SECONDS_PER_YEAR
MARGIN = 75.0



def series_bank(loop_ohms=0.5):
    half = loop_ohms / 2.0
    network = ResistorNetwork.from_edges(['P', 'G', 'P', 'G'],
                                         [(0, 2, 1.0 / half), (1, 3, 1.0 / half)],
                                         0, 1, {1: ([2], [3])},
                                         tsv_edges=[(0,), (1,)],
                                         tsv_chain_resistance=half)
    layout = geometry.PdnLayout(design='toy',
                                bank_width=1.0,
                                bank_height=1.0,
                                tsv_sites=(geometry.TsvSite(0.0, 1.0, 'P'), geometry.TsvSite(0.0, 0.0, 'G')),
                                sections=(geometry.Section(0.0, 1.0, (1,)),),
                                subarray_centers=((0.5, 0.5),))
    return layout, network



class TestClosedForm(object):

    def setup_method(self, method):
        self.layout, self.network = series_bank()
        self.params = em.EmParams()
        self.wl = WorkloadProfile(name='steady', active_fraction=1.0, demanded_parallelism=1)

    def test_linear_radius_without_crossings(self):
        horizon = 100 * self.params.dt
        timeline = mod.simulate_aging(self.layout, self.network, self.params, self.wl, MARGIN, horizon,
                                      schedule={1: 1e9})
        rate = em.growth_rate(self.params, em.current_density(1, self.params))
        assert timeline.horizon_reached
        assert len(timeline.events) == 11
        for event in timeline.events:
            assert event.void_radius == pytest.approx(rate * event.t, rel=1e-12, abs=1e-30)
            assert event.napsaa == 1

    def test_crossing_time_stable_under_dt_halving(self):
        coarse = mod.simulate_aging(self.layout, self.network, self.params, self.wl, MARGIN, 60 * YEAR,
                                    schedule={1: 0.01})
        fine_params = dataclasses.replace(self.params, dt=self.params.dt / 2)
        fine = mod.simulate_aging(self.layout, self.network, fine_params, self.wl, MARGIN, 60 * YEAR,
                                  schedule={1: 0.01})
        assert coarse.lifetime is not None
        assert abs(coarse.lifetime - fine.lifetime) <= fine_params.dt

    def test_crossing_matches_inverse_model(self):
        timeline = mod.simulate_aging(self.layout, self.network, self.params, self.wl, MARGIN, 60 * YEAR,
                                      schedule={1: 0.01})
        model = em.VoidResistanceModel()
        radius = em.radius_for_resistance(self.network.tsv_chain_resistance + 0.01, model,
                                          self.network.tsv_chain_resistance)
        rate = em.growth_rate(self.params, em.current_density(1, self.params))
        assert timeline.lifetime == pytest.approx(radius / rate, rel=1e-9)

    def test_idle_workload_never_ages(self):
        idle = dataclasses.replace(self.wl, active_fraction=0.0)
        timeline = mod.simulate_aging(self.layout, self.network, self.params, idle, MARGIN, 60 * YEAR,
                                      schedule={1: 0.01})
        assert timeline.horizon_reached
        assert len(timeline.events) == 1
        assert timeline.events[0].t == 0.0
        assert mod.lifetime_years(timeline) is None

    def test_slower_stress_lives_longer(self):
        lifetimes = []
        for fraction in (0.5, 1.0):
            wl = dataclasses.replace(self.wl, active_fraction=fraction)
            timeline = mod.simulate_aging(self.layout, self.network, self.params, wl, MARGIN, 60 * YEAR,
                                          schedule={1: 0.01})
            lifetimes.append(timeline.lifetime)
        assert lifetimes[0] >= lifetimes[1]
        assert lifetimes[0] == pytest.approx(2 * lifetimes[1], rel=1e-6)

    def test_demand_above_napsaa_stresses_at_napsaa(self):
        lifetimes = []
        for demand in (1, 8):
            wl = dataclasses.replace(self.wl, demanded_parallelism=demand)
            timeline = mod.simulate_aging(self.layout, self.network, self.params, wl, MARGIN, 60 * YEAR,
                                          schedule={1: 0.01})
            lifetimes.append(timeline.lifetime)
        assert lifetimes[0] == lifetimes[1]

    def test_unachievable_bank(self):
        layout, network = series_bank(2.0)
        with pytest.raises(comm.UnachievableLevelError):
            mod.simulate_aging(layout, network, self.params, self.wl, MARGIN, YEAR)

    def test_initial_void(self):
        params = dataclasses.replace(self.params, initial_radius=1e-6)
        timeline = mod.simulate_aging(self.layout, self.network, params, self.wl, MARGIN, 10 * params.dt,
                                      schedule={1: 1e9})
        assert timeline.events[0].void_radius == 1e-6
        assert timeline.events[0].tsv_resistance > self.network.tsv_chain_resistance



class TestTimeline(object):

    def setup_method(self, method):
        events = (mod.AgingEvent(0.0, 4, 40.0, 0.25, 0.0),
                  mod.AgingEvent(1.0e8, 4, 60.0, 0.9, 1e-6),
                  mod.AgingEvent(2.0e8, 2, 70.0, 1.45, 2e-6),
                  mod.AgingEvent(3.0e8, 1, 70.0, 4.4, 3e-6),
                  mod.AgingEvent(4.0e8, 0, 75.0, 10.4, 4e-6))
        self.timeline = mod.AgingTimeline(design='clustered', workload='toy', events=events,
                                          lifetime=4.0e8, nominal_resistance=0.25)
        self.wl = WorkloadProfile(name='toy', active_fraction=0.5, run_active_time=1e5)

    def test_transitions(self):
        assert [e.napsaa for e in self.timeline.transitions()] == [2, 1, 0]

    def test_napsaa_at(self):
        assert self.timeline.napsaa_at(0.0) == 4
        assert self.timeline.napsaa_at(1.5e8) == 4
        assert self.timeline.napsaa_at(2.0e8) == 2
        assert self.timeline.napsaa_at(5.0e8) == 0

    def test_time_to_resistance(self):
        assert mod.time_to_resistance(self.timeline, 1.0) == 2.0e8
        assert mod.time_to_resistance(self.timeline, 100.0) is None

    def test_resistance_at(self):
        assert mod.resistance_at(self.timeline, 0.0) == 0.25
        assert mod.resistance_at(self.timeline, 1.5e8) == pytest.approx((0.9 + 1.45) / 2.0)
        assert mod.resistance_at(self.timeline, 9.0e8) == 10.4
        with pytest.raises(comm.InvalidParamsError):
            mod.resistance_at(self.timeline, -1.0)

    def test_rows(self):
        rows = mod.timeline_rows(self.timeline)
        assert rows[0] == ['t_s', 't_years', 'napsaa', 'max_droop_mv', 'tsv_resistance_ohm', 'void_radius_m']
        assert rows[2][0] == '1.00000e+08'
        assert rows[2][2] == '4'
        assert len(rows) == 6

    def test_summary(self):
        summary = mod.lifetime_summary(self.timeline, self.wl)
        assert summary['lifetime_years'] == round(4.0e8 / YEAR, 2)
        assert [x['napsaa'] for x in summary['transitions']] == [2, 1, 0]
        assert summary['runs_until_failure'] == 2000



class TestRunsAndYears(object):

    def test_division(self):
        wl = WorkloadProfile(name='toy', run_active_time=1e5)
        assert mod.runs_until_failure(wl, 1e7) == 100

    def test_budget_below_one_run(self):
        wl = WorkloadProfile(name='toy', run_active_time=1e5)
        assert mod.runs_until_failure(wl, 9.9e4) == 0

    def test_exact_multiple(self):
        wl = WorkloadProfile(name='toy', run_active_time=0.1)
        assert mod.runs_until_failure(wl, 0.3) == 3

    def test_zero_active_time(self):
        wl = WorkloadProfile(name='toy', run_active_time=0.0)
        with pytest.raises(comm.ZeroActiveTimeError):
            mod.runs_until_failure(wl, 1e7)

    def test_years(self):
        timeline = mod.AgingTimeline('clustered', 'toy', (mod.AgingEvent(0.0, 4, 0.0, 0.25, 0.0),),
                                     YEAR, 0.25)
        assert mod.lifetime_years(timeline) == 1.0

    def test_horizon_reached_has_no_years(self):
        timeline = mod.AgingTimeline('clustered', 'toy', (mod.AgingEvent(0.0, 4, 0.0, 0.25, 0.0),),
                                     None, 0.25)
        assert mod.lifetime_years(timeline) is None



class TestWorkloadProfile(object):

    def test_bad_fraction(self):
        with pytest.raises(comm.InvalidParamsError):
            WorkloadProfile(name='bad', active_fraction=1.5).validate()

    def test_bad_parallelism(self):
        with pytest.raises(comm.InvalidParamsError):
            WorkloadProfile(name='bad', demanded_parallelism=0).validate()



class TestCanonicalAging(object):

    def setup_method(self, method):
        self.params = em.EmParams()
        self.model = em.load_void_table(configulator.DEFAULT_VOID_TABLE)
        self.wl = configulator.load_workload_profile(test_tools.bundled_workload('bodytrack'))

    def schedule(self, design):
        bank = test_tools.canonical_bank(design)
        return mod.headroom_schedule(bank.layout, bank.network, MARGIN)

    def test_clustered_schedule_levels(self):
        assert sorted(self.schedule('clustered')) == [1, 2, 4]

    def test_distributed_schedule_levels(self):
        assert {32, 16, 8, 4, 2} <= set(self.schedule('distributed'))

    def test_distributed_outlives_clustered(self):
        lifetimes = {}
        for design in geometry.DESIGNS:
            bank = test_tools.canonical_bank(design)
            timeline = mod.simulate_aging(bank.layout, bank.network, self.params, self.wl, MARGIN,
                                          60 * YEAR, model=self.model, schedule=self.schedule(design))
            assert not timeline.horizon_reached
            assert [e.napsaa for e in timeline.transitions()][-1] == 0
            lifetimes[design] = timeline.lifetime
        assert lifetimes['distributed'] > lifetimes['clustered']

    def test_higher_demand_shortens_clustered_life(self):
        bank = test_tools.canonical_bank('clustered')
        schedule = self.schedule('clustered')
        lifetimes = []
        for demand in (1, 4):
            wl = dataclasses.replace(self.wl, demanded_parallelism=demand)
            timeline = mod.simulate_aging(bank.layout, bank.network, self.params, wl, MARGIN,
                                          60 * YEAR, model=self.model, schedule=schedule)
            lifetimes.append(timeline.lifetime)
        assert lifetimes[1] < lifetimes[0]

    def test_one_step_crosses_several_thresholds(self):
        bank = test_tools.canonical_bank('clustered')
        schedule = {4: 0.01, 2: 0.011, 1: 0.012}
        timeline = mod.simulate_aging(bank.layout, bank.network, self.params, self.wl, MARGIN,
                                      60 * YEAR, model=self.model, schedule=schedule)
        transitions = timeline.transitions()
        assert [e.napsaa for e in transitions] == [2, 1, 0]
        r0 = timeline.nominal_resistance
        assert [e.tsv_resistance for e in transitions] == pytest.approx([r0 + 0.01, r0 + 0.011, r0 + 0.012], rel=1e-9)
        times = [e.t for e in transitions]
        assert 0.0 < times[0] < times[1] < times[2] <= self.params.dt
        assert timeline.lifetime == times[2]



class TestCanonicalEvents(object):
    """ Checks every recorded event of the canonical bodytrack timelines.
    """

    def setup_method(self, method):
        self.params = em.EmParams()
        self.model = em.load_void_table(configulator.DEFAULT_VOID_TABLE)
        self.wl = configulator.load_workload_profile(test_tools.bundled_workload('bodytrack'))

    def timeline(self, design):
        bank = test_tools.canonical_bank(design)
        schedule = mod.headroom_schedule(bank.layout, bank.network, MARGIN)
        return bank, mod.simulate_aging(bank.layout, bank.network, self.params, self.wl, MARGIN,
                                        60 * YEAR, model=self.model, schedule=schedule)

    def test_events_are_monotone(self):
        for design in geometry.DESIGNS:
            _, timeline = self.timeline(design)
            for earlier, later in zip(timeline.events, timeline.events[1:]):
                assert later.t >= earlier.t
                assert later.napsaa <= earlier.napsaa
                assert later.tsv_resistance >= earlier.tsv_resistance
                assert later.void_radius >= earlier.void_radius

    def test_transitions_hold_margin_on_a_rebuilt_network(self):
        bank, timeline = self.timeline('clustered')
        levels = [timeline.events[0].napsaa] + [e.napsaa for e in timeline.transitions()]
        for previous, event in zip(levels, timeline.transitions()):
            extra = event.tsv_resistance - timeline.nominal_resistance
            aged = netlist.apply_tsv_resistance(bank.network, extra)
            old = irdrop.place_saas(bank.layout, bank.network, previous, PlacementPolicy.adversarial_greedy)
            # the level given up sits at the margin
            assert irdrop.compute_irdrop_map(aged, old).max_droop == pytest.approx(MARGIN, abs=0.05)
            if event.napsaa == 0:
                continue
            new = irdrop.place_saas(bank.layout, bank.network, event.napsaa, PlacementPolicy.adversarial_greedy)
            droop = irdrop.compute_irdrop_map(aged, new).max_droop
            assert droop <= MARGIN
            assert droop == pytest.approx(event.max_droop, rel=1e-6)

    def test_resistance_between_events(self):
        _, timeline = self.timeline('clustered')
        first, second = timeline.events[0], timeline.events[1]
        middle = (first.t + second.t) / 2.0
        assert mod.resistance_at(timeline, middle) == \
            pytest.approx((first.tsv_resistance + second.tsv_resistance) / 2.0)
        assert mod.resistance_at(timeline, 0.0) == first.tsv_resistance
        assert mod.resistance_at(timeline, 1000 * YEAR) == timeline.events[-1].tsv_resistance
