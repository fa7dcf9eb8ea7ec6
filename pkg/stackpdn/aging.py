#!/usr/bin/env python
""" Lifetime simulation: EM void growth, TSV resistance and NAPSAA derating.

    See the file "LICENSE" for the full license governing this code.
    Copyright 2021 Ken Farmer
"""
from dataclasses import dataclass
import logging
import math
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from stackpdn import common as comm
from stackpdn import em
from stackpdn.geometry import PdnLayout
from stackpdn import irdrop
from stackpdn.netlist import ResistorNetwork


logger = logging.getLogger(__name__)

PERIODIC_EVENT_STEPS = 10
DEFAULT_HORIZON_YEARS = 60.0



@dataclass(frozen=True)
class WorkloadProfile:
    """ Declarative description of an application's stress and memory demand.
    """
    name: str
    active_fraction: float = 1.0
    demanded_parallelism: int = 1
    run_active_time: float = 1.0
    request_rate: float = 0.0
    read_write_energy: float = 0.0
    static_power: float = 0.0
    activation_energy: float = 0.0

    def validate(self) -> None:
        if not 0 <= self.active_fraction <= 1:
            raise comm.InvalidParamsError(f'{self.name}: active_fraction must be within [0, 1]')
        if not 1 <= self.demanded_parallelism <= 32:
            raise comm.InvalidParamsError(f'{self.name}: demanded_parallelism must be within 1..32')
        for name in ('run_active_time', 'request_rate', 'read_write_energy',
                     'static_power', 'activation_energy'):
            if getattr(self, name) < 0:
                raise comm.InvalidParamsError(f'{self.name}: {name} must be >= 0')



class AgingEvent(NamedTuple):
    t: float
    napsaa: int
    max_droop: float
    tsv_resistance: float
    void_radius: float


@dataclass(frozen=True)
class AgingTimeline:
    design: str
    workload: str
    events: Tuple[AgingEvent, ...]
    lifetime: Optional[float]
    nominal_resistance: float
    schedule: Tuple[Tuple[int, float], ...] = ()

    @property
    def horizon_reached(self) -> bool:
        return self.lifetime is None

    def transitions(self) -> List[AgingEvent]:
        """ Events where NAPSAA changed.
        """
        changes = []
        for previous, event in zip(self.events, self.events[1:]):
            if event.napsaa != previous.napsaa:
                changes.append(event)
        return changes

    def napsaa_at(self, t: float) -> int:
        level = self.events[0].napsaa
        for event in self.events:
            if event.t > t:
                break
            level = event.napsaa
        return level



def headroom_schedule(layout: PdnLayout,
                      network: ResistorNetwork,
                      margin: float,
                      levels: Sequence[int] = irdrop.NAPSAA_LEVELS,
                      policy: Optional[irdrop.PlacementPolicy] = None,
                      current: float = 0.1) -> Dict[int, float]:
    """ Resistance headroom of every level achievable at age 0, highest level first.
    """
    schedule: Dict[int, float] = {}
    for n in sorted(levels, reverse=True):
        if n > len(layout.subarray_ids):
            continue
        try:
            schedule[n] = irdrop.resistance_headroom(layout, network, n, margin, policy, current)
        except comm.UnachievableLevelError:
            logger.debug('%s level %d not achievable', layout.design, n)
    logger.info('%s headroom schedule: %s', layout.design,
                ', '.join(f'{n}:{r:.4f}' for n, r in schedule.items()))
    return schedule



def simulate_aging(layout: PdnLayout,
                   network: ResistorNetwork,
                   em_params: em.EmParams,
                   wl: WorkloadProfile,
                   margin: float,
                   horizon: float,
                   model: Optional[em.VoidResistanceModel] = None,
                   policy: Optional[irdrop.PlacementPolicy] = None,
                   schedule: Optional[Dict[int, float]] = None,
                   current: float = 0.1) -> AgingTimeline:
    """ Ages the TSVs step by step until NAPSAA falls to 0 or the horizon passes.

        Stress follows the level in use, min(NAPSAA, demanded_parallelism),
        and accrues only during active time.  A threshold crossing inside a
        step is placed by interpolating the void radius linearly over the
        step.
    """
    wl.validate()
    em_params.validate()
    model = model or em.VoidResistanceModel(tsv_radius=em_params.tsv_radius)
    policy = policy or irdrop.default_policy(layout.design)
    if schedule is None:
        schedule = headroom_schedule(layout, network, margin, policy=policy, current=current)
    if not schedule:
        raise comm.UnachievableLevelError(f'{layout.design}: not even one SAA fits the {margin} mV margin')

    levels = sorted(schedule, reverse=True)
    analyzer = irdrop.get_analyzer(network)
    placements = {n: irdrop.place_saas(layout, network, n, policy, current) for n in levels}
    r0 = network.tsv_chain_resistance

    def resistance_of(radius: float) -> float:
        return em.void_to_resistance(em.VoidState(radius=radius), model, r0)

    def droop_of(level: int, extra: float) -> float:
        if level == 0:
            return 0.0
        return analyzer.max_droop(placements[level], max(extra, 0.0))

    level_index = 0
    napsaa = levels[0]
    lifetime: Optional[float] = None
    state = em.VoidState(radius=em_params.initial_radius, elapsed=0.0)
    resistance = resistance_of(state.radius)
    events: List[AgingEvent] = []

    def cross_thresholds(t_start: float, wall_dt: float, start_radius: float,
                         end_radius: float, end_resistance: float) -> None:
        nonlocal level_index, napsaa, lifetime
        while napsaa > 0 and end_resistance - r0 > schedule[napsaa]:
            target = r0 + schedule[napsaa]
            radius = em.radius_for_resistance(target, model, r0)
            radius = min(max(radius, start_radius), end_radius)
            span = end_radius - start_radius
            fraction = (radius - start_radius) / span if span > 0 else 0.0
            t_cross = t_start + fraction * wall_dt
            level_index += 1
            napsaa = levels[level_index] if level_index < len(levels) else 0
            events.append(AgingEvent(t_cross, napsaa, droop_of(napsaa, target - r0), target, radius))
            logger.info('%s/%s: NAPSAA -> %d at %.3f years', layout.design, wl.name, napsaa,
                        t_cross / comm.SECONDS_PER_YEAR)
            if napsaa == 0:
                lifetime = t_cross

    events.append(AgingEvent(0.0, napsaa, droop_of(napsaa, resistance - r0), resistance, state.radius))
    cross_thresholds(0.0, 0.0, state.radius, state.radius, resistance)

    t = 0.0
    step = 0
    last_recorded_radius = state.radius
    while napsaa > 0 and t < horizon:
        wall_dt = min(em_params.dt, horizon - t)
        n_used = min(napsaa, wl.demanded_parallelism)
        j = em.current_density(n_used, em_params)
        new_state = em.step_void_growth(state, em_params, j, wall_dt * wl.active_fraction)
        new_resistance = resistance_of(new_state.radius)
        cross_thresholds(t, wall_dt, state.radius, new_state.radius, new_resistance)

        step += 1
        t += wall_dt
        state = new_state
        resistance = new_resistance
        if napsaa > 0 and state.radius > last_recorded_radius:
            if step % PERIODIC_EVENT_STEPS == 0 or t >= horizon:
                events.append(AgingEvent(t, napsaa, droop_of(napsaa, resistance - r0),
                                         resistance, state.radius))
                last_recorded_radius = state.radius

    if lifetime is None:
        logger.info('%s/%s: horizon reached at NAPSAA %d', layout.design, wl.name, napsaa)
    return AgingTimeline(design=layout.design,
                         workload=wl.name,
                         events=tuple(events),
                         lifetime=lifetime,
                         nominal_resistance=r0,
                         schedule=tuple(schedule.items()))



def runs_until_failure(wl: WorkloadProfile,
                       time_to_max_resistance: float) -> int:
    """ Whole application runs that fit in the stress budget.
    """
    if not wl.run_active_time > 0:
        raise comm.ZeroActiveTimeError(f'{wl.name}: run_active_time must be > 0')
    return int(math.floor(time_to_max_resistance / wl.run_active_time * (1 + 1e-12)))


def lifetime_years(t: AgingTimeline) -> Optional[float]:
    if t.lifetime is None:
        return None
    return t.lifetime / comm.SECONDS_PER_YEAR


def time_to_resistance(timeline: AgingTimeline,
                       delta_r: float) -> Optional[float]:
    """ First recorded time the TSV resistance reached nominal + delta_r.
    """
    target = timeline.nominal_resistance + delta_r
    for event in timeline.events:
        if event.tsv_resistance >= target:
            return event.t
    return None



def resistance_at(timeline: AgingTimeline,
                  t: float) -> float:
    """ TSV resistance at time t, linear between recorded events.

        Past the last event the resistance holds at its last recorded value.
    """
    if t < 0:
        raise comm.InvalidParamsError(f'time must be >= 0: {t}')
    times = [event.t for event in timeline.events]
    values = [event.tsv_resistance for event in timeline.events]
    return float(np.interp(t, times, values))



def timeline_rows(timeline: AgingTimeline) -> List[List[str]]:
    rows = [['t_s', 't_years', 'napsaa', 'max_droop_mv', 'tsv_resistance_ohm', 'void_radius_m']]
    for event in timeline.events:
        rows.append([comm.fmt_sci(event.t),
                     comm.fmt_sci(event.t / comm.SECONDS_PER_YEAR),
                     str(event.napsaa),
                     comm.fmt_sci(event.max_droop),
                     comm.fmt_sci(event.tsv_resistance),
                     comm.fmt_sci(event.void_radius)])
    return rows


def lifetime_summary(timeline: AgingTimeline,
                     wl: WorkloadProfile) -> Dict[str, Any]:
    """ Plain-data summary of one timeline, ready for the YAML writer.
    """
    years = lifetime_years(timeline)
    if timeline.lifetime is not None and wl.run_active_time > 0:
        runs: Optional[int] = runs_until_failure(wl, timeline.lifetime * wl.active_fraction)
    else:
        runs = None
    return {'design': timeline.design,
            'workload': timeline.workload,
            'lifetime_years': None if years is None else round(years, 2),
            'transitions': [{'t_years': round(e.t / comm.SECONDS_PER_YEAR, 2), 'napsaa': e.napsaa}
                            for e in timeline.transitions()],
            'runs_until_failure': runs}
