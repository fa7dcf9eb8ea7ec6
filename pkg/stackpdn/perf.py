#!/usr/bin/env python
""" Bank throughput, latency, power and energy-delay product under a NAPSAA cap.

    A closed-form saturation plus M/D/1-style queueing model: the bank can
    start napsaa activations per row cycle, and requests beyond that
    capacity are dropped from throughput.  Utilization in the queueing term
    is capped at 0.999.

    See the file "LICENSE" for the full license governing this code.
    Copyright 2021 Ken Farmer
"""
from dataclasses import dataclass
import math
from typing import List, NamedTuple, Sequence

from stackpdn import common as comm
from stackpdn.aging import AgingTimeline, WorkloadProfile


UTILIZATION_CAP = 0.999



@dataclass(frozen=True)
class DramTiming:
    t_rc: float = 48.0
    t_rcd: float = 13.0
    t_cl: float = 13.0

    def validate(self) -> None:
        for name in ('t_rc', 't_rcd', 't_cl'):
            if not getattr(self, name) > 0:
                raise comm.InvalidParamsError(f'timing.{name} must be > 0')


class PerfEstimate(NamedTuple):
    throughput: float
    avg_latency: float
    power: float
    edp: float


class EdpPoint(NamedTuple):
    t_years: float
    edp: float



def estimate_performance(wl: WorkloadProfile,
                         napsaa: int,
                         timing: DramTiming) -> PerfEstimate:
    if napsaa < 1:
        raise comm.ZeroNapsaaError(f'performance is undefined at NAPSAA {napsaa}')
    timing.validate()
    capacity = napsaa / (timing.t_rc * 1e-9)
    throughput = min(wl.request_rate, capacity)
    rho = min(UTILIZATION_CAP, wl.request_rate / capacity)
    latency = (timing.t_rcd + timing.t_cl) * 1e-9 + rho / (2.0 * capacity * (1.0 - rho))
    power = wl.static_power + (wl.activation_energy + wl.read_write_energy) * throughput
    if throughput > 0:
        edp = power / throughput * latency
    else:
        edp = math.inf
    return PerfEstimate(throughput=throughput, avg_latency=latency, power=power, edp=edp)



def edp_over_lifetime(timeline: AgingTimeline,
                      wl: WorkloadProfile,
                      timing: DramTiming) -> List[EdpPoint]:
    """ One EDP point per timeline event; infinite once NAPSAA reaches 0.
    """
    series = []
    for event in timeline.events:
        t_years = event.t / comm.SECONDS_PER_YEAR
        if event.napsaa < 1:
            series.append(EdpPoint(t_years, math.inf))
        else:
            series.append(EdpPoint(t_years, estimate_performance(wl, event.napsaa, timing).edp))
    return series


def normalize_edp(series: Sequence[EdpPoint],
                  baseline_edp_at_zero: float) -> List[EdpPoint]:
    if not baseline_edp_at_zero > 0 or math.isinf(baseline_edp_at_zero):
        raise comm.NonPositiveBaselineError(f'baseline EDP must be > 0 and finite: {baseline_edp_at_zero}')
    return [EdpPoint(point.t_years, point.edp / baseline_edp_at_zero) for point in series]


def edp_rows(series: Sequence[EdpPoint],
             normalized: Sequence[EdpPoint]) -> List[List[str]]:
    rows = [['t_years', 'edp_js', 'edp_normalized']]
    for point, norm in zip(series, normalized):
        rows.append([comm.fmt_years(point.t_years), comm.fmt_sig(point.edp), comm.fmt_sig(norm.edp)])
    return rows


def edp_at(timeline: AgingTimeline,
           wl: WorkloadProfile,
           timing: DramTiming,
           t: float) -> float:
    """ EDP of a timeline at any time t (s), following its NAPSAA step function.
    """
    napsaa = timeline.napsaa_at(t)
    if napsaa < 1:
        return math.inf
    return estimate_performance(wl, napsaa, timing).edp
