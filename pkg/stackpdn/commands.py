#!/usr/bin/env python
""" The stackpdn commands: each one runs a piece of the clustered vs distributed
    PDN analysis for a RunConfig and writes its results.

    Results go to stdout (one line per design or workload) and to files
    under the run's out_dir.  Output file names:

        layout_<design>.csv              TSV sites
        netlist_<design>.sp              flat resistor netlist
        irmap_<design>_n<k>.csv          top-tier droop map
        irmap_<design>_n<k>_dr<x>.csv    the same with every TSV <x> ohm above nominal
        irmap_<design>_n<k>_<wl>_<y>y.csv  the same after <y> years of a workload
        timeline_<design>_<workload>.csv aging timeline
        lifetime_summary.yaml            lifetimes and NAPSAA transitions
        edp_<design>_<workload>.csv      EDP series normalized to clustered at age 0
        compare_report.yaml              the full comparison

    See the file "LICENSE" for the full license governing this code.
    Copyright 2021 Ken Farmer
"""
import logging
import math
from os.path import join as pjoin
import statistics
from typing import Any, Callable, Dict, List, NamedTuple, Optional, TextIO, Tuple
import sys

from stackpdn import aging
from stackpdn import common as comm
from stackpdn import configulator
from stackpdn.configulator import RunConfig
from stackpdn import file_io
from stackpdn import geometry
from stackpdn import irdrop
from stackpdn import netlist
from stackpdn import perf
from stackpdn import solver


logger = logging.getLogger(__name__)

COMMANDS = ('layout', 'netlist', 'rw', 'irmap', 'napsaa', 'headroom',
            'age', 'lifetime', 'perf', 'compare')
SAA_CURRENT = 0.1



class Bank(NamedTuple):
    design: str
    params: geometry.PdnParams
    layout: geometry.PdnLayout
    network: netlist.ResistorNetwork



class Pipeline(object):
    """ Builds and caches the per-design artifacts of one run.

        Every expensive product (network, NAPSAA, headroom schedule,
        timelines) is computed at most once per Pipeline.
    """

    def __init__(self,
                 run_config: RunConfig,
                 tracker: file_io.OutputTracker,
                 out: TextIO = sys.stdout,
                 years: Optional[float] = None,
                 delta_r: Optional[float] = None) -> None:

        self.run_config = run_config
        self.tracker = tracker
        self.out = out
        self.years = years
        self.delta_r = delta_r
        self.stack = run_config.stack_config()
        self.em_params = run_config.em_params()
        self.timing = run_config.timing()
        self._banks: Dict[str, Bank] = {}
        self._napsaa: Dict[str, int] = {}
        self._schedules: Dict[str, Dict[int, float]] = {}
        self._timelines: Dict[tuple, aging.AgingTimeline] = {}
        self._workloads: Optional[List[aging.WorkloadProfile]] = None
        self._void_model = None


    def emit(self, line: str) -> None:
        print(line, file=self.out)


    def out_path(self, filename: str) -> str:
        return pjoin(self.run_config.out_dir, filename)


    def bank(self, design: str) -> Bank:
        if design not in self._banks:
            params = self.run_config.pdn_params(design)
            layout = geometry.build_layout(design, params, self.stack)
            network = netlist.build_network(layout, params, self.stack)
            logger.info('%s network: %d nodes, %d resistors', design,
                        network.node_count, network.edge_count)
            self._banks[design] = Bank(design, params, layout, network)
        return self._banks[design]


    def napsaa(self, design: str) -> int:
        if design not in self._napsaa:
            bank = self.bank(design)
            self._napsaa[design] = irdrop.find_napsaa(bank.layout, bank.network,
                                                      self.run_config.margin_mv,
                                                      self.run_config.policy(design),
                                                      SAA_CURRENT)
        return self._napsaa[design]


    def schedule(self, design: str) -> Dict[int, float]:
        if design not in self._schedules:
            bank = self.bank(design)
            self._schedules[design] = aging.headroom_schedule(bank.layout, bank.network,
                                                              self.run_config.margin_mv,
                                                              policy=self.run_config.policy(design),
                                                              current=SAA_CURRENT)
        return self._schedules[design]


    @property
    def workloads(self) -> List[aging.WorkloadProfile]:
        if self._workloads is None:
            self._workloads = [configulator.load_workload_profile(path)
                               for path in self.run_config.workloads]
        return self._workloads


    @property
    def void_model(self):
        if self._void_model is None:
            self._void_model = self.run_config.void_resistance_model()
        return self._void_model


    def timeline(self,
                 design: str,
                 wl: aging.WorkloadProfile) -> aging.AgingTimeline:
        key = (design, wl.name)
        if key not in self._timelines:
            bank = self.bank(design)
            self._timelines[key] = aging.simulate_aging(bank.layout, bank.network, self.em_params, wl,
                                                        self.run_config.margin_mv,
                                                        self.run_config.horizon_seconds,
                                                        model=self.void_model,
                                                        policy=self.run_config.policy(design),
                                                        schedule=self.schedule(design),
                                                        current=SAA_CURRENT)
        return self._timelines[key]


    def baseline_edp(self, wl: aging.WorkloadProfile) -> float:
        """ EDP of the clustered bank at age 0, the normalization base of every series.
        """
        return perf.estimate_performance(wl, self.napsaa('clustered'), self.timing).edp


    def write_timeline(self,
                       design: str,
                       wl: aging.WorkloadProfile) -> str:
        timeline = self.timeline(design, wl)
        return self.tracker.write_csv(self.out_path(f'timeline_{design}_{wl.name}.csv'),
                                      aging.timeline_rows(timeline))


    def write_edp(self,
                  design: str,
                  wl: aging.WorkloadProfile) -> List[perf.EdpPoint]:
        series = perf.edp_over_lifetime(self.timeline(design, wl), wl, self.timing)
        normalized = perf.normalize_edp(series, self.baseline_edp(wl))
        self.tracker.write_csv(self.out_path(f'edp_{design}_{wl.name}.csv'),
                               perf.edp_rows(series, normalized))
        return normalized



def run_layout(pipe: Pipeline, n: Optional[int]) -> None:
    for design in pipe.run_config.designs:
        bank = pipe.bank(design)
        path = pipe.tracker.write_csv(pipe.out_path(f'layout_{design}.csv'),
                                      geometry.layout_rows(bank.layout))
        pipe.emit(f'{design}: {len(bank.layout.tsv_sites)} TSVs, '
                  f'{bank.layout.bank_width:g} x {bank.layout.bank_height:g} um -> {path}')
    if len(pipe.run_config.designs) == 2:
        overhead = geometry.area_overhead(pipe.bank('clustered').layout,
                                          pipe.bank('distributed').layout)
        pipe.emit(f'area overhead: width +{overhead.width_delta:g} um, '
                  f'height +{overhead.height_delta:g} um, ratio {overhead.area_ratio:.2f}')


def run_netlist(pipe: Pipeline, n: Optional[int]) -> None:
    for design in pipe.run_config.designs:
        bank = pipe.bank(design)
        path = pipe.tracker.track(pipe.out_path(f'netlist_{design}.sp'))
        count = netlist.write_netlist(bank.network, path)
        pipe.emit(f'{design}: {count} resistors -> {path}')


def run_rw(pipe: Pipeline, n: Optional[int]) -> None:
    margin = pipe.run_config.margin_mv
    for design in pipe.run_config.designs:
        sa, r_worst = solver.worst_effective_resistance(pipe.bank(design).network)
        i_peak = solver.peak_current(r_worst, margin)
        lumped = solver.lumped_napsaa(r_worst, margin, SAA_CURRENT * 1000.0)
        pipe.emit(f'{design}: {comm.fmt_sig(r_worst)} ohm at SA {sa}, '
                  f'peak current {comm.fmt_sig(i_peak)} A, lumped NAPSAA {lumped}')


def _aged_extras(pipe: Pipeline, design: str) -> List[Tuple[str, float]]:
    """ (file name suffix, per-TSV resistance increase) of every map to draw for a design.
    """
    if pipe.years is not None and pipe.delta_r is not None:
        raise comm.InvalidParamsError('irmap takes --years or --delta-r, not both')
    if pipe.delta_r is not None:
        if pipe.delta_r < 0:
            raise comm.NegativeDeltaError(f'--delta-r must be >= 0: {pipe.delta_r}')
        return [(f'_dr{pipe.delta_r:g}', pipe.delta_r)]
    if pipe.years is not None:
        if pipe.years < 0:
            raise comm.InvalidParamsError(f'--years must be >= 0: {pipe.years}')
        extras = []
        for wl in pipe.workloads:
            timeline = pipe.timeline(design, wl)
            r_aged = aging.resistance_at(timeline, pipe.years * comm.SECONDS_PER_YEAR)
            extras.append((f'_{wl.name}_{pipe.years:g}y', max(r_aged - timeline.nominal_resistance, 0.0)))
        return extras
    return [('', 0.0)]


def run_irmap(pipe: Pipeline, n: Optional[int]) -> None:
    if n is None:
        raise comm.InvalidParamsError('irmap needs --n')
    for design in pipe.run_config.designs:
        bank = pipe.bank(design)
        loads = irdrop.place_saas(bank.layout, bank.network, n,
                                  pipe.run_config.policy(design), SAA_CURRENT)
        for suffix, extra in _aged_extras(pipe, design):
            irmap = irdrop.compute_irdrop_map(bank.network, loads, design, per_tsv_extra=extra)
            path = pipe.tracker.write_text(pipe.out_path(f'irmap_{design}_n{n}{suffix}.csv'),
                                           irdrop.irdrop_csv_lines(irmap))
            aged = f' (+{comm.fmt_sig(extra)} ohm per TSV)' if extra else ''
            pipe.emit(f'{design}: n={n}{aged} max droop {comm.fmt_mv(irmap.max_droop)} mV '
                      f'at SAs {",".join(str(x) for x in loads.subarrays)} -> {path}')


def run_napsaa(pipe: Pipeline, n: Optional[int]) -> None:
    for design in pipe.run_config.designs:
        pipe.emit(f'{design}: {pipe.napsaa(design)}')


def run_headroom(pipe: Pipeline, n: Optional[int]) -> None:
    pipe.emit('design,napsaa,delta_r_max_ohm')
    for design in pipe.run_config.designs:
        for level, headroom in pipe.schedule(design).items():
            if n is None or n == level:
                pipe.emit(f'{design},{level},{comm.fmt_sig(headroom)}')


def run_age(pipe: Pipeline, n: Optional[int]) -> None:
    for design in pipe.run_config.designs:
        for wl in pipe.workloads:
            path = pipe.write_timeline(design, wl)
            years = aging.lifetime_years(pipe.timeline(design, wl))
            pipe.emit(f'{design}/{wl.name}: lifetime {comm.fmt_years(years)} years -> {path}')


def _lifetime_records(pipe: Pipeline) -> List[Dict[str, Any]]:
    records = []
    for wl in pipe.workloads:
        for design in pipe.run_config.designs:
            records.append(aging.lifetime_summary(pipe.timeline(design, wl), wl))
    return records


def run_lifetime(pipe: Pipeline, n: Optional[int]) -> None:
    records = _lifetime_records(pipe)
    pipe.tracker.write_yaml(pipe.out_path('lifetime_summary.yaml'),
                            {'margin_mv': pipe.run_config.margin_mv,
                             'horizon_years': pipe.run_config.horizon_years,
                             'lifetimes': records})
    for record in records:
        pipe.emit(f"{record['design']}/{record['workload']}: "
                  f"{comm.fmt_years(record['lifetime_years'])} years")


def run_perf(pipe: Pipeline, n: Optional[int]) -> None:
    for design in pipe.run_config.designs:
        for wl in pipe.workloads:
            normalized = pipe.write_edp(design, wl)
            pipe.emit(f'{design}/{wl.name}: normalized EDP at age 0 {comm.fmt_sig(normalized[0].edp)}')



def lifetime_ratios(pipe: Pipeline) -> Dict[str, Optional[float]]:
    """ distributed / clustered lifetime per workload; None when either outlives the horizon.
    """
    ratios: Dict[str, Optional[float]] = {}
    for wl in pipe.workloads:
        clustered = pipe.timeline('clustered', wl).lifetime
        distributed = pipe.timeline('distributed', wl).lifetime
        if clustered is None or distributed is None or clustered <= 0:
            ratios[wl.name] = None
        else:
            ratios[wl.name] = distributed / clustered
    return ratios


def edp_ordering_holds(pipe: Pipeline,
                       wl: aging.WorkloadProfile) -> bool:
    """ True when distributed EDP <= clustered EDP at age 0 and at every event time of either.
    """
    clustered = pipe.timeline('clustered', wl)
    distributed = pipe.timeline('distributed', wl)
    times = sorted({e.t for e in clustered.events} | {e.t for e in distributed.events})
    for t in times:
        d_edp = perf.edp_at(distributed, wl, pipe.timing, t)
        c_edp = perf.edp_at(clustered, wl, pipe.timing, t)
        if d_edp > c_edp * (1 + 1e-12) and not math.isinf(c_edp):
            return False
    return True


def run_compare(pipe: Pipeline, n: Optional[int]) -> None:
    """ Runs both designs end to end and writes one report.

        Designs and workloads run sequentially.  The banks and their
        factorizations are shared by every workload.
    """
    designs = list(geometry.DESIGNS)
    report: Dict[str, Any] = {'run_config': pipe.run_config.to_text(),
                              'designs': {}}
    for design in designs:
        bank = pipe.bank(design)
        sa, r_worst = solver.worst_effective_resistance(bank.network)
        report['designs'][design] = {'worst_resistance_ohm': float(comm.fmt_sig(r_worst)),
                                     'worst_subarray': sa,
                                     'napsaa': pipe.napsaa(design),
                                     'headroom_ohm': {level: float(comm.fmt_sig(r))
                                                      for level, r in pipe.schedule(design).items()}}
    overhead = geometry.area_overhead(pipe.bank('clustered').layout, pipe.bank('distributed').layout)
    report['area_ratio'] = round(overhead.area_ratio, 4)

    workloads = []
    for wl in pipe.workloads:
        for design in designs:
            pipe.write_timeline(design, wl)
            pipe.write_edp(design, wl)
        workloads.append({'workload': wl.name,
                          'clustered_years': _round_years(pipe.timeline('clustered', wl)),
                          'distributed_years': _round_years(pipe.timeline('distributed', wl)),
                          'edp_ordering_holds': edp_ordering_holds(pipe, wl)})
    ratios = lifetime_ratios(pipe)
    for record in workloads:
        ratio = ratios[record['workload']]
        record['lifetime_ratio'] = None if ratio is None else round(ratio, 4)
    report['workloads'] = workloads
    known = [x for x in ratios.values() if x is not None]
    report['mean_lifetime_ratio'] = round(statistics.mean(known), 4) if known else None

    path = pipe.tracker.write_yaml(pipe.out_path('compare_report.yaml'), report)
    for design in designs:
        pipe.emit(f"{design}: NAPSAA {report['designs'][design]['napsaa']}, "
                  f"R_W {comm.fmt_sig(report['designs'][design]['worst_resistance_ohm'])} ohm")
    for record in workloads:
        pipe.emit(f"{record['workload']}: clustered {comm.fmt_years(record['clustered_years'])} years, "
                  f"distributed {comm.fmt_years(record['distributed_years'])} years")
    mean_ratio = report['mean_lifetime_ratio']
    pipe.emit(f"mean lifetime ratio: {'none' if mean_ratio is None else f'{mean_ratio:.2f}'} -> {path}")


def _round_years(timeline: aging.AgingTimeline) -> Optional[float]:
    years = aging.lifetime_years(timeline)
    return None if years is None else round(years, 2)



COMMAND_FUNCS: Dict[str, Callable[[Pipeline, Optional[int]], None]] = {
    'layout': run_layout,
    'netlist': run_netlist,
    'rw': run_rw,
    'irmap': run_irmap,
    'napsaa': run_napsaa,
    'headroom': run_headroom,
    'age': run_age,
    'lifetime': run_lifetime,
    'perf': run_perf,
    'compare': run_compare}


def run_command(cmd: str,
                run_config: RunConfig,
                n: Optional[int] = None,
                out: TextIO = sys.stdout,
                years: Optional[float] = None,
                delta_r: Optional[float] = None) -> List[str]:
    """ Runs one command and returns the paths of the files it wrote.

        years and delta_r age the TSVs of the irmap command.

        If the command fails, every file it already wrote is removed and
        the error propagates.
    """
    if cmd not in COMMAND_FUNCS:
        raise comm.InvalidParamsError(f'unknown command: {cmd}')
    with file_io.OutputTracker() as tracker:
        pipe = Pipeline(run_config, tracker, out, years=years, delta_r=delta_r)
        COMMAND_FUNCS[cmd](pipe, n)
    return tracker.paths


def run_script(cmd: str,
               nconfig: Any,
               run_config: RunConfig) -> int:
    """ Runs a command for a script: any failure becomes a one-line diagnostic and rc 1.
    """
    verbosity = getattr(nconfig, 'verbosity', 'normal')
    try:
        run_command(cmd, run_config, n=getattr(nconfig, 'n', None),
                    years=getattr(nconfig, 'years', None),
                    delta_r=getattr(nconfig, 'delta_r', None))
    except comm.PdnError as err:
        comm.abort(err.kind, str(err), verbosity=verbosity)
    except OSError as err:
        comm.abort('io-error', str(err), verbosity=verbosity)
    return 0
