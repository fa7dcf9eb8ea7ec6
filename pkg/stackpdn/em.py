#!/usr/bin/env python
""" Electromigration void growth in the PDN TSVs, and void radius to resistance.

    All quantities are SI.

    See the file "LICENSE" for the full license governing this code.
    Copyright 2021 Ken Farmer
"""
import csv
import dataclasses
from dataclasses import dataclass
import logging
import math
from typing import Optional, Tuple

import numpy as np

from stackpdn import common as comm


logger = logging.getLogger(__name__)

# per-TSV current density (A/m2) by number of parallel activations
CURRENT_DENSITY_TABLE = {32: 1.2e10,
                         16: 6.02e9,
                         8: 3.01e9,
                         4: 1.5e9,
                         2: 7.52e8}

VOID_MODEL_KINDS = ('analytic_blockage', 'calibration_table')



@dataclass(frozen=True)
class EmParams:
    alpha: float = 1.0
    f: float = 0.4
    omega: float = 1.18e-29
    delta: float = 5e-9
    d0: float = 0.0047
    ea: float = 1.30e-19
    k: float = 1.38e-23
    temperature: float = 453.0
    z_star: float = 1.0
    e_charge: float = 1.602e-19
    rho_barrier: float = 3.00e-6
    eps_tsv: float = 1.15e-6
    c0: float = 1.53e28
    dt: float = 5.0e6
    j_unit: float = 3.76e8
    tsv_radius: float = 5e-6
    initial_radius: float = 0.0

    def validate(self) -> None:
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            if field.name in ('ea', 'initial_radius'):
                if value < 0:
                    raise comm.InvalidParamsError(f'em.{field.name} must be >= 0')
            elif not value > 0:
                raise comm.InvalidParamsError(f'em.{field.name} must be > 0')
        if self.initial_radius > self.tsv_radius:
            raise comm.InvalidParamsError('em.initial_radius must not exceed em.tsv_radius')



@dataclass(frozen=True)
class VoidState:
    radius: float = 0.0
    elapsed: float = 0.0



@dataclass(frozen=True)
class VoidResistanceModel:
    """ Maps void radius to TSV chain resistance.

        analytic_blockage treats the void as removing a centered disc of the
        conducting cross-section.  calibration_table interpolates measured or
        simulated (radius, resistance) points, clamped at both table ends.
    """
    kind: str = 'analytic_blockage'
    table: Optional[Tuple[Tuple[float, float], ...]] = None
    tsv_radius: float = 5e-6

    def __post_init__(self) -> None:
        if self.kind not in VOID_MODEL_KINDS:
            raise comm.InvalidParamsError(f'unknown void model: {self.kind}')
        if self.kind == 'calibration_table':
            _check_table(self.table)



def _check_table(table) -> None:
    if not table or len(table) < 2:
        raise comm.InvalidParamsError('a void calibration table needs at least 2 rows')
    radii = np.array([row[0] for row in table])
    resistances = np.array([row[1] for row in table])
    if np.any(np.diff(radii) <= 0) or np.any(np.diff(resistances) <= 0):
        raise comm.InvalidParamsError('void calibration table must be strictly increasing in both columns')
    if radii[0] < 0 or resistances[0] <= 0:
        raise comm.InvalidParamsError('void calibration table needs radius >= 0 and resistance > 0')


def load_void_table(path: str,
                    tsv_radius: float = 5e-6) -> VoidResistanceModel:
    """ Reads a radius_m,resistance_ohm CSV into a calibration_table model.
    """
    rows = []
    with open(path, 'rt', newline='', encoding='utf-8') as infile:
        reader = csv.reader(infile)
        header = next(reader, None)
        if header is None or [x.strip() for x in header] != ['radius_m', 'resistance_ohm']:
            raise comm.InvalidParamsError(f'{path}: header must be radius_m,resistance_ohm')
        for rec in reader:
            if not rec or rec[0].startswith('#'):
                continue
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except (IndexError, ValueError):
                raise comm.InvalidParamsError(f'{path}: bad calibration row: {rec}')
    return VoidResistanceModel(kind='calibration_table', table=tuple(rows), tsv_radius=tsv_radius)



def vacancy_diffusivity(p: EmParams) -> float:
    return p.d0 * math.exp(-p.ea / (p.k * p.temperature))


def vacancy_concentration(p: EmParams) -> float:
    return p.c0 * math.exp(-p.ea / (p.k * p.temperature))


def current_density(n_saa: int, p: EmParams) -> float:
    """ Per-TSV current density at n parallel activations.
    """
    if n_saa < 0:
        raise comm.InvalidParamsError(f'n_saa must be >= 0: {n_saa}')
    if n_saa in CURRENT_DENSITY_TABLE:
        return CURRENT_DENSITY_TABLE[n_saa]
    return p.j_unit * n_saa


def vacancy_flux(p: EmParams, j: float) -> float:
    if j < 0:
        raise comm.InvalidParamsError(f'current density must be >= 0: {j}')
    return (vacancy_diffusivity(p) * vacancy_concentration(p)
            * (p.e_charge * p.z_star / (p.k * p.temperature)) * p.rho_barrier * j)


def growth_rate(p: EmParams, j: float) -> float:
    """ Void radius growth in m per second of stress.
    """
    return p.alpha * p.f * p.omega * p.eps_tsv * abs(vacancy_flux(p, j)) / p.delta


def step_void_growth(s: VoidState,
                     p: EmParams,
                     j: float,
                     effective_dt: float) -> VoidState:
    if effective_dt < 0:
        raise comm.InvalidParamsError(f'effective_dt must be >= 0: {effective_dt}')
    radius = min(p.tsv_radius, s.radius + growth_rate(p, j) * effective_dt)
    return VoidState(radius=radius, elapsed=s.elapsed + effective_dt)



def void_to_resistance(s: VoidState,
                       model: VoidResistanceModel,
                       r0: float) -> float:
    """ TSV chain resistance (ohms) for a void; math.inf once the void spans the TSV.
    """
    if not r0 > 0:
        raise comm.NonPositiveResistanceError(f'nominal resistance must be > 0: {r0}')
    a = model.tsv_radius
    if s.radius >= a:
        return math.inf
    if model.kind == 'analytic_blockage':
        return r0 * a * a / (a * a - s.radius * s.radius)
    radii = [row[0] for row in model.table]
    resistances = [row[1] for row in model.table]
    return float(np.interp(s.radius, radii, resistances))


def radius_for_resistance(target: float,
                          model: VoidResistanceModel,
                          r0: float) -> float:
    """ Smallest void radius whose resistance reaches target ohms.
    """
    a = model.tsv_radius
    if math.isinf(target):
        return a
    if model.kind == 'analytic_blockage':
        if target <= r0:
            return 0.0
        return a * math.sqrt(1.0 - r0 / target)
    radii = [row[0] for row in model.table]
    resistances = [row[1] for row in model.table]
    if target > resistances[-1]:
        return a
    if target <= resistances[0]:
        return 0.0
    return float(np.interp(target, resistances, radii))
