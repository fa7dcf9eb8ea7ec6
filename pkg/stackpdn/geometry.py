#!/usr/bin/env python
""" Stack and bank geometry, and the clustered & distributed PDN layouts.

    Lengths are in micrometers throughout this module.  The bank's y axis
    runs from the bottom edge (y=0) to the top edge, and subarray 1 is the
    topmost subarray.

    See the file "LICENSE" for the full license governing this code.
    Copyright 2021 Ken Farmer
"""
import dataclasses
from dataclasses import dataclass
import logging
import math
from typing import List, NamedTuple, Tuple

from stackpdn import common as comm


logger = logging.getLogger(__name__)

DESIGNS = ('clustered', 'distributed')
POLARITIES = ('P', 'G')



@dataclass(frozen=True)
class StackConfig:
    """ Static HMC stack and bank organization.
    """
    dram_layers: int = 4
    logic_layers: int = 1
    vaults: int = 4
    banks_per_partition: int = 2
    subarrays_per_bank: int = 32
    tiles_per_subarray: int = 16
    tile_width: float = 29.0
    tile_height: float = 41.3
    rows_per_bank: int = 16384
    row_width_bits: int = 8192

    def validate(self) -> None:
        for field in dataclasses.fields(self):
            if getattr(self, field.name) < 1 and field.type is int:
                raise comm.InvalidParamsError(f'stack.{field.name} must be >= 1')
        if self.tile_width <= 0 or self.tile_height <= 0:
            raise comm.InvalidParamsError('stack tile dimensions must be > 0')
        if self.rows_per_bank != self.subarrays_per_bank * 512:
            raise comm.InvalidParamsError('stack.rows_per_bank must equal subarrays_per_bank x 512')



@dataclass(frozen=True)
class PdnParams:
    """ PDN parameters for one design.

        The defaults are the clustered canonical values; use canonical_params()
        to get either design's calibrated set.
    """
    tsv_diameter: float = 10.0
    tsv_pitch: float = 21.0
    rail_width: float = 2.0
    vertical_rail_pitch: float = 7.0
    vertical_rails: int = 96
    horizontal_rails: int = 128
    sheet_resistance: float = 0.9
    tsv_c4_resistance: float = 0.25
    supply_voltage: float = 1.5
    ir_margin: float = 75.0
    current_per_saa: float = 100.0
    rail_parallel_straps: float = 22.0
    tsvs_per_line: int = 32
    bank_sections: int = 8
    tsv_line_height: float = 16.0
    tsv_resistance_mode: str = 'column'
    load_spread: str = 'row'

    def validate(self) -> None:
        positive = ('tsv_diameter', 'tsv_pitch', 'rail_width', 'vertical_rail_pitch',
                    'sheet_resistance', 'tsv_c4_resistance', 'supply_voltage',
                    'ir_margin', 'current_per_saa', 'rail_parallel_straps',
                    'tsv_line_height')
        for name in positive:
            value = getattr(self, name)
            if not value > 0 or math.isinf(value):
                raise comm.InvalidParamsError(f'pdn.{name} must be > 0 and finite, not {value}')
        if self.vertical_rails < 2 or self.horizontal_rails < 2:
            raise comm.InvalidParamsError('the rail grid needs at least 2 rails in each direction')
        if self.tsvs_per_line < 2 or self.bank_sections < 1:
            raise comm.InvalidParamsError('pdn.tsvs_per_line must be >= 2 and pdn.bank_sections >= 1')
        if self.tsv_pitch < self.tsv_diameter:
            raise comm.InvalidParamsError('pdn.tsv_pitch must be >= pdn.tsv_diameter')
        if self.ir_margin >= self.supply_voltage * 1000:
            raise comm.InvalidParamsError('pdn.ir_margin must be below the supply voltage')
        if self.tsv_resistance_mode not in ('column', 'segment'):
            raise comm.InvalidParamsError(f'invalid pdn.tsv_resistance_mode: {self.tsv_resistance_mode}')
        if self.load_spread not in ('row', 'point'):
            raise comm.InvalidParamsError(f'invalid pdn.load_spread: {self.load_spread}')

    @property
    def bank_width(self) -> float:
        return self.vertical_rails * self.vertical_rail_pitch



def canonical_params(design: str) -> PdnParams:
    """ Returns the calibrated canonical parameters for a design.

        Both designs share one rail calibration (rail_parallel_straps); they
        differ only in TSV placement.  These match profiles/canonical_<design>.cfg.
    """
    if design == 'clustered':
        return PdnParams()
    elif design == 'distributed':
        return PdnParams(tsv_pitch=48.0,
                         vertical_rail_pitch=8.0,
                         tsvs_per_line=16)
    raise comm.InvalidParamsError(f'unknown design: {design}')



class TsvSite(NamedTuple):
    x: float
    y: float
    polarity: str


class Section(NamedTuple):
    y_min: float
    y_max: float
    subarray_ids: Tuple[int, ...]


@dataclass(frozen=True)
class PdnLayout:
    design: str
    bank_width: float
    bank_height: float
    tsv_sites: Tuple[TsvSite, ...]
    sections: Tuple[Section, ...]
    subarray_centers: Tuple[Tuple[float, float], ...]

    @property
    def subarray_ids(self) -> List[int]:
        return list(range(1, len(self.subarray_centers) + 1))

    @property
    def area(self) -> float:
        return self.bank_width * self.bank_height

    def center(self, subarray_id: int) -> Tuple[float, float]:
        if not 1 <= subarray_id <= len(self.subarray_centers):
            raise comm.InvalidParamsError(f'no subarray {subarray_id} in this layout')
        return self.subarray_centers[subarray_id - 1]

    def section_of(self, subarray_id: int) -> Section:
        for section in self.sections:
            if subarray_id in section.subarray_ids:
                return section
        raise comm.InvalidParamsError(f'no subarray {subarray_id} in this layout')

    def polarity_count(self, polarity: str) -> int:
        return sum(1 for site in self.tsv_sites if site.polarity == polarity)



class AreaOverhead(NamedTuple):
    width_delta: float
    height_delta: float
    area_ratio: float


def area_overhead(clustered: PdnLayout, distributed: PdnLayout) -> AreaOverhead:
    return AreaOverhead(width_delta=distributed.bank_width - clustered.bank_width,
                        height_delta=distributed.bank_height - clustered.bank_height,
                        area_ratio=distributed.area / clustered.area)



def _subarray_centers(width: float, height: float, count: int) -> Tuple[Tuple[float, float], ...]:
    return tuple((width / 2.0, height - (k - 0.5) * height / count)
                 for k in range(1, count + 1))


def _check_spacing(sites: List[TsvSite], diameter: float) -> None:
    for i, first in enumerate(sites):
        for second in sites[i+1:]:
            if math.hypot(first.x - second.x, first.y - second.y) < diameter:
                raise comm.InvalidParamsError(f'TSVs at ({first.x}, {first.y}) and ({second.x}, {second.y}) '
                                              f'are closer than the {diameter} um diameter')


def build_clustered_layout(params: PdnParams,
                           stack: StackConfig) -> PdnLayout:
    """ P/G TSVs along the top and bottom bank edges, alternating P,G.
    """
    params.validate()
    stack.validate()
    width = params.bank_width
    height = stack.subarrays_per_bank * stack.tile_width
    per_edge = params.tsvs_per_line
    if per_edge * params.tsv_pitch > width:
        raise comm.InvalidParamsError(f'{per_edge} TSVs at {params.tsv_pitch} um pitch do not fit '
                                      f'the {width} um bank width')
    if per_edge % 2:
        raise comm.InvalidParamsError('pdn.tsvs_per_line must be even so P and G counts match')

    sites: List[TsvSite] = []
    for edge_y in (height, 0.0):
        for i in range(per_edge):
            sites.append(TsvSite(params.tsv_pitch / 2.0 + params.tsv_pitch * i,
                                 edge_y,
                                 'P' if i % 2 == 0 else 'G'))
    _check_spacing(sites, params.tsv_diameter)

    section = Section(0.0, height, tuple(range(1, stack.subarrays_per_bank + 1)))
    layout = PdnLayout(design='clustered',
                       bank_width=width,
                       bank_height=height,
                       tsv_sites=tuple(sites),
                       sections=(section,),
                       subarray_centers=_subarray_centers(width, height, stack.subarrays_per_bank))
    logger.debug('clustered layout: %s x %s um, %d TSVs', width, height, len(sites))
    return layout


def build_distributed_layout(params: PdnParams,
                             stack: StackConfig) -> PdnLayout:
    """ One PDN domain per bank section, with TSV lines on the section boundaries.

        Each line holds tsvs_per_line slots; odd slots are P (serving the
        section below), even slots are G (serving the section above).  The
        top line keeps only its P slots and the bottom line only its G slots.
    """
    params.validate()
    stack.validate()
    n_sections = params.bank_sections
    if stack.subarrays_per_bank % n_sections:
        raise comm.InvalidParamsError(f'{stack.subarrays_per_bank} subarrays do not divide into '
                                      f'{n_sections} sections')
    width = params.bank_width
    height = stack.subarrays_per_bank * stack.tile_width + n_sections * params.tsv_line_height
    slots = params.tsvs_per_line
    if slots * params.tsv_pitch > width:
        raise comm.InvalidParamsError(f'{slots} TSVs per line at {params.tsv_pitch} um pitch overlap '
                                      f'within the {width} um bank width')
    if slots % 2:
        raise comm.InvalidParamsError('pdn.tsvs_per_line must be even so P and G counts match')

    sites: List[TsvSite] = []
    for line in range(n_sections + 1):
        line_y = height - line * height / n_sections
        for i in range(slots):
            polarity = 'P' if i % 2 == 1 else 'G'
            if line == 0 and polarity == 'G':
                continue
            if line == n_sections and polarity == 'P':
                continue
            sites.append(TsvSite(params.tsv_pitch / 2.0 + params.tsv_pitch * i, line_y, polarity))
    _check_spacing(sites, params.tsv_diameter)

    per_section = stack.subarrays_per_bank // n_sections
    sections = []
    for s in range(n_sections):
        ids = tuple(range(s * per_section + 1, (s + 1) * per_section + 1))
        sections.append(Section(height - (s + 1) * height / n_sections,
                                height - s * height / n_sections,
                                ids))

    layout = PdnLayout(design='distributed',
                       bank_width=width,
                       bank_height=height,
                       tsv_sites=tuple(sites),
                       sections=tuple(sections),
                       subarray_centers=_subarray_centers(width, height, stack.subarrays_per_bank))
    logger.debug('distributed layout: %s x %s um, %d TSVs, %d sections',
                 width, height, len(sites), n_sections)
    return layout


def build_layout(design: str,
                 params: PdnParams,
                 stack: StackConfig) -> PdnLayout:
    if design == 'clustered':
        return build_clustered_layout(params, stack)
    elif design == 'distributed':
        return build_distributed_layout(params, stack)
    raise comm.InvalidParamsError(f'unknown design: {design}')


def nearest_tsv_distance(layout: PdnLayout,
                         subarray_id: int,
                         polarity: str = 'P') -> float:
    x, y = layout.center(subarray_id)
    return min(math.hypot(site.x - x, site.y - y)
               for site in layout.tsv_sites if site.polarity == polarity)


def layout_rows(layout: PdnLayout) -> List[List[str]]:
    """ CSV rows for the layout export, header first.
    """
    rows = [['x_um', 'y_um', 'polarity']]
    for site in layout.tsv_sites:
        rows.append([f'{site.x:.3f}', f'{site.y:.3f}', site.polarity])
    return rows
