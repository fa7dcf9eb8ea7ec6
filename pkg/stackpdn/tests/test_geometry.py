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

import stackpdn.common as comm
import stackpdn.geometry as mod



class TestClusteredLayout(object):

    def setup_method(self, method):
        self.params = mod.canonical_params('clustered')
        self.stack = mod.StackConfig()
        self.layout = mod.build_clustered_layout(self.params, self.stack)

    def test_site_count_and_width(self):
        assert len(self.layout.tsv_sites) == 64
        assert self.layout.bank_width == pytest.approx(672.0)
        assert self.layout.bank_height == pytest.approx(928.0)

    def test_equal_polarities(self):
        assert self.layout.polarity_count('P') == 32
        assert self.layout.polarity_count('G') == 32

    def test_sites_sit_on_the_two_edges(self):
        assert {site.y for site in self.layout.tsv_sites} == {0.0, 928.0}

    def test_one_section_with_every_subarray(self):
        assert len(self.layout.sections) == 1
        assert self.layout.sections[0].subarray_ids == tuple(range(1, 33))

    def test_odd_tsv_count_rejected(self):
        params = dataclasses.replace(self.params, tsvs_per_line=31)
        with pytest.raises(comm.InvalidParamsError):
            mod.build_clustered_layout(params, self.stack)

    def test_tsvs_that_do_not_fit_rejected(self):
        params = dataclasses.replace(self.params, tsv_pitch=30.0)
        with pytest.raises(comm.InvalidParamsError):
            mod.build_clustered_layout(params, self.stack)

    def test_pitch_below_diameter_rejected(self):
        params = dataclasses.replace(self.params, tsv_pitch=8.0)
        with pytest.raises(comm.InvalidParamsError):
            mod.build_clustered_layout(params, self.stack)



class TestDistributedLayout(object):

    def setup_method(self, method):
        self.params = mod.canonical_params('distributed')
        self.stack = mod.StackConfig()
        self.layout = mod.build_distributed_layout(self.params, self.stack)

    def test_dimensions(self):
        assert self.layout.bank_width == pytest.approx(768.0)
        assert self.layout.bank_height == pytest.approx(1056.0)

    def test_site_count_and_balance(self):
        assert len(self.layout.tsv_sites) == 128
        assert self.layout.polarity_count('P') == self.layout.polarity_count('G') == 64

    def test_four_per_line_variant_keeps_64_tsvs(self):
        params = dataclasses.replace(self.params, tsv_pitch=96.0, tsvs_per_line=8)
        layout = mod.build_distributed_layout(params, self.stack)
        assert len(layout.tsv_sites) == 64
        internal = [site for site in layout.tsv_sites if 0.0 < site.y < layout.bank_height]
        assert len(internal) == 7 * 8
        assert layout.polarity_count('P') == layout.polarity_count('G') == 32

    def test_internal_lines_hold_both_polarities(self):
        line_y = self.layout.bank_height - self.layout.bank_height / 8
        line = [site for site in self.layout.tsv_sites if site.y == pytest.approx(line_y)]
        assert [site.polarity for site in line] == ['G', 'P'] * 8
        assert [site.x for site in line[:3]] == [24.0, 72.0, 120.0]

    def test_sections_hold_four_subarrays_each(self):
        assert len(self.layout.sections) == 8
        for s, section in enumerate(self.layout.sections):
            assert section.subarray_ids == tuple(range(4 * s + 1, 4 * s + 5))

    def test_every_subarray_near_a_p_line(self):
        section_height = self.layout.bank_height / 8
        for sa in self.layout.subarray_ids:
            assert mod.nearest_tsv_distance(self.layout, sa, 'P') <= section_height

    def test_top_line_is_p_only_and_bottom_line_g_only(self):
        top = [site for site in self.layout.tsv_sites if site.y == pytest.approx(1056.0)]
        bottom = [site for site in self.layout.tsv_sites if site.y == pytest.approx(0.0)]
        assert {site.polarity for site in top} == {'P'}
        assert {site.polarity for site in bottom} == {'G'}

    def test_closer_to_p_than_clustered_away_from_the_edges(self):
        clustered = mod.build_clustered_layout(mod.canonical_params('clustered'), self.stack)
        for sa in range(3, 31):
            assert (mod.nearest_tsv_distance(self.layout, sa)
                    < mod.nearest_tsv_distance(clustered, sa))

    def test_sections_must_divide_subarrays(self):
        params = dataclasses.replace(self.params, bank_sections=5)
        with pytest.raises(comm.InvalidParamsError):
            mod.build_distributed_layout(params, self.stack)



class TestAreaOverhead(object):

    def test_canonical_overhead(self):
        stack = mod.StackConfig()
        clustered = mod.build_layout('clustered', mod.canonical_params('clustered'), stack)
        distributed = mod.build_layout('distributed', mod.canonical_params('distributed'), stack)
        overhead = mod.area_overhead(clustered, distributed)
        assert overhead.width_delta == pytest.approx(96.0)
        assert overhead.height_delta == pytest.approx(128.0)
        assert overhead.area_ratio == pytest.approx(1.30, abs=0.001)



class TestParams(object):

    def test_unknown_design(self):
        with pytest.raises(comm.InvalidParamsError):
            mod.canonical_params('mesh')
        with pytest.raises(comm.InvalidParamsError):
            mod.build_layout('mesh', mod.PdnParams(), mod.StackConfig())

    def test_non_positive_resistance_rejected(self):
        with pytest.raises(comm.InvalidParamsError):
            mod.PdnParams(sheet_resistance=0.0).validate()

    def test_bad_modes_rejected(self):
        with pytest.raises(comm.InvalidParamsError):
            mod.PdnParams(tsv_resistance_mode='chain').validate()
        with pytest.raises(comm.InvalidParamsError):
            mod.PdnParams(load_spread='area').validate()

    def test_rows_per_bank_tied_to_subarrays(self):
        with pytest.raises(comm.InvalidParamsError):
            mod.StackConfig(rows_per_bank=1000).validate()

    def test_section_lookup(self):
        layout = mod.build_layout('distributed', mod.canonical_params('distributed'), mod.StackConfig())
        assert layout.section_of(6).subarray_ids == (5, 6, 7, 8)
        with pytest.raises(comm.InvalidParamsError):
            layout.section_of(33)



class TestLayoutRows(object):

    def test_header_and_format(self):
        layout = mod.build_layout('clustered', mod.canonical_params('clustered'), mod.StackConfig())
        rows = mod.layout_rows(layout)
        assert rows[0] == ['x_um', 'y_um', 'polarity']
        assert len(rows) == 65
        assert rows[1] == ['10.500', '928.000', 'P']
        assert rows[2] == ['31.500', '928.000', 'G']



class TestCanonicalCalibration(object):

    def test_designs_share_the_rail_calibration(self):
        clustered = mod.canonical_params('clustered')
        distributed = mod.canonical_params('distributed')
        for name in ('rail_parallel_straps', 'sheet_resistance', 'rail_width',
                     'tsv_c4_resistance', 'vertical_rails', 'horizontal_rails'):
            assert getattr(clustered, name) == getattr(distributed, name)

    def test_designs_differ_in_tsv_placement(self):
        clustered = mod.canonical_params('clustered')
        distributed = mod.canonical_params('distributed')
        assert (clustered.tsv_pitch, clustered.tsvs_per_line) == (21.0, 32)
        assert (distributed.tsv_pitch, distributed.tsvs_per_line) == (48.0, 16)



class TestDeterminism(object):

    def test_repeated_builds_are_equal(self):
        stack = mod.StackConfig()
        for design in mod.DESIGNS:
            first = mod.build_layout(design, mod.canonical_params(design), stack)
            second = mod.build_layout(design, mod.canonical_params(design), stack)
            assert first == second
            assert mod.layout_rows(first) == mod.layout_rows(second)
