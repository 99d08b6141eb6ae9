import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfgrank.graph import BasicBlock, build_cfg, weak_components
from cfgrank.report import (ComparisonSummary, ReportError, UnknownMetricError,
                            cdf_csv, compare, corpus_stats, empirical_cdf,
                            stats_to_dict)
from cfgrank.sbc import generate_corpus, recover_cfg


def path3():
    return build_cfg("p3", [BasicBlock(address=a) for a in (0, 4, 8)],
                     [(0, 4), (4, 8)])


def two_component():
    return build_cfg("tc", [BasicBlock(address=a) for a in (0, 4, 8)], [(0, 4)])


def singleton(sid="one"):
    return build_cfg(sid, [BasicBlock(address=0)], [])


class TestEmpiricalCdf:
    def test_direct_definition(self):
        assert empirical_cdf([1, 1, 2, 4]) == [(1, 0.5), (2, 0.75), (4, 1.0)]

    def test_singleton(self):
        assert empirical_cdf([7]) == [(7, 1.0)]

    def test_empty_rejected(self):
        with pytest.raises(ReportError):
            empirical_cdf([])

    def test_uniform_draws_track_true_cdf(self):
        rng = random.Random(2024)
        draws = [rng.random() for _ in range(1000)]
        worst = max(abs(f - v) for v, f in empirical_cdf(draws))
        assert worst < 0.06

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=32),
                    min_size=1, max_size=200))
    def test_valid_distribution_function(self, values):
        points = empirical_cdf(values)
        fractions = [f for _, f in points]
        assert fractions == sorted(fractions)
        assert fractions[-1] == 1.0
        xs = [v for v, _ in points]
        assert xs == sorted(set(xs))


class TestCorpusStats:
    def test_single_singleton_graph(self):
        stats = corpus_stats([singleton()], "c")
        assert stats.per_sample[0].avg_closeness == 0.0
        assert stats.cdfs["component_count"] == [(1.0, 1.0)]

    def test_mixed_component_cdf(self):
        stats = corpus_stats([path3(), two_component()], "c")
        assert stats.cdfs["component_count"] == [(1.0, 0.5), (2.0, 1.0)]

    def test_counts_match_graph_core(self):
        graphs = [recover_cfg(p, f"s{i}")
                  for i, p in enumerate(generate_corpus(20, "fragmented", 1))]
        stats = corpus_stats(graphs, "frag")
        for g, row in zip(graphs, stats.per_sample):
            assert row.node_count == g.node_count
            assert row.edge_count == g.edge_count
            assert row.component_count == weak_components(g).component_count

    def test_fragmented_corpus_all_multi_component(self):
        graphs = [recover_cfg(p, f"s{i}")
                  for i, p in enumerate(generate_corpus(100, "fragmented", 13))]
        stats = corpus_stats(graphs, "frag")
        multi = sum(1 for r in stats.per_sample if r.component_count >= 2)
        assert multi == len(stats.per_sample)

    def test_file_sizes_carried(self):
        stats = corpus_stats([singleton("a")], "c", file_sizes={"a": 123})
        assert stats.per_sample[0].file_size == 123
        assert stats_to_dict(stats)["samples"][0]["file_size"] == 123

    def test_cdf_csv_shape(self):
        stats = corpus_stats([path3(), two_component()], "c")
        lines = cdf_csv(stats).decode().strip().split("\n")
        assert lines[0] == "metric,value,fraction"
        assert all(len(line.split(",")) == 3 for line in lines[1:])


class TestCompare:
    def test_separated_corpora(self):
        a = corpus_stats([singleton(f"a{i}") for i in range(4)], "a")
        b = corpus_stats([path3()], "b")
        # a avg_closeness all 0, b all > 0.5
        summary = compare(a, b, "avg_closeness", 0.3)
        assert summary.rule_accuracy == 1.0
        assert summary.fraction_a_below == 1.0
        assert summary.fraction_b_below == 0.0

    def test_identical_corpora_at_prior(self):
        a = corpus_stats([path3(), two_component()], "a")
        b = corpus_stats([path3(), two_component()], "b")
        summary = compare(a, b, "avg_closeness", 0.5)
        assert summary.rule_accuracy <= 0.5 + 1e-12

    def test_extreme_thresholds(self):
        a = corpus_stats([path3()], "a")
        b = corpus_stats([two_component()], "b")
        low = compare(a, b, "node_count", -math.inf)
        assert low.fraction_a_below == 0.0 and low.fraction_b_below == 0.0
        high = compare(a, b, "node_count", math.inf)
        assert high.fraction_a_below == 1.0 and high.fraction_b_below == 1.0

    def test_unknown_metric(self):
        a = corpus_stats([path3()], "a")
        with pytest.raises(UnknownMetricError):
            compare(a, a, "swagger", 1.0)

    def test_profiles_separate_at_paper_threshold(self):
        enm = corpus_stats(
            [recover_cfg(p, f"e{i}") for i, p in enumerate(generate_corpus(50, "enmeshed", 3))],
            "enmeshed")
        frag = corpus_stats(
            [recover_cfg(p, f"f{i}") for i, p in enumerate(generate_corpus(50, "fragmented", 3))],
            "fragmented")
        summary = compare(enm, frag, "avg_closeness", 0.2)
        # recount oracle
        e_vals = [r.avg_closeness for r in enm.per_sample]
        f_vals = [r.avg_closeness for r in frag.per_sample]
        e_below = sum(v < 0.2 for v in e_vals)
        f_below = sum(v < 0.2 for v in f_vals)
        expected = max(e_below + (50 - f_below), f_below + (50 - e_below)) / 100
        assert summary.rule_accuracy == pytest.approx(expected)
        assert summary.rule_accuracy >= 0.9
