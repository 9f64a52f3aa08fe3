"""Event-loss table generation, IO, min-attachment, and compression tests."""

import numpy as np
import pytest

from reinsopt import (
    EventLossTable,
    ParseError,
    SyntheticSpec,
    ValidationError,
    compress,
    compute_min_attachments,
    generate_synthetic,
    load_events,
    save_events,
)
from reinsopt.events import counter_uniforms, pareto_loss


def small_table():
    return EventLossTable(
        trial_year=np.array([0, 0, 1]),
        peril_id=np.array([0, 1, 0]),
        loss=np.array([5.0, 2.0, 9.0]),
        num_trial_years=2,
        peril_names=("WS", "EQ"),
    )


class TestEventLossTable:
    def test_basic_invariants(self):
        t = small_table()
        assert t.num_events == 3
        assert t.num_perils == 2

    def test_rejects_non_positive_loss(self):
        with pytest.raises(ValidationError):
            EventLossTable(np.array([0]), np.array([0]), np.array([-1.0]), 1, ("WS",))

    def test_rejects_year_out_of_range(self):
        with pytest.raises(ValidationError):
            EventLossTable(np.array([2]), np.array([0]), np.array([1.0]), 2, ("WS",))

    def test_rejects_unknown_peril(self):
        with pytest.raises(ValidationError):
            EventLossTable(np.array([0]), np.array([1]), np.array([1.0]), 1, ("WS",))

    def test_yearly_totals_and_maxima(self):
        t = small_table()
        totals = t.yearly_totals()
        assert totals[0, 0] == 5.0 and totals[0, 1] == 2.0 and totals[1, 0] == 9.0
        maxima = t.yearly_maxima()
        assert maxima[1, 0] == 9.0 and maxima[1, 1] == 0.0


class TestSynthetic:
    def test_pareto_formula(self):
        # (1 - 0)^(-1/2) = 1 and 0.25^(-1/2) = 2
        assert pareto_loss(0.0, 1.2) == pytest.approx(1.2)
        assert pareto_loss(0.75, 1.2) == pytest.approx(2.4)

    def test_event_count(self):
        spec = SyntheticSpec(num_groups=16, years=1000, events_per_year=50, seed=3)
        assert generate_synthetic(spec).num_events == 16 * 1000 * 50

    def test_determinism(self):
        a = generate_synthetic(SyntheticSpec(num_groups=2, years=5, events_per_year=3, seed=11))
        b = generate_synthetic(SyntheticSpec(num_groups=2, years=5, events_per_year=3, seed=11))
        np.testing.assert_array_equal(a.loss, b.loss)
        c = generate_synthetic(SyntheticSpec(num_groups=2, years=5, events_per_year=3, seed=12))
        assert not np.array_equal(a.loss, c.loss)

    def test_counter_rng_order_independent(self):
        g = np.array([0, 1, 0])
        t = np.array([3, 1, 2])
        e = np.array([0, 0, 1])
        u = counter_uniforms(7, g, t, e)
        perm = np.array([2, 0, 1])
        np.testing.assert_array_equal(counter_uniforms(7, g[perm], t[perm], e[perm]), u[perm])
        assert np.all((u >= 0) & (u < 1))

    def test_group_scale_ladder(self):
        spec = SyntheticSpec(num_groups=3, seed=0)
        assert spec.group_scale(0) == pytest.approx(1.2)
        assert spec.group_scale(2) == pytest.approx(1.2**3)
        flat = SyntheticSpec(num_groups=3, seed=0, constant_scale=True)
        assert flat.group_scale(2) == pytest.approx(1.2)


class TestMinAttachment:
    def test_nearest_rank_example(self):
        # yearly maxima 1..10, p_attach_max = 0.1: exactly one year may exceed
        t = EventLossTable(
            np.arange(10), np.zeros(10, dtype=int), np.arange(1.0, 11.0), 10, ("WS",)
        )
        out = compute_min_attachments(t, {0: "g"}, 0.1)
        assert out["g"] == pytest.approx(9.0)

    def test_never_binding(self):
        # with a zero-event year in the sample, p ~ 1 cannot bind: A^min = 0
        t = EventLossTable(
            np.arange(9), np.zeros(9, dtype=int), np.arange(1.0, 10.0), 10, ("WS",)
        )
        out = compute_min_attachments(t, {0: "g"}, 0.999)
        assert out["g"] == 0.0

    def test_empty_group(self):
        t = small_table()
        out = compute_min_attachments(t, {0: "a"}, 0.5)
        assert "a" in out


class TestCompression:
    def test_worked_example(self):
        # events {2, 5, 9}, A^min = 4: keep {5, 9}, base = 2
        t = EventLossTable(
            np.zeros(3, dtype=int), np.zeros(3, dtype=int), np.array([2.0, 5.0, 9.0]), 1, ("WS",)
        )
        small, base, report = compress(t, {"g": 4.0}, {0: "g"})
        np.testing.assert_array_equal(np.sort(small.loss), [5.0, 9.0])
        assert base.total[0, 0] == pytest.approx(2.0)
        assert base.max_event[0, 0] == pytest.approx(2.0)
        assert report.events_before == 3 and report.events_after == 2

    def test_identity_when_zero(self):
        t = small_table()
        small, base, report = compress(t, {"g": 0.0}, {0: "g", 1: "g"})
        assert small.num_events == t.num_events
        assert report.reduction_factor == pytest.approx(1.0)
        assert np.all(base.total == 0)

    def test_total_conservation_when_all_dropped(self):
        t = small_table()
        small, base, _ = compress(t, {"g": 100.0}, {0: "g", 1: "g"})
        assert small.num_events == 0
        np.testing.assert_allclose(base.total, t.yearly_totals())

    def test_totals_preserved_randomized(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = rng.integers(1, 40)
            t = EventLossTable(
                rng.integers(0, 6, n),
                rng.integers(0, 3, n),
                rng.uniform(0.1, 20.0, n),
                6,
                ("A", "B", "C"),
            )
            cut = float(rng.uniform(0, 20))
            small, base, report = compress(t, {"g": cut}, {0: "g", 1: "g", 2: "g"})
            np.testing.assert_allclose(
                small.yearly_totals() + base.total, t.yearly_totals(), rtol=1e-12
            )
            assert report.reduction_factor >= 1.0


class TestIO:
    def test_csv_roundtrip(self, tmp_path):
        t = small_table()
        path = tmp_path / "events.csv"
        save_events(t, path)
        back = load_events(path)
        np.testing.assert_array_equal(back.loss, t.loss)
        assert back.peril_names == t.peril_names

    def test_binary_roundtrip(self, tmp_path):
        t = small_table()
        path = tmp_path / "events.rxev"
        save_events(t, path)
        back = load_events(path)
        np.testing.assert_array_equal(back.loss, t.loss)
        np.testing.assert_array_equal(back.trial_year, t.trial_year)
        assert back.num_trial_years == t.num_trial_years

    def test_header_only_csv(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("trial_year,peril,loss\n")
        assert load_events(path).num_events == 0

    def test_malformed_row_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("trial_year,peril,loss\n0,WS,5.0\nnope,WS,1.0\n")
        with pytest.raises(ParseError, match="line 3"):
            load_events(path)

    def test_negative_loss_rejected(self, tmp_path):
        path = tmp_path / "neg.csv"
        path.write_text("trial_year,peril,loss\n0,WS,-1\n")
        with pytest.raises(ValidationError, match="line 2"):
            load_events(path)
