"""Crossover-estimator tests against the headline feasibility numbers."""

import pytest

from reinsopt import ValidationError
from reinsopt.qbb import CrossoverReport, HardwareModel, estimate, format_report, oracle_cost_lower_bound


class TestHeadlineNumbers:
    def test_t_ratio(self):
        r = estimate(HardwareModel())
        assert r.t_ratio == pytest.approx(2.9e7, rel=0.02)

    def test_min_tree_size(self):
        r = estimate(HardwareModel())
        assert r.min_tree_size == pytest.approx(8e14, rel=0.05)
        assert r.min_tree_size == 812_250_000_000_000  # exact ceil(t_ratio^2)

    def test_ops_budget(self):
        r = estimate(HardwareModel())
        assert abs(r.max_ops_per_oracle - 230) <= 1

    def test_event_oracle_infeasible(self):
        r = estimate(HardwareModel(), event_count=394_067)
        assert r.feasible is False
        assert "infeasible" in r.verdict

    def test_zero_events_feasible(self):
        r = estimate(HardwareModel(), event_count=0)
        assert r.feasible is True

    def test_boundary_feasible_at_limit(self):
        base = estimate(HardwareModel())
        r = estimate(HardwareModel(), event_count=base.max_ops_per_oracle)
        assert r.feasible is True
        over = estimate(HardwareModel(), event_count=base.max_ops_per_oracle + 1)
        assert over.feasible is False


class TestProperties:
    def test_square_scaling(self):
        a = estimate(HardwareModel())
        b = estimate(HardwareModel(classical_ops_per_second=2 * 1.9e11))
        assert b.t_ratio == pytest.approx(2 * a.t_ratio)
        assert b.min_tree_size == pytest.approx(4 * a.min_tree_size, rel=1e-12)

    def test_verdict_monotone_in_toffoli_rate(self):
        events = 394_067
        prev_feasible = False
        for rate in (1e5, 1e6, 1e7, 1e8, 1e9, 1e10):
            r = estimate(HardwareModel(toffoli_rate=rate), event_count=events)
            assert not (prev_feasible and not r.feasible)  # never feasible -> infeasible
            prev_feasible = r.feasible

    def test_oracle_lower_bound_identity(self):
        assert oracle_cost_lower_bound(0) == 0
        assert oracle_cost_lower_bound(394_067) == 394_067
        with pytest.raises(ValidationError):
            oracle_cost_lower_bound(-1)

    def test_model_validation(self):
        with pytest.raises(ValidationError):
            HardwareModel(toffoli_rate=0)
        with pytest.raises(ValidationError):
            HardwareModel(max_runtime=-1)

    def test_report_serialization(self):
        r = estimate(HardwareModel(), event_count=10)
        d = r.to_dict()
        assert d["feasible"] is True and d["event_count"] == 10
        assert isinstance(format_report(r), str)
        no_events = estimate(HardwareModel())
        assert no_events.feasible is None
