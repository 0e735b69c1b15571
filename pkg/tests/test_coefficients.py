import pytest

from latmin.coefficients import CoefficientField, field_from_spec
from latmin.lattice import LatticeBox


class TestEval:
    def test_constant_everywhere(self):
        f = CoefficientField.constant(1.0)
        for x in [(0, 0), (7, 7), (-3, 2)]:
            assert f.eval(x) == 1.0

    def test_profile_lookup(self):
        f = CoefficientField.radial_limit(1.0, {(0, 0): 0.5})
        assert f.eval((0, 0)) == 1.5

    def test_outside_profile_returns_limit(self):
        f = CoefficientField.radial_limit(1.0, {(0, 0): 0.5})
        assert f.eval((7, 7)) == 1.0

    def test_values_on_box(self):
        f = CoefficientField.radial_limit(2.0, {(1, 0): -0.5, (9, 9): 1.0})
        box = LatticeBox(2, 2)
        vals = f.values_on(box)
        assert vals[box.index_of((1, 0))] == 1.5
        assert vals[box.index_of((0, 0))] == 2.0


class TestInvariants:
    def test_positive_limit_required(self):
        with pytest.raises(ValueError):
            CoefficientField.constant(0.0)
        with pytest.raises(ValueError):
            CoefficientField.radial_limit(-1.0, {})

    def test_negative_value_rejected(self):
        with pytest.raises(ValueError):
            CoefficientField.radial_limit(1.0, {(0, 0): -1.5})

    def test_zero_value_allowed(self):
        f = CoefficientField.radial_limit(1.0, {(0, 0): -1.0})
        assert f.eval((0, 0)) == 0.0

    def test_constant_with_profile_rejected(self):
        with pytest.raises(ValueError):
            CoefficientField("constant", 1.0, {(0, 0): 1.0})


class TestTailDeviation:
    def test_constant_is_zero(self):
        assert CoefficientField.constant(3.0).tail_deviation(1) == 0.0
        assert CoefficientField.constant(3.0).tail_deviation(10) == 0.0

    def test_profile_inside_radius_is_exhausted(self):
        profile = {(1, 0): 0.3, (0, -2): -0.1, (3, 0): 0.2}
        f = CoefficientField.radial_limit(1.0, profile)
        assert f.tail_deviation(3) == 0.0

    def test_single_exterior_entry(self):
        f = CoefficientField.radial_limit(1.0, {(4, 0): 0.2})
        assert f.tail_deviation(3) == pytest.approx(0.2)

    def test_nonincreasing_in_radius(self):
        f = CoefficientField.radial_limit(
            1.0, {(1, 0): 0.9, (2, 2): -0.5, (6, 0): 0.25, (0, 8): 0.05}
        )
        devs = [f.tail_deviation(r) for r in range(1, 10)]
        assert devs == sorted(devs, reverse=True)
        assert devs[-1] == 0.0


class TestSpecParsing:
    def test_constant_round_trip(self):
        spec = {"kind": "constant", "value": 2.5}
        f = field_from_spec(spec)
        assert f.is_constant and f.limit == 2.5
        assert f.to_spec() == spec

    def test_radial_limit_round_trip(self):
        spec = {
            "kind": "radial_limit",
            "limit": 1.0,
            "profile": [{"site": [0, 0], "delta": 0.5}, {"site": [2, -1], "delta": -0.25}],
        }
        f = field_from_spec(spec)
        assert f.eval((0, 0)) == 1.5
        assert f.eval((2, -1)) == 0.75
        assert field_from_spec(f.to_spec()) == f

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            field_from_spec({"kind": "linear", "value": 1.0})

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError):
            field_from_spec({"kind": "constant", "value": 1.0, "extra": 2})
        with pytest.raises(ValueError):
            field_from_spec(
                {"kind": "radial_limit", "limit": 1.0, "profile": [{"site": [0, 0], "d": 1}]}
            )
