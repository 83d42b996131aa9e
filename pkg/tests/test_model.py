import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from creditpool import (
    DiscreteTypeMeasure,
    EpsSchedule,
    FirmType,
    SystematicFactorConfig,
    TimeGrid,
    Trajectory,
    TypeAtom,
    ValidationError,
    homogeneous_measure,
    product_measure,
    validate_measure,
)


def atom(weight=1.0, lambda_init=0.5, **overrides):
    params = dict(alpha=4.0, lambda_bar=0.5, sigma=0.9, beta_c=2.0, beta_s=0.0)
    params.update(overrides)
    return TypeAtom(FirmType(**params), lambda_init=lambda_init, weight=weight)


class TestValidateMeasure:
    def test_base_case_valid_under_cap_10(self):
        m = DiscreteTypeMeasure((atom(),))
        assert validate_measure(m, cap=10.0) is m

    def test_split_weights_valid(self):
        m = DiscreteTypeMeasure((atom(weight=0.5), atom(weight=0.5)))
        validate_measure(m)

    def test_weight_sum_mismatch(self):
        m = DiscreteTypeMeasure((atom(weight=0.5), atom(weight=0.6)))
        with pytest.raises(ValidationError) as err:
            validate_measure(m)
        assert "WEIGHT_SUM_MISMATCH" in err.value.codes

    def test_negative_sigma(self):
        m = DiscreteTypeMeasure((atom(sigma=-0.1),))
        with pytest.raises(ValidationError) as err:
            validate_measure(m)
        assert "NEGATIVE_PARAMETER" in err.value.codes

    def test_cap_exceeded(self):
        m = DiscreteTypeMeasure((atom(alpha=11.0),))
        with pytest.raises(ValidationError) as err:
            validate_measure(m, cap=10.0)
        assert err.value.codes == ("CAP_EXCEEDED",)

    def test_beta_s_symmetric_cap(self):
        validate_measure(DiscreteTypeMeasure((atom(beta_s=-9.0),)), cap=10.0)
        with pytest.raises(ValidationError) as err:
            validate_measure(DiscreteTypeMeasure((atom(beta_s=-11.0),)), cap=10.0)
        assert "CAP_EXCEEDED" in err.value.codes

    def test_all_violations_reported(self):
        m = DiscreteTypeMeasure(
            (atom(sigma=-0.1, weight=0.5), atom(lambda_init=200.0, weight=0.6))
        )
        with pytest.raises(ValidationError) as err:
            validate_measure(m, cap=100.0)
        codes = err.value.codes
        assert "NEGATIVE_PARAMETER" in codes
        assert "CAP_EXCEEDED" in codes
        assert "WEIGHT_SUM_MISMATCH" in codes

    def test_nonpositive_weight_rejected(self):
        m = DiscreteTypeMeasure((atom(weight=0.0), atom(weight=1.0)))
        with pytest.raises(ValidationError):
            validate_measure(m)

    def test_nonfinite_rejected(self):
        m = DiscreteTypeMeasure((atom(alpha=math.inf),))
        with pytest.raises(ValidationError):
            validate_measure(m)

    def test_empty_measure_unconstructible(self):
        with pytest.raises(ValueError):
            DiscreteTypeMeasure(())


class TestProductMeasure:
    def test_singleton_product(self):
        m = product_measure([(FirmType(1, 1, 1, 1), 1.0)], [(0.5, 1.0)])
        assert len(m) == 1
        assert m.atoms[0].weight == 1.0
        assert m.atoms[0].lambda_init == 0.5

    def test_two_by_two_weights_type_major(self):
        t1, t2 = FirmType(1, 1, 1, 1), FirmType(2, 2, 2, 2)
        m = product_measure([(t1, 0.3), (t2, 0.7)], [(0.1, 0.5), (0.9, 0.5)])
        assert [a.weight for a in m.atoms] == [0.15, 0.15, 0.35, 0.35]
        assert [a.firm_type.alpha for a in m.atoms] == [1, 1, 2, 2]
        assert [a.lambda_init for a in m.atoms] == [0.1, 0.9, 0.1, 0.9]

    def test_factor_mismatch(self):
        with pytest.raises(ValidationError) as err:
            product_measure([(FirmType(1, 1, 1, 1), 0.9)], [(0.5, 1.0)])
        assert "WEIGHT_SUM_MISMATCH" in err.value.codes

    @given(
        tw=st.lists(st.floats(0.05, 1.0), min_size=1, max_size=5),
        iw=st.lists(st.floats(0.05, 1.0), min_size=1, max_size=5),
    )
    @settings(max_examples=40, deadline=None)
    def test_product_of_normalized_factors_validates(self, tw, iw):
        tw = np.array(tw) / math.fsum(tw)
        iw = np.array(iw) / math.fsum(iw)
        types = [(FirmType(1.0, 0.5, 0.5, 1.0), w) for w in tw]
        inits = [(0.1 * (i + 1), w) for i, w in enumerate(iw)]
        m = product_measure(types, inits)
        validate_measure(m)  # DERIVED oracle: re-run the validator
        assert abs(m.total_weight - 1.0) <= 1e-12
        assert len(m) == len(tw) * len(iw)


class TestTimeGrid:
    def test_dt_and_points(self):
        g = TimeGrid(2.0, 8)
        assert g.dt == 2.0 / 8
        pts = g.points()
        assert pts.shape == (9,)
        assert pts[0] == 0.0
        np.testing.assert_allclose(pts, np.arange(9) * 0.25)

    def test_index_of(self):
        g = TimeGrid(1.0, 100)
        assert g.index_of(0.0) == 0
        assert g.index_of(0.25) == 25
        assert g.index_of(1.0) == 100
        with pytest.raises(ValueError):
            g.index_of(0.2501)

    def test_refine(self):
        g = TimeGrid(1.0, 100).refine()
        assert g.n_steps == 200 and g.t_end == 1.0

    @pytest.mark.parametrize("t_end,n_steps", [(0.0, 10), (-1.0, 10), (1.0, 0)])
    def test_invalid(self, t_end, n_steps):
        with pytest.raises(ValueError):
            TimeGrid(t_end, n_steps)


class TestTrajectory:
    def test_shape_checked(self):
        g = TimeGrid(1.0, 4)
        with pytest.raises(ValueError):
            Trajectory(g, np.zeros(4))

    def test_finite_checked(self):
        g = TimeGrid(1.0, 2)
        with pytest.raises(ValueError):
            Trajectory(g, np.array([0.0, np.nan, 1.0]))

    def test_values_read_only(self):
        g = TimeGrid(1.0, 2)
        tr = Trajectory(g, np.zeros(3))
        with pytest.raises(ValueError):
            tr.values[0] = 1.0

    def test_sup_distance_requires_shared_grid(self):
        a = Trajectory(TimeGrid(1.0, 2), np.zeros(3))
        b = Trajectory(TimeGrid(1.0, 4), np.zeros(5))
        with pytest.raises(ValueError):
            a.sup_distance(b)
        c = Trajectory(TimeGrid(1.0, 2), np.array([0.0, 0.5, 2.0]))
        assert a.sup_distance(c) == 2.0


class TestEpsSchedule:
    def test_kinds(self):
        assert EpsSchedule("zero")(100) == 0.0
        assert EpsSchedule("fixed", 0.25)(100) == 0.25
        assert EpsSchedule("inverse_sqrt", 2.0)(4) == 1.0

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            EpsSchedule("linear")

    @given(st.integers(1, 10**6), st.integers(1, 10**6))
    @settings(max_examples=40, deadline=None)
    def test_nonincreasing(self, n, m):
        sched = EpsSchedule()
        lo, hi = sorted((n, m))
        assert sched(hi) <= sched(lo)
        assert sched(lo) >= 0.0


class TestFactorConfig:
    def test_gamma_positive(self):
        with pytest.raises(ValueError):
            SystematicFactorConfig(gamma=0.0)
        with pytest.raises(ValueError):
            SystematicFactorConfig(gamma=-1.0)

    def test_types_frozen_after_construction(self):
        m = homogeneous_measure(FirmType(1, 1, 1, 1), 0.5)
        assert m.atoms[0].firm_type == FirmType(1, 1, 1, 1)
        with pytest.raises(AttributeError):
            m.atoms[0].firm_type.alpha = 2.0
