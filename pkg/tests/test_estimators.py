
import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.model_selection import ParameterGrid

from slipcoarsen.absorption import simulate_exact, uniform_total_time
from slipcoarsen.core import EventKind
from slipcoarsen.estimators import AbsorptionCoarsening, RateFitter, ReducedODECoarsening
from slipcoarsen.laws import cr1_curve
from slipcoarsen.verification import four_droplet_profile


def test_absorption_estimator_matches_function():
    g = np.random.default_rng(0).uniform(0.5, 3.0, 500)
    est = AbsorptionCoarsening(B=0.8, sort=False, per_gap=False).fit(g.reshape(-1, 1))
    assert np.array_equal(est.times_, simulate_exact(g, 0.8).times)
    assert est.predict([0.0])[0] == 1.0
    assert est.predict([est.times_[-1]])[0] == pytest.approx(1 / 500)


def test_absorption_estimator_uniform_total_time():
    est = AbsorptionCoarsening(B=2.0, per_gap=False).fit(np.full(100, 1.5))
    assert est.times_[-1] == pytest.approx(uniform_total_time(1.5, 100, 2.0), rel=1e-13)


def test_params_roundtrip_and_clone():
    est = AbsorptionCoarsening(B=3.0, method="suffix")
    assert est.get_params() == {"B": 3.0, "sort": True, "per_gap": True, "method": "suffix"}
    c = clone(est).set_params(B=4.0)
    assert c.B == 4.0 and est.B == 3.0
    assert len(list(ParameterGrid({"B": [1.0, 2.0], "method": ["lazy", "naive"]}))) == 4


def test_unfitted_and_bad_input():
    with pytest.raises(NotFittedError):
        AbsorptionCoarsening().predict([1.0])
    with pytest.raises(ValueError):
        AbsorptionCoarsening().fit(np.ones((4, 2)))
    with pytest.raises(ValueError):
        AbsorptionCoarsening().fit([1.0, np.nan])


def test_rate_fitter_cr1_and_power():
    t = np.linspace(0.1, 300.0, 400)
    n = cr1_curve(t, 1.0, 1.0)
    f = RateFitter(kind="cr1", n_window=(0.0, 1.0), A=1.0, B=1.0).fit(t, n)
    assert f.slope_ == pytest.approx(-1.0, abs=1e-10)
    assert f.score(t, n) == pytest.approx(1.0, abs=1e-12)
    tp = np.geomspace(1.0, 1e4, 100)
    p = RateFitter(kind="power", n_window=(0.0, 1.0)).fit(tp, 2.0 * tp ** -1.0)
    assert np.allclose(p.predict(tp), 2.0 * tp ** -1.0, rtol=1e-10)
    with pytest.raises(ValueError):
        RateFitter().fit([1.0, 2.0], [1.0])


def test_ode_estimator_four_droplets():
    s = four_droplet_profile()
    X = np.column_stack([s.positions, s.pressures])
    est = ReducedODECoarsening(beta=0.0, t_max=1.0, rel_tol=1e-10, abs_tol=1e-10).fit(X)
    assert est.events_[0].kind is EventKind.COLLAPSE
    assert est.predict([0.0, 0.5]).tolist() == [1.0, 0.75]
    with pytest.raises(ValueError):
        ReducedODECoarsening().fit(X[:, :1])
