import math

import numpy as np
import pytest

import coordlqr

MU = np.array([0.3, 0.2, 0.3, 0.1, 0.4])
X0 = [np.array([x]) for x in (3.0, 2.0, 1.0, 4.0, 5.0)]


def example():
    one = np.array([[1.0]])
    return coordlqr.Ensemble(np.array([[2.0]]), one, one, one, MU)


def test_example_gains():
    ens = example()
    steady = coordlqr.solve_steady(ens, np.array([[-1.5]]))
    assert steady.P[0, 0] == pytest.approx(2.0 + math.sqrt(5.0), abs=1e-9)
    assert steady.K[0, 0] == pytest.approx(-1.6180, abs=5e-4)
    assert steady.Kbar[0, 0] == pytest.approx(0.1180, abs=5e-4)
    assert steady.Pbar[0, 0] == pytest.approx(0.0972, abs=5e-4)
    g = coordlqr.average_feedback_gains(ens, steady.Kbar)
    assert [round(float(x[0, 0]), 4) for x in g] == pytest.approx(
        [0.0908, 0.0605, 0.0908, 0.0303, 0.1210], abs=5e-4)


def test_invalid_input_raises():
    zero = np.array([[0.0]])
    with pytest.raises(coordlqr.CoordError, match="RNotPD"):
        coordlqr.Ensemble(np.array([[2.0]]), np.array([[1.0]]), np.array([[1.0]]), zero, MU)


def test_simulation_and_oracle_agree():
    ens = example()
    fbar = np.array([[-1.5]])
    sched = coordlqr.synthesize_finite(ens, fbar, 6)
    traj = coordlqr.simulate(ens, sched, fbar, X0, 7)
    oracle = coordlqr.centralized_oracle(ens, fbar, 6, X0)
    cost = coordlqr.accumulated_cost(traj)
    assert cost == pytest.approx(oracle.cost, rel=1e-9)
    assert cost == pytest.approx(coordlqr.optimal_cost(sched, X0, ens), rel=1e-9)
    assert coordlqr.constraint_check(traj, fbar) < 1e-9
    eq, adj = coordlqr.mp_residuals(traj, sched, ens)
    assert eq < 1e-8 and adj < 1e-8


def test_stability_report():
    rep = coordlqr.stability_report(example(), np.array([[-0.8]]))
    assert rep.verdict == "not_stabilizable"
    assert rep.spectral_radius_closed_loop == pytest.approx(1.2)
