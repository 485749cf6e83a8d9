import warnings

import numpy as np
import pytest

from hierdetect import control, model
from hierdetect.exceptions import DestabilizingGainError, RegulatorError

K = [[-0.284, -2.1]]


def test_regulator_example_values():
    reg = control.solve_regulator(model.EXAMPLE_A_II, model.EXAMPLE_B_I, [[1.0, 0.0]], [[-1.0]], k=K)
    np.testing.assert_allclose(reg.pi, [[1.0], [0.0]], atol=1e-12)
    np.testing.assert_allclose(reg.gamma, [[1.1]], atol=1e-12)
    np.testing.assert_allclose(reg.l, [[1.384]], atol=1e-12)
    a, b = np.array(model.EXAMPLE_A_II), np.array(model.EXAMPLE_B_I)
    assert np.linalg.norm(reg.pi - a @ reg.pi - b @ reg.gamma) <= 1e-10
    np.testing.assert_allclose(control.feedforward_gain(reg, K), reg.l)


def test_regulator_general_exosystem():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(3, 3)), rng.normal(size=(3, 2))
    c, q = rng.normal(size=(2, 3)), rng.normal(size=(2, 2))
    s = np.array([[1.0, 0.1], [0.0, 1.0]])
    reg = control.solve_regulator(a, b, c, q, s)
    assert np.linalg.norm(reg.pi @ s - a @ reg.pi - b @ reg.gamma) < 1e-9
    assert np.linalg.norm(c @ reg.pi + q) < 1e-9


def test_regulator_unsolvable():
    with pytest.raises(RegulatorError):
        control.solve_regulator(2 * np.eye(2), [[0.0], [0.0]], [[1.0, 0.0]], [[-1.0]])


def test_tracking_converges():
    reg = control.solve_regulator(model.EXAMPLE_A_II, model.EXAMPLE_B_I, [[1.0, 0.0]], [[-1.0]], k=K)
    a, b = np.array(model.EXAMPLE_A_II), np.array(model.EXAMPLE_B_I)
    x = np.array([0.3, -0.2])
    for _ in range(400):
        x = a @ x + b @ control.control_law(x, [0.7], K, reg.l)
    assert x[0] == pytest.approx(0.7, abs=1e-6)


def test_gain_report_example():
    with pytest.warns(RuntimeWarning, match="exceeds rate"):
        rep = control.validate_gain(model.EXAMPLE_A_II, model.EXAMPLE_B_I, K, 0.955)
    assert rep.spectral_radius == pytest.approx(0.95252, abs=1e-5)
    assert rep.violation_factor == pytest.approx(2.1506, abs=1e-4)
    assert rep.violation_step == 12 and rep.transient_violation
    assert 1 <= rep.sampled_violation_factor <= rep.violation_factor + 1e-12


def test_gain_report_contractive_gain_is_quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rep = control.validate_gain([[0.5]], [[1.0]], [[0.0]], 0.6)
    assert not rep.transient_violation


def test_destabilizing_gain():
    with pytest.raises(DestabilizingGainError):
        control.validate_gain(model.EXAMPLE_A_II, model.EXAMPLE_B_I, [[0.0, 0.0]], 0.955)


def test_reference_schedule():
    sched = control.ReferenceSchedule((((0, [0.0]), (4, [1.0])), ()), (1, 1))
    assert sched.value(0, 3)[0] == 0 and sched.value(0, 4)[0] == 1
    assert sched.value(1, 9)[0] == 0
    now, nxt = control.reference_at(sched, 3)
    assert now[0][0] == 0 and nxt[0][0] == 1
    assert control.ReferenceSchedule.constant([[2.0]]).value(0, 100)[0] == 2
    with pytest.raises(ValueError):
        control.ReferenceSchedule((((1, [0.0]),),), (1,))
    with pytest.raises(ValueError):
        control.reference_at(sched, -1)


def test_reference_limits():
    sched = control.ReferenceSchedule((((0, [0.0]), (4, [1.0]), (10, [20.0])),), (1,))
    msgs = sched.check_limits(min_dwell=20, max_step=10)
    assert any("closer" in m for m in msgs)
    assert any("exceeds" in m for m in msgs)
    assert control.ReferenceSchedule((((0, [0.0]), (4, [1.0])),), (1,)).check_limits() == []


def test_controller_config_checks():
    with pytest.raises(ValueError):
        control.ControllerConfig(K, 1.0)
    with pytest.raises(ValueError):
        control.ControllerConfig(K, 0.9, -1.0)
