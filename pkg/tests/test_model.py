import numpy as np
import pytest

from hierdetect import model
from hierdetect.exceptions import DimensionError


def test_example_model_structure(example):
    assert example.size == 4 and example.dims == [2, 2, 2, 2]
    assert example.out_neighbors(0) == [1]
    assert example.out_neighbors(1) == [0, 2]
    assert model.validate(example) == []


def test_coupling_matrix_matches_stacked_coupling(example):
    rng = np.random.default_rng(0)
    xs = [rng.normal(size=2) for _ in range(4)]
    d = np.concatenate(model.coupling(example, xs))
    np.testing.assert_allclose(d, example.coupling_matrix() @ np.concatenate(xs))
    assert model.coupling(example, model.LssState.zeros(example))[0].tolist() == [0.0, 0.0]


def test_step_is_linear_dynamics(example):
    rng = np.random.default_rng(1)
    st = model.LssState(tuple(rng.normal(size=2) for _ in range(4)))
    u = [rng.normal(size=1) for _ in range(4)]
    nxt = model.step(example, st, u)
    b = np.zeros((8, 4))
    for i in range(4):
        b[2 * i:2 * i + 2, i] = example.subsystems[i].b_i[:, 0]
    np.testing.assert_allclose(nxt.stacked(), example.stacked_a() @ st.stacked() + b @ np.concatenate(u))
    assert nxt.k == 1


def test_step_adds_input_attack(example):
    st = model.LssState.zeros(example)
    sig = model.AttackSignals.zeros(example)
    sig = model.AttackSignals((np.array([2.0]),) + sig.a_u[1:], sig.a_d)
    nxt = model.step(example, st, [np.zeros(1)] * 4, sig)
    np.testing.assert_allclose(nxt.x[0], [0.0, 0.1])


def test_validate_flags_uncontrollable_and_kernel():
    s = model.SubsystemModel(np.eye(2), [[1.0], [0.0]], [[1.0, 0.0]], [[-1.0]], {1: np.eye(2)})
    t = model.SubsystemModel(np.eye(2), [[0.0], [1.0]], [[0.0, 1.0]], [[-1.0]], {0: [[0.0, 1.0], [0.0, 0.0]]})
    problems = model.validate(model.LssModel((s, t)))
    assert any("not controllable" in p for p in problems)
    assert any("ker c_1" in p for p in problems)


def test_shape_errors():
    with pytest.raises(DimensionError):
        model.SubsystemModel(np.eye(2), [[1.0]], [[1.0, 0.0]], [[-1.0]])
    good = model.SubsystemModel(np.eye(2), [[0.0], [1.0]], [[1.0, 0.0]], [[-1.0]], {1: np.eye(2)})
    with pytest.raises(ValueError):
        model.LssModel((good,))
    with pytest.raises(DimensionError):
        model.step(model.example_model(2), model.LssState.zeros(model.example_model(2)), [np.zeros(2)] * 2)
