import numpy as np
import pytest

from planarsuite import dynamics, mjcf
from planarsuite.errors import ContractError, NameLookupError, PhysicsDivergenceError
from planarsuite.physics import Physics
from planarsuite.suite import acrobot, pendulum
from planarsuite.suite.base import read_model

from tests.conftest import without_damping


class TestNamedIndexing:
    """Test suite for named views over the box scene."""

    def test_geom_positions_at_reset(self, box_physics):
        expected = [[0, 0, 0], [0, 0, 0.3], [0.2, 0.2, 0.5]]
        np.testing.assert_allclose(box_physics.data.geom_xpos, expected, atol=1e-12)
        np.testing.assert_allclose(box_physics.named.data.geom_xpos["sphere"], [0.2, 0.2, 0.5])

    def test_write_joint_by_name(self, box_physics):
        with box_physics.reset_context():
            box_physics.named.data.qpos["up_down"] = 0.1
        np.testing.assert_allclose(box_physics.named.data.geom_xpos["box", ["x", "z"]], [0.0, 0.4])

    def test_column_and_list_indexing(self, box_physics):
        rows = box_physics.named.data.geom_xpos[["floor", "box"], "z"]
        np.testing.assert_allclose(rows, [0.0, 0.3])
        assert box_physics.named.data.geom_xpos[2, "x"] == pytest.approx(0.2)

    def test_unknown_name(self, box_physics):
        with pytest.raises(NameLookupError):
            box_physics.named.data.geom_xpos["missing"]
        with pytest.raises(NameLookupError):
            box_physics.named.data.geom_xpos["box", "w"]

    def test_unknown_field(self, box_physics):
        with pytest.raises(NameLookupError, match="No named field"):
            box_physics.named.data.sensordata

    def test_listing_shows_names(self, box_physics):
        listing = repr(box_physics.named.data.geom_xpos)
        assert "floor" in listing and "sphere" in listing

    def test_model_fields(self, box_physics):
        assert box_physics.named.model.geom_size["sphere", "x"] == pytest.approx(0.1)


class TestPhysicsState:
    """Test suite for state management."""

    def test_state_is_read_only_outside_reset(self, box_physics):
        with pytest.raises(ValueError):
            box_physics.data.qpos[0] = 1.0

    def test_arrays_cannot_be_rebound(self, box_physics):
        with pytest.raises(AttributeError):
            box_physics.data.qpos = np.zeros(1)

    def test_reset_context_zeroes_state(self, box_physics):
        box_physics.set_state([0.5], [1.0])
        with box_physics.reset_context():
            pass
        assert box_physics.data.qpos[0] == 0.0
        assert box_physics.time == 0.0

    def test_reset_context_is_not_reentrant(self, box_physics):
        with box_physics.reset_context():
            with pytest.raises(ContractError):
                with box_physics.reset_context():
                    pass

    def test_cannot_step_inside_reset(self, box_physics):
        with box_physics.reset_context():
            with pytest.raises(ContractError):
                box_physics.step()

    def test_set_state_checks_shapes(self, box_physics):
        with pytest.raises(ContractError):
            box_physics.set_state([0.0, 0.0], [0.0])

    def test_copy_is_independent(self, box_physics):
        clone = box_physics.copy()
        clone.step(3)
        assert clone.time > 0
        assert box_physics.time == 0.0
        assert not np.shares_memory(clone.data.qpos, box_physics.data.qpos)


class TestSimulation:
    """Test suite for stepping and energy."""

    def test_free_fall(self, box_physics):
        box_physics.step(10)
        t = box_physics.time
        assert t == pytest.approx(10 * mjcf.DEFAULT_TIMESTEP)
        # Semi-implicit Euler overshoots exact free fall by g h t / 2.
        expected = -0.5 * 9.81 * t * t - 0.5 * 9.81 * mjcf.DEFAULT_TIMESTEP * t
        assert box_physics.data.qpos[0] == pytest.approx(expected, rel=1e-6)
        assert box_physics.data.qacc[0] == pytest.approx(-9.81)

    def test_mass_matrix_is_symmetric_positive_definite(self):
        model = acrobot.get_model()
        kinematics = dynamics.forward_kinematics(model, np.array([0.3, -1.2]))
        M = dynamics.mass_matrix(model, kinematics)
        np.testing.assert_allclose(M, M.T, atol=1e-12)
        assert np.all(np.linalg.eigvalsh(M) > 0)

    @pytest.mark.parametrize(
        "get_model, q, v",
        [
            (pendulum.get_model, [1.0], [0.5]),
            (acrobot.get_model, [0.3, 0.2], [0.1, -0.2]),
        ],
    )
    def test_rk4_conserves_energy(self, get_model, q, v):
        physics = without_damping(Physics(get_model()), timestep=0.02, integrator=mjcf.Integrator.RK4)
        physics.set_state(q, v)
        initial = physics.energy()
        physics.step(1000)
        assert abs(physics.energy() - initial) / abs(initial) < 1e-4

    def test_damping_dissipates(self):
        physics = Physics(pendulum.get_model())
        physics.set_state([1.0], [0.0])
        initial = physics.energy()
        physics.step(200)
        assert physics.energy() < initial

    def test_point_jacobian_matches_velocity(self):
        model = acrobot.get_model()
        q = np.array([0.4, 0.7])
        v = np.array([0.3, -0.5])
        kinematics = dynamics.forward_kinematics(model, q)
        body = model.name2id("lower_arm", "body")
        point = kinematics.xpos[body]
        cvel = dynamics.body_velocities(model, kinematics, v)[body]
        expected = cvel[3:] + np.cross(cvel[:3], point)
        jac = dynamics.point_jacobian(model, kinematics, body, point)
        np.testing.assert_allclose(jac @ v, expected, atol=1e-12)

    def test_controls_are_clipped(self):
        physics = Physics(pendulum.get_model())
        physics.set_control([5.0])
        np.testing.assert_allclose(physics.control(), [1.0])

    def test_divergence_names_joint(self, box_physics):
        box_physics.set_state([0.0], [np.inf])
        with pytest.raises(PhysicsDivergenceError, match="up_down"):
            box_physics.step()

    def test_divergence_under_rk4(self):
        physics = Physics(pendulum.get_model())
        physics.set_state([0.0], [np.inf])
        with pytest.raises(PhysicsDivergenceError, match="hinge"):
            physics.step()

    def test_body_velocity_of_hinge(self):
        physics = Physics(mjcf.from_xml_string(read_model("pendulum")))
        physics.set_state([0.0], [2.0])
        omega = physics.body_velocity("pole")[:3]
        assert abs(omega[1]) == pytest.approx(2.0)
