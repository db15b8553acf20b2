"""Pytest configuration and fixtures for planarsuite tests."""

import dataclasses

import numpy as np
import pytest

try:
    import redis

    REDIS_AVAILABLE = True
except ImportError:
    REDIS_AVAILABLE = False


# A floor and a sliding box carrying a sphere.
BOX_SCENE = """
<mujoco>
  <worldbody>
    <light name="top" pos="0 0 1.5"/>
    <geom name="floor" type="plane" size="1 1 .1"/>
    <body name="box" pos="0 0 .3">
      <joint name="up_down" type="slide" axis="0 0 1"/>
      <geom name="box" type="box" size=".2 .2 .2" rgba="1 0 0 1"/>
      <geom name="sphere" pos=".2 .2 .2" size=".1" rgba="0 1 0 1"/>
    </body>
  </worldbody>
</mujoco>
"""


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run acceptance-scale tests"
    )


@pytest.fixture(scope="session")
def redis_server():
    """
    Session-scoped fixture that provides a Redis server connection.

    This fixture attempts to connect to a Redis server running on localhost:6379.
    If the connection fails, tests requiring Redis will be skipped.
    """
    if not REDIS_AVAILABLE:
        pytest.skip("Redis package not installed")

    try:
        client = redis.Redis(host="localhost", port=6379, decode_responses=False)
        client.ping()
        yield client
    except redis.ConnectionError:
        pytest.skip("Redis server not available on localhost:6379")


@pytest.fixture
def clean_redis(redis_server):
    """Function-scoped fixture that flushes the Redis database around a test."""
    redis_server.flushdb()

    yield redis_server

    redis_server.flushdb()


@pytest.fixture
def box_physics():
    """A ``Physics`` of the documented box scene."""
    from planarsuite.physics import Physics

    return Physics.from_xml_string(BOX_SCENE)


@pytest.fixture
def sample_rows():
    """Evaluation rows of 2 tasks x 2 seeds x 3 evaluation points."""
    from planarsuite.results.store import EvalRow

    rows = []
    for domain, task in (("pendulum", "swingup"), ("cartpole", "balance")):
        for seed in (0, 1):
            for point, value in zip((10, 20, 30), (100.0, 200.0, 300.0)):
                rows.append(
                    EvalRow(domain, task, "random", seed, point, value + seed, wallclock_s=0.0)
                )
    return rows


@pytest.fixture(params=["memory"])
def result_store(request):
    """
    Parametrized fixture that provides result store instances.

    Redis is exercised in test_results.py with a mocked client.
    """
    from planarsuite.results.store import ResultStore

    return ResultStore(backend=request.param)


def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line("markers", "slow: acceptance-scale runs (enable with --runslow)")
    config.addinivalue_line("markers", "integration: mark test as integration test")
    config.addinivalue_line("markers", "redis: mark test as requiring Redis server")


def pytest_collection_modifyitems(config, items):
    """
    Skip slow tests unless ``--runslow`` is given and add markers by name.
    """
    skip_slow = pytest.mark.skip(reason="need --runslow option to run")
    for item in items:
        if "slow" in item.keywords and not config.getoption("--runslow"):
            item.add_marker(skip_slow)

        if "live_redis" in item.nodeid.lower():
            item.add_marker(pytest.mark.redis)

        if any(pattern in item.nodeid.lower() for pattern in ["integration", "full_"]):
            item.add_marker(pytest.mark.integration)


# Custom assertion helpers
def without_damping(physics, **option_changes):
    """A copy of ``physics`` without joint damping or actuators.

    ``option_changes`` replace fields of the model options (e.g. the integrator).
    """
    from planarsuite import mjcf
    from planarsuite.physics import Physics

    def strip(body):
        joints = tuple(dataclasses.replace(j, damping=0.0) for j in body.joints)
        children = tuple(strip(child) for child in body.children)
        return dataclasses.replace(body, joints=joints, children=children)

    spec = physics.model.spec
    option = dataclasses.replace(spec.option, **option_changes)
    spec = dataclasses.replace(spec, option=option, worldbody=strip(spec.worldbody), actuators=())
    return Physics.from_model(mjcf.compile_model(spec))


def random_transitions(env, steps, seed=0):
    """Yield ``steps`` time steps of a uniformly random policy, resetting as needed."""
    rng = np.random.default_rng(seed)
    spec = env.action_spec()
    time_step = env.reset()
    for _ in range(steps):
        if time_step.last():
            time_step = env.reset()
        action = rng.uniform(spec.minimum, spec.maximum)
        time_step = env.step(action)
        yield time_step


def assert_store_contains(store, key, value):
    """Assert that a store contains a specific key-value pair."""
    assert store.exists(key), f"Key '{key}' not found in store"
    assert store.get(key) == value, f"Value mismatch for key '{key}'"


def assert_tag_contains(store, tag, expected_keys):
    """Assert that a tag contains specific keys."""
    actual_keys = set(store.get_by_tag(tag).keys())
    expected_keys = set(expected_keys)
    assert actual_keys == expected_keys, (
        f"Tag '{tag}' contains {actual_keys}, expected {expected_keys}"
    )
