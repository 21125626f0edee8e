import numpy as np
import pytest

from navsim.barrier import tau_for_world
from navsim.navfield import NavField
from navsim.plant import FrictionModel, PlantParams
from navsim.starmap import StarMap, StarObstacle, StarPolygon
from navsim.world import World, random_world

PAPER_STARTS = [(-5.0, -5.0), (-7.0, 3.5), (3.5, -7.0)]
PAPER_GOAL = (5.0, 5.0)


def paper_world(seed=1):
    rng = np.random.default_rng(seed)
    return random_world(rng, 60, 11.0, r=0.2, rbar=0.5, keep_out=PAPER_STARTS + [PAPER_GOAL])


def make_field(world, goal, k1=0.04, k2=5.0, tau=None):
    spec, _, _ = tau_for_world(world, goal, k1, k2, tau)
    return NavField(world, spec, np.asarray(goal, float), k1, k2)


def star_world_map():
    """Two smooth five-pointed stars in an r_W = 8 workspace."""
    return StarMap(8.0, [
        StarObstacle(np.array([-3.0, -3.0]), StarPolygon(0.9, 0.15, 5), 0.5, 1.2),
        StarObstacle(np.array([0.0, 1.0]), StarPolygon(0.9, 0.15, 5, 0.3), 0.5, 1.2),
    ])


def sample_free(world, rng, count, near_obstacles=False, tau=None):
    """Uniform free-space samples; with ``near_obstacles`` the points are
    drawn inside the barrier-active annuli instead."""
    out = []
    n = world.n
    while len(out) < count:
        if near_obstacles and world.M:
            j = rng.integers(world.M)
            R = world.inflated_radii[j]
            u = rng.normal(size=n)
            u /= np.linalg.norm(u)
            x = world.centers[j] + np.sqrt(R * R + rng.uniform(0.02, 0.98) * tau) * u
        else:
            x = rng.uniform(-world.r_W_bar, world.r_W_bar, n)
        if world.in_free_space(x):
            out.append(x)
    return np.array(out)


def central_diff(f, x, direction, h):
    """Fourth-order central difference of ``f`` at ``x`` along ``direction``.

    Near the plateau edge the barrier's third derivative is of order
    60 / tau**3, which makes the two-point stencil too coarse for 1e-6.
    """
    x = np.asarray(x, float)
    e = h * np.asarray(direction, float)
    return (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)


def central_grad(f, x, h):
    x = np.asarray(x, float)
    return np.array([central_diff(f, x, e, h) for e in np.eye(len(x))])


@pytest.fixture(scope="session")
def world60():
    return paper_world()


@pytest.fixture(scope="session")
def field60(world60):
    return make_field(world60, PAPER_GOAL)


@pytest.fixture
def sinus_plant():
    return PlantParams(1.0, np.zeros(2), FrictionModel("paper_sinusoidal", alpha=10.0))


@pytest.fixture
def one_obstacle_world():
    return World(11.0, [[0.0, 0.0]], [1.0])
