import numpy as np
import pytest

from qwedge import bohm, config, detector

# Heavy ensembles are session-scoped so the module tests and the acceptance
# suite share one computation each.

ACCEPT_BOUNCE_N = 10_000
ACCEPT_EQUIV_N = 100_000
ACCEPT_DETECTOR_N = 2_000


@pytest.fixture(scope="session")
def scenario():
    return config.ScenarioConfig().validate()


@pytest.fixture(scope="session")
def psi_initial(scenario):
    return scenario.initial_superposition()


@pytest.fixture(scope="session")
def bounce_ensemble(scenario):
    import time

    t0 = time.monotonic()
    res = bohm.run_ensemble(scenario, ACCEPT_BOUNCE_N, seed=7)
    elapsed = time.monotonic() - t0
    return res, elapsed


@pytest.fixture(scope="session")
def equivariance_run(scenario, psi_initial):
    """n = 1e5 quantum-equilibrium ensemble integrated through the crossing,
    with snapshots at t_J and t4."""
    x0 = bohm.sample_initial(psi_initial, scenario.t1, ACCEPT_EQUIV_N, seed=11)
    tj = scenario.crossing_time
    ens = scenario.ensemble
    res = bohm.integrate_ensemble(
        psi_initial,
        x0,
        scenario.t1,
        [tj, scenario.t4],
        tol=ens.tol,
        max_step=ens.max_step,
        node_floor=ens.node_floor,
    )
    return {"x0": x0, "t_mid": tj, "res": res}


@pytest.fixture(scope="session")
def strong_detector(scenario):
    return detector.run_detector_ensemble(scenario, ACCEPT_DETECTOR_N, seed=3)


@pytest.fixture(scope="session")
def strong_nonlocal(scenario):
    return detector.nonlocal_influence_report(scenario, scenario, ACCEPT_DETECTOR_N, seed=3)


def accept_line(name: str, ok: bool, detail: str = "") -> None:
    tag = "PASS" if ok else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    print(f"[{tag}] {name}{suffix}")
