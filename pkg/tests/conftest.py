import numpy as np
import pytest

from sparselmc import CoregionalizationState, Locations, build_corr_set, sample_lmc


def random_instance(rng, n, p, mask=None, phi=None):
    """Random locations, well-conditioned A, ranges and an LMC draw."""
    locs = Locations.uniform(n, rng)
    a = rng.normal(size=(p, p)) + 1.5 * np.eye(p)
    state = CoregionalizationState(a, mask)
    phi = rng.uniform(3.0, 30.0, size=p) if phi is None else np.asarray(phi, dtype=float)
    corr = build_corr_set(locs, phi)
    v = sample_lmc(state, corr, rng)
    return locs, state, phi, corr, v


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def instance(rng):
    return random_instance(rng, 12, 3)


_CRITERIA: list[str] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.get_closest_marker("acceptance") is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        status = "PASS" if rep.passed else "FAIL"
        _CRITERIA.append(f"{status}  {item.name}  {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
