import pytest

from turbokey import SignalAmplitude, TurbulenceParams


@pytest.fixture
def defaults():
    """Reference operating point: beta^2 = 2, N = 4, sigma0^2 = 0.1, rho = 0."""
    def make(eta_bar=0.5, n_branches=4, sigma0_sq=0.1, rho=0.0):
        return TurbulenceParams.from_eta_bar(n_branches, eta_bar, sigma0_sq, rho)
    return make


@pytest.fixture
def beta2():
    return SignalAmplitude.from_photons(2.0)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Recorder for acceptance lines; prints now and again in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
