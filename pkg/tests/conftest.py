import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# acceptance results, printed once at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def vectorized_liouvillian(h, channels):
    """Row-major superoperator built from Kronecker products.

    ``vec(A rho B) = (A kron B^T) vec(rho)``.  ``channels`` is a list of
    ``(operator, rate)``.  Independent of the package's own generator code.
    """
    d = h.shape[0]
    eye = np.eye(d)
    out = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for a, rate in channels:
        ada = a.conj().T @ a
        out += rate * (np.kron(a, a.conj()) - 0.5 * np.kron(ada, eye) - 0.5 * np.kron(eye, ada.T))
    return out


def oracle_channels(model):
    out = []
    for ch in model.channels:
        out.append((np.array(ch.lower), ch.gamma_minus))
        out.append((np.array(ch.lower).conj().T, ch.gamma_plus))
    return out


def null_space_state(model):
    """Stationary state from the null space of the vectorized generator."""
    from scipy.linalg import null_space

    d = model.dim
    lmat = vectorized_liouvillian(np.array(model.hamiltonian), oracle_channels(model))
    ns = null_space(lmat, rcond=1e-10)
    assert ns.shape[1] == 1, f"null space has dimension {ns.shape[1]}"
    rho = ns[:, 0].reshape(d, d)
    rho = rho / np.trace(rho)
    return 0.5 * (rho + rho.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
