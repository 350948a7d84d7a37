import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from chi_mhd.spectral import Grid

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


def dense_nonlinear(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """Direct lattice-convolution oracle for the MHD nonlinearity.

    Works from the defining formulas, independent of any FFT:
    N_u = -P div(u(x)u - b(x)b), N_b = -div(u(x)b) + div(b(x)u), where
    (div(A(x)B))_i = sum_j d_j (A_j B_i).  Inputs are truncated to the 2/3
    band; the output is returned on the full lattice with every mode kept
    whose components satisfy |k_i| < n/3 (others are zero).
    """
    n = grid.n_modes
    scale = 2 * np.pi / grid.period
    kint = np.fft.fftfreq(n, 1.0 / n).astype(int)
    kx, ky = np.meshgrid(kint, kint, indexing="ij")
    keep = (np.abs(kx) < n / 3) & (np.abs(ky) < n / 3)
    P = np.stack([kx[keep], ky[keep]], axis=1)
    u = coeffs[0][:, keep]  # (2, M)
    b = coeffs[1][:, keep]
    out = np.zeros_like(coeffs)
    index = {tuple(p): i for i, p in enumerate(P)}
    for k in P:
        xi = scale * k
        # all pairs p + q = k with both in the band
        pairs = [(i, index[tuple(k - p)]) for i, p in enumerate(P) if tuple(k - p) in index]
        if not pairs:
            continue
        ip, iq = np.array(pairs).T

        def div(A, B):
            # sum_j i xi_j sum_{p+q=k} A_j(p) B_i(q)
            return np.array([sum(1j * xi[j] * np.sum(A[j, ip] * B[i, iq]) for j in range(2)) for i in range(2)])

        nu_ = -(div(u, u) - div(b, b))
        ksq = xi @ xi
        if ksq > 0:
            nu_ = nu_ - xi * (xi @ nu_) / ksq
        else:
            nu_ = np.zeros(2, complex)
        nb = -div(u, b) + div(b, u)
        kk = (k[0] % n, k[1] % n)
        out[0][:, kk[0], kk[1]] = nu_
        out[1][:, kk[0], kk[1]] = nb
    return out


@pytest.fixture
def grid32():
    return Grid(32)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(number: int, name: str, ok: bool, detail: str = ""):
        line = f"criterion {number} {name}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
