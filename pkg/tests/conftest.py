import numpy as np
import pytest

from cryoholo import OpticsParams

# CODATA 2018 exact / recommended values, kept separate from scipy.constants
PLANCK = 6.62607015e-34
ELECTRON_MASS = 9.1093837015e-31
ELEMENTARY_CHARGE = 1.602176634e-19
LIGHT_SPEED = 299792458.0

KLH_PITCH = 2.2e-10


def electron_wavelength(volts):
    eV = ELEMENTARY_CHARGE * volts
    p = np.sqrt(2 * ELECTRON_MASS * eV * (1 + eV / (2 * ELECTRON_MASS * LIGHT_SPEED**2)))
    return PLANCK / p


KLH_WAVELENGTH = electron_wavelength(120e3)


@pytest.fixture
def klh_params():
    return OpticsParams(wavelength=KLH_WAVELENGTH, defocus=3e-6, cs=2e-3, pixel_pitch=KLH_PITCH, amplitude_contrast=0.07)


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def direct_dft2(a, sign=-1):
    """Quadruple-loop 2-D DFT; ``sign=+1`` gives the unnormalized inverse kernel."""
    M, N = a.shape
    out = np.zeros((M, N), dtype=complex)
    for k in range(M):
        for l in range(N):
            acc = 0j
            for m in range(M):
                for n in range(N):
                    acc += a[m, n] * np.exp(sign * 2j * np.pi * (k * m / M + l * n / N))
            out[k, l] = acc
    return out


def brute_force_forward(g, params):
    """Transfer-function filtering written out with explicit loops and scalar phases."""
    M, N = g.shape
    p = params.pixel_pitch
    G = direct_dft2(g, -1)
    for k in range(M):
        for l in range(N):
            fy = (k if k < M / 2 else k - M) / (M * p)
            fx = (l if l < N / 2 else l - N) / (N * p)
            r2 = fx * fx + fy * fy
            chi = -np.pi * params.wavelength * params.defocus * r2 + np.pi / 2 * params.cs * params.wavelength**3 * r2 * r2
            G[k, l] *= np.exp(1j * chi)
    return direct_dft2(G, +1) / (M * N)


def finite_difference_wirtinger(cost, g, h=1e-6):
    """Central differences of a real cost along Re and Im of each pixel,
    assembled as dC/dRe + i dC/dIm (= 2 x the Wirtinger gradient w.r.t. conj(g))."""
    out = np.zeros_like(g)
    for idx in np.ndindex(g.shape):
        for unit in (1.0, 1j):
            gp = g.copy()
            gm = g.copy()
            gp[idx] += h * unit
            gm[idx] -= h * unit
            d = (cost(gp) - cost(gm)) / (2 * h)
            out[idx] += d * (1.0 if unit == 1.0 else 1j)
    return out


def pearson(a, b):
    a = a - a.mean()
    b = b - b.mean()
    return float((a * b).sum() / np.sqrt((a * a).sum() * (b * b).sum()))


# -- acceptance report ------------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def check(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
