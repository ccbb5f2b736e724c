import itertools
import math

import numpy as np
import pytest

from rydberg_wstate.params import PhysicalParams, alpha_for_lambda

A_UM = 4.0
OMEGA_B = 2 * math.pi * 2e3


def sweet_params(lam=2.0, n_sites=4, max_bosons=2, **kw):
    base = PhysicalParams(a=A_UM, omega_b=OMEGA_B, alpha=0.05, n_sites=n_sites, max_bosons=max_bosons, **kw)
    return base.with_(alpha=alpha_for_lambda(lam, base))


@pytest.fixture
def small_params():
    return sweet_params()


def brute_force_hamiltonian(n_sites, max_bosons, eps0, t_e, omega_b, cb, cp):
    """Dense one-excitation Hamiltonian built term by term from occupation tuples.

    Basis order: site-major, boson tuples lexicographic with sum <= M.  Every
    operator is applied to explicit (site, occupations) labels, so nothing is
    shared with the package's table-driven implementation.
    """
    configs = [c for c in itertools.product(range(max_bosons + 1), repeat=n_sites) if sum(c) <= max_bosons]
    states = [(n, c) for n in range(n_sites) for c in configs]
    index = {s: i for i, s in enumerate(states)}
    h = np.zeros((len(states), len(states)))

    def x_on(site, config):
        """x_site |config> as a list of (amplitude, new config)."""
        out = []
        m = config[site]
        if m > 0:
            out.append((math.sqrt(m), config[:site] + (m - 1,) + config[site + 1:]))
        if sum(config) < max_bosons:
            out.append((math.sqrt(m + 1), config[:site] + (m + 1,) + config[site + 1:]))
        return out

    for (n, c), col in index.items():
        h[col, col] += eps0 + omega_b * sum(c)
        nxt, prv = (n + 1) % n_sites, (n - 1) % n_sites
        # hopping to both neighbours
        for dest in (nxt, prv):
            h[index[(dest, c)], col] += -t_e
        # breathing term: cb * c+_n c_n (x_{n+1} - x_{n-1})
        for site, sign in ((nxt, 1.0), (prv, -1.0)):
            for amp, c2 in x_on(site, c):
                h[index[(n, c2)], col] += sign * cb * amp
        # Peierls term on bonds (n, n+1) and (n-1, n): hop plus (x_{m+1} - x_m)
        for lo in (n, prv):
            hi = (lo + 1) % n_sites
            dest = hi if lo == n else lo
            for site, sign in ((hi, 1.0), (lo, -1.0)):
                for amp, c2 in x_on(site, c):
                    h[index[(dest, c2)], col] += sign * cp * amp
    return h


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance_record(request):
    lines = request.config._acceptance_lines

    def record(line):
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
