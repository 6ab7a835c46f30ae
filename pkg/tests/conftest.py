import math
import time

import numpy as np
import pytest

from sqg_decay.spectral import GridSpec, SpectralField, forward_transform


def random_field(grid: GridSpec, seed: int, smooth: bool = False) -> SpectralField:
    """Random real field; ``smooth`` keeps only the 2/3-retained band."""
    rng = np.random.default_rng(seed)
    field = forward_transform(rng.standard_normal(grid.shape), grid)
    if smooth:
        field = field.with_coefficients(np.where(grid.two_thirds_mask, field.coefficients, 0.0))
    return field


def brute_force_dft(values: np.ndarray, box_length: float) -> np.ndarray:
    """c_k = n^-2 sum_j f(x_j) exp(-i xi_k . x_j), evaluated term by term."""
    n = values.shape[0]
    k = np.fft.fftfreq(n, 1.0 / n)
    x = np.arange(n) * box_length / n
    xi = 2 * math.pi / box_length * k
    out = np.zeros((n, n), dtype=np.complex128)
    for a in range(n):
        for b in range(n):
            total = 0j
            for i in range(n):
                for j in range(n):
                    total += values[i, j] * np.exp(-1j * (xi[a] * x[i] + xi[b] * x[j]))
            out[a, b] = total / n**2
    return out


@pytest.fixture
def grid64():
    return GridSpec(64, 2 * math.pi)


@pytest.fixture
def grid8():
    return GridSpec(8, 2 * math.pi)


_ACCEPTANCE = pytest.StashKey[list]()


class Criterion:
    """Collects the checks of one acceptance criterion and times it against a budget."""

    def __init__(self, label: str, budget: float):
        self.label = label
        self.budget = budget
        self.checks: list[tuple[str, bool, str]] = []
        self.elapsed: float | None = None
        self._start = time.perf_counter()

    def check(self, name: str, ok, detail: str = "") -> None:
        self.checks.append((name, bool(ok), detail))

    def finish(self) -> None:
        self.elapsed = time.perf_counter() - self._start
        self.check("runtime", self.elapsed < self.budget, f"{self.elapsed:.1f}s < {self.budget:g}s")
        print(self.line())
        failed = [f"{n} ({d})" for n, ok, d in self.checks if not ok]
        assert not failed, f"{self.label}: " + "; ".join(failed)

    @property
    def passed(self) -> bool:
        return self.elapsed is not None and all(ok for _, ok, _ in self.checks)

    def line(self) -> str:
        if self.elapsed is None:
            return f"FAIL {self.label}: raised before completing"
        status = "PASS" if self.passed else "FAIL"
        failed = [n for n, ok, _ in self.checks if not ok]
        tail = f" [failed: {', '.join(failed)}]" if failed else ""
        return f"{status} {self.label} ({len(self.checks)} checks, {self.elapsed:.1f}s){tail}"


@pytest.fixture
def criterion(request):
    made: list[Criterion] = []

    def make(label: str, budget: float) -> Criterion:
        made.append(Criterion(label, budget))
        return made[-1]

    yield make
    request.config.stash.setdefault(_ACCEPTANCE, []).extend(c.line() for c in made)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
