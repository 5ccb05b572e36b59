import numpy as np
import pytest

from kernelsdr import KernelSpec, center_gram, gram, nw_weights


@pytest.fixture
def small_problem():
    """Gaussian-kernel toy with n=30, p=3 and a single-index response."""
    rng = np.random.default_rng(11)
    X = rng.standard_normal((30, 3))
    y = np.sin(X[:, 0]) + 0.1 * rng.standard_normal(30)
    R = gram(X, KernelSpec("gaussian", 1.5))
    Rc = center_gram(R)
    K1 = nw_weights(y, 1.0)
    return dict(X=X, y=y, R=R, Rc=Rc, K1=K1, rng=rng)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(ok), detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
