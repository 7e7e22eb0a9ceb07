import numpy as np
import pytest

from gridbatt import RadialNetwork, ieee33, load_network


def small_net(buses, lines, base_kv=11.0, base_mva=1.0, sectors=None) -> RadialNetwork:
    """buses: (id, p_kw, q_kvar, homes); lines: (from, to, r_ohm, x_ohm, ampacity_a)."""
    b = [dict(bus_id=i, p_kw=p, q_kvar=q, n_residences=n) for i, p, q, n in buses]
    ln = [dict(zip(("from", "to", "r_ohm", "x_ohm", "ampacity_a"), row)) for row in lines]
    s = None if sectors is None else [dict(bus_id=k, sector_id=v) for k, v in sectors.items()]
    return load_network(b, ln, sectors=s, base_kv=base_kv, base_mva=base_mva)


@pytest.fixture(scope="session")
def feeder():
    return ieee33()


@pytest.fixture
def two_bus():
    # 1 ohm resistive line, 11 kV / 1 MVA base -> r = 1/121 p.u.
    return small_net([(1, 0, 0, 0), (2, 1000.0, 0.0, 10)], [(1, 2, 1.0, 0.0, 200.0)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  criterion {criterion:>2}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
