import pytest

from vodsim.core import load_table1
from vodsim.engine import Scenario
from vodsim.traffic import RateMapping, cluster_rates


@pytest.fixture(scope="session")
def table1():
    return load_table1()


def single_section(capacity, load, holding=140.0, arrivals=1.1e5, warmup_holds=10, **kw):
    """One section fed by one class at ``load`` erlangs for roughly ``arrivals`` requests."""
    lam = load / holding
    warmup = warmup_holds * holding
    return Scenario(
        capacities=(capacity,),
        ladder=cluster_rates(lam, lam, 1),
        mapping=RateMapping(1.0),
        holding_time=holding,
        sim_time=warmup + arrivals / lam,
        warmup=warmup,
        **kw,
    )


def per_class(rates, capacities, **kw):
    """Scenario whose classes arrive at exactly ``rates`` requests/s."""
    if len(rates) == 1:
        ladder = cluster_rates(rates[0], rates[0], 1)
    else:
        ladder = cluster_rates(rates[0], rates[-1], len(rates))
        assert all(abs(a - b) < 1e-15 for a, b in zip(ladder.rates, rates))
    return Scenario(capacities=tuple(capacities), ladder=ladder, mapping=RateMapping(1.0), **kw)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
