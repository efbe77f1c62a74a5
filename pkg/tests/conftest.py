import pytest

from shortspam import synth
from shortspam.features import Mode, extract
from shortspam.learn import available_backends


@pytest.fixture(params=available_backends())
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def synth_easy():
    return synth.generate(synth.SynthParams())


@pytest.fixture(scope="session")
def easy_matrix(synth_easy):
    return extract(synth_easy.labeled(), synth_easy.whois_store(), Mode.FULL)


@pytest.fixture(scope="session")
def small_matrix():
    out = synth.generate(synth.SynthParams(n_links=200, seed=3))
    return extract(out.labeled(), out.whois_store(), Mode.FULL)


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number: int, title: str, ok: bool, detail: str) -> None:
        _ACCEPTANCE[number] = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
        assert ok, _ACCEPTANCE[number]

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
