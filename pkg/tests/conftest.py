import pytest


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("LATTICEGROW_OUT", str(tmp_path / "out"))
    return tmp_path / "out"


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for cid in sorted(RESULTS, key=lambda k: int(k[1:])):
            terminalreporter.write_line(RESULTS[cid])
