import pytest

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("TWINBEAM_OUTPUT_DIR", str(tmp_path))
    return tmp_path
