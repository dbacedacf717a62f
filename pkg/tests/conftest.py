import os
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]

_verdicts: list[str] = []


@pytest.fixture(scope="session")
def acceptance_out():
    out = Path(os.environ.get("CIPHERLSTM_ACCEPTANCE_OUT", ROOT / "acceptance-out"))
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.txt").unlink(missing_ok=True)
    return out


@pytest.fixture(scope="session")
def verdict(acceptance_out):
    """Record one pass/fail line per acceptance criterion."""

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        _verdicts.append(line)
        print(line)
        with open(acceptance_out / "summary.txt", "a") as fh:
            fh.write(line + "\n")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_verdicts, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
