import subprocess
import sys

import pytest


@pytest.fixture(scope="session")
def paper42_output(tmp_path_factory):
    """Emitted files of the builtin paper42 study, produced through the
    primary package's CLI (the only interface this package consumes)."""
    out = tmp_path_factory.mktemp("paper42")
    res = subprocess.run(
        [sys.executable, "-m", "gpmean.cli", "mc", "--preset", "paper42",
         "--seed", "20240801", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stderr
    return out
