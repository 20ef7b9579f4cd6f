"""Run the TypeScript frontend suite when a Node toolchain is present.

The frontend talks to this package only through the CLI and the problem
file format, so its tests double as a cross-language check of those
boundaries: shared problem files must round-trip and solve identically
from either side.
"""

import shutil
import subprocess
from pathlib import Path

import pytest

FRONTEND = Path(__file__).resolve().parent.parent / "frontend"


def _report(capsys, num: int, name: str, ok: bool, detail: str = "") -> None:
    line = f"[acceptance {num:02d}] {'PASS' if ok else 'FAIL'} {name}"
    if detail:
        line += f" ({detail})"
    with capsys.disabled():
        print(line)
    assert ok, line


needs_node = pytest.mark.skipif(
    shutil.which("npm") is None or not (FRONTEND / "node_modules").is_dir(),
    reason="needs npm and an installed frontend (cd frontend && npm install)",
)


@needs_node
def test_frontend_suite(capsys):
    build = subprocess.run(
        ["npm", "run", "build"], cwd=FRONTEND, capture_output=True, text=True, timeout=600
    )
    assert build.returncode == 0, build.stdout + build.stderr
    run = subprocess.run(
        ["npm", "test"], cwd=FRONTEND, capture_output=True, text=True, timeout=1200
    )
    tail = "\n".join((run.stdout + run.stderr).splitlines()[-15:])
    _report(
        capsys,
        12,
        "frontend-boundary",
        run.returncode == 0,
        "tsc build + vitest over the CLI boundary" if run.returncode == 0 else tail,
    )
