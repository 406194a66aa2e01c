import functools
import re

import pytest

from visbitmask import builtin_scene, synthesize_gbuffer

# (criterion, verdict, detail) lines collected by the acceptance tests
ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def scene_gbuffer(name, size=64, **params):
    scene = builtin_scene(name, size, size, **dict(params))
    return scene, synthesize_gbuffer(scene)


@pytest.fixture
def acceptance():
    def record(criterion, ok, detail):
        line = f"{criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(re.match(r"C(\d+)", s).group(1))):
            terminalreporter.write_line(line)
