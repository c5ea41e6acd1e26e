"""Shared pytest configuration.

Numeric property tests run many solver calls per example, so the default
hypothesis budget is trimmed and deadlines are disabled. Labeling stays
single-process inside the test run regardless of the host environment.
"""

import os

from hypothesis import HealthCheck, settings

os.environ.setdefault("CHIMERA_THREADS", "1")

settings.register_profile(
    "chimera",
    deadline=None,
    max_examples=20,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("chimera")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One visible pass/fail line per acceptance criterion."""
    lines = []
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            name = getattr(report, "nodeid", "")
            if "test_criterion_" not in name:
                continue
            tag = name.split("test_criterion_", 1)[1].split("_", 1)[0]
            verdict = "PASS" if status == "passed" else "FAIL"
            lines.append((int(tag), f"[criterion {tag}] {verdict}: {name.split('::')[-1]}"))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
