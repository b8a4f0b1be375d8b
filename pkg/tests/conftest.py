import os

from hypothesis import settings

# reproducible by default; PHIRAD_HYPOTHESIS=random explores fresh examples
settings.register_profile("repro", derandomize=True, database=None)
settings.register_profile("random")
settings.load_profile("random" if os.environ.get("PHIRAD_HYPOTHESIS") == "random" else "repro")

# acceptance criteria report one line each at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
