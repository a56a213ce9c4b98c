"""Shared pytest wiring: print one PASS/FAIL line per acceptance
criterion at the end of every run that touched test_acceptance.py."""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = str(getattr(report, "nodeid", ""))
            if "test_acceptance.py" not in nodeid:
                continue
            if getattr(report, "when", "call") != "call" and status == "passed":
                continue
            name = nodeid.split("::")[-1]
            # A failure in any phase (setup/call/teardown) marks the criterion.
            if outcomes.get(name) != "FAIL":
                outcomes[name] = "PASS" if status == "passed" else "FAIL"
    if not outcomes:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(outcomes):
        terminalreporter.write_line(f"{outcomes[name]} {name}")
