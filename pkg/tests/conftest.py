def pytest_terminal_summary(terminalreporter):
    """Print the acceptance verdicts, one line per criterion, if they ran."""
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 12):
        terminalreporter.write_line(results.get(n, f"criterion {n:2}: NOT RUN"))
