
def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance-gate criteria")


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT

    if REPORT:
        terminalreporter.section("acceptance criteria")
        for k in sorted(REPORT):
            terminalreporter.write_line(REPORT[k])
