import pytest


# https://stackoverflow.com/a/61193490/13001770
def pytest_addoption(parser):
    parser.addoption(
        "--slow",
        action="store_true",
        default=False,
        help="run slow end-to-end tests",
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end test, skipped without --slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--slow"):
        return
    skip_slow = pytest.mark.skip(reason="need --slow option to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
