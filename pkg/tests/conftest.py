import numpy as np
import pytest

from proxyaudit.data import CATEGORICAL, NUMERIC, ColumnSchema, Dataset

import goldens

# --- acceptance-criteria reporting -------------------------------------------
# Tests marked @pytest.mark.acceptance(n, title) get one PASS/FAIL/SKIP line
# each in the terminal summary, so the criteria can be audited at a glance.

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(number, title): numbered acceptance criterion, reported "
        "as one pass/fail line in the terminal summary",
    )


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("acceptance")
        if marker is not None:
            _ACCEPTANCE[item.nodeid] = (marker.args[0], marker.args[1])


def _skip_reason(report):
    longrepr = getattr(report, "longrepr", None)
    if isinstance(longrepr, tuple) and len(longrepr) == 3:
        return str(longrepr[2]).removeprefix("Skipped: ")
    return ""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    outcomes = {}
    for stat_key, label in (
        ("passed", "PASS"),
        ("failed", "FAIL"),
        ("error", "FAIL"),
        ("skipped", "SKIP"),
    ):
        for report in terminalreporter.stats.get(stat_key, []):
            entry = _ACCEPTANCE.get(getattr(report, "nodeid", None))
            if entry is None:
                continue
            number, title = entry
            note = f" ({_skip_reason(report)})" if label == "SKIP" else ""
            outcomes[number] = f"criterion {number} — {title}: {label}{note}"
    if outcomes:
        terminalreporter.section("acceptance criteria")
        for number in sorted(outcomes):
            terminalreporter.write_line(outcomes[number])


def _expand_joint(row_counts):
    """Code arrays realizing a joint count table as individual rows."""
    a_codes, b_codes = [], []
    for i, row in enumerate(row_counts):
        for j, c in enumerate(row):
            a_codes.extend([i] * c)
            b_codes.extend([j] * c)
    return np.asarray(a_codes, dtype=np.int64), np.asarray(b_codes, dtype=np.int64)


@pytest.fixture(scope="session")
def table2_dataset():
    """48842-row two-column dataset realizing the published sex x relationship
    joint counts exactly."""
    sex, rel = _expand_joint(goldens.SEX_RELATIONSHIP_COUNTS)
    schema = [
        ColumnSchema("sex", CATEGORICAL, goldens.SEX_CATS),
        ColumnSchema("relationship", CATEGORICAL, goldens.RELATIONSHIP_CATS),
    ]
    return Dataset(schema, {"sex": sex, "relationship": rel})


@pytest.fixture(scope="session")
def table3_dataset():
    """Dataset realizing the published race x {Laos, United-States} counts."""
    race, country = _expand_joint(
        tuple(zip(goldens.LAOS_COUNTS, goldens.US_COUNTS))  # rows: race, cols: country
    )
    schema = [
        ColumnSchema("race", CATEGORICAL, goldens.RACE_CATS),
        ColumnSchema("native-country", CATEGORICAL, ("Laos", "United-States")),
    ]
    return Dataset(schema, {"race": race, "native-country": country})


@pytest.fixture()
def toy_dataset():
    schema = [
        ColumnSchema("sex", CATEGORICAL, ("female", "male")),
        ColumnSchema("school_attended", CATEGORICAL, ("X", "Y")),
        ColumnSchema("years_since_graduation", NUMERIC),
    ]
    return Dataset(
        schema,
        {
            "sex": np.array([0, 1, 1, 0, -1, 1]),
            "school_attended": np.array([0, 0, 1, 1, 0, -1]),
            "years_since_graduation": np.array([35.0, 31.0, 40.0, 10.0, np.nan, 33.0]),
        },
    )
