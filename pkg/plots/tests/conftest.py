import pytest

from artifact_io import write_artifact


@pytest.fixture
def path_band_csv(tmp_path):
    rows = [
        [0, 1.0, 0.9, 1.1, 15.06],
        [1, 1.02, 0.9, 1.1, 15.06],
        [2, 0.97, 0.9, 1.1, 15.06],
        [3, 0.93, 0.9, 1.1, 15.06],
    ]
    return write_artifact(
        tmp_path,
        "figure1.csv",
        "path-band",
        ["time_years", "income_ratio", "band_lower", "band_upper", "marker_years"],
        rows,
    )


@pytest.fixture
def sweep_csv(tmp_path):
    rows = []
    for n1 in (200, 500, 800):
        rows.append(["poor", n1, 0.5, 10.0 + n1 / 100])
        rows.append(["rich", n1, 0.5, 20.0 - n1 / 100])
        rows.append(["mixed", n1, 0.5, 19.0 + n1 / 200])
        rows.append(["mixed", n1, 0.3, 18.0 + n1 / 200])
    return write_artifact(
        tmp_path,
        "sweep.csv",
        "sweep-curves",
        ["group", "n_poor", "m_over_M", "years_mc"],
        rows,
    )


@pytest.fixture
def error_panel_csv(tmp_path):
    rows = [
        ["u_transformed_time", 0.8191, 0.8202442718, -0.0011442718],
        ["t_years", 19.96, 20.10, -0.14],
    ]
    return write_artifact(
        tmp_path,
        "compare.csv",
        "error-panel",
        ["metric", "value", "approximation", "difference"],
        rows,
    )


@pytest.fixture
def table1_panel_csv(tmp_path):
    rows = [
        ["poor", 1, 21.70, 21.72],
        ["rich", 1, 15.41, 15.38],
        ["mixed", 1, 22.57, 22.60],
        ["mixed", 0.5, 22.15, 22.18],
    ]
    return write_artifact(
        tmp_path,
        "table1.csv",
        "error-panel",
        ["group", "m_over_M", "years_mc", "years_approx"],
        rows,
    )


@pytest.fixture
def prefix_csv(tmp_path):
    rows = [
        [1, 800, 800.0],
        [10, 1000, 376.9230769],
    ]
    return write_artifact(
        tmp_path,
        "prefix.csv",
        "histogram-prefix",
        ["z", "cumulative_count", "cumulative_nu"],
        rows,
    )
