import csv
import io
import json
import math
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from branchsim.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, _parser, execute, main, resolve_mapping
from branchsim.config import (
    DEFAULT_SEED,
    config_from_mapping,
    emit_config,
    parse_config,
)
from branchsim.errors import ParseError, ValidationError
from branchsim.kernels import BORN, CUBIC, polynomial
from branchsim.report import dumps_json, format_number


def read_csv(text):
    return list(csv.reader(io.StringIO(text)))


# --- parsing ----------------------------------------------------------------


def test_parse_per_run_example():
    cfg = parse_config('{"command": "per-run", "norms": [2, 1], "kernel": "born", "N": 100, "trials": 10000, "seed": 42}')
    assert cfg.norms == pytest.approx((2 / 3, 1 / 3), abs=1e-15)
    assert (cfg.kernel, cfg.N, cfg.trials, cfg.seed) == (BORN, 100, 10_000, 42)


def test_parse_empty_spec():
    with pytest.raises(ValidationError) as err:
        parse_config('{"command": "per-run", "norms": [1]}')
    assert err.value.reason == "EmptySpec"


def test_parse_invalid_polynomial_kernel():
    text = '{"command": "end-only", "norms": [9999, 1], "kernel": {"poly": [0, 1.05, 0, -0.15, 0.1]}}'
    with pytest.raises(ValidationError) as err:
        parse_config(text)
    assert err.value.reason == "KernelInvalid"


def test_parse_accepts_valid_polynomial_kernel():
    cfg = parse_config('{"command": "end-only", "norms": [1, 3], "N": 50, "kernel": {"poly": [0, 1.05, -0.15, 0.1]}}')
    assert cfg.kernel == polynomial([0, 1.05, -0.15, 0.1])


def test_parse_errors_carry_location():
    with pytest.raises(ParseError) as err:
        parse_config('{"command": "per-run",\n "norms": [1, 2],\n "bogus": 3}')
    assert err.value.key == "bogus"
    with pytest.raises(ParseError) as err:
        parse_config('{"command": "per-run",\n "norms": [1, 2,\n}')
    assert err.value.line == 3
    with pytest.raises(ParseError):
        parse_config("[1, 2]")


@pytest.mark.parametrize(
    "text, reason",
    [
        ('{"command": "teleport"}', "BadCommand"),
        ('{"command": "per-run", "norms": [1, 1], "N": 2.5}', "BadValue"),
        ('{"command": "per-run", "norms": [1, 1], "trials": 0}', "BadValue"),
        ('{"command": "per-run", "norms": [1, 0]}', "ZeroNorm"),
        ('{"command": "per-run", "norms": [1, -1]}', "NegativeNorm"),
        ('{"command": "per-run"}', "MissingKey"),
        ('{"command": "enumerate", "norms": [1, 1], "N": 21, "mode": "explicit"}', "TooLargeForExplicit"),
        ('{"command": "end-only", "norms": [1, 1, 1], "N": 100}', "ShapeMismatch"),
        ('{"command": "end-only", "norms": [1, 1], "N": 5}', "BadValue"),
        ('{"command": "rutherford", "norms": [0.02], "dt": 0.01}', "StepTooCoarse"),
        ('{"command": "consistency", "laws": [{"power": -1}]}', "InvalidArgument"),
        ('{"command": "kernel-validate", "kernel": "quartic"}', "BadValue"),
        ('{"command": "kernel-validate", "format": "xml"}', "BadValue"),
    ],
)
def test_parse_validation_reasons(text, reason):
    with pytest.raises(ValidationError) as err:
        parse_config(text)
    assert err.value.reason == reason


def test_default_seed_is_fixed():
    assert parse_config('{"command": "kernel-validate"}').seed == DEFAULT_SEED


configs = st.one_of(
    st.builds(
        lambda norms, kernel, n, trials, seed, fmt: config_from_mapping(
            {"command": "per-run", "norms": norms, "kernel": kernel, "N": n, "trials": trials, "seed": seed, "format": fmt}
        ),
        st.lists(st.floats(0.01, 100.0), min_size=2, max_size=5),
        st.sampled_from(["born", "cubic", {"poly": [0, 1.05, -0.15, 0.1]}]),
        st.integers(1, 1000),
        st.integers(1, 10_000),
        st.integers(0, 2**64 - 1),
        st.sampled_from(["csv", "json"]),
    ),
    st.builds(
        lambda exps, samples, seed: config_from_mapping(
            {"command": "consistency", "laws": ["identity"] + [{"power": e} for e in exps], "samples": samples, "seed": seed}
        ),
        st.lists(st.floats(0.1, 4.0), max_size=3),
        st.integers(1000, 5000),
        st.integers(0, 2**32),
    ),
    st.builds(
        lambda norms, rate, seed: config_from_mapping(
            {"command": "rutherford", "norms": norms, "rate": rate, "dt": 1e-4, "seed": seed, "output": "out.csv"}
        ),
        st.lists(st.floats(0.001, 0.2), min_size=1, max_size=3),
        st.floats(1.0, 400.0),
        st.integers(0, 2**32),
    ),
)


@settings(max_examples=80, deadline=None)
@given(configs)
def test_emit_parse_round_trip(cfg):
    assert parse_config(emit_config(cfg)) == cfg


# --- flag / env precedence ------------------------------------------------


def _mapping(argv, environ=None, tmp_path=None, config=None):
    if config is not None:
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(config))
        argv = ["--config", str(path), *argv]
    return resolve_mapping(_parser().parse_args(argv), environ or {})


def test_seed_precedence(tmp_path):
    base = {"command": "kernel-validate", "seed": 1}
    assert _mapping([], {}, tmp_path, base)["seed"] == 1
    assert _mapping([], {"BPS_SEED": "2"}, tmp_path, base)["seed"] == 2
    assert _mapping(["--seed", "3"], {"BPS_SEED": "2"}, tmp_path, base)["seed"] == 3
    assert "seed" not in _mapping(["kernel-validate"], {})
    with pytest.raises(ValidationError):
        _mapping(["kernel-validate"], {"BPS_SEED": "abc"})


def test_flags_override_config(tmp_path):
    m = _mapping(["--kernel", "cubic", "-N", "7"], {}, tmp_path, {"command": "per-run", "norms": [1, 1], "N": 100})
    cfg = config_from_mapping(m)
    assert cfg.kernel == CUBIC and cfg.N == 7


def test_kernel_flag_accepts_json_polynomial():
    m = _mapping(["per-run", "--norms", "1", "1", "--kernel", '{"poly": [0, 1]}'])
    assert config_from_mapping(m).kernel == polynomial([0, 1])


# --- execution --------------------------------------------------------------


def test_execute_compare_csv():
    cfg = config_from_mapping(
        {"command": "compare", "norms": [0.25, 0.75], "kernel": "cubic", "N": 100, "trials": 10_000, "seed": 42}
    )
    result = execute(cfg)
    assert result.exit_code == EXIT_OK
    rows = read_csv(result.body)
    assert rows[0] == ["trial", "fraction", "seed"]
    footer = {r[0]: r[1] for r in rows[1:] if not r[0].isdigit()}
    assert set(footer) == {
        "mean", "std_error", "z_born", "z_kernel", "end_only_fraction", "born_prediction", "kernel_prediction",
    }
    assert abs(float(footer["z_born"])) > 5
    assert abs(float(footer["z_kernel"])) < 3
    assert float(footer["end_only_fraction"]) == 0.25
    assert len([r for r in rows[1:] if r[0].isdigit()]) == 10_000
    assert all(r[-1] == "42" for r in rows[1:])


def test_execute_enumerate_near_certain():
    cfg = config_from_mapping({"command": "enumerate", "norms": [0.9999, 0.0001], "N": 10, "mode": "explicit"})
    result = execute(cfg)
    rows = read_csv(result.body)
    assert rows[0] == ["count_1", "count_2", "log_weight", "weight", "seed"]
    assert len(rows) == 1025
    assert math.fsum(float(r[3]) for r in rows[1:]) == pytest.approx(1.0, abs=1e-10)
    assert rows[1][:2] == ["10", "0"]
    assert "records=1024" in result.summary


def test_execute_kernel_validate_born():
    result = execute(config_from_mapping({"command": "kernel-validate", "kernel": "born"}))
    assert result.exit_code == EXIT_OK
    assert "valid-2-outcome" in result.summary
    assert read_csv(result.body)[1][-2] == "valid-2-outcome"


def test_execute_consistency_and_rutherford_schemas():
    cons = execute(config_from_mapping({"command": "consistency", "laws": ["identity", {"power": 2}]}))
    rows = read_csv(cons.body)
    assert rows[0] == ["law", "max_additivity_violation", "max_normalization_violation", "verdict", "seed"]
    assert [r[3] for r in rows[1:]] == ["consistent", "inconsistent"]
    ruth = execute(config_from_mapping({"command": "rutherford", "norms": [0.01, 0.02], "trials": 2000}))
    rows = read_csv(ruth.body)
    assert rows[0] == ["angle", "p", "mean_wait_s", "std_err_s", "seed"]
    assert len(rows) == 3


def test_execute_json_format():
    cfg = config_from_mapping({"command": "per-run", "norms": [2, 1], "N": 10, "trials": 5, "format": "json", "seed": 3})
    body = json.loads(execute(cfg).body)
    assert body["columns"] == ["trial", "fraction", "seed"]
    assert len(body["rows"]) == 5
    assert all(row["seed"] == 3 for row in body["rows"])
    assert set(body["summary"]) >= {"mean", "std_error", "z_born", "z_kernel"}


def test_execute_end_only_reports_selected_m():
    cfg = config_from_mapping({"command": "end-only", "norms": [2, 1], "N": 300, "kernel": "cubic"})
    result = execute(cfg)
    footer = {r[0]: r[1] for r in read_csv(result.body)[1:]}
    assert footer["selected_m"] == "200"


def test_number_formatting():
    assert format_number(0.1) == "0.10000000000000001"
    assert float(format_number(2 / 3)) == 2 / 3
    assert format_number(7) == "7"
    assert format_number(math.inf) == "inf"
    assert json.loads(dumps_json({"a": [1, 0.5, None, "x", math.nan]})) == {"a": [1, 0.5, None, "x", "nan"]}


# --- main / exit codes ------------------------------------------------------


def test_main_writes_reproducible_output(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"command": "per-run", "norms": [1, 3], "kernel": "cubic", "N": 100, "trials": 500}))
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["--config", str(cfg), "--output", str(out1)]) == EXIT_OK
    assert main(["--config", str(cfg), "--output", str(out2)]) == EXIT_OK
    assert out1.read_bytes() == out2.read_bytes()
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("per-run mean=") and lines[0].endswith(f"seed={DEFAULT_SEED}")


def test_main_exit_codes(tmp_path, capsys):
    assert main(["per-run", "--norms", "1"]) == EXIT_INVALID
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["--config", str(bad)]) == EXIT_INVALID
    missing_dir = tmp_path / "nope" / "out.csv"
    assert main(["kernel-validate", "--output", str(missing_dir)]) == EXIT_RUNTIME
    assert "error" in capsys.readouterr().err


def test_main_stdout_report(capsys):
    assert main(["kernel-validate", "--kernel", "cubic"]) == EXIT_OK
    captured = capsys.readouterr()
    assert captured.out.startswith("kernel,s0,s1")
    assert "valid-2-outcome" in captured.err


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "branchsim", "kernel-validate", "--kernel", "born", "--output", str(tmp_path / "k.csv")],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert "valid-2-outcome" in proc.stdout
