"""CLI surface: subcommands, exit codes, deterministic output."""

import json

import pytest

from absorbeq import make_game, save_game
from absorbeq.cli import (
    EXIT_ERROR,
    EXIT_NEGATIVE,
    EXIT_OK,
    EXIT_UNSUPPORTED,
    main,
)
from game_builders import lshaped_ql, quitting_2p


@pytest.fixture
def game_file(tmp_path):
    path = str(tmp_path / "game.json")
    save_game(quitting_2p(), path)
    return path


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out


def test_classify(capsys, game_file):
    code, out = run(capsys, ["classify", game_file])
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["classification"]["quitting"] is True
    assert payload["classification"]["spotted"] is True
    assert payload["continue_actions"] == [[0], [0]]
    assert "version" in payload


def test_classify_l_labeling(capsys, tmp_path):
    path = str(tmp_path / "l.json")
    save_game(lshaped_ql(), path)
    code, out = run(capsys, ["classify", path])
    payload = json.loads(out)
    assert code == EXIT_OK
    assert payload["classification"]["l_shaped"] is True
    assert payload["l_labeling"]["a4"] == [1, 1]


def test_byte_identical_output(capsys, game_file):
    _, a = run(capsys, ["classify", game_file])
    _, b = run(capsys, ["classify", game_file])
    assert a == b


def test_lcp_feasible_and_infeasible(capsys, tmp_path):
    m = str(tmp_path / "m.json")
    with open(m, "w") as fh:
        json.dump({"R": [[1.0]], "q": [2.0]}, fh)
    code, out = run(capsys, ["lcp", m])
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["status"] == "feasible"
    assert payload["w"] == [1.0] and payload["z"] == [0.0, 1.0]

    with open(m, "w") as fh:
        json.dump({"R": [[-1.0]], "q": [-0.5]}, fh)
    code, out = run(capsys, ["lcp", m])
    assert code == EXIT_NEGATIVE
    assert json.loads(out)["status"] == "infeasible"


def test_lcp_qtest(capsys, tmp_path):
    m = str(tmp_path / "m.json")
    with open(m, "w") as fh:
        json.dump({"R": [[-1.0]]}, fh)
    code, out = run(capsys, ["lcp", m, "--qtest"])
    assert code == EXIT_NEGATIVE
    payload = json.loads(out)
    assert payload["status"] == "NotQ"
    assert payload["witness"][0] < 0.0

    with open(m, "w") as fh:
        json.dump({"R": [[1.0]]}, fh)
    code, out = run(capsys, ["lcp", m, "--qtest"])
    assert code == EXIT_OK
    assert json.loads(out)["status"] == "Q_certified_numerically"


def test_synth_verify_simulate_pipeline(capsys, tmp_path, game_file):
    strat = str(tmp_path / "strategy.json")
    code, out = run(capsys, ["synth", game_file, "--strategy-out", strat])
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["report"]["verdict"] == "pass"
    assert payload["route"].startswith("spotted")

    code, out = run(capsys, ["verify", game_file, strat])
    assert code == EXIT_OK
    assert json.loads(out)["report"]["verdict"] == "pass"

    # an unreachable slack makes verification fail with exit 1
    code, out = run(capsys, ["verify", game_file, strat, "--epsilon", "1e-9"])
    assert code == EXIT_NEGATIVE

    code, a = run(capsys, ["simulate", game_file, strat, "--runs", "500",
                           "--horizon", "800", "--seed", "3"])
    assert code == EXIT_OK
    _, b = run(capsys, ["simulate", game_file, strat, "--runs", "500",
                        "--horizon", "800", "--seed", "3"])
    assert a == b


def test_output_file_and_formats(capsys, tmp_path, game_file):
    out_path = str(tmp_path / "report.json")
    code, out = run(capsys, ["classify", game_file, "--out", out_path])
    assert code == EXIT_OK and out == ""
    with open(out_path) as fh:
        assert json.load(fh)["classification"]["quitting"] is True
    code, out = run(capsys, ["classify", game_file, "--format", "text"])
    assert code == EXIT_OK and "classification" in out


def test_error_exit_codes(capsys, tmp_path):
    code, _ = run(capsys, ["classify", str(tmp_path / "missing.json")])
    assert code == EXIT_ERROR
    bad = str(tmp_path / "bad.json")
    with open(bad, "w") as fh:
        fh.write("{not json")
    code, _ = run(capsys, ["classify", bad])
    assert code == EXIT_ERROR


def test_unsupported_game_class(capsys, tmp_path):
    # no quitting action at all: not quitting-absorbing, not spotted
    g = make_game(
        [["a", "b"], ["a", "b"]],
        {
            (0, 0): (0.0, [0.0, 0.0]),
            (0, 1): (0.0, [0.0, 0.0]),
            (1, 0): (0.0, [0.0, 0.0]),
            (1, 1): (1.0, [0.5, 0.5]),
        },
    )
    path = str(tmp_path / "unsupported.json")
    save_game(g, path)
    code, out = run(capsys, ["synth", path])
    assert code == EXIT_UNSUPPORTED
    assert "unsupported" in json.loads(out)["error"]
