import csv
import io
import subprocess
import sys

import pytest

from nneg.cli import main, parse_config, UsageError

BASE = ["--vol", "0.15", "--p", "0.45", "--eps", "0.1"]


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


def field(text, key):
    for line in text.splitlines():
        if line.startswith(key + ":"):
            return line.split(":", 1)[1].split()[0]
    raise KeyError(key)


@pytest.fixture(autouse=True)
def no_env_config(monkeypatch):
    monkeypatch.delenv("NNEG_CONFIG", raising=False)


@pytest.fixture
def book_csv(tmp_path):
    def write(text):
        path = tmp_path / "book.csv"
        path.write_text(text)
        return str(path)

    return write


# -- price-single -------------------------------------------------------------------


def test_price_single_one_life():
    code, out = run("price-single", *BASE, "--n", "1", "--loan", "unit")
    assert code == 0
    assert field(out, "case") == "GLA_ONLY"
    assert float(field(out, "cost")) == pytest.approx(0.45)


def test_price_single_hundred_lives():
    code, out = run("price-single", *BASE, "--n", "100", "--loan", "unit")
    assert code == 0
    assert field(out, "case") == "XOL_PLUS_PUTS"
    assert float(field(out, "cost")) == pytest.approx(27.10, abs=0.01)
    assert "[valid]" in out


def test_price_single_rounded_loan():
    # 87.07 sits just under S0 d + 1, so the claim scale is 0.999202
    code, out = run("price-single", *BASE, "--n", "1", "--loan", "87.07")
    assert code == 0
    assert float(field(out, "cost")) == pytest.approx(0.45 * (87.07 - 100 * 0.860708), abs=1e-5)


def test_price_single_reports_non_minimal_closed_form():
    code, out = run("price-single", *BASE, "--n", "2", "--loan", "unit")
    assert code == 0
    assert "not minimal" in out
    assert float(field(out, "lp_cost")) < float(field(out, "cost"))


def test_price_single_missing_loan():
    code, _ = run("price-single", *BASE, "--n", "10")
    assert code == 2


def test_price_single_bad_values(capsys):
    assert run("price-single", *BASE, "--n", "0", "--loan", "unit")[0] == 2
    assert run("price-single", "--vol", "0.15", "--u", "1.2", "--p", "0.4", "--eps", "0.1",
               "--n", "3", "--loan", "unit")[0] == 2
    assert run("price-single", *BASE, "--n", "3", "--loan", "abc")[0] == 2
    assert run("price-single", *BASE, "--n", "3", "--loan", "unit", "--precision", "0")[0] in (0, 2)
    assert "error" in capsys.readouterr().err


def test_price_single_arbitrage_exit(capsys):
    code, _ = run("price-single", *BASE, "--n", "1", "--loan", "unit", "--xol-price", "0.227")
    assert code == 3
    assert "arbitrage" in capsys.readouterr().err
    code, _ = run("price-single", *BASE, "--n", "10", "--loan", "unit", "--xol-price", "4.0")
    assert code == 3


# -- price-book ---------------------------------------------------------------------

COUNTER = "property_value,ltv,death_prob\n1,70,0.45\n1,80,0.45\n1,90,0.45\n"


def test_price_book_counterexample(book_csv):
    code, out = run("price-book", "--u", "1.6", "--d", "0.5", "--book", book_csv(COUNTER),
                    "--xol-excess", "70", "--xol-price", "1.822")
    assert code == 0
    assert "SH1 (xol + puts): 40.0038" in out
    assert "SH2 (life assurance): 40.5" in out
    assert "SH3 (all puts): 49.0909" in out
    assert "LP optimum: 37.140" in out


def test_price_book_independent_basis(book_csv):
    code, out = run("price-book", "--u", "1.6", "--d", "0.5", "--book", book_csv(COUNTER),
                    "--xol-excess", "70", "--xol-basis", "independent")
    assert code == 0
    assert "1.8225" in out


@pytest.mark.parametrize(
    "text",
    [
        "property_value,ltv,death_prob\n1,70,0.45\n1,abc,0.45\n",
        "property_value,ltv,death_prob\n1,70,1.5\n",
        "value,ltv\n1,70\n",
    ],
)
def test_price_book_malformed(book_csv, text, capsys):
    code, _ = run("price-book", "--u", "1.6", "--d", "0.5", "--book", book_csv(text),
                  "--xol-excess", "70", "--xol-price", "1.822")
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_price_book_too_many_lives(book_csv, capsys):
    rows = "".join(f"1,{60 + i},0.3\n" for i in range(21))
    code, _ = run("price-book", "--u", "1.6", "--d", "0.5",
                  "--book", book_csv("property_value,ltv,death_prob\n" + rows),
                  "--xol-excess", "200", "--xol-price", "1.0")
    assert code == 2
    assert "20" in capsys.readouterr().err


def test_price_book_missing_file(capsys):
    code, _ = run("price-book", "--u", "1.6", "--d", "0.5", "--book", "/nonexistent.csv",
                  "--xol-excess", "70", "--xol-price", "1.822")
    assert code == 2


# -- price-multi / sweep ----------------------------------------------------------------

MULTI = ["--vol", "0.15", "--loan0", "40", "--loan-rate", "0.05", "--horizon", "100",
         "--age", "70", "--eps", "0.1"]


def test_price_multi():
    code, out = run("price-multi", *MULTI, "--n", "2")
    assert code == 0
    assert float(field(out, "v0_per_policy")) > float(field(out, "dcf_bs_per_policy"))


def test_price_multi_bad_age():
    assert run("price-multi", *MULTI[:-4], "--age", "20", "--eps", "0.1", "--n", "2")[0] == 2


def test_sweep_single_csv():
    code, out = run("sweep", *BASE, "--loan", "unit", "--n-from", "1", "--n-to", "5")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["n", "e", "x0", "case", "cost", "cost_per_life", "lp_cost", "lp_cost_per_life"]
    assert [r[0] for r in rows[1:]] == ["1", "2", "3", "4", "5"]
    assert rows[1][4] == "0.45"


def test_sweep_multi_header_and_shape():
    code, out = run("sweep", "--mode", "multi", *MULTI, "--n-list", "3,1,2")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["n", "v0", "v0_per_policy", "dcf_bs", "dcf_bs_per_policy"]
    assert [r[0] for r in rows[1:]] == ["1", "2", "3"]
    per = [float(r[2]) for r in rows[1:]]
    assert per == sorted(per, reverse=True)


@pytest.mark.parametrize("rng", [("--n-from", "5", "--n-to", "2"), ("--n-from", "0", "--n-to", "2")])
def test_sweep_empty_range(rng):
    assert run("sweep", *BASE, "--loan", "unit", *rng)[0] == 2


def test_sweep_precision():
    _, six = run("sweep", *BASE, "--loan", "unit", "--n-list", "7")
    _, many = run("sweep", *BASE, "--loan", "unit", "--n-list", "7", "--precision", "12")
    cost6, cost12 = six.splitlines()[1].split(",")[4], many.splitlines()[1].split(",")[4]
    assert len(cost6.replace(".", "")) <= 6 < len(cost12.replace(".", ""))
    assert float(cost6) == pytest.approx(float(cost12), rel=1e-5)


def test_sweep_deterministic_and_parallel_order(tmp_path):
    args = ("sweep", *BASE, "--loan", "unit", "--n-from", "1", "--n-to", "40")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(*args, "-o", str(a))[0] == 0
    assert run(*args, "-o", str(b), "--jobs", "3")[0] == 0
    assert a.read_bytes() == b.read_bytes()
    _, again = run(*args)
    assert again.encode() == a.read_bytes()


# -- config ---------------------------------------------------------------------------


def test_parse_config_errors(tmp_path):
    assert parse_config("# c\nn = 3  # trailing\n\nn-from=2\n", "x") == {"n": "3", "n_from": "2"}
    with pytest.raises(UsageError, match="x:2"):
        parse_config("n = 3\nnonsense\n", "x")


def test_config_precedence(tmp_path, monkeypatch):
    env = tmp_path / "env.cfg"
    env.write_text("vol = 0.15\np = 0.45\neps = 0.1\nloan = unit\nn = 1\n")
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 100  # overrides the env file\n")
    monkeypatch.setenv("NNEG_CONFIG", str(env))
    code, out = run("price-single")
    assert code == 0 and field(out, "case") == "GLA_ONLY"
    code, out = run("price-single", "--config", str(cfg))
    assert float(field(out, "cost")) == pytest.approx(27.1047, abs=1e-4)
    code, out = run("price-single", "--config", str(cfg), "--n", "1")
    assert field(out, "case") == "GLA_ONLY"


def test_config_unknown_key_and_missing_file(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert run("price-single", "--config", str(cfg))[0] == 2
    assert run("price-single", "--config", str(tmp_path / "none.cfg"))[0] == 2


def test_config_keys_for_other_commands_are_ignored(tmp_path):
    cfg = tmp_path / "shared.cfg"
    cfg.write_text("vol = 0.15\np = 0.45\neps = 0.1\nloan = unit\nn = 1\nhorizon = 10\nseed = 3\n")
    assert run("price-single", "--config", str(cfg))[0] == 0


# -- verify / process level -------------------------------------------------------------


def test_verify_passes_and_is_deterministic():
    code, out = run("verify", "--seed", "42")
    assert code == 0
    assert out.count("PASS") == 6 and "verification passed" in out
    assert run("verify", "--seed", "42")[1] == out


def test_verify_failure_exit():
    code, out = run("verify", "--suite", "primal-dual", "--tol", "-1")
    assert code == 1
    assert "FAIL primal-dual" in out


def test_verify_unknown_suite():
    assert run("verify", "--suite", "nope")[0] == 2


def test_console_script_exit_codes():
    ok = subprocess.run([sys.executable, "-m", "nneg.cli", "--version"], capture_output=True, text=True)
    assert ok.returncode == 0
    bad = subprocess.run([sys.executable, "-m", "nneg.cli", "price-single", "--bogus"],
                         capture_output=True, text=True)
    assert bad.returncode == 2
