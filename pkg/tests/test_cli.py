import io
import json
import os
import subprocess
import sys

import pytest

from maxprod.cli import main
from maxprod.construction import loads


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), stdout=buf)
    return code, buf.getvalue()


def test_construct_gamma5(tmp_path):
    code, out = run("construct", "--weight", "pow:beta=1", "--K", "12", "--gamma", "5", "--out", str(tmp_path))
    assert code == 0
    assert "n = [2, 64, 2048, 65536," in out
    c = loads((tmp_path / "construction.txt").read_text())
    assert [int(n) for n in c.n[:4]] == [2, 64, 2048, 65536]
    assert (tmp_path / "validation.csv").read_text().startswith("k,n_ratio")


def test_construct_auto_gamma():
    code, out = run("construct", "--weight", "pow:beta=1", "--K", "12")
    assert code == 0
    assert "gamma 4.5000000043280854" in out
    assert "n = [2, 45, 1024," in out


def test_construct_bad_gamma():
    code, _ = run("construct", "--weight", "pow:beta=1", "--gamma", "1")
    assert code == 1


def test_construct_missing_weight():
    assert run("construct")[0] == 2


def test_bad_weight_is_usage_error():
    assert run("construct", "--weight", "nope")[0] == 2


def test_eval_origin():
    code, out = run("eval", "--weight", "pow:beta=1", "1", "0", "1")
    assert code == 0
    assert "f0 = 1 + 0i" in out and "f1 = 1 + 0i" in out


def test_eval_zero_point():
    # first zero of f0 for gamma=5: |z| = a**(-1/64) with the stored log a, angle pi/64
    from maxprod._mp import MP
    from maxprod.construction import construct
    from maxprod.product import make_products, zero_point
    from maxprod.weight import parse_weight
    z = zero_point(make_products(construct(parse_weight("pow:beta=1"), gamma=5, K=20))[0], 1)
    assert (z.angle_num, z.angle_den) == (1, 128)
    code, out = run("eval", "--weight", "pow:beta=1", "--gamma", "5", MP.nstr(z.eps, 75), "1", "128")
    assert code == 0
    assert "log|f0| = -inf" in out


def test_eval_bad_den():
    assert run("eval", "--weight", "pow:beta=1", "0.5", "1", "0")[0] == 2


def test_verify_decades_too_small():
    assert run("verify", "--weight", "pow:beta=1", "--decades", "2")[0] == 2


def test_verify_delta_above_bound():
    assert run("verify", "--weight", "pow:beta=1", "--delta", "0.5")[0] == 2


def test_verify_range_shortfall():
    code, _ = run("verify", "--weight", "pow:beta=1", "--K", "6", "--decades", "12")
    assert code == 3


def test_verify_outputs(tmp_path):
    code, out = run("verify", "--weight", "pow:beta=1", "--decades", "5", "--angles", "256",
                    "--a-probes=-1,2j", "--out", str(tmp_path))
    summary = json.loads((tmp_path / "summary.json").read_text())
    verdicts = summary["verdicts"]
    # the exit code is exactly the conjunction of the written verdicts
    assert code == (0 if all(v == "pass" for v in verdicts.values()) else 1)
    for key in ("covering", "jensen_f0", "counting_f1", "chain", "R1", "R3_T_f0"):
        assert key in verdicts
    assert set(summary["a_probes"]) == {"a=-1 f0", "a=-1 f1", "a=0+2j f0", "a=0+2j f1"}
    head = (tmp_path / "R1.csv").read_text().splitlines()[0]
    assert head == "eps,theta_num,theta_den,value"


def test_verify_from_file(tmp_path):
    run("construct", "--weight", "exploglog", "--out", str(tmp_path))
    code, out = run("verify", "--construction", str(tmp_path / "construction.txt"), "--decades", "4",
                    "--angles", "128", "--out", str(tmp_path / "v"))
    assert code in (0, 1)
    assert json.loads((tmp_path / "v" / "summary.json").read_text())["weight"] == "exploglog"


def _verify_bytes(out, threads):
    env = dict(os.environ, MAXPROD_THREADS=str(threads))
    subprocess.run([sys.executable, "-m", "maxprod", "verify", "--weight", "log", "--decades", "6",
                    "--angles", "512", "--out", str(out)], env=env, check=False, capture_output=True)
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_verify_deterministic(tmp_path):
    a = _verify_bytes(tmp_path / "a", 1)
    b = _verify_bytes(tmp_path / "b", 4)
    assert a and a == b
