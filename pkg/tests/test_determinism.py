import os
import subprocess
import sys

import pytest

from echobd.reebprofiles import build_alpha_delta, irrational_surrogate, scan_morse_bott
from echobd.scenarios import acceptance_models, run_main_theorem, run_many


def _report(threads):
    env = dict(os.environ, ECHOBD_THREADS=str(threads))
    cmd = [sys.executable, "-m", "echobd.cli", "verify", "all", "--count", "3", "--seed", "11", "--deterministic"]
    return subprocess.run(cmd, env=env, capture_output=True, check=False)


def test_cli_bytes_identical_across_threads():
    a, b = _report(1), _report(4)
    assert a.returncode == b.returncode == 0
    assert a.stdout == b.stdout


def test_scenarios_identical_across_threads():
    models = acceptance_models(count=4, base_seed=30)
    one = [r.tables for r in run_many(run_main_theorem, models, threads=1)]
    many = [r.tables for r in run_many(run_main_theorem, models, threads=4)]
    assert one == many


def test_random_models_reproducible():
    a = acceptance_models(count=6, base_seed=5)
    b = acceptance_models(count=6, base_seed=5)
    assert [(n.d_flat, n.d_prime) for n in a] == [(n.d_flat, n.d_prime) for n in b]
