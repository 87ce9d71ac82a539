"""The numpy / interpreted path selected by OSLAB_DISABLE_NUMBA gives the same answers."""

import json
import os
import subprocess
import sys

import pytest

SCRIPT = r"""
import json, numpy as np
from oslab import USE_NUMBA, numerics as nx, opspaces as osp, kalton as kt
rng = np.random.default_rng(5)
c = rng.standard_normal((3, 3, 3)) + 1j * rng.standard_normal((3, 3, 3))
q = kt.sign_quotient(3)
x = np.array([0.7, -0.2, 0.4])
out = {
    "numba": USE_NUMBA,
    "sv": nx.singular_values(c[0]).tolist(),
    "row": osp.norm(osp.OsElement(osp.Row(3), c)).value,
    "oh": osp.norm(osp.OsElement(osp.OH(3), c)).value,
    "torus": nx.torus_spectral_max(c, restarts=4)[0],
    "l1": nx.min_l1_preimage(q.Q, x).tolist(),
}
print(json.dumps(out))
"""


def run(disable):
    env = dict(os.environ, OSLAB_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, timeout=600)
    assert res.returncode == 0, res.stderr
    return json.loads(res.stdout.strip().splitlines()[-1])


def test_fallback_matches_compiled():
    on, off = run(False), run(True)
    assert not off["numba"]
    assert on["sv"] == pytest.approx(off["sv"], rel=1e-12)
    for key in ("row", "oh", "torus"):
        assert on[key] == pytest.approx(off[key], rel=1e-12)
    assert on["l1"] == pytest.approx(off["l1"], abs=1e-12)
