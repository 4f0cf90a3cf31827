import os
import subprocess
import sys

from cepz import _accel


def test_set_numba_returns_previous():
    prev = _accel.set_numba(False)
    try:
        assert not _accel.use_numba()
        assert _accel.set_numba(True) is False
        assert _accel.use_numba() == _accel.HAVE_NUMBA
    finally:
        _accel.set_numba(prev)


def test_env_flag_selects_numpy_path():
    code = "from cepz import _accel; print(_accel.use_numba())"
    for value, expected in (("0", "False"), ("off", "False"), ("1", str(_accel.HAVE_NUMBA))):
        env = dict(os.environ, CEPZ_NUMBA=value)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
        assert out.stdout.strip() == expected
