"""Counter-based uniforms keyed by (seed, trajectory, step).

Each trajectory gets a SplitMix64 stream whose starting state is a hash of
(seed, trajectory index); draw k of that stream is the SplitMix64 finaliser applied to
``key + (k+1) * golden``.  Any draw can be computed independently of all others, so
simulation results do not depend on how trajectories are split across threads.
"""
import numba
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TRAJ = np.uint64(0xD1B54A32D192ED03)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@numba.njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@numba.njit(cache=True, inline="always")
def stream_key(seed, traj):
    return mix64(mix64(np.uint64(seed) + _GOLDEN) ^ (np.uint64(traj) * _TRAJ))


@numba.njit(cache=True, inline="always")
def uniform_at(key, step):
    """Uniform double in [0, 1) with 53 random bits."""
    z = mix64(key + (np.uint64(step) + np.uint64(1)) * _GOLDEN)
    return np.float64(z >> _S11) * _INV53


@numba.njit(cache=True)
def _fill(seed, traj, n, out):
    key = stream_key(seed, traj)
    for k in range(n):
        out[k] = uniform_at(key, k)


def uniforms(seed: int, traj: int, n: int) -> np.ndarray:
    """The first n draws of trajectory ``traj`` under ``seed``."""
    out = np.empty(n)
    _fill(np.uint64(seed), np.uint64(traj), n, out)
    return out
