"""Transmit/receive mixing that turns b channel uses into b parallel real channels.

Transmit side: scale the middle entries of a real input block d_0..d_{b-1}
by 1/sqrt(2), pack into a conjugate-symmetric complex vector

    p_0 = d_0,   p_i = d_{2i-1} + j d_{2i}  (i = 1..b/2-1),
    p_{b/2} = d_{b-1},   p_i = conj(p_{b-i})  (i > b/2),

and apply the unitary inverse DFT; conjugate symmetry makes the physical
block real.  Receive side: unitary DFT, then read the bins back out in a
fixed order,

    [F_0, sqrt(2) Re F_1, sqrt(2) Im F_1, ..., sqrt(2) Re F_{b/2-1},
     sqrt(2) Im F_{b/2-1}, F_{b/2}],

so that position j of the output is the channel carrying input d_j.  Bin 0
is the DC average (type I), the interleaved Re/Im pairs are types II/III,
and the last bin is the alternating-sign average (type IV).  Both maps are
orthonormal, mutually inverse over a unit-gain noiseless link, and map
i.i.d. physical noise of variance v to per-bin noise of variance exactly v.

All functions accept stacked inputs: the block runs along the last axis.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "IMAG_TOL",
    "CONJ_TOL",
    "pack",
    "unpack",
    "transmit_transform",
    "receive_transform",
    "effective_noise",
    "bin_kinds",
    "representative_bin",
]

# Numerical dust from the FFT sits around 1e-15 of the signal scale; residues
# above these bounds indicate a logic error and are a hard failure.
IMAG_TOL = 1e-9
CONJ_TOL = 1e-9

_SQRT2 = np.sqrt(2.0)


def _block_size(x: np.ndarray) -> int:
    b = x.shape[-1]
    if b < 2 or b % 2 != 0:
        raise ValueError(f"block size must be even and >= 2, got {b}")
    return b


def pack(d) -> np.ndarray:
    """Pack b reals into a conjugate-symmetric length-b complex vector."""
    d = np.asarray(d, dtype=float)
    b = _block_size(d)
    p = np.zeros(d.shape, dtype=complex)
    p[..., 0] = d[..., 0]
    if b > 2:
        p[..., 1 : b // 2] = d[..., 1 : b - 2 : 2] + 1j * d[..., 2 : b - 1 : 2]
        p[..., b // 2 + 1 :] = np.conj(p[..., 1 : b // 2])[..., ::-1]
    p[..., b // 2] = d[..., b - 1]
    return p


def unpack(p) -> np.ndarray:
    """Invert :func:`pack`; rejects inputs that are not conjugate symmetric."""
    p = np.asarray(p, dtype=complex)
    b = _block_size(p)
    resid = max(
        float(np.max(np.abs(p[..., 0].imag), initial=0.0)),
        float(np.max(np.abs(p[..., b // 2].imag), initial=0.0)),
    )
    if b > 2:
        mirror = np.conj(p[..., : b // 2 : -1])
        resid = max(resid, float(np.max(np.abs(p[..., 1 : b // 2] - mirror))))
    if resid > CONJ_TOL:
        raise ValueError(f"input is not conjugate symmetric (residual {resid:.3g})")
    d = np.empty(p.shape, dtype=float)
    d[..., 0] = p[..., 0].real
    if b > 2:
        d[..., 1 : b - 2 : 2] = p[..., 1 : b // 2].real
        d[..., 2 : b - 1 : 2] = p[..., 1 : b // 2].imag
    d[..., b - 1] = p[..., b // 2].real
    return d


def transmit_transform(d) -> np.ndarray:
    """Map b effective inputs to b real physical transmit values.

    Middle entries are pre-divided by sqrt(2), then pack + unitary IDFT.
    The overall map preserves the 2-norm, so blocks with average input
    power at most P transmit with average power at most P.
    """
    d = np.asarray(d, dtype=float)
    b = _block_size(d)
    scaled = d.copy()
    if b > 2:
        scaled[..., 1 : b - 1] /= _SQRT2
    x = np.fft.ifft(pack(scaled), norm="ortho", axis=-1)
    resid = float(np.max(np.abs(x.imag)))
    if resid > IMAG_TOL:
        raise ValueError(f"imaginary residue {resid:.3g} exceeds {IMAG_TOL}")
    return x.real


def receive_transform(y) -> np.ndarray:
    """Map b received values to the b effective reads, canonical bin order.

    Composition with :func:`transmit_transform` over a unit-gain noiseless
    link is the identity; the map is linear, so a scalar channel gain h and
    additive noise pass through as h * d + effective_noise(N).
    """
    y = np.asarray(y, dtype=float)
    b = _block_size(y)
    f = np.fft.fft(y, norm="ortho", axis=-1)
    out = np.empty(y.shape, dtype=float)
    out[..., 0] = f[..., 0].real
    if b > 2:
        out[..., 1 : b - 1 : 2] = _SQRT2 * f[..., 1 : b // 2].real
        out[..., 2 : b - 1 : 2] = _SQRT2 * f[..., 1 : b // 2].imag
    out[..., b - 1] = f[..., b // 2].real
    return out


def effective_noise(n) -> np.ndarray:
    """Effective per-bin noise for physical noise draws; the receive map.

    The combined map has orthonormal rows, so i.i.d. variance-v physical
    noise yields variance exactly v in every bin (bins are uncorrelated but
    generally dependent).
    """
    return receive_transform(n)


def bin_kinds(b: int) -> tuple[str, ...]:
    """Channel type per canonical bin: I, then alternating II/III, then IV."""
    if b < 2 or b % 2 != 0:
        raise ValueError(f"block size must be even and >= 2, got {b}")
    kinds = ["I"]
    for _ in range(1, b // 2):
        kinds += ["II", "III"]
    kinds.append("IV")
    return tuple(kinds)


def representative_bin(b: int, kind: str) -> int:
    """A canonical bin of the given channel type (II/III use frequency 1)."""
    if kind == "I":
        return 0
    if kind == "IV":
        return b - 1
    if b < 4:
        raise ValueError(f"no type {kind} bins at b={b}")
    if kind == "II":
        return 1
    if kind == "III":
        return 2
    raise ValueError(f"unknown bin kind {kind!r}")
