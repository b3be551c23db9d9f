"""Rate-1/2 constraint-length-9 convolutional code with Viterbi decoding.

Generator polynomials 0x11D / 0x1AF, tap bit k acting on the input k steps
back (bit 0 = current input).  Each block is tail-flushed with 8 zero bits,
so the decoder traces back from state 0 over the full block (well beyond
the 5*K rule of thumb).  Decoding is hard-decision, batched over blocks,
with the trellis inner loop JIT-compiled.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

G0 = 0x11D
G1 = 0x1AF
CONSTRAINT = 9
TAIL_BITS = CONSTRAINT - 1
NSTATES = 1 << TAIL_BITS
MIN_TRACEBACK = 5 * CONSTRAINT  # decoder uses full-block traceback


def _tables():
    par = np.zeros(1 << CONSTRAINT, dtype=np.uint8)
    for v in range(par.size):
        par[v] = bin(v).count("1") & 1
    osym = np.zeros((NSTATES, 2), dtype=np.uint8)
    for prev in range(NSTATES):
        for bit in (0, 1):
            reg = (prev << 1) | bit
            osym[prev, bit] = (par[reg & G0] << 1) | par[reg & G1]
    return par, osym


_PAR, OSYM = _tables()


def encode_batch(bits: np.ndarray) -> np.ndarray:
    """(B, L) message bits -> (B, 2*(L+8)) coded bits, tail-flushed."""
    bits = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
    b, nbits = bits.shape
    total = nbits + TAIL_BITS
    out = np.empty((b, 2 * total), dtype=np.uint8)
    state = np.zeros(b, dtype=np.int64)
    for t in range(total):
        cur = bits[:, t] if t < nbits else np.zeros(b, dtype=np.uint8)
        reg = (state << 1) | cur
        sym = OSYM[state, cur]
        out[:, 2 * t] = sym >> 1
        out[:, 2 * t + 1] = sym & 1
        state = reg & (NSTATES - 1)
    return out


@njit(parallel=True, cache=True)
def _viterbi_kernel(syms, nbits, osym):
    nblocks, nsteps = syms.shape
    out = np.zeros((nblocks, nbits), dtype=np.uint8)
    for f in prange(nblocks):
        pm = np.full(NSTATES, 1 << 28, dtype=np.int32)
        pm[0] = 0
        npm = np.empty(NSTATES, dtype=np.int32)
        dec = np.empty((nsteps, NSTATES), dtype=np.uint8)
        for t in range(nsteps):
            obs = syms[f, t]
            for s in range(NSTATES):
                p0 = s >> 1
                p1 = p0 | (NSTATES >> 1)
                bit = s & 1
                e0 = osym[p0, bit] ^ obs
                e1 = osym[p1, bit] ^ obs
                m0 = pm[p0] + (e0 >> 1) + (e0 & 1)
                m1 = pm[p1] + (e1 >> 1) + (e1 & 1)
                if m1 < m0:
                    npm[s] = m1
                    dec[t, s] = 1
                else:
                    npm[s] = m0
                    dec[t, s] = 0
            pm, npm = npm, pm
        s = 0  # tail flush ends in the zero state
        for t in range(nsteps - 1, -1, -1):
            if t < nbits:
                out[f, t] = s & 1
            s = (s >> 1) | (int(dec[t, s]) << (TAIL_BITS - 1))
    return out


def viterbi_decode_batch(coded_bits: np.ndarray, nbits: int) -> np.ndarray:
    """(B, 2*(nbits+8)) hard-decision coded bits -> (B, nbits) messages."""
    coded_bits = np.atleast_2d(np.asarray(coded_bits, dtype=np.uint8))
    if coded_bits.shape[1] != 2 * (nbits + TAIL_BITS):
        raise ValueError("coded length inconsistent with message length")
    syms = ((coded_bits[:, 0::2] << 1) | coded_bits[:, 1::2]).astype(np.uint8)
    return _viterbi_kernel(np.ascontiguousarray(syms), nbits, OSYM)


def encode(bits: np.ndarray) -> np.ndarray:
    return encode_batch(bits[None, :])[0]


def viterbi_decode(coded_bits: np.ndarray, nbits: int) -> np.ndarray:
    return viterbi_decode_batch(coded_bits[None, :], nbits)[0]
