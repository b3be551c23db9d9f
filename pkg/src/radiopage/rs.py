"""Reed-Solomon (255, 223) over GF(2^8), shortened per block.

Field: primitive polynomial 0x11D, generator element 2.  Code: 32 parity
symbols, corrects up to 16 symbol errors per block.  Encoding is systematic
(data bytes first, parity appended).  Batch helpers vectorize the hot paths
(parity LFSR, syndrome screen) across many equal-length blocks with a full
256x256 GF multiplication table.
"""

from __future__ import annotations

import numpy as np

PRIM_POLY = 0x11D
GENERATOR = 2
NSYM = 32          # parity symbols per block
BLOCK_N = 255
BLOCK_K = BLOCK_N - NSYM
T_CAPABILITY = NSYM // 2
FCR = 0            # first consecutive root exponent


def _build_tables():
    exp = np.zeros(512, dtype=np.uint8)
    log = np.zeros(256, dtype=np.int32)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= PRIM_POLY
    exp[255:510] = exp[:255]
    mul = np.zeros((256, 256), dtype=np.uint8)
    la = log[1:256]
    mul[1:, 1:] = exp[(la[:, None] + la[None, :]) % 255]
    return exp, log, mul


GF_EXP, GF_LOG, GF_MUL = _build_tables()


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return int(GF_EXP[GF_LOG[a] + GF_LOG[b]])


def gf_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("GF division by zero")
    if a == 0:
        return 0
    return int(GF_EXP[(GF_LOG[a] - GF_LOG[b]) % 255])


def gf_pow(a: int, n: int) -> int:
    if a == 0:
        return 0
    return int(GF_EXP[(GF_LOG[a] * n) % 255])


def _poly_mul(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] ^= gf_mul(a, b)
    return out


def _generator_poly():
    """g(x) = prod (x - alpha^(FCR+i)), coefficients highest power first."""
    g = [1]
    for i in range(NSYM):
        g = _poly_mul(g, [1, gf_pow(GENERATOR, FCR + i)])
    return np.array(g, dtype=np.uint8)


GEN_POLY = _generator_poly()           # length NSYM + 1, monic
_GEN_ROWS = GF_MUL[GEN_POLY[1:]]       # (NSYM, 256) multiply-by-g_j lookup
_SYND_ALPHAS = np.array([gf_pow(GENERATOR, FCR + j) for j in range(NSYM)], dtype=np.uint8)


class RSDecodeError(Exception):
    pass


def encode_batch(data: np.ndarray) -> np.ndarray:
    """Systematic encode of (B, k) blocks -> (B, k + 32)."""
    data = np.atleast_2d(np.asarray(data, dtype=np.uint8))
    b, k = data.shape
    if k > BLOCK_K:
        raise ValueError(f"block length {k} exceeds k={BLOCK_K}")
    parity = np.zeros((b, NSYM), dtype=np.uint8)
    for t in range(k):
        fb = data[:, t] ^ parity[:, 0]
        parity[:, :-1] = parity[:, 1:]
        parity[:, -1] = 0
        parity ^= _GEN_ROWS[:, fb].T
    return np.concatenate([data, parity], axis=1)


def encode(block: bytes) -> bytes:
    out = encode_batch(np.frombuffer(block, dtype=np.uint8)[None, :])
    return out[0].tobytes()


def syndromes_batch(received: np.ndarray) -> np.ndarray:
    """(B, n) received blocks -> (B, 32) syndromes; all-zero rows are clean."""
    received = np.atleast_2d(np.asarray(received, dtype=np.uint8))
    b, n = received.shape
    synd = np.zeros((b, NSYM), dtype=np.uint8)
    for t in range(n):
        synd = GF_MUL[synd, _SYND_ALPHAS] ^ received[:, t][:, None]
    return synd


def _poly_eval(poly, x):
    """poly lowest power first, evaluated at x."""
    y = 0
    for c in reversed(poly):
        y = gf_mul(y, x) ^ c
    return y


def _berlekamp_massey(synd):
    """Massey LFSR synthesis: locator sigma (lowest power first) and length L."""
    C = [1]
    B = [1]
    L, m, b = 0, 1, 1
    for n in range(NSYM):
        delta = synd[n]
        for i in range(1, L + 1):
            if i < len(C):
                delta ^= gf_mul(C[i], synd[n - i])
        if delta == 0:
            m += 1
            continue
        old_c = C[:]
        coef = gf_div(delta, b)
        add = [0] * m + [gf_mul(coef, c) for c in B]
        width = max(len(C), len(add))
        C = [(C[i] if i < len(C) else 0) ^ (add[i] if i < len(add) else 0)
             for i in range(width)]
        if 2 * L <= n:
            L = n + 1 - L
            B = old_c
            b = delta
            m = 1
        else:
            m += 1
    return C, L


def decode_block(received: np.ndarray, synd: np.ndarray | None = None):
    """Correct one block in place; returns (corrected_block, n_errors).

    Raises RSDecodeError when more than 16 symbols are corrupted.
    """
    r = np.array(received, dtype=np.uint8)
    n = r.size
    if synd is None:
        synd = syndromes_batch(r[None, :])[0]
    synd = [int(s) for s in synd]
    if not any(synd):
        return r, 0

    sigma, nerr = _berlekamp_massey(synd)
    if nerr > T_CAPABILITY:
        raise RSDecodeError(f"locator degree {nerr} beyond correction capability")

    # Chien search: error at byte i <=> sigma(alpha^-(n-1-i)) == 0
    err_pos = []
    for i in range(n):
        e = n - 1 - i
        if _poly_eval(sigma, gf_pow(GENERATOR, (255 - e) % 255)) == 0:
            err_pos.append(i)
    if len(err_pos) != nerr:
        raise RSDecodeError("locator roots do not match degree")

    # Forney: omega = S(x) * sigma(x) mod x^32
    omega = [0] * NSYM
    for i in range(NSYM):
        acc = 0
        for j in range(min(i + 1, len(sigma))):
            acc ^= gf_mul(sigma[j], synd[i - j])
        omega[i] = acc
    sigma_deriv = [sigma[j] for j in range(1, len(sigma), 2)]  # odd terms, d/dx in GF(2)

    for i in err_pos:
        e = n - 1 - i
        x_inv = gf_pow(GENERATOR, (255 - e) % 255)
        num = _poly_eval(omega, x_inv)
        den = 0
        xi2 = gf_mul(x_inv, x_inv)
        xpow = 1
        for c in sigma_deriv:
            den ^= gf_mul(c, xpow)
            xpow = gf_mul(xpow, xi2)
        if den == 0:
            raise RSDecodeError("Forney denominator zero")
        mag = gf_mul(gf_pow(GENERATOR, e * (1 - FCR) % 255), gf_div(num, den))
        r[i] ^= mag

    if np.any(syndromes_batch(r[None, :])[0]):
        raise RSDecodeError("residual syndromes after correction")
    return r, nerr


def decode(block: bytes):
    out, nerr = decode_block(np.frombuffer(block, dtype=np.uint8))
    return out.tobytes(), nerr
