"""Hot numeric kernels, JIT-compiled when possible.

Each kernel is written once in loop-oriented numpy that numba can compile.
When numba imports cleanly and the ``BEDRR_NO_NUMBA`` environment variable
is unset, the public names point at ``@njit``-compiled versions; otherwise
they are the plain-python originals. The originals remain importable under
``*_py`` names so the benchmark can compare both paths.

Gate layout for the recurrent kernels is four lanes of width D in the
order [input, forget, candidate, output]; kernel matrices are stored
(input_dim, 4*D) so a step is ``x @ W + h @ U + b``.
"""

import os

import numpy as np


def numba_requested() -> bool:
    """True unless the BEDRR_NO_NUMBA env flag disables compilation."""
    return os.environ.get("BEDRR_NO_NUMBA", "").strip().lower() not in (
        "1", "true", "yes", "on",
    )


def _lstm_seq_forward(X, W, U, b, h0, c0):
    """Run one LSTM layer over a sequence.

    X: (T, in), W: (in, 4D), U: (D, 4D), b: (4D,), h0/c0: (D,).
    Returns hidden states H (T, D), cell states C (T, D) and the
    post-activation gates G (T, 4D) needed by the backward pass.
    """
    T = X.shape[0]
    D = U.shape[0]
    H = np.empty((T, D))
    C = np.empty((T, D))
    G = np.empty((T, 4 * D))
    h = h0.copy()
    c = c0.copy()
    for t in range(T):
        z = X[t] @ W + h @ U + b
        z = np.minimum(np.maximum(z, -60.0), 60.0)
        gi = 1.0 / (1.0 + np.exp(-z[:D]))
        gf = 1.0 / (1.0 + np.exp(-z[D:2 * D]))
        gc = np.tanh(z[2 * D:3 * D])
        go = 1.0 / (1.0 + np.exp(-z[3 * D:]))
        c = gf * c + gi * gc
        h = go * np.tanh(c)
        G[t, :D] = gi
        G[t, D:2 * D] = gf
        G[t, 2 * D:3 * D] = gc
        G[t, 3 * D:] = go
        C[t] = c
        H[t] = h
    return H, C, G


def _lstm_seq_backward(X, W, U, H, C, G, h0, c0, dH):
    """Backpropagate through one LSTM layer.

    dH carries the upstream gradient on every hidden state (any
    final-state gradient must be folded into dH[-1] by the caller).
    Returns (dW, dU, db, dX, dh0, dc0).
    """
    T = X.shape[0]
    D = U.shape[0]
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(4 * D)
    dX = np.zeros_like(X)
    dh = np.zeros(D)
    dc = np.zeros(D)
    for t in range(T - 1, -1, -1):
        gi = G[t, :D]
        gf = G[t, D:2 * D]
        gc = G[t, 2 * D:3 * D]
        go = G[t, 3 * D:]
        tc = np.tanh(C[t])
        dht = dH[t] + dh
        dgo = dht * tc
        dct = dc + dht * go * (1.0 - tc * tc)
        if t > 0:
            c_prev = C[t - 1]
            h_prev = H[t - 1]
        else:
            c_prev = c0
            h_prev = h0
        dgi = dct * gc
        dgc = dct * gi
        dgf = dct * c_prev
        dc = dct * gf
        dz = np.empty(4 * D)
        dz[:D] = dgi * gi * (1.0 - gi)
        dz[D:2 * D] = dgf * gf * (1.0 - gf)
        dz[2 * D:3 * D] = dgc * (1.0 - gc * gc)
        dz[3 * D:] = dgo * go * (1.0 - go)
        dW += np.outer(X[t], dz)
        dU += np.outer(h_prev, dz)
        db += dz
        dX[t] = dz @ W.T
        dh = dz @ U.T
    return dW, dU, db, dX, dh, dc


def _lookback_tensor(X, W, U, b, lookahead):
    """Per-frame reversed recurrence over (lookahead+1)-frame windows.

    For every output position k (frame index lookahead+k in 0-based X
    coordinates) the window X[lookahead+k : lookahead+k+lookahead+1] is fed
    to the LSTM in reverse order and only the final hidden state is kept.
    Returns (T - 2*lookahead, D).
    """
    T = X.shape[0]
    D = U.shape[0]
    L = lookahead
    n_out = T - 2 * L
    B = np.empty((n_out, D))
    for k in range(n_out):
        h = np.zeros(D)
        c = np.zeros(D)
        for s in range(L, -1, -1):
            z = X[L + k + s] @ W + h @ U + b
            z = np.minimum(np.maximum(z, -60.0), 60.0)
            gi = 1.0 / (1.0 + np.exp(-z[:D]))
            gf = 1.0 / (1.0 + np.exp(-z[D:2 * D]))
            gc = np.tanh(z[2 * D:3 * D])
            go = 1.0 / (1.0 + np.exp(-z[3 * D:]))
            c = gf * c + gi * gc
            h = go * np.tanh(c)
        B[k] = h
    return B


def _smo_solve(K, y, C, tol, max_iter):
    """Two-variable coordinate ascent on the soft-margin dual.

    K: (N, N) kernel matrix, y: (N,) labels in {-1, +1}. Picks the
    maximal-violating pair each round and stops when the duality gap
    proxy m - M drops to tol. Returns (alpha, m, M, iterations).
    """
    N = K.shape[0]
    alpha = np.zeros(N)
    grad = -np.ones(N)
    m = 0.0
    M = 0.0
    it = 0
    while it < max_iter:
        score = -y * grad
        up = ((y > 0.0) & (alpha < C)) | ((y < 0.0) & (alpha > 0.0))
        low = ((y > 0.0) & (alpha > 0.0)) | ((y < 0.0) & (alpha < C))
        i = int(np.where(up, score, -np.inf).argmax())
        j = int(np.where(low, score, np.inf).argmin())
        m = score[i]
        M = score[j]
        if m - M <= tol:
            break
        it += 1
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta <= 1e-12:
            eta = 1e-12
        old_i = alpha[i]
        old_j = alpha[j]
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / eta
            diff = old_i - old_j
            ai = old_i + delta
            aj = old_j + delta
            if diff > 0.0:
                if aj < 0.0:
                    aj = 0.0
                    ai = diff
            else:
                if ai < 0.0:
                    ai = 0.0
                    aj = -diff
            if diff > 0.0:
                if ai > C:
                    ai = C
                    aj = C - diff
            else:
                if aj > C:
                    aj = C
                    ai = C + diff
        else:
            delta = (grad[i] - grad[j]) / eta
            s = old_i + old_j
            ai = old_i - delta
            aj = old_j + delta
            if s > C:
                if ai > C:
                    ai = C
                    aj = s - C
            else:
                if aj < 0.0:
                    aj = 0.0
                    ai = s
            if s > C:
                if aj > C:
                    aj = C
                    ai = s - C
            else:
                if ai < 0.0:
                    ai = 0.0
                    aj = s
        alpha[i] = ai
        alpha[j] = aj
        grad += (y[i] * y * K[i]) * (ai - old_i) + (y[j] * y * K[j]) * (aj - old_j)
    return alpha, m, M, it


def _peak_scan(v, drop):
    """Indices of maxima that rise and fall by at least ``drop``.

    Alternating-extrema scan: a candidate maximum is confirmed once the
    signal has fallen ``drop`` below it, and a new candidate only opens
    after the signal has risen ``drop`` above the running minimum.
    """
    n = v.shape[0]
    peaks = np.empty(n // 2 + 1, dtype=np.int64)
    count = 0
    direction = 0
    max_v = v[0]
    max_i = 0
    min_v = v[0]
    min_i = 0
    min_before_max = v[0]
    for idx in range(1, n):
        x = v[idx]
        if direction > 0:
            if x > max_v:
                max_v = x
                max_i = idx
            elif x <= max_v - drop:
                peaks[count] = max_i
                count += 1
                direction = -1
                min_v = x
                min_i = idx
        elif direction < 0:
            if x < min_v:
                min_v = x
                min_i = idx
            elif x >= min_v + drop:
                direction = 1
                max_v = x
                max_i = idx
        else:
            if x > max_v:
                min_before_max = min_v
                max_v = x
                max_i = idx
            if x < min_v:
                min_v = x
                min_i = idx
            if x <= max_v - drop:
                if max_v - min_before_max >= drop:
                    peaks[count] = max_i
                    count += 1
                direction = -1
                min_v = x
                min_i = idx
            elif x >= min_v + drop:
                direction = 1
                if not (max_i > min_i and max_v >= x):
                    max_v = x
                    max_i = idx
    return peaks[:count].copy()


# Plain-python originals, kept for the jit-vs-numpy benchmark.
lstm_seq_forward_py = _lstm_seq_forward
lstm_seq_backward_py = _lstm_seq_backward
lookback_tensor_py = _lookback_tensor
smo_solve_py = _smo_solve
peak_scan_py = _peak_scan

USING_NUMBA = False
if numba_requested():
    try:
        from numba import njit
    except ImportError:
        njit = None
    if njit is not None:
        lstm_seq_forward = njit(cache=True)(_lstm_seq_forward)
        lstm_seq_backward = njit(cache=True)(_lstm_seq_backward)
        lookback_tensor = njit(cache=True)(_lookback_tensor)
        smo_solve = njit(cache=True)(_smo_solve)
        peak_scan = njit(cache=True)(_peak_scan)
        USING_NUMBA = True

if not USING_NUMBA:
    lstm_seq_forward = _lstm_seq_forward
    lstm_seq_backward = _lstm_seq_backward
    lookback_tensor = _lookback_tensor
    smo_solve = _smo_solve
    peak_scan = _peak_scan
