"""Pure numpy RK4 loop, same contract as the compiled ``_rk4.rk4_run``."""

import numpy as np


def rk4_run(S, y0, d, h, nsteps, record_every):
    S = np.ascontiguousarray(S, dtype=np.complex128)
    y = np.array(y0, dtype=np.complex128)
    nrec = nsteps // record_every + 1 + (1 if nsteps % record_every else 0)
    steps = np.empty(nrec, dtype=np.int64)
    states = np.empty((nrec, d * d), dtype=np.complex128)
    tdef = np.zeros(nrec)
    hdef = np.zeros(nrec)
    steps[0] = 0
    states[0] = y
    diag = np.arange(d) * (d + 1)
    r = 1
    max_td = max_hd = 0.0
    half, sixth = 0.5 * h, h / 6.0
    for step in range(1, nsteps + 1):
        k1 = S @ y
        k2 = S @ (y + half * k1)
        k3 = S @ (y + half * k2)
        k4 = S @ (y + h * k3)
        y = y + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        m = y.reshape(d, d, order="F")
        td = abs(m.trace() - 1.0)
        hd = np.linalg.norm(m - m.conj().T)
        m = 0.5 * (m + m.conj().T)
        y = m.reshape(-1, order="F")
        y = y / y[diag].real.sum()
        max_td = max(max_td, td)
        max_hd = max(max_hd, hd)

        if step % record_every == 0 or step == nsteps:
            steps[r] = step
            states[r] = y
            tdef[r] = max_td
            hdef[r] = max_hd
            max_td = max_hd = 0.0
            r += 1
    return steps, states, tdef, hdef
