# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled fixed-step RK4 loop for dy/dt = S y on column-stacked density matrices."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef inline void _matvec(const double complex[:, ::1] S, const double complex[::1] x,
                         double complex[::1] out, Py_ssize_t n) noexcept nogil:
    # real arithmetic avoids the NaN-safe complex multiply helper
    cdef Py_ssize_t i, j
    cdef double re, im, sr, si, xr, xi
    for i in range(n):
        re = 0.0
        im = 0.0
        for j in range(n):
            sr = S[i, j].real
            si = S[i, j].imag
            xr = x[j].real
            xi = x[j].imag
            re += sr * xr - si * xi
            im += sr * xi + si * xr
        out[i].real = re
        out[i].imag = im


def rk4_run(S, y0, Py_ssize_t d, double h, Py_ssize_t nsteps, Py_ssize_t record_every):
    cdef double complex[:, ::1] Sv = np.ascontiguousarray(S, dtype=np.complex128)
    cdef Py_ssize_t n = d * d
    cdef double complex[::1] y = np.array(y0, dtype=np.complex128)
    cdef double complex[::1] k1 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] k2 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] k3 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] k4 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] tmp = np.empty(n, dtype=np.complex128)

    cdef Py_ssize_t nrec = nsteps // record_every + 1
    if nsteps % record_every:
        nrec += 1
    steps_np = np.empty(nrec, dtype=np.int64)
    states_np = np.empty((nrec, n), dtype=np.complex128)
    tdef_np = np.zeros(nrec, dtype=np.float64)
    hdef_np = np.zeros(nrec, dtype=np.float64)
    cdef long long[::1] steps = steps_np
    cdef double complex[:, ::1] states = states_np
    cdef double[::1] tdef = tdef_np
    cdef double[::1] hdef = hdef_np

    cdef Py_ssize_t step, i, j, a, b, r = 0
    cdef double half = 0.5 * h, sixth = h / 6.0
    cdef double complex tr, za, zb
    cdef double hd, td, max_td = 0.0, max_hd = 0.0, trr

    steps[0] = 0
    for i in range(n):
        states[0, i] = y[i]
    r = 1

    with nogil:
        for step in range(1, nsteps + 1):
            _matvec(Sv, y, k1, n)
            for i in range(n):
                tmp[i] = y[i] + half * k1[i]
            _matvec(Sv, tmp, k2, n)
            for i in range(n):
                tmp[i] = y[i] + half * k2[i]
            _matvec(Sv, tmp, k3, n)
            for i in range(n):
                tmp[i] = y[i] + h * k3[i]
            _matvec(Sv, tmp, k4, n)
            for i in range(n):
                y[i] = y[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])

            # pre-correction defects, then re-Hermitize and renormalize trace
            tr = 0
            for i in range(d):
                tr = tr + y[i + i * d]
            td = sqrt((tr.real - 1.0) * (tr.real - 1.0) + tr.imag * tr.imag)
            hd = 0.0
            for j in range(d):
                for i in range(j + 1, d):
                    a = i + j * d
                    b = j + i * d
                    za = y[a]
                    zb = y[b]
                    hd += 2.0 * ((za.real - zb.real) * (za.real - zb.real)
                                 + (za.imag + zb.imag) * (za.imag + zb.imag))
                    y[a] = 0.5 * (za + zb.conjugate())
                    y[b] = y[a].conjugate()
                a = j + j * d
                hd += 4.0 * y[a].imag * y[a].imag
                y[a] = y[a].real
            hd = sqrt(hd)
            trr = 0.0
            for i in range(d):
                trr += y[i + i * d].real
            for i in range(n):
                y[i] = y[i] / trr
            if td > max_td:
                max_td = td
            if hd > max_hd:
                max_hd = hd

            if step % record_every == 0 or step == nsteps:
                steps[r] = step
                for i in range(n):
                    states[r, i] = y[i]
                tdef[r] = max_td
                hdef[r] = max_hd
                max_td = 0.0
                max_hd = 0.0
                r += 1

    return steps_np, states_np, tdef_np, hdef_np
