# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled current-stepping solver for a serial MTJ chain.

Mirrors ``mramsim._pykernel.solve_chain`` operation for operation so both
backends return bit-identical results.
"""
from libc.math cimport fabs

cdef enum:
    OK = 0
    RESTART_LIMIT = 1
    CURRENT_LIMIT = 2
    SINGULAR = 3


def solve_chain(const double[:, ::1] params, unsigned char[::1] state,
                double v, double delta_i, long max_restarts, double i_limit):
    cdef Py_ssize_t n_dev = params.shape[0]
    cdef Py_ssize_t d
    cdef long n = 0
    cdef long switches = 0
    cdef double sign, target, i = 0.0, vt = 0.0, a, b, den
    cdef bint restarted

    if v == 0.0:
        return 0.0, 0.0, 0, OK
    sign = 1.0 if v > 0.0 else -1.0
    target = fabs(v)
    while True:
        n += 1
        i = (sign * n) * delta_i
        if fabs(i) > i_limit:
            return i, vt, switches, CURRENT_LIMIT
        vt = 0.0
        restarted = False
        for d in range(n_dev):
            if state[d] == 0 and i >= params[d, 5]:
                state[d] = 1
                restarted = True
            elif state[d] == 1 and i <= params[d, 4]:
                state[d] = 0
                restarted = True
            if restarted:
                switches += 1
                if switches > max_restarts:
                    return i, vt, switches, RESTART_LIMIT
                n = 0
                break
            if state[d] == 1:
                a = params[d, 0]
                b = params[d, 1]
            else:
                a = params[d, 2]
                b = params[d, 3]
            den = 1.0 - a * fabs(i)
            if den <= 0.0:
                return i, vt, switches, SINGULAR
            vt += i * b / den
        if restarted:
            continue
        if fabs(vt) >= target:
            return i, vt, switches, OK
