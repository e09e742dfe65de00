"""Pure-Python current-stepping solver; fallback for the compiled kernel."""
import math

OK, RESTART_LIMIT, CURRENT_LIMIT, SINGULAR = range(4)


def solve_chain(params, state, v, delta_i, max_restarts, i_limit):
    """Ramp the chain current from zero until the summed drop reaches ``|v|``.

    ``params`` is an (N, 6) array of (a1, b1, a0, b0, cN, cP) rows and
    ``state`` a uint8 array (1 = HIGH) updated in place.  Any switch resets
    the current to zero and restarts the ramp.  Returns
    ``(current, total_voltage, n_switches, status)``.
    """
    if v == 0.0:
        return 0.0, 0.0, 0, OK
    rows = [tuple(float(x) for x in row) for row in params]
    st = [int(s) for s in state]
    sign = 1.0 if v > 0.0 else -1.0
    target = math.fabs(v)
    n = 0
    switches = 0
    i = vt = 0.0
    try:
        while True:
            n += 1
            i = (sign * n) * delta_i
            if math.fabs(i) > i_limit:
                return i, vt, switches, CURRENT_LIMIT
            vt = 0.0
            restarted = False
            for d, (a1, b1, a0, b0, cn, cp) in enumerate(rows):
                s = st[d]
                if s == 0 and i >= cp:
                    st[d] = 1
                    restarted = True
                elif s == 1 and i <= cn:
                    st[d] = 0
                    restarted = True
                if restarted:
                    switches += 1
                    if switches > max_restarts:
                        return i, vt, switches, RESTART_LIMIT
                    n = 0
                    break
                if s == 1:
                    a, b = a1, b1
                else:
                    a, b = a0, b0
                den = 1.0 - a * math.fabs(i)
                if den <= 0.0:
                    return i, vt, switches, SINGULAR
                vt += i * b / den
            if restarted:
                continue
            if math.fabs(vt) >= target:
                return i, vt, switches, OK
    finally:
        state[:] = st
