"""Compiled slot loop used by :func:`age_metrics.simulator.simulate`.

Packets are stored as generation-slot stamps in a power-of-two ring buffer,
oldest first; the age of a stamp ``g`` at the end of slot ``n`` is
``n - g + 1``.  FCFS pops the head, every other scenario pops the tail.
"""

import numpy as np
from numba import njit

FCFS, LCFS, BUFFER, BATTERY = 0, 1, 2, 3

# indices into the int64 state vector
S_AOI, S_AOA, S_AOAI, S_HEAD, S_LEN, S_BATTERY, S_SLOT = 0, 1, 2, 3, 4, 5, 6
# indices into the int64 counter vector
C_ACTUATIONS, C_VIOLATIONS, C_INFEASIBLE, C_MAXLEN, C_OVERFLOW_SLOT = 0, 1, 2, 3, 4
N_STATE, N_COUNTERS = 7, 5

TRACE_COLUMNS = ("slot", "arrival", "opportunity", "actuated", "aoi", "aoa", "aoai", "queue_len", "battery")


def new_state():
    st = np.zeros(N_STATE, dtype=np.int64)
    st[S_AOI] = st[S_AOA] = st[S_AOAI] = 1
    return st


@njit(nogil=True, cache=True)
def run_chunk(code, arrivals, opportunities, st, buf, sums, counters,
              warmup, batch_len, n_batches, trace, trace_limit, cap):
    """Advance the system over one chunk of pre-drawn events.

    Returns the (possibly reallocated) ring buffer.  On queue overflow the
    offending slot is written to ``counters[C_OVERFLOW_SLOT]`` and the loop
    stops.
    """
    aoi = st[S_AOI]
    aoa = st[S_AOA]
    aoai = st[S_AOAI]
    head = st[S_HEAD]
    length = st[S_LEN]
    battery = st[S_BATTERY]
    n = st[S_SLOT]
    mask = buf.shape[0] - 1
    counted_end = warmup + batch_len * n_batches

    for k in range(arrivals.shape[0]):
        n += 1
        arrival = arrivals[k]
        opp = opportunities[k]
        nonempty_prev = length > 0

        if arrival:
            if code >= BUFFER:
                # replace-on-arrival single buffer
                buf[head] = n
                length = 1
            else:
                if length >= cap:
                    counters[C_OVERFLOW_SLOT] = n
                    break
                if length == mask + 1:
                    grown = np.empty(2 * (mask + 1), dtype=np.int64)
                    for i in range(length):
                        grown[i] = buf[(head + i) & mask]
                    buf = grown
                    head = 0
                    mask = buf.shape[0] - 1
                buf[(head + length) & mask] = n
                length += 1

        energy = opp
        if code == BATTERY:
            energy = opp or battery == 1
        actuated = energy and (nonempty_prev or arrival)

        packet_age = 0
        if actuated:
            if code == FCFS:
                packet_age = n - buf[head] + 1
                head = (head + 1) & mask
            else:
                packet_age = n - buf[(head + length - 1) & mask] + 1
            length -= 1
            if code == BATTERY and not opp:
                battery = 0
        elif code == BATTERY and opp:
            battery = 1

        aoi = 1 if arrival else aoi + 1
        aoa = 1 if actuated else aoa + 1
        if actuated:
            aoai = min(aoai + 1, packet_age)
        else:
            aoai += 1

        if aoai < aoi or aoai < aoa or aoi < 1 or aoa < 1:
            counters[C_VIOLATIONS] += 1
        if code == BATTERY and battery == 1 and length > 0:
            counters[C_INFEASIBLE] += 1
        if length > counters[C_MAXLEN]:
            counters[C_MAXLEN] = length

        if n <= trace_limit:
            row = n - 1
            trace[row, 0] = n
            trace[row, 1] = arrival
            trace[row, 2] = opp
            trace[row, 3] = actuated
            trace[row, 4] = aoi
            trace[row, 5] = aoa
            trace[row, 6] = aoai
            trace[row, 7] = length
            trace[row, 8] = battery

        if warmup < n <= counted_end:
            b = (n - warmup - 1) // batch_len
            sums[b, 0] += aoi
            sums[b, 1] += aoa
            sums[b, 2] += aoai
            if actuated:
                counters[C_ACTUATIONS] += 1

    st[S_AOI] = aoi
    st[S_AOA] = aoa
    st[S_AOAI] = aoai
    st[S_HEAD] = head
    st[S_LEN] = length
    st[S_BATTERY] = battery
    st[S_SLOT] = n
    return buf
