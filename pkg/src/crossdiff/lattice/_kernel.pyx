# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled event kernel for the lattice simulator.

Integer-only inner loop: the xoshiro256++ state arrives as a uint64[4] array
and is advanced in place, so the Python driver (which draws the Poisson event
counts from the same stream) and this kernel interleave on one deterministic
draw sequence.  The pure-Python twin in _kernel_py consumes draws in exactly
the same order.
"""

from libc.stdint cimport int64_t, uint8_t, uint64_t

NAME = "compiled"


cdef inline uint64_t _rotl(uint64_t x, int k) nogil:
    return (x << k) | (x >> (64 - k))


cdef inline uint64_t _next(uint64_t* s) nogil:
    cdef uint64_t result = _rotl(s[0] + s[3], 23) + s[0]
    cdef uint64_t t = s[1] << 17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


def run_events(uint8_t[::1] sites, uint64_t[::1] state, int64_t n_events,
               uint64_t bond_mask, int64_t n_bonds,
               uint64_t[:, ::1] thresh, uint8_t[:, ::1] always):
    """Apply n_events candidate events in place; advance state in place."""
    cdef uint64_t s[4]
    cdef uint64_t r
    cdef int64_t i, k
    cdef uint8_t a, b
    s[0] = state[0]
    s[1] = state[1]
    s[2] = state[2]
    s[3] = state[3]
    with nogil:
        for i in range(n_events):
            while True:
                r = _next(s)
                k = <int64_t> (r & bond_mask)
                if k < n_bonds:
                    break
            a = sites[k]
            b = sites[k + 1]
            # the diagonal of `always` is set, so equal-label candidates
            # fall through to a no-op swap without branching on a == b
            if not always[a, b]:
                r = _next(s)
                if r >= thresh[a, b]:
                    continue
            sites[k] = b
            sites[k + 1] = a
    state[0] = s[0]
    state[1] = s[1]
    state[2] = s[2]
    state[3] = s[3]
