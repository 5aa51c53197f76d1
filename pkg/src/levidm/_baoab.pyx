# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled BAOAB inner loop.

Draws its Gaussian increments straight from NumPy bit generators through the
``numpy.random`` C API, so the stream consumed per step is identical to
``Generator(bitgen).standard_normal`` used by the NumPy fallback.
"""
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport cos, isfinite
from libc.stdlib cimport free, malloc
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_normal


def integrate_chunk(
    double[:, ::1] state,
    long long step0,
    long long n_steps,
    double dt,
    double[::1] omega2,
    double[::1] c1,
    double[:, ::1] noise_coef,
    list bitgens,
    double[::1] const_acc,
    double[:, ::1] harm_acc,
    double[::1] harm_w,
    double[::1] harm_phase,
    long long[::1] kick_step,
    double[:, ::1] kick_dv,
    long long record_every,
    double[:, ::1] out_x,
    double[:, ::1] out_v,
    long long rec_index,
):
    """Advance ``state`` (rows x, v; columns axes) by ``n_steps`` steps.

    Returns ``(rec_index, bad_step)`` where ``bad_step`` is -1 unless the
    state became non-finite.
    """
    cdef Py_ssize_t n_streams = len(bitgens)
    cdef Py_ssize_t n_harm = harm_w.shape[0]
    cdef Py_ssize_t n_kick = kick_step.shape[0]
    cdef Py_ssize_t j, k, h, kick_ptr = 0
    cdef long long n, step_end = step0 + n_steps
    cdef double half = 0.5 * dt
    cdef double t, f
    cdef double x[3]
    cdef double v[3]
    cdef double acc[3]
    cdef double xi[64]
    cdef bitgen_t **gens
    cdef long long bad = -1

    if n_streams > 64:
        raise ValueError("at most 64 noise streams are supported")
    gens = <bitgen_t **> malloc(max(n_streams, 1) * sizeof(bitgen_t *))
    if gens == NULL:
        raise MemoryError()
    try:
        for k in range(n_streams):
            gens[k] = <bitgen_t *> PyCapsule_GetPointer(bitgens[k].capsule, "BitGenerator")

        for j in range(3):
            x[j] = state[0, j]
            v[j] = state[1, j]
        while kick_ptr < n_kick and kick_step[kick_ptr] < step0:
            kick_ptr += 1

        with nogil:
            t = step0 * dt
            for j in range(3):
                f = const_acc[j]
                for h in range(n_harm):
                    f = f + harm_acc[h, j] * cos(harm_w[h] * t + harm_phase[h])
                acc[j] = f - omega2[j] * x[j]

            for n in range(step0, step_end):
                while kick_ptr < n_kick and kick_step[kick_ptr] == n:
                    for j in range(3):
                        v[j] = v[j] + kick_dv[kick_ptr, j]
                    kick_ptr += 1
                if n % record_every == 0:
                    for j in range(3):
                        out_x[j, rec_index] = x[j]
                        out_v[j, rec_index] = v[j]
                    rec_index += 1

                for k in range(n_streams):
                    xi[k] = random_standard_normal(gens[k])
                t = (n + 1) * dt
                for j in range(3):
                    v[j] = v[j] + half * acc[j]
                    x[j] = x[j] + half * v[j]
                    f = c1[j] * v[j]
                    for k in range(n_streams):
                        f = f + noise_coef[j, k] * xi[k]
                    v[j] = f
                    x[j] = x[j] + half * v[j]
                    f = const_acc[j]
                    for h in range(n_harm):
                        f = f + harm_acc[h, j] * cos(harm_w[h] * t + harm_phase[h])
                    acc[j] = f - omega2[j] * x[j]
                    v[j] = v[j] + half * acc[j]
                if not (isfinite(x[0]) and isfinite(x[1]) and isfinite(x[2])
                        and isfinite(v[0]) and isfinite(v[1]) and isfinite(v[2])):
                    bad = n
                    break
    finally:
        free(gens)

    for j in range(3):
        state[0, j] = x[j]
        state[1, j] = v[j]
    return rec_index, bad
