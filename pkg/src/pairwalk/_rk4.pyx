# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled RK4 core for the two-particle lattice equation of motion."""

import numpy as np

cdef extern from "_ext/rk4_kernel.h":
    long pw_work_size(long n) nogil
    void pw_rk4_advance(double *f, long n, const double *eps, double hopping,
                        double interaction,
                        double origin, double dt, const double *fields,
                        long nsteps, double *work) nogil


def work_size(long n):
    return pw_work_size(n)


def rk4_advance(double complex[:, ::1] f, const double[::1] onsite,
                double hopping, double interaction, double origin, double dt,
                const double[:, ::1] fields, double[::1] work=None):
    """Advance ``f`` in place by ``len(fields)`` RK4 steps.

    ``fields[s]`` holds the field at the start, midpoint and end of step ``s``.
    """
    cdef long n = f.shape[0]
    cdef long nsteps = fields.shape[0]
    if f.shape[1] != n or onsite.shape[0] != n:
        raise ValueError("grid and onsite energies disagree on lattice size")
    if nsteps and fields.shape[1] != 3:
        raise ValueError("fields must have shape (nsteps, 3)")
    if nsteps == 0:
        return
    if work is None or work.shape[0] < pw_work_size(n):
        work = np.empty(pw_work_size(n), dtype=np.float64)
    with nogil:
        pw_rk4_advance(<double *>&f[0, 0], n, &onsite[0], hopping, interaction, origin,
                       dt, &fields[0, 0], nsteps, &work[0])
