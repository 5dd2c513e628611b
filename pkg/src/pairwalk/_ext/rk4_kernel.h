#ifndef PAIRWALK_RK4_KERNEL_H
#define PAIRWALK_RK4_KERNEL_H

/* Size (in doubles) of the scratch buffer rk4_advance needs for an n x n grid. */
long pw_work_size(long n);

/*
 * Advance f (n x n complex128, row-major, viewed as interleaved doubles) by
 * nsteps classical RK4 steps of the two-particle Hubbard equation of motion
 *
 *   i df/dt = J hop(f) + [eps[n1] + eps[n2] - F (n1 - origin + n2 - origin)
 *                       + U delta(n1, n2)] f
 *
 * with open boundaries. fields holds 3 values per step: F(t), F(t + dt/2),
 * F(t + dt). work must hold pw_work_size(n) doubles.
 */
void pw_rk4_advance(double *f, long n, const double *eps, double hopping,
                    double interaction,
                    double origin, double dt, const double *fields,
                    long nsteps, double *work);

#endif
