#include <string.h>

#include "rk4_kernel.h"

#if defined(__SSE__)
#include <xmmintrin.h>
#define PW_HAVE_MXCSR 1
#endif

/*
 * Grids live in zero-padded buffers of (n + 2) x (n + 2) complex values so the
 * stencil has no boundary branches. The halo is never written.
 */

enum { STAGE_FIRST = 0, STAGE_MIDDLE = 1, STAGE_LAST = 2 };

long pw_work_size(long n)
{
    long m = 2 * (n + 2);
    return 4 * m * (n + 2) + 3 * n;
}

/*
 * One RK4 stage: k = -i H src;  acc (+)= w k;  nxt = base + a k.
 * pot holds the per-index potential eps[j] - F (j - origin).
 */
static void stage(const double *restrict src, const double *restrict base,
                  double *restrict nxt, double *restrict acc,
                  const double *restrict pot, double hop, double interaction,
                  double a, double w, int mode, long n)
{
    const long m = 2 * (n + 2);

    for (long i = 0; i < n; i++) {
        const long o = (i + 1) * m + 2;
        const double *restrict s = src + o;
        const double *restrict b = base + o;
        double *restrict ac = acc + o;
        double *restrict nx = nxt + o;
        const double rowpot = pot[i];

        if (mode == STAGE_FIRST) {
            for (long j = 0; j < n; j++) {
                const double p = rowpot + pot[j];
                const double hr = hop * (s[2*j - 2] + s[2*j + 2] + s[2*j - m] + s[2*j + m]) + p * s[2*j];
                const double hi = hop * (s[2*j - 1] + s[2*j + 3] + s[2*j + 1 - m] + s[2*j + 1 + m]) + p * s[2*j + 1];
                ac[2*j] = b[2*j] + w * hi;
                ac[2*j + 1] = b[2*j + 1] - w * hr;
                nx[2*j] = b[2*j] + a * hi;
                nx[2*j + 1] = b[2*j + 1] - a * hr;
            }
        } else if (mode == STAGE_MIDDLE) {
            for (long j = 0; j < n; j++) {
                const double p = rowpot + pot[j];
                const double hr = hop * (s[2*j - 2] + s[2*j + 2] + s[2*j - m] + s[2*j + m]) + p * s[2*j];
                const double hi = hop * (s[2*j - 1] + s[2*j + 3] + s[2*j + 1 - m] + s[2*j + 1 + m]) + p * s[2*j + 1];
                ac[2*j] += w * hi;
                ac[2*j + 1] -= w * hr;
                nx[2*j] = b[2*j] + a * hi;
                nx[2*j + 1] = b[2*j + 1] - a * hr;
            }
        } else {
            for (long j = 0; j < n; j++) {
                const double p = rowpot + pot[j];
                const double hr = hop * (s[2*j - 2] + s[2*j + 2] + s[2*j - m] + s[2*j + m]) + p * s[2*j];
                const double hi = hop * (s[2*j - 1] + s[2*j + 3] + s[2*j + 1 - m] + s[2*j + 1 + m]) + p * s[2*j + 1];
                ac[2*j] += w * hi;
                ac[2*j + 1] -= w * hr;
            }
        }

        /* Hubbard term on the diagonal */
        const double ur = interaction * s[2*i];
        const double ui = interaction * s[2*i + 1];
        ac[2*i] += w * ui;
        ac[2*i + 1] -= w * ur;
        if (mode != STAGE_LAST) {
            nx[2*i] += a * ui;
            nx[2*i + 1] -= a * ur;
        }
    }
}

static void fill_potential(double *pot, const double *eps, double field,
                           double origin, long n)
{
    if (field == 0.0) {
        memcpy(pot, eps, n * sizeof(double));
        return;
    }
    for (long j = 0; j < n; j++)
        pot[j] = eps[j] - field * ((double)j - origin);
}

void pw_rk4_advance(double *f, long n, const double *eps, double hopping,
                    double interaction,
                    double origin, double dt, const double *fields,
                    long nsteps, double *work)
{
    const long m = 2 * (n + 2);
    const long size = m * (n + 2);
    double *pf = work;
    double *p1 = work + size;
    double *p2 = work + 2 * size;
    double *pa = work + 3 * size;
    double *pot = work + 4 * size;
    double *tmp;

#ifdef PW_HAVE_MXCSR
    /* flush subnormals: far tails underflow long before they matter */
    const unsigned int csr = _mm_getcsr();
    _mm_setcsr(csr | 0x8040);
#endif

    memset(work, 0, 4 * size * sizeof(double));
    for (long i = 0; i < n; i++)
        memcpy(pf + (i + 1) * m + 2, f + 2 * n * i, 2 * n * sizeof(double));

    for (long s = 0; s < nsteps; s++) {
        const double *fs = fields + 3 * s;
        fill_potential(pot, eps, fs[0], origin, n);
        stage(pf, pf, p1, pa, pot, hopping, interaction, 0.5 * dt, dt / 6.0, STAGE_FIRST, n);
        fill_potential(pot, eps, fs[1], origin, n);
        stage(p1, pf, p2, pa, pot, hopping, interaction, 0.5 * dt, dt / 3.0, STAGE_MIDDLE, n);
        stage(p2, pf, p1, pa, pot, hopping, interaction, dt, dt / 3.0, STAGE_MIDDLE, n);
        fill_potential(pot, eps, fs[2], origin, n);
        stage(p1, pf, p2, pa, pot, hopping, interaction, 0.0, dt / 6.0, STAGE_LAST, n);
        tmp = pf;
        pf = pa;
        pa = tmp;
    }

    for (long i = 0; i < n; i++)
        memcpy(f + 2 * n * i, pf + (i + 1) * m + 2, 2 * n * sizeof(double));

#ifdef PW_HAVE_MXCSR
    _mm_setcsr(csr);
#endif
}
