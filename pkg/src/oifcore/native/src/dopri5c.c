/*
 * Adaptive Dormand-Prince 5(4) IVP plugin ("dopri5c").
 *
 * Seven-stage embedded pair with FSAL: the seventh stage of an accepted
 * step is reused as the first stage of the next one, so each accepted
 * step costs six fresh RHS evaluations.  Step control is the standard
 * PI-free rule  h <- h * clamp(safety * err^(-1/5), fac_min, fac_max)
 * with acceptance criterion err <= 1 on the scaled RMS error norm.
 *
 * Exported entry points follow oif_ivp_plugin.h with prefix "oif_ivp".
 * A few extra oif_ivp_dbg_* / oif_dopri5_* symbols exist purely so the
 * test suite can probe single steps, the step-size heuristic, and the
 * tableau without going through a full integration.
 */
#include <float.h>
#include <math.h>
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "oif_ivp_plugin.h"

#define NSTAGES 7
#define MAX_CONSECUTIVE_REJECTIONS 50

/* Butcher tableau, row-major a[i*7+j].  Row 6 equals the 5th-order
 * weights b, which is what makes the scheme FSAL. */
const double oif_dopri5_a[NSTAGES * NSTAGES] = {
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0, 0.0,
    19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0,
    0.0, 0.0, 0.0,
    9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
    -5103.0 / 18656.0, 0.0, 0.0,
    35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
    11.0 / 84.0, 0.0,
};

const double oif_dopri5_c[NSTAGES] = {
    0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0,
};

/* 5th-order propagating weights. */
const double oif_dopri5_b[NSTAGES] = {
    35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
    11.0 / 84.0, 0.0,
};

/* Embedded 4th-order weights. */
const double oif_dopri5_bhat[NSTAGES] = {
    5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0,
    -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0,
};

/* b - bhat, used for the error estimate. */
static const double ERRW[NSTAGES] = {
    71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
    -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0,
};

typedef struct {
    intptr_t n;
    double t;
    double *y;
    oif_ivp_rhs_fn rhs;
    void *user_data;
    double reltol, abstol;
    double h_init;   /* <= 0: use the startup heuristic */
    double h_max;    /* <= 0: unbounded */
    long max_steps;  /* per integrate call */
    double safety, fac_min, fac_max;
    int adaptive;
    double h;        /* current controller step, <= 0 until first use */
    double *k[NSTAGES];
    double *ytmp;
    double *y5;
    int k1_fresh;    /* k[0] holds f(t, y) */
    int have_y0, have_rhs;
    intptr_t view_dims[2];   /* shared extents for the two RHS views */
    OIFArrayF64 view_y, view_ydot;
    char err[256];
} Dopri5;

static void set_err(Dopri5 *s, const char *fmt, double a, double b)
{
    snprintf(s->err, sizeof s->err, fmt, a, b);
}

static void free_work(Dopri5 *s)
{
    for (int i = 0; i < NSTAGES; i++) {
        free(s->k[i]);
        s->k[i] = NULL;
    }
    free(s->ytmp);
    free(s->y5);
    free(s->y);
    s->ytmp = s->y5 = s->y = NULL;
}

void *oif_ivp_create(void)
{
    Dopri5 *s = calloc(1, sizeof *s);
    if (s == NULL) {
        return NULL;
    }
    s->reltol = 1e-6;
    s->abstol = 1e-12;
    s->max_steps = 100000;
    s->safety = 0.9;
    s->fac_min = 0.2;
    s->fac_max = 10.0;
    s->adaptive = 1;
    return s;
}

int oif_ivp_destroy(void *self)
{
    Dopri5 *s = self;
    if (s == NULL) {
        return OIF_ERR_INVALID_ARG;
    }
    free_work(s);
    free(s);
    return OIF_OK;
}

const char *oif_ivp_last_error(void *self)
{
    Dopri5 *s = self;
    return s == NULL ? "" : s->err;
}

int oif_ivp_set_initial_value(void *self, OIFArrayF64 *y0, double t0)
{
    Dopri5 *s = self;
    if (s == NULL || y0 == NULL || y0->nd != 1 || y0->dims[0] < 1) {
        if (s != NULL) {
            set_err(s, "initial state must be a 1-d array with >= 1 element",
                    0, 0);
        }
        return OIF_ERR_INVALID_ARG;
    }
    intptr_t n = y0->dims[0];
    if (n != s->n) {
        free_work(s);
        s->y = malloc(n * sizeof(double));
        s->ytmp = malloc(n * sizeof(double));
        s->y5 = malloc(n * sizeof(double));
        for (int i = 0; i < NSTAGES; i++) {
            s->k[i] = malloc(n * sizeof(double));
        }
        int ok = s->y != NULL && s->ytmp != NULL && s->y5 != NULL;
        for (int i = 0; i < NSTAGES; i++) {
            ok = ok && s->k[i] != NULL;
        }
        if (!ok) {
            free_work(s);
            s->n = 0;
            set_err(s, "out of memory for %g-element workspace", (double)n, 0);
            return OIF_ERR_ALLOC;
        }
        s->n = n;
    }
    memcpy(s->y, y0->data, n * sizeof(double));
    s->t = t0;
    s->h = 0.0;          /* restart: step size re-derived on next integrate */
    s->k1_fresh = 0;
    s->have_y0 = 1;
    s->view_y.nd = 1;
    s->view_y.dims = &s->view_dims[0];
    s->view_ydot.nd = 1;
    s->view_ydot.dims = &s->view_dims[1];
    s->view_dims[0] = n;
    s->view_dims[1] = n;
    return OIF_OK;
}

int oif_ivp_set_rhs_fn(void *self, oif_ivp_rhs_fn rhs)
{
    Dopri5 *s = self;
    if (s == NULL || rhs == NULL) {
        if (s != NULL) {
            set_err(s, "RHS callback must not be null", 0, 0);
        }
        return OIF_ERR_INVALID_ARG;
    }
    s->rhs = rhs;
    s->have_rhs = 1;
    s->k1_fresh = 0;
    return OIF_OK;
}

int oif_ivp_set_tolerances(void *self, double reltol, double abstol)
{
    Dopri5 *s = self;
    if (s == NULL) {
        return OIF_ERR_INVALID_ARG;
    }
    if (!(reltol > 0.0) || !(abstol >= 0.0)) {
        set_err(s, "tolerances must satisfy reltol > 0 (got %g) and "
                   "abstol >= 0 (got %g)", reltol, abstol);
        return OIF_ERR_INVALID_ARG;
    }
    s->reltol = reltol;
    s->abstol = abstol;
    return OIF_OK;
}

int oif_ivp_set_user_data(void *self, void *user_data)
{
    Dopri5 *s = self;
    if (s == NULL) {
        return OIF_ERR_INVALID_ARG;
    }
    s->user_data = user_data;
    s->k1_fresh = 0;     /* cached f(t, y) may depend on the context */
    return OIF_OK;
}

/* Walk the config wire form: u32 key length, key bytes, u32 tag,
 * 8-byte value, little-endian throughout. */
static int read_u32(const unsigned char *p, uint32_t *out)
{
    *out = (uint32_t)p[0] | (uint32_t)p[1] << 8 | (uint32_t)p[2] << 16 |
           (uint32_t)p[3] << 24;
    return 4;
}

static int read_val(const unsigned char *p, uint64_t *out)
{
    uint64_t v = 0;
    for (int i = 7; i >= 0; i--) {
        v = v << 8 | p[i];
    }
    *out = v;
    return 8;
}

int oif_ivp_set_integrator(void *self, const char *name,
                           const unsigned char *params, size_t params_len)
{
    Dopri5 *s = self;
    if (s == NULL || name == NULL) {
        return OIF_ERR_INVALID_ARG;
    }
    if (strcmp(name, "dopri5") != 0) {
        snprintf(s->err, sizeof s->err,
                 "no integrator named '%s' (this plugin provides 'dopri5')",
                 name);
        return OIF_ERR_NOT_FOUND;
    }
    size_t pos = 0;
    while (pos < params_len) {
        uint32_t klen, tag;
        uint64_t raw;
        if (pos + 4 > params_len) {
            set_err(s, "truncated config record", 0, 0);
            return OIF_ERR_INVALID_ARG;
        }
        pos += read_u32(params + pos, &klen);
        if (pos + klen + 12 > params_len || klen >= 64) {
            set_err(s, "truncated config record", 0, 0);
            return OIF_ERR_INVALID_ARG;
        }
        char key[64];
        memcpy(key, params + pos, klen);
        key[klen] = '\0';
        pos += klen;
        pos += read_u32(params + pos, &tag);
        pos += read_val(params + pos, &raw);
        long ival = 0;
        double fval = 0.0;
        if (tag == OIF_TAG_INT) {
            ival = (long)(int64_t)raw;
            fval = (double)ival;
        } else if (tag == OIF_TAG_FLOAT64) {
            memcpy(&fval, &raw, sizeof fval);
            ival = (long)fval;
        } else {
            snprintf(s->err, sizeof s->err,
                     "config key '%s' has unsupported tag %u", key, tag);
            return OIF_ERR_INVALID_ARG;
        }
        if (strcmp(key, "max_steps") == 0) {
            if (ival <= 0) {
                set_err(s, "max_steps must be positive (got %g)", fval, 0);
                return OIF_ERR_INVALID_ARG;
            }
            s->max_steps = ival;
        } else if (strcmp(key, "h_init") == 0) {
            if (!(fval > 0.0)) {
                set_err(s, "h_init must be positive (got %g)", fval, 0);
                return OIF_ERR_INVALID_ARG;
            }
            s->h_init = fval;
        } else if (strcmp(key, "h_max") == 0) {
            if (!(fval > 0.0)) {
                set_err(s, "h_max must be positive (got %g)", fval, 0);
                return OIF_ERR_INVALID_ARG;
            }
            s->h_max = fval;
        } else if (strcmp(key, "safety") == 0) {
            if (!(fval > 0.0 && fval < 1.0)) {
                set_err(s, "safety must lie in (0, 1) (got %g)", fval, 0);
                return OIF_ERR_INVALID_ARG;
            }
            s->safety = fval;
        } else if (strcmp(key, "fac_min") == 0) {
            if (!(fval > 0.0 && fval < 1.0)) {
                set_err(s, "fac_min must lie in (0, 1) (got %g)", fval, 0);
                return OIF_ERR_INVALID_ARG;
            }
            s->fac_min = fval;
        } else if (strcmp(key, "fac_max") == 0) {
            if (!(fval > 1.0)) {
                set_err(s, "fac_max must exceed 1 (got %g)", fval, 0);
                return OIF_ERR_INVALID_ARG;
            }
            s->fac_max = fval;
        } else if (strcmp(key, "adaptive") == 0) {
            s->adaptive = ival != 0;
        } else {
            snprintf(s->err, sizeof s->err, "unknown config key '%s'", key);
            return OIF_ERR_INVALID_ARG;
        }
    }
    return OIF_OK;
}

static int eval_rhs(Dopri5 *s, double t, double *y, double *out)
{
    s->view_y.data = y;
    s->view_ydot.data = out;
    return s->rhs(t, &s->view_y, &s->view_ydot, s->user_data);
}

/* One trial step of size h from (s->t, s->y).  Fills s->y5 with the
 * 5th-order candidate, k[1..6] with fresh stages, and *err_norm with the
 * scaled RMS error.  Requires k[0] = f(t, y).  Returns the first nonzero
 * RHS status, if any. */
static int trial_step(Dopri5 *s, double h, double *err_norm)
{
    const intptr_t n = s->n;
    for (int i = 1; i < NSTAGES; i++) {
        const double *arow = &oif_dopri5_a[i * NSTAGES];
        for (intptr_t j = 0; j < n; j++) {
            double acc = 0.0;
            for (int l = 0; l < i; l++) {
                acc += arow[l] * s->k[l][j];
            }
            s->ytmp[j] = s->y[j] + h * acc;
        }
        int status = eval_rhs(s, s->t + oif_dopri5_c[i] * h, s->ytmp,
                              s->k[i]);
        if (status != 0) {
            return status;
        }
    }
    /* Row 6 of a equals b, so the stage-7 state is the 5th-order result
     * and k[6] is already f(t + h, y5): the FSAL stage. */
    memcpy(s->y5, s->ytmp, n * sizeof(double));

    double sumsq = 0.0;
    for (intptr_t j = 0; j < n; j++) {
        double e = 0.0;
        for (int l = 0; l < NSTAGES; l++) {
            e += ERRW[l] * s->k[l][j];
        }
        e *= h;
        double ya = fabs(s->y[j]);
        double yb = fabs(s->y5[j]);
        double sc = s->abstol + s->reltol * (ya > yb ? ya : yb);
        double q = e / sc;
        sumsq += q * q;
    }
    *err_norm = sqrt(sumsq / (double)n);
    return 0;
}

/* Startup step size from the norm-ratio heuristic plus one Euler probe.
 * Requires k[0] = f(t0, y0); uses k[1] and ytmp as scratch. */
static double initial_step(Dopri5 *s, double t_target)
{
    const intptr_t n = s->n;
    double d0 = 0.0, d1 = 0.0;
    for (intptr_t j = 0; j < n; j++) {
        double sc = s->abstol + s->reltol * fabs(s->y[j]);
        double q0 = s->y[j] / sc;
        double q1 = s->k[0][j] / sc;
        d0 += q0 * q0;
        d1 += q1 * q1;
    }
    d0 = sqrt(d0 / (double)n);
    d1 = sqrt(d1 / (double)n);
    if (d1 == 0.0) {
        return 1e-6;
    }
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    double span = t_target - s->t;
    if (h0 > span) {
        h0 = span;
    }
    for (intptr_t j = 0; j < n; j++) {
        s->ytmp[j] = s->y[j] + h0 * s->k[0][j];
    }
    if (eval_rhs(s, s->t + h0, s->ytmp, s->k[1]) != 0) {
        return h0;
    }
    double d2 = 0.0;
    for (intptr_t j = 0; j < n; j++) {
        double sc = s->abstol + s->reltol * fabs(s->y[j]);
        double q = (s->k[1][j] - s->k[0][j]) / sc;
        d2 += q * q;
    }
    d2 = sqrt(d2 / (double)n) / h0;
    double dmax = d1 > d2 ? d1 : d2;
    double h1 = dmax > 1e-15 ? pow(0.01 / dmax, 0.2)
                             : (h0 * 1e-3 > 1e-6 ? h0 * 1e-3 : 1e-6);
    double h = 100.0 * h0 < h1 ? 100.0 * h0 : h1;
    if (!(h > 0.0) || !isfinite(h)) {
        /* overflowing norms (huge RHS values) degenerate to h = 0 */
        h = 1e-6;
    }
    return h;
}

int oif_ivp_integrate(void *self, double t_target, OIFArrayF64 *y_out)
{
    Dopri5 *s = self;
    if (s == NULL) {
        return OIF_ERR_INVALID_ARG;
    }
    if (!s->have_y0 || !s->have_rhs) {
        set_err(s, "integrate requires an initial value and an RHS callback",
                0, 0);
        return OIF_ERR_INVALID_ARG;
    }
    if (y_out == NULL || y_out->nd != 1 || y_out->dims[0] != s->n) {
        set_err(s, "output array must be 1-d with %g elements", (double)s->n,
                0);
        return OIF_ERR_INVALID_ARG;
    }
    if (t_target < s->t) {
        set_err(s, "target time %g is before current time %g", t_target,
                s->t);
        return OIF_ERR_INVALID_ARG;
    }
    if (t_target == s->t) {
        memcpy(y_out->data, s->y, s->n * sizeof(double));
        return OIF_OK;
    }

    if (!s->k1_fresh) {
        int status = eval_rhs(s, s->t, s->y, s->k[0]);
        if (status != 0) {
            set_err(s, "right-hand side failed with status %g at t=%g",
                    (double)status, s->t);
            return OIF_ERR_SOLVER;
        }
        s->k1_fresh = 1;
    }
    if (s->h <= 0.0) {
        s->h = s->h_init > 0.0 ? s->h_init : initial_step(s, t_target);
    }
    if (s->h_max > 0.0 && s->h > s->h_max) {
        s->h = s->h_max;
    }

    long steps = 0;
    int rejections = 0;
    while (s->t < t_target) {
        if (++steps > s->max_steps) {
            memcpy(y_out->data, s->y, s->n * sizeof(double));
            set_err(s, "step budget of %g steps exceeded at t=%g: problem "
                       "is probably stiff", (double)s->max_steps, s->t);
            return OIF_ERR_SOLVER;
        }
        double h = s->h;
        int last = 0;
        if (s->t + h >= t_target) {
            h = t_target - s->t;
            last = 1;
        }
        double err;
        int status = trial_step(s, h, &err);
        if (status != 0) {
            memcpy(y_out->data, s->y, s->n * sizeof(double));
            set_err(s, "right-hand side failed with status %g at t=%g",
                    (double)status, s->t);
            return OIF_ERR_SOLVER;
        }
        if (!s->adaptive || err <= 1.0) {
            rejections = 0;
            s->t = last ? t_target : s->t + h;
            double *tmp = s->y;
            s->y = s->y5;
            s->y5 = tmp;
            tmp = s->k[0];          /* FSAL: k7 becomes next step's k1 */
            s->k[0] = s->k[NSTAGES - 1];
            s->k[NSTAGES - 1] = tmp;
            if (s->adaptive && !last) {
                double fac = err == 0.0
                                 ? s->fac_max
                                 : s->safety * pow(err, -0.2);
                if (fac < s->fac_min) {
                    fac = s->fac_min;
                }
                if (fac > s->fac_max) {
                    fac = s->fac_max;
                }
                s->h = h * fac;
                if (s->h_max > 0.0 && s->h > s->h_max) {
                    s->h = s->h_max;
                }
            }
            /* On a truncated last step s->h keeps its pre-truncation
             * value so later integrate calls resume at full stride. */
        } else {
            if (++rejections >= MAX_CONSECUTIVE_REJECTIONS) {
                memcpy(y_out->data, s->y, s->n * sizeof(double));
                set_err(s, "%g consecutive step rejections at t=%g: problem "
                           "is probably stiff",
                        (double)MAX_CONSECUTIVE_REJECTIONS, s->t);
                return OIF_ERR_SOLVER;
            }
            double fac = s->safety * pow(err, -0.2);
            if (fac < s->fac_min) {
                fac = s->fac_min;
            }
            s->h = h * fac;
            if (s->h < 16.0 * DBL_EPSILON * fabs(s->t)) {
                memcpy(y_out->data, s->y, s->n * sizeof(double));
                set_err(s, "step size underflow (h=%g) at t=%g: problem is "
                           "probably stiff", s->h, s->t);
                return OIF_ERR_SOLVER;
            }
        }
    }
    memcpy(y_out->data, s->y, s->n * sizeof(double));
    return OIF_OK;
}

/* --- test probes, not part of the plugin contract ------------------- */

/* One trial step from the current state without advancing it. */
int oif_ivp_dbg_step(void *self, double h, OIFArrayF64 *y5_out,
                     double *err_norm)
{
    Dopri5 *s = self;
    if (s == NULL || !s->have_y0 || !s->have_rhs || h <= 0.0) {
        return OIF_ERR_INVALID_ARG;
    }
    if (y5_out == NULL || y5_out->nd != 1 || y5_out->dims[0] != s->n) {
        return OIF_ERR_INVALID_ARG;
    }
    int status = eval_rhs(s, s->t, s->y, s->k[0]);
    if (status != 0) {
        return OIF_ERR_SOLVER;
    }
    status = trial_step(s, h, err_norm);
    if (status != 0) {
        return OIF_ERR_SOLVER;
    }
    memcpy(y5_out->data, s->y5, s->n * sizeof(double));
    s->k1_fresh = 0;
    return OIF_OK;
}

/* Startup heuristic for the current session state. */
int oif_ivp_dbg_initial_step(void *self, double t_target, double *h0)
{
    Dopri5 *s = self;
    if (s == NULL || !s->have_y0 || !s->have_rhs || h0 == NULL) {
        return OIF_ERR_INVALID_ARG;
    }
    int status = eval_rhs(s, s->t, s->y, s->k[0]);
    if (status != 0) {
        return OIF_ERR_SOLVER;
    }
    *h0 = initial_step(s, t_target);
    s->k1_fresh = 0;
    return OIF_OK;
}
