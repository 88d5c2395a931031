/*
 * Classical fixed-step fourth-order Runge-Kutta IVP plugin ("rk4").
 *
 * Steps with a constant step size taken from the "step" config key
 * (default 0.01), truncating only the final step so the session lands
 * exactly on the requested time.  Tolerances are accepted for interface
 * compatibility but ignored.  Exported entry points follow
 * oif_ivp_plugin.h with prefix "oif_ivp".
 */
#include <math.h>
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "oif_ivp_plugin.h"

typedef struct {
    intptr_t n;
    double t;
    double *y;
    oif_ivp_rhs_fn rhs;
    void *user_data;
    double step;
    double *k1, *k2, *k3, *k4, *ytmp;
    int have_y0, have_rhs;
    intptr_t view_dims[2];
    OIFArrayF64 view_y, view_ydot;
    char err[256];
} Rk4;

static void free_work(Rk4 *s)
{
    free(s->k1);
    free(s->k2);
    free(s->k3);
    free(s->k4);
    free(s->ytmp);
    free(s->y);
    s->k1 = s->k2 = s->k3 = s->k4 = s->ytmp = s->y = NULL;
}

void *oif_ivp_create(void)
{
    Rk4 *s = calloc(1, sizeof *s);
    if (s == NULL) {
        return NULL;
    }
    s->step = 0.01;
    return s;
}

int oif_ivp_destroy(void *self)
{
    Rk4 *s = self;
    if (s == NULL) {
        return OIF_ERR_INVALID_ARG;
    }
    free_work(s);
    free(s);
    return OIF_OK;
}

const char *oif_ivp_last_error(void *self)
{
    Rk4 *s = self;
    return s == NULL ? "" : s->err;
}

int oif_ivp_set_initial_value(void *self, OIFArrayF64 *y0, double t0)
{
    Rk4 *s = self;
    if (s == NULL || y0 == NULL || y0->nd != 1 || y0->dims[0] < 1) {
        if (s != NULL) {
            snprintf(s->err, sizeof s->err,
                     "initial state must be a 1-d array with >= 1 element");
        }
        return OIF_ERR_INVALID_ARG;
    }
    intptr_t n = y0->dims[0];
    if (n != s->n) {
        free_work(s);
        s->y = malloc(n * sizeof(double));
        s->k1 = malloc(n * sizeof(double));
        s->k2 = malloc(n * sizeof(double));
        s->k3 = malloc(n * sizeof(double));
        s->k4 = malloc(n * sizeof(double));
        s->ytmp = malloc(n * sizeof(double));
        if (s->y == NULL || s->k1 == NULL || s->k2 == NULL ||
            s->k3 == NULL || s->k4 == NULL || s->ytmp == NULL) {
            free_work(s);
            s->n = 0;
            snprintf(s->err, sizeof s->err, "out of memory");
            return OIF_ERR_ALLOC;
        }
        s->n = n;
    }
    memcpy(s->y, y0->data, n * sizeof(double));
    s->t = t0;
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
    Rk4 *s = self;
    if (s == NULL || rhs == NULL) {
        if (s != NULL) {
            snprintf(s->err, sizeof s->err, "RHS callback must not be null");
        }
        return OIF_ERR_INVALID_ARG;
    }
    s->rhs = rhs;
    s->have_rhs = 1;
    return OIF_OK;
}

int oif_ivp_set_tolerances(void *self, double reltol, double abstol)
{
    Rk4 *s = self;
    if (s == NULL) {
        return OIF_ERR_INVALID_ARG;
    }
    if (!(reltol > 0.0) || !(abstol >= 0.0)) {
        snprintf(s->err, sizeof s->err,
                 "tolerances must satisfy reltol > 0 and abstol >= 0");
        return OIF_ERR_INVALID_ARG;
    }
    /* Fixed-step method: accepted, not used. */
    return OIF_OK;
}

int oif_ivp_set_user_data(void *self, void *user_data)
{
    Rk4 *s = self;
    if (s == NULL) {
        return OIF_ERR_INVALID_ARG;
    }
    s->user_data = user_data;
    return OIF_OK;
}

static uint32_t get_u32(const unsigned char *p)
{
    return (uint32_t)p[0] | (uint32_t)p[1] << 8 | (uint32_t)p[2] << 16 |
           (uint32_t)p[3] << 24;
}

int oif_ivp_set_integrator(void *self, const char *name,
                           const unsigned char *params, size_t params_len)
{
    Rk4 *s = self;
    if (s == NULL || name == NULL) {
        return OIF_ERR_INVALID_ARG;
    }
    if (strcmp(name, "rk4") != 0) {
        snprintf(s->err, sizeof s->err,
                 "no integrator named '%s' (this plugin provides 'rk4')",
                 name);
        return OIF_ERR_NOT_FOUND;
    }
    size_t pos = 0;
    while (pos < params_len) {
        if (pos + 4 > params_len) {
            snprintf(s->err, sizeof s->err, "truncated config record");
            return OIF_ERR_INVALID_ARG;
        }
        uint32_t klen = get_u32(params + pos);
        pos += 4;
        if (pos + klen + 12 > params_len || klen >= 64) {
            snprintf(s->err, sizeof s->err, "truncated config record");
            return OIF_ERR_INVALID_ARG;
        }
        char key[64];
        memcpy(key, params + pos, klen);
        key[klen] = '\0';
        pos += klen;
        uint32_t tag = get_u32(params + pos);
        pos += 4;
        uint64_t raw = 0;
        for (int i = 7; i >= 0; i--) {
            raw = raw << 8 | params[pos + i];
        }
        pos += 8;
        if (strcmp(key, "step") == 0) {
            double fval;
            if (tag == OIF_TAG_FLOAT64) {
                memcpy(&fval, &raw, sizeof fval);
            } else if (tag == OIF_TAG_INT) {
                fval = (double)(int64_t)raw;
            } else {
                snprintf(s->err, sizeof s->err,
                         "config key 'step' has unsupported tag %u", tag);
                return OIF_ERR_INVALID_ARG;
            }
            if (!(fval > 0.0)) {
                snprintf(s->err, sizeof s->err,
                         "step must be positive (got %g)", fval);
                return OIF_ERR_INVALID_ARG;
            }
            s->step = fval;
        } else {
            snprintf(s->err, sizeof s->err, "unknown config key '%s'", key);
            return OIF_ERR_INVALID_ARG;
        }
    }
    return OIF_OK;
}

static int eval_rhs(Rk4 *s, double t, double *y, double *out)
{
    s->view_y.data = y;
    s->view_ydot.data = out;
    return s->rhs(t, &s->view_y, &s->view_ydot, s->user_data);
}

int oif_ivp_integrate(void *self, double t_target, OIFArrayF64 *y_out)
{
    Rk4 *s = self;
    if (s == NULL) {
        return OIF_ERR_INVALID_ARG;
    }
    if (!s->have_y0 || !s->have_rhs) {
        snprintf(s->err, sizeof s->err,
                 "integrate requires an initial value and an RHS callback");
        return OIF_ERR_INVALID_ARG;
    }
    if (y_out == NULL || y_out->nd != 1 || y_out->dims[0] != s->n) {
        snprintf(s->err, sizeof s->err,
                 "output array must be 1-d with %ld elements", (long)s->n);
        return OIF_ERR_INVALID_ARG;
    }
    if (t_target < s->t) {
        snprintf(s->err, sizeof s->err,
                 "target time %g is before current time %g", t_target, s->t);
        return OIF_ERR_INVALID_ARG;
    }
    const intptr_t n = s->n;
    while (s->t < t_target) {
        double rem = t_target - s->t;
        double h = rem < s->step ? rem : s->step;
        int status = eval_rhs(s, s->t, s->y, s->k1);
        if (status == 0) {
            for (intptr_t j = 0; j < n; j++) {
                s->ytmp[j] = s->y[j] + 0.5 * h * s->k1[j];
            }
            status = eval_rhs(s, s->t + 0.5 * h, s->ytmp, s->k2);
        }
        if (status == 0) {
            for (intptr_t j = 0; j < n; j++) {
                s->ytmp[j] = s->y[j] + 0.5 * h * s->k2[j];
            }
            status = eval_rhs(s, s->t + 0.5 * h, s->ytmp, s->k3);
        }
        if (status == 0) {
            for (intptr_t j = 0; j < n; j++) {
                s->ytmp[j] = s->y[j] + h * s->k3[j];
            }
            status = eval_rhs(s, s->t + h, s->ytmp, s->k4);
        }
        if (status != 0) {
            memcpy(y_out->data, s->y, n * sizeof(double));
            snprintf(s->err, sizeof s->err,
                     "right-hand side failed with status %d at t=%g", status,
                     s->t);
            return OIF_ERR_SOLVER;
        }
        for (intptr_t j = 0; j < n; j++) {
            s->y[j] += h / 6.0 *
                       (s->k1[j] + 2.0 * (s->k2[j] + s->k3[j]) + s->k4[j]);
        }
        s->t = h == rem ? t_target : s->t + h;
    }
    memcpy(y_out->data, s->y, n * sizeof(double));
    return OIF_OK;
}
