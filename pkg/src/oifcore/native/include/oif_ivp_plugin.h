/*
 * Adapter entry points that an IVP plugin shared library must export.
 *
 * The loader resolves symbols by name as "<prefix>_<method>", where the
 * prefix comes from the implementation manifest (the bundled plugins use
 * "oif_ivp").  Every entry point uses the platform's default C calling
 * convention and returns an int status: 0 on success, negative on failure
 * (see the OIF_ERR_* codes below).
 *
 * Required symbols for prefix P:
 *
 *   void *P_create(void);
 *   int   P_destroy(void *self);
 *   int   P_set_initial_value(void *self, OIFArrayF64 *y0, double t0);
 *   int   P_set_rhs_fn(void *self, oif_ivp_rhs_fn rhs);
 *   int   P_set_tolerances(void *self, double reltol, double abstol);
 *   int   P_set_user_data(void *self, void *user_data);
 *   int   P_set_integrator(void *self, const char *name,
 *                          const unsigned char *params, size_t params_len);
 *   int   P_integrate(void *self, double t, OIFArrayF64 *y);
 *
 * Optional:
 *
 *   const char *P_last_error(void *self);
 *     Human-readable reason for the most recent failure on this session.
 *     The returned pointer must stay valid until the next call on the
 *     same session.
 *
 * Boundary layouts (bit-exact, natural alignment, no extra padding):
 *
 *   OIFArrayF64: field 0 = nd   (pointer-sized signed integer, >= 1)
 *                field 1 = dims (pointer to nd pointer-sized signed ints)
 *                field 2 = data (pointer to contiguous row-major float64)
 *     The struct never owns its storage; callers allocate and release it.
 *
 *   Config dict wire form: concatenated records, little-endian, no header:
 *     u32 key length | key bytes (UTF-8, no NUL) | u32 type tag | 8-byte value
 *     tag 1 = 32-bit integer (stored sign-extended in the 8 bytes),
 *     tag 2 = IEEE 754 binary64.
 *   An empty dict is params == NULL, params_len == 0.
 *
 * The RHS callback received via P_set_rhs_fn writes f(t, y) into ydot and
 * returns 0 on success.  The user_data pointer set via P_set_user_data is
 * handed to the callback unchanged; the plugin never dereferences it.
 * Plugins must not retain the callback or user_data past P_destroy.
 */
#ifndef OIF_IVP_PLUGIN_H
#define OIF_IVP_PLUGIN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct {
    intptr_t nd;
    intptr_t *dims;
    double *data;
} OIFArrayF64;

typedef int (*oif_ivp_rhs_fn)(double t, OIFArrayF64 *y, OIFArrayF64 *ydot,
                              void *user_data);

enum {
    OIF_OK = 0,
    OIF_ERR_INVALID_ARG = -1,
    OIF_ERR_ALLOC = -2,
    OIF_ERR_MISMATCH = -3,
    OIF_ERR_NOT_FOUND = -4,
    OIF_ERR_PLUGIN = -5,
    OIF_ERR_SOLVER = -6,
};

/* Config dict type tags (subset of the full marshalling tag space). */
enum {
    OIF_TAG_INT = 1,
    OIF_TAG_FLOAT64 = 2,
};

#ifdef __cplusplus
}
#endif

#endif /* OIF_IVP_PLUGIN_H */
