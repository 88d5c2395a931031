/*
 * Standalone lifecycle driver for the bundled plugins, meant to run
 * under a leak checker: dlopen a plugin, run several full
 * create/configure/integrate/destroy sessions, dlclose, repeat.
 *
 * Usage: leak_driver <plugin.so> <integrator-name> <cycles>
 * Exits 0 when every operation reports success.
 */
#include <dlfcn.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "oif_ivp_plugin.h"

static int decay_rhs(double t, OIFArrayF64 *y, OIFArrayF64 *ydot,
                     void *user_data)
{
    (void)t;
    (void)user_data;
    for (intptr_t i = 0; i < y->dims[0]; i++) {
        ydot->data[i] = -y->data[i];
    }
    return 0;
}

#define CHECK(cond, what) \
    do { \
        if (!(cond)) { \
            fprintf(stderr, "FAIL: %s\n", what); \
            return 1; \
        } \
    } while (0)

int main(int argc, char **argv)
{
    if (argc != 4) {
        fprintf(stderr, "usage: %s <plugin.so> <integrator> <cycles>\n",
                argv[0]);
        return 2;
    }
    const char *libpath = argv[1];
    const char *integrator = argv[2];
    int cycles = atoi(argv[3]);

    for (int cycle = 0; cycle < cycles; cycle++) {
        void *lib = dlopen(libpath, RTLD_NOW | RTLD_LOCAL);
        CHECK(lib != NULL, "dlopen");
        void *(*create)(void) = dlsym(lib, "oif_ivp_create");
        int (*destroy)(void *) = dlsym(lib, "oif_ivp_destroy");
        int (*set_iv)(void *, OIFArrayF64 *, double) =
            dlsym(lib, "oif_ivp_set_initial_value");
        int (*set_rhs)(void *, oif_ivp_rhs_fn) =
            dlsym(lib, "oif_ivp_set_rhs_fn");
        int (*set_tol)(void *, double, double) =
            dlsym(lib, "oif_ivp_set_tolerances");
        int (*set_integ)(void *, const char *, const unsigned char *,
                         size_t) = dlsym(lib, "oif_ivp_set_integrator");
        int (*integrate)(void *, double, OIFArrayF64 *) =
            dlsym(lib, "oif_ivp_integrate");
        CHECK(create && destroy && set_iv && set_rhs && set_tol &&
              set_integ && integrate, "dlsym");

        for (int session = 0; session < 3; session++) {
            void *s = create();
            CHECK(s != NULL, "create");
            double buf[3] = {1.0, 2.0, 3.0};
            intptr_t dims[1] = {3};
            OIFArrayF64 y0 = {1, dims, buf};
            CHECK(set_iv(s, &y0, 0.0) == 0, "set_initial_value");
            CHECK(set_rhs(s, decay_rhs) == 0, "set_rhs_fn");
            CHECK(set_tol(s, 1e-8, 1e-10) == 0, "set_tolerances");
            CHECK(set_integ(s, integrator, NULL, 0) == 0,
                  "set_integrator");
            double out_buf[3];
            intptr_t out_dims[1] = {3};
            OIFArrayF64 out = {1, out_dims, out_buf};
            for (int k = 1; k <= 4; k++) {
                CHECK(integrate(s, 0.25 * k, &out) == 0, "integrate");
            }
            /* resize to exercise workspace reallocation */
            intptr_t dims1[1] = {1};
            OIFArrayF64 y1 = {1, dims1, buf};
            CHECK(set_iv(s, &y1, 0.0) == 0, "set_initial_value resize");
            OIFArrayF64 out1 = {1, dims1, out_buf};
            CHECK(integrate(s, 1.0, &out1) == 0, "integrate resized");
            CHECK(destroy(s) == 0, "destroy");
        }
        CHECK(dlclose(lib) == 0, "dlclose");
    }
    puts("leak driver done");
    return 0;
}
