/* Natively compiled RHS callbacks for callback-marshalling tests. */
#include "oif_ivp_plugin.h"

/* Van der Pol with mu read from user_data (pointer to double). */
int fixture_vdp_rhs(double t, OIFArrayF64 *y, OIFArrayF64 *ydot,
                    void *user_data)
{
    (void)t;
    double mu = *(double *)user_data;
    double y0 = y->data[0];
    double y1 = y->data[1];
    ydot->data[0] = y1;
    ydot->data[1] = mu * (1.0 - y0 * y0) * y1 - y0;
    return 0;
}

/* Always fails with the status given through user_data (pointer to
 * double, truncated to int). */
int fixture_failing_rhs(double t, OIFArrayF64 *y, OIFArrayF64 *ydot,
                        void *user_data)
{
    (void)t;
    (void)y;
    (void)ydot;
    return (int)*(double *)user_data;
}
