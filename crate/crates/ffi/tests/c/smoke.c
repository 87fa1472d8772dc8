#include <stdio.h>
#include <stdlib.h>
#include "multisaddle.h"

int main(void) {
    MspSystem *sys = NULL;
    MspPreconditioner *p = NULL;
    size_t n = 0, its = 0;
    double res = 0.0;

    if (msp_system_random(2, 3, 0, &sys) != MSP_STATUS_OK) return 10;
    if (msp_system_dim(sys, &n) != MSP_STATUS_OK) return 11;
    double *b = calloc(n, sizeof(double));
    double *x = calloc(n, sizeof(double));
    msp_system_rhs(sys, b, n);
    if (msp_preconditioner_exact(sys, MSP_PRECONDITIONER_KIND_FACTORIZED, &p) != MSP_STATUS_OK) return 12;
    if (msp_minres_solve(sys, p, b, x, n, 1e-10, 0, &its, &res) != MSP_STATUS_OK) return 13;
    if (its > 3) return 14;
    if (msp_system_dim(NULL, &n) != MSP_STATUS_NULL_POINTER) return 15;
    if (msp_last_error()[0] == '\0') return 16;
    printf("n=%zu iterations=%zu residual=%.3e\n", n, its, res);
    msp_preconditioner_free(p);
    msp_system_free(sys);
    free(b);
    free(x);
    return 0;
}
