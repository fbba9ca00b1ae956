#include <math.h>
#include <stdio.h>
#include "qfals.h"

static int fail(const char *what) {
    const char *msg = qf_last_error();
    fprintf(stderr, "%s: %s\n", what, msg ? msg : "(no message)");
    return 1;
}

int main(int argc, char **argv) {
    double diag[8] = {0.64, 0, 0, 0, 0, 0, 0.36, 0};
    QfMatrix *rho = NULL, *pure = NULL;
    if (qf_matrix_new(2, 2, diag, &rho) != QF_STATUS_OK) return fail("matrix");
    if (qf_purify(rho, &pure) != QF_STATUS_OK) return fail("purify");
    double re, im;
    qf_matrix_get(pure, 0, 3, &re, &im);
    if (fabs(re - 0.48) > 1e-12) return fail("purification entry");

    double lmin;
    bool unfalsifiable;
    if (qf_witness(QF_FAMILY_PURITY, 3, 0, 1e-9, &lmin, &unfalsifiable) != QF_STATUS_OK) return fail("witness");
    if (!unfalsifiable || fabs(lmin - 1.0 / 3.0) > 1e-12) return fail("witness value");

    if (qf_matrix_new(2, 2, NULL, &rho) != QF_STATUS_NULL_POINTER) return fail("null check");

    if (argc > 1) {
        QfProgram *prog = NULL;
        double p;
        if (qf_program_load(argv[1], &prog) != QF_STATUS_OK) return fail("load");
        if (qf_program_probability(prog, "p", &p) != QF_STATUS_OK) return fail("run");
        if (fabs(p - 0.25) > 1e-12) return fail("probability");
        qf_program_free(prog);
    }
    qf_matrix_free(pure);
    qf_matrix_free(rho);
    printf("ok %s\n", qf_version());
    return 0;
}
