#include <math.h>
#include <stdio.h>
#include "expprec.h"

#define CHECK(cond)                                                      \
    do {                                                                 \
        if (!(cond)) {                                                   \
            const char *e = ep_last_error();                             \
            fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,       \
                    e ? e : "no error message");                         \
            return 1;                                                    \
        }                                                                \
    } while (0)

int main(int argc, char **argv) {
    double pmf[5];
    CHECK(ep_qnorm_pmf(3.0, 1.0, pmf) == EP_STATUS_OK);
    CHECK(fabs(pmf[2] - 0.3829) < 1e-4);

    EpMatrix *a = NULL, *b = NULL;
    CHECK(ep_matrix_simulate(0.5, EP_SCENARIO_NONE, 1.0, 505, &a) == EP_STATUS_OK);
    CHECK(argc > 1 && ep_matrix_from_csv(argv[1], &b) == EP_STATUS_OK);

    EpMeasure la, lb;
    CHECK(ep_measure(a, EP_MEASURE_KIND_L, &la) == EP_STATUS_OK);
    CHECK(ep_measure(b, EP_MEASURE_KIND_L, &lb) == EP_STATUS_OK);
    CHECK(la.basis_size == 30 && fabs(la.value - lb.value) < 1e-12);

    EpComparison c;
    CHECK(ep_compare(a, b, EP_METHOD_PAIRED_VARIANCE, 0.05, &c) == EP_STATUS_OK);
    CHECK(c.p_value == 1.0 && c.significant == 0);

    EpMatrix *bad = NULL;
    CHECK(ep_matrix_from_csv("/nonexistent/ratings.csv", &bad) == EP_STATUS_IO);
    CHECK(bad == NULL && ep_last_error() != NULL);

    ep_matrix_free(a);
    ep_matrix_free(b);
    printf("ok %s\n", ep_version());
    return 0;
}
