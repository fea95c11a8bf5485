/* Simulates Burgers' equation and prints the discovered equation. */
#include <stdio.h>
#include <stdlib.h>

#include "pdesift.h"

static int fail(const char *what) {
    char msg[512];
    pds_last_error(msg, sizeof msg);
    fprintf(stderr, "%s failed: %s\n", what, msg);
    return 1;
}

int main(int argc, char **argv) {
    const char *system = argc > 1 ? argv[1] : "burgers";
    PdsField *field = NULL;
    PdsModel *model = NULL;
    if (pds_simulate(system, 0.0, 0, &field) != PDS_STATUS_OK) return fail("simulate");
    if (pds_discover(field, NULL, 0, &model) != PDS_STATUS_OK) {
        pds_field_free(field);
        return fail("discover");
    }
    size_t needed = 0;
    pds_model_equation(model, NULL, 0, &needed);
    char *equation = malloc(needed + 1);
    pds_model_equation(model, equation, needed + 1, NULL);
    printf("%s\n", equation);

    size_t k = pds_model_num_terms(model);
    double *pip = malloc(k * sizeof *pip);
    pds_model_pip(model, pip, k);
    for (size_t i = 0; i < k; i++) {
        if (pip[i] > 0.5) {
            char label[64];
            pds_model_label(model, i, label, sizeof label, NULL);
            printf("%s %.3f\n", label, pip[i]);
        }
    }
    free(pip);
    free(equation);
    pds_model_free(model);
    pds_field_free(field);
    return 0;
}
