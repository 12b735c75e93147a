/* Build after `cargo build -p asrc-ffi --release`:
 *   cc -I crates/ffi/include crates/ffi/examples/classify.c \
 *      target/release/libasrc_ffi.a -lm -lpthread -ldl -o classify
 */
#include <stdio.h>
#include "asrc.h"

int main(void) {
    /* 3 features, 4 training samples (column-major), two classes */
    const double data[] = {1.0, 0.1, 0.0, 0.9, 0.2, 0.0, 0.0, 0.1, 1.0, 0.1, 0.0, 0.9};
    const size_t labels[] = {0, 0, 1, 1};
    const double query[] = {0.05, 0.05, 0.95};

    AsrcDictionary *dict = NULL;
    AsrcClassifier *clf = NULL;
    if (asrc_dictionary_new(data, 3, 4, labels, &dict) != ASRC_STATUS_OK ||
        asrc_classifier_new(dict, ASRC_METHOD_ASRC, 1e-3, &clf) != ASRC_STATUS_OK) {
        fprintf(stderr, "error: %s\n", asrc_last_error_message());
        asrc_dictionary_free(dict);
        return 1;
    }
    size_t cls = 0;
    double residuals[2];
    AsrcStatus st = asrc_classify(clf, query, 3, &cls, residuals, 2);
    if (st != ASRC_STATUS_OK) {
        fprintf(stderr, "error %d: %s\n", (int)st, asrc_last_error_message());
    } else {
        printf("class %zu (residuals %.4f, %.4f)\n", cls, residuals[0], residuals[1]);
    }
    asrc_classifier_free(clf);
    asrc_dictionary_free(dict);
    return st == ASRC_STATUS_OK ? 0 : 1;
}
