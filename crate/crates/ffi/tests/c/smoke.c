#include <math.h>
#include <stdio.h>
#include <string.h>

#include "matsubara.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        MtsStatus s_ = (call);                                             \
        if (s_ != MTS_STATUS_OK) {                                         \
            const char *m_ = mts_last_error();                             \
            fprintf(stderr, "%s -> %d: %s\n", #call, s_, m_ ? m_ : "");    \
            return 1;                                                      \
        }                                                                  \
    } while (0)

static const char *G3 =
    "{\"vertices\":[\"1\",\"2\"],\"edges\":["
    "{\"id\":1,\"from\":\"2\",\"to\":\"1\"},"
    "{\"id\":2,\"from\":\"2\",\"to\":\"1\"},"
    "{\"id\":3,\"from\":\"2\",\"to\":\"1\"}]}";

int main(void) {
    MtsGraph *g = NULL;
    MtsExpression *sum = NULL;
    size_t v, l, rank, terms;
    uint64_t trees;
    char *text = NULL;
    double re, im;
    const double q[3] = {0.7, 1.1, 2.3};
    const int64_t n[1] = {2};

    CHECK(mts_graph_from_json(G3, &g));
    CHECK(mts_graph_counts(g, &v, &l, &rank, &trees));
    if (v != 2 || l != 3 || rank != 2 || trees != 3) return 2;

    CHECK(mts_sum(g, MTS_SUM_METHOD_OPERATOR, &sum));
    CHECK(mts_expression_term_count(sum, &terms));
    CHECK(mts_expression_render(sum, MTS_FORMAT_LATEX, &text));
    if (strstr(text, "n_{B}") == NULL) return 3;
    mts_string_free(text);

    CHECK(mts_expression_eval(sum, q, 3, n, 1, &re, &im));
    if (!(re > 0.0) || fabs(im) > 1e-12 * re) return 4;

    if (mts_expression_eval(sum, q, 2, n, 1, &re, &im) != MTS_STATUS_INVALID_ARGUMENT) return 5;
    if (mts_last_error() == NULL) return 6;
    if (mts_graph_from_json("{\"vertices\":[]", &g) != MTS_STATUS_INVALID_GRAPH) return 7;

    printf("%s %zu %.17g\n", mts_version(), terms, re);
    mts_expression_free(sum);
    mts_graph_free(g);
    return 0;
}
