#include <stdio.h>
#include <string.h>
#include "ucq.h"

static const char *QUERY = "FREE x y z\nCQ\nE(x, y) E(y, z)\n";
static const char *DB = "E(a, b) E(b, c) E(c, a)\n";
static const char *DELTA1 = "GROUND 1 2 3 4\nFACET 2 3 4\nFACET 1 2\nFACET 1 3\nFACET 1 4\n";

int main(void) {
    UcqQuery *q = NULL;
    UcqDatabase *d = NULL;
    UcqComplex *c = NULL;
    char *s = NULL;
    int64_t euler = 0;
    bool linear = false;

    if (ucq_query_parse(QUERY, &q) != UCQ_STATUS_OK) return 1;
    if (ucq_database_parse(DB, &d) != UCQ_STATUS_OK) return 2;
    if (ucq_count(q, d, &s) != UCQ_STATUS_OK || strcmp(s, "3") != 0) return 3;
    ucq_string_free(s);
    if (ucq_meta(q, &linear) != UCQ_STATUS_OK || !linear) return 4;
    if (ucq_complex_parse(DELTA1, &c) != UCQ_STATUS_OK) return 5;
    if (ucq_complex_euler(c, &euler) != UCQ_STATUS_OK || euler != -2) return 6;
    if (ucq_query_parse("CQ\n", &q) != UCQ_STATUS_PARSE_ERROR) return 7;
    if (ucq_last_error_message() == NULL) return 8;
    ucq_complex_free(c);
    ucq_database_free(d);
    ucq_query_free(q);
    printf("ok\n");
    return 0;
}
