#include <stdio.h>
#include "eigenframe.h"

int main(int argc, char **argv) {
    EfJob *job = NULL;
    EfAnalysis *a = NULL;
    EfSolution *s = NULL;
    char label[64];
    double curl = -1.0, eigen = -1.0;

    if (argc < 2 || ef_job_from_file(argv[1], &job) != EF_STATUS_OK) {
        fprintf(stderr, "load: %s\n", ef_last_error());
        return 1;
    }
    if (ef_analyze(job, &a) != EF_STATUS_OK || ef_analysis_case(a, label, sizeof label, NULL) != EF_STATUS_OK) {
        fprintf(stderr, "analyze: %s\n", ef_last_error());
        return 1;
    }
    EfStatus st = ef_solve(job, a, &s);
    if (st != EF_STATUS_OK || ef_solution_residuals(s, &curl, &eigen) != EF_STATUS_OK) {
        fprintf(stderr, "solve: %s\n", ef_last_error());
        return (int)st;
    }
    printf("%s rank=%zu nodes=%zu curl=%.3e\n", label, ef_analysis_rank(a), ef_solution_nodes(s), curl);
    ef_solution_free(s);
    ef_analysis_free(a);
    ef_job_free(job);
    return 0;
}
