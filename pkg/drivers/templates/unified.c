/* Unified data spaces driver template.
 *
 * Arrays are shared by all threads; each timed repetition distributes the
 * kernel loop with `#pragma omp parallel for CLAUSE`.  When the clause
 * carries `nowait` the combined construct is illegal, so the pattern
 * header defines MB_SPLIT_PARALLEL and the region splits into
 * `omp parallel` + `omp for CLAUSE`.
 *
 * Stdout protocol: elapsed_seconds, instances_executed, validation,
 * threads, counter.<NAME>; exit status 0 iff validation passed.
 */
#include "pattern.h"
#include "driver_common.h"

int main(int argc, char **argv)
{
    struct mb_args args;
    if (mb_parse_args(argc, argv, &args) != 0)
        return 2;
    long n = args.n;
    int threads = args.threads;
    long ntimes = args.ntimes;
    long t = threads;           /* clause expressions may use n and t */
    (void)t;
    MB_PRECHECK;
    omp_set_dynamic(0);
    omp_set_num_threads(threads);

    MB_ALLOC_DATA;
    MB_PARAM_DECLS;
    /* open before any parallel region so worker threads inherit events */
    mb_counters_open(args.counters);

    /* initialization (serial; unified mappings carry no thread id) */
    {
#include "body_init.c"
    }

    /* statement instances of one repetition, counted without touching data */
    long mb_instance_count = 0;
    {
#include "bind_run_count.c"
#include "body_run.c"
#include "unbind_run.c"
    }

    double mb_t0 = 0.0, mb_t1 = 0.0;
#include "bind_run_real.c"
#ifdef MB_SPLIT_PARALLEL
    MB_PRAGMA(omp parallel)
    {
        for (long mb_k = 0; mb_k < args.warmup; mb_k++) {
            MB_PRAGMA(omp for CLAUSE)
#include "body_run.c"
        }
    }
    mb_counters_start();
    mb_t0 = mb_now();
    MB_PRAGMA(omp parallel)
    {
        for (long mb_k = 0; mb_k < ntimes; mb_k++) {
            MB_PRAGMA(omp for CLAUSE)
#include "body_run.c"
        }
    }
    mb_t1 = mb_now();
    mb_counters_stop();
#else
    for (long mb_k = 0; mb_k < args.warmup; mb_k++) {
        MB_PRAGMA(omp parallel for CLAUSE)
#include "body_run.c"
    }
    mb_counters_start();
    mb_t0 = mb_now();
    for (long mb_k = 0; mb_k < ntimes; mb_k++) {
        MB_PRAGMA(omp parallel for CLAUSE)
#include "body_run.c"
    }
    mb_t1 = mb_now();
    mb_counters_stop();
#endif
#include "unbind_run.c"

    /* validation (serial) */
    long mb_check_errors = 0;
    {
#include "body_val.c"
    }
    MB_VAL_EXTRA;

    printf("elapsed_seconds=%.9f\n", mb_t1 - mb_t0);
    printf("instances_executed=%ld\n", mb_instance_count * ntimes);
    printf("validation=%s\n", mb_check_errors == 0 ? "pass" : "fail");
    printf("threads=%d\n", omp_get_max_threads());
    mb_counters_report(args.counters);

    MB_FREE_DATA;
    return mb_check_errors == 0 ? 0 : 1;
}
