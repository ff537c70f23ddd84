/* Independent data spaces driver template.
 *
 * Every thread owns private array rows (addressed through t_id in the
 * memory mappings) and executes the full schedule on them each repetition;
 * there is no work-sharing construct, so no cross-thread line sharing and
 * no implicit barriers inside a repetition.
 *
 * Stdout protocol matches the unified template; instances_executed counts
 * every thread's statement instances.
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
    long t = threads;           /* per-thread allocations scale with t */
    (void)t;
    MB_PRECHECK;
    omp_set_dynamic(0);
    omp_set_num_threads(threads);

    MB_ALLOC_DATA;
    MB_PARAM_DECLS;
    /* open before any parallel region so worker threads inherit events */
    mb_counters_open(args.counters);

    /* initialization: every thread initializes its own rows */
    MB_PRAGMA(omp parallel)
    {
        int t_id = omp_get_thread_num();
        (void)t_id;
#include "body_init.c"
    }

    /* statement instances of one repetition of one thread */
    long mb_instance_count = 0;
    {
#include "bind_run_count.c"
#include "body_run.c"
#include "unbind_run.c"
    }

    double mb_t0 = 0.0, mb_t1 = 0.0;
#include "bind_run_real.c"
    MB_PRAGMA(omp parallel)
    {
        int t_id = omp_get_thread_num();
        (void)t_id;
        for (long mb_k = 0; mb_k < args.warmup; mb_k++) {
#include "body_run.c"
        }
    }
    mb_counters_start();
    mb_t0 = mb_now();
    MB_PRAGMA(omp parallel)
    {
        int t_id = omp_get_thread_num();
        (void)t_id;
        for (long mb_k = 0; mb_k < ntimes; mb_k++) {
#include "body_run.c"
        }
    }
    mb_t1 = mb_now();
    mb_counters_stop();
#include "unbind_run.c"

    /* validation: each thread checks its own rows */
    long mb_check_errors = 0;
    MB_PRAGMA(omp parallel reduction(+: mb_check_errors))
    {
        int t_id = omp_get_thread_num();
        (void)t_id;
#include "body_val.c"
    }
    MB_VAL_EXTRA;

    printf("elapsed_seconds=%.9f\n", mb_t1 - mb_t0);
    printf("instances_executed=%ld\n",
           mb_instance_count * ntimes * (long)threads);
    printf("validation=%s\n", mb_check_errors == 0 ? "pass" : "fail");
    printf("threads=%d\n", omp_get_max_threads());
    mb_counters_report(args.counters);

    MB_FREE_DATA;
    return mb_check_errors == 0 ? 0 : 1;
}
