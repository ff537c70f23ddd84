/* Shared driver plumbing: argv protocol, monotonic clock, checked
 * allocation, and the counter entry points (real shim or the fallback that
 * reports every requested event as unsupported). */
#ifndef MB_DRIVER_COMMON_H
#define MB_DRIVER_COMMON_H

#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <time.h>
#include <omp.h>

static double mb_now(void)
{
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return (double)ts.tv_sec + (double)ts.tv_nsec * 1e-9;
}

static void *mb_alloc(size_t bytes)
{
    void *p = malloc(bytes);
    if (!p) {
        fprintf(stderr, "allocation of %zu bytes failed\n", bytes);
        exit(2);
    }
    return p;
}

struct mb_args {
    long n;
    int threads;
    long ntimes;
    long warmup;
    const char *counters;       /* comma separated, may be NULL */
};

static int mb_parse_args(int argc, char **argv, struct mb_args *out)
{
    if (argc < 4) {
        fprintf(stderr,
                "usage: %s <n> <threads> <ntimes> [--counters E1,E2,...]"
                " [--warmup R]\n", argv[0]);
        return -1;
    }
    out->n = strtol(argv[1], NULL, 10);
    out->threads = (int)strtol(argv[2], NULL, 10);
    out->ntimes = strtol(argv[3], NULL, 10);
    out->warmup = 1;
    out->counters = NULL;
    for (int a = 4; a < argc; a++) {
        if (strcmp(argv[a], "--counters") == 0 && a + 1 < argc) {
            out->counters = argv[++a];
        } else if (strcmp(argv[a], "--warmup") == 0 && a + 1 < argc) {
            out->warmup = strtol(argv[++a], NULL, 10);
        } else {
            fprintf(stderr, "unknown argument: %s\n", argv[a]);
            return -1;
        }
    }
    if (out->n < 1 || out->threads < 1 || out->ntimes < 1 || out->warmup < 0) {
        fprintf(stderr, "n, threads and ntimes must be >= 1; warmup >= 0\n");
        return -1;
    }
    return 0;
}

#ifdef MB_ENABLE_COUNTERS
#include "perf_counters.h"
#else
/* no shim linked: every requested event is honestly unsupported */
static void mb_counters_open(const char *csv) { (void)csv; }
static void mb_counters_start(void) { }
static void mb_counters_stop(void) { }
static void mb_counters_report(const char *csv)
{
    char buf[1024];
    char *tok;
    if (!csv || !*csv)
        return;
    strncpy(buf, csv, sizeof buf - 1);
    buf[sizeof buf - 1] = 0;
    for (tok = strtok(buf, ","); tok; tok = strtok(NULL, ","))
        printf("counter.%s=unsupported\n", tok);
}
#endif

/* two-level expansion so macro arguments (CLAUSE) expand inside _Pragma */
#define MB_PRAGMA_(x) _Pragma(#x)
#define MB_PRAGMA(x) MB_PRAGMA_(x)

/* validation statements count failures through this hook */
#define CHECK(cond) do { if (!(cond)) mb_check_errors += 1; } while (0)

#endif /* MB_DRIVER_COMMON_H */
