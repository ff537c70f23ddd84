#define _GNU_SOURCE
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#if defined(__linux__)
#include <linux/perf_event.h>
#include <sys/ioctl.h>
#include <sys/syscall.h>
#include <unistd.h>
#define MB_HAVE_PERF 1
#endif

#include "perf_counters.h"

#define MB_MAX_COUNTERS 16

struct mb_counter {
    char name[64];
    int fd;                 /* -1 when the event could not be opened */
    uint64_t value;
};

static struct mb_counter mb_counters[MB_MAX_COUNTERS];
static int mb_ncounters = 0;

#ifdef MB_HAVE_PERF

struct mb_event_def {
    const char *name;
    uint32_t type;
    uint64_t config;
};

/* data-cache traffic events used in false-sharing studies, plus basics */
static const struct mb_event_def mb_event_table[] = {
    {"L1D_MISS", PERF_TYPE_HW_CACHE,
     PERF_COUNT_HW_CACHE_L1D | (PERF_COUNT_HW_CACHE_OP_READ << 8) |
     (PERF_COUNT_HW_CACHE_RESULT_MISS << 16)},
    {"L1D_ACCESS", PERF_TYPE_HW_CACHE,
     PERF_COUNT_HW_CACHE_L1D | (PERF_COUNT_HW_CACHE_OP_READ << 8) |
     (PERF_COUNT_HW_CACHE_RESULT_ACCESS << 16)},
    {"L1D_STORE_MISS", PERF_TYPE_HW_CACHE,
     PERF_COUNT_HW_CACHE_L1D | (PERF_COUNT_HW_CACHE_OP_WRITE << 8) |
     (PERF_COUNT_HW_CACHE_RESULT_MISS << 16)},
    {"LLC_MISS", PERF_TYPE_HARDWARE, PERF_COUNT_HW_CACHE_MISSES},
    {"LLC_ACCESS", PERF_TYPE_HARDWARE, PERF_COUNT_HW_CACHE_REFERENCES},
    {"INSTRUCTIONS", PERF_TYPE_HARDWARE, PERF_COUNT_HW_INSTRUCTIONS},
    {"CYCLES", PERF_TYPE_HARDWARE, PERF_COUNT_HW_CPU_CYCLES},
};

static int mb_lookup(const char *name, struct perf_event_attr *attr)
{
    size_t i;
    memset(attr, 0, sizeof *attr);
    attr->size = sizeof *attr;
    attr->disabled = 1;
    attr->inherit = 1;      /* count OpenMP worker threads too */
    attr->exclude_kernel = 1;
    attr->exclude_hv = 1;
    for (i = 0; i < sizeof mb_event_table / sizeof *mb_event_table; i++) {
        if (strcmp(name, mb_event_table[i].name) == 0) {
            attr->type = mb_event_table[i].type;
            attr->config = mb_event_table[i].config;
            return 0;
        }
    }
    if (strncmp(name, "raw:", 4) == 0) {
        attr->type = PERF_TYPE_RAW;
        attr->config = strtoull(name + 4, NULL, 0);
        return 0;
    }
    return -1;
}

static int mb_perf_open(struct perf_event_attr *attr)
{
    return (int)syscall(SYS_perf_event_open, attr, 0, -1, -1, 0);
}
#endif /* MB_HAVE_PERF */

void mb_counters_open(const char *csv)
{
    char buf[1024];
    char *tok;
    if (!csv || !*csv)
        return;
    strncpy(buf, csv, sizeof buf - 1);
    buf[sizeof buf - 1] = 0;
    for (tok = strtok(buf, ","); tok && mb_ncounters < MB_MAX_COUNTERS;
         tok = strtok(NULL, ",")) {
        struct mb_counter *c = &mb_counters[mb_ncounters++];
        strncpy(c->name, tok, sizeof c->name - 1);
        c->name[sizeof c->name - 1] = 0;
        c->fd = -1;
        c->value = 0;
#ifdef MB_HAVE_PERF
        {
            struct perf_event_attr attr;
            if (mb_lookup(c->name, &attr) == 0)
                c->fd = mb_perf_open(&attr);
        }
#endif
    }
}

void mb_counters_start(void)
{
#ifdef MB_HAVE_PERF
    int i;
    for (i = 0; i < mb_ncounters; i++) {
        if (mb_counters[i].fd < 0)
            continue;
        ioctl(mb_counters[i].fd, PERF_EVENT_IOC_RESET, 0);
        ioctl(mb_counters[i].fd, PERF_EVENT_IOC_ENABLE, 0);
    }
#endif
}

void mb_counters_stop(void)
{
#ifdef MB_HAVE_PERF
    int i;
    for (i = 0; i < mb_ncounters; i++) {
        struct mb_counter *c = &mb_counters[i];
        if (c->fd < 0)
            continue;
        ioctl(c->fd, PERF_EVENT_IOC_DISABLE, 0);
        if (read(c->fd, &c->value, sizeof c->value) != sizeof c->value)
            c->fd = -1;     /* report unsupported rather than garbage */
    }
#endif
}

void mb_counters_report(const char *csv)
{
    int i;
    (void)csv;
    for (i = 0; i < mb_ncounters; i++) {
        if (mb_counters[i].fd >= 0)
            printf("counter.%s=%llu\n", mb_counters[i].name,
                   (unsigned long long)mb_counters[i].value);
        else
            printf("counter.%s=unsupported\n", mb_counters[i].name);
    }
}
