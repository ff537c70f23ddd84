/* Hardware counter shim over the native perf events interface.
 *
 * Events come from a small name table (cache miss/access, instructions,
 * cycles) plus raw:0xNNNN codes.  Opening is best effort: an event the
 * kernel or hardware refuses is reported as `counter.<NAME>=unsupported`
 * and never fails the run.
 */
#ifndef MB_PERF_COUNTERS_H
#define MB_PERF_COUNTERS_H

void mb_counters_open(const char *csv);
void mb_counters_start(void);
void mb_counters_stop(void);
void mb_counters_report(const char *csv);

#endif
