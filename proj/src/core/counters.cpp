#include "core/counters.hpp"

namespace veloreg {

namespace {
thread_local OperatorCounters t_counters;
thread_local KernelTimers t_timers;
}  // namespace

OperatorCounters& counters() { return t_counters; }
void counters_reset() { t_counters = OperatorCounters{}; }

KernelTimers& kernel_timers() { return t_timers; }
void kernel_timers_reset() { t_timers = KernelTimers{}; }

}  // namespace veloreg
