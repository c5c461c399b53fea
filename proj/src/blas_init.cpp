// OpenBLAS 0.3.x with DYNAMIC_ARCH misdetects recent Xeons and falls back to
// its slowest kernel set.  Its runtime dispatch honours OPENBLAS_CORETYPE, so
// set it from cpuid before the library constructor (priority 101) runs.
// __builtin_cpu_supports cannot be used here: libgcc's cpu model is itself
// initialized by a priority-101 constructor.
#include <cstdlib>

#if defined(__x86_64__)
#include <cpuid.h>

namespace {

bool os_enables_avx512() {
  unsigned a, b, c, d;
  if (!__get_cpuid(1, &a, &b, &c, &d)) return false;
  if (!(c & (1u << 27))) return false;  // OSXSAVE
  unsigned lo, hi;
  __asm__("xgetbv" : "=a"(lo), "=d"(hi) : "c"(0));
  return (lo & 0xe6) == 0xe6;  // XMM, YMM, opmask, ZMM state saved by the OS
}

__attribute__((constructor(100))) void pick_openblas_core() {
  // Deterministic reductions and no oversubscription on small machines.
  if (!std::getenv("OPENBLAS_NUM_THREADS")) {
    setenv("OPENBLAS_NUM_THREADS", "1", 1);
  }
  if (std::getenv("OPENBLAS_CORETYPE")) return;
  unsigned a, b, c, d;
  if (!__get_cpuid_count(7, 0, &a, &b, &c, &d)) return;
  if ((b & (1u << 16)) && os_enables_avx512()) {  // AVX512F
    setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 1);
  } else if (b & (1u << 5)) {  // AVX2
    setenv("OPENBLAS_CORETYPE", "HASWELL", 1);
  }
}

}  // namespace
#endif
