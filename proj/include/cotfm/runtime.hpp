#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace cotfm {

/// Keeps large freed blocks in the heap instead of returning them to the OS.
/// Training and sampling allocate same-sized activation matrices every step;
/// without this each of them is a fresh mmap with first-touch page faults.
/// Call once at program start. No-op outside glibc.
inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace cotfm
