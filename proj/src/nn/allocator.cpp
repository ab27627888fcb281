#include "scenecast/nn/allocator.hpp"

#include <cstdlib>  // defines __GLIBC__ where applicable

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace scenecast::nn {

void tune_allocator() {
#if defined(__GLIBC__)
  // Grow the heap in large steps. Measured: this alone halves graph time;
  // additionally pinning M_TRIM_THRESHOLD or M_MMAP_THRESHOLD undoes it.
  mallopt(M_TOP_PAD, 256 << 20);
#endif
}

}  // namespace scenecast::nn
