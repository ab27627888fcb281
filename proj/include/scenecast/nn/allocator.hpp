#pragma once

namespace scenecast::nn {

/// Keeps freed activation buffers inside the process heap instead of
/// returning them to the kernel. Graphs allocate and free multi-megabyte
/// matrices at a high rate; with the default glibc thresholds every one of
/// them is a fresh mmap and a round of page faults, which roughly doubles
/// training time. Call once at program start. No-op outside glibc.
void tune_allocator();

}  // namespace scenecast::nn
