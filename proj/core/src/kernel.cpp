#include "hypertune/kernel.hpp"

#include <time.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>

namespace hypertune {
namespace {

double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + static_cast<double>(ts.tv_nsec) * 1e-9;
}

// Keeps the arithmetic loop alive under optimization.
std::atomic<double> g_sink{0.0};

double burn(std::uint64_t flops, double* buffer, std::size_t buffer_len,
            std::uint64_t bytes_stride) {
  double acc = 1.0;
  std::size_t pos = 0;
  const std::size_t hop = std::max<std::size_t>(1, bytes_stride / sizeof(double));
  // Four flops per iteration.
  for (std::uint64_t i = 0; i < flops / 4; ++i) {
    acc = acc * 1.0000001 + buffer[pos];
    buffer[pos] = acc * 0.9999999;
    pos += hop;
    if (pos >= buffer_len) pos -= buffer_len;
  }
  return acc;
}

}  // namespace

SyntheticKernel::SyntheticKernel(SyntheticKernelConfig config) : config_(config) {
  config_.threads = std::clamp(config_.threads, 1, 128);
  const std::size_t len = std::max<std::size_t>(
      {1024, static_cast<std::size_t>(config_.threads) * 1024,
       static_cast<std::size_t>(config_.bytes_per_sample) * 16 / sizeof(double)});
  buffer_.assign(len, 1.0);
}

double SyntheticKernel::run_timed_step(int batch_size) {
  const std::uint64_t total_flops =
      config_.step_overhead_flops +
      static_cast<std::uint64_t>(batch_size) * config_.flops_per_sample;
  const int threads = std::max(1, config_.threads);

  const auto start = std::chrono::steady_clock::now();
  double cpu_seconds = 0.0;
  if (threads == 1) {
    const double cpu0 = thread_cpu_seconds();
    g_sink.store(burn(total_flops, buffer_.data(), buffer_.size(), config_.bytes_per_sample),
                 std::memory_order_relaxed);
    cpu_seconds = thread_cpu_seconds() - cpu0;
  } else {
    std::vector<double> per_thread_cpu(static_cast<std::size_t>(threads), 0.0);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    const std::uint64_t chunk = total_flops / static_cast<std::uint64_t>(threads);
    const std::size_t slice = buffer_.size() / static_cast<std::size_t>(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([this, t, chunk, slice, &per_thread_cpu]() {
        const double cpu0 = thread_cpu_seconds();
        g_sink.store(burn(chunk, buffer_.data() + slice * static_cast<std::size_t>(t), slice,
                          config_.bytes_per_sample),
                     std::memory_order_relaxed);
        per_thread_cpu[static_cast<std::size_t>(t)] = thread_cpu_seconds() - cpu0;
      });
    }
    for (std::thread& th : pool) th.join();
    for (double c : per_thread_cpu) cpu_seconds += c;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  last_cpu_utilization_ = wall > 0.0 ? cpu_seconds / wall : 0.0;
  return std::max(wall, 1e-9);
}

}  // namespace hypertune
