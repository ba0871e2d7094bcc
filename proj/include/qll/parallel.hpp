#pragma once

namespace qll {

/// Execution policy for kernels that have both an OpenMP path and a serial
/// reference path.
enum class Exec { kSerial, kParallel };

int max_threads() noexcept;
void set_num_threads(int n) noexcept;

/// Restores the previous OpenMP thread count on destruction.
class ThreadCountGuard {
 public:
  explicit ThreadCountGuard(int n) noexcept;
  ~ThreadCountGuard();
  ThreadCountGuard(const ThreadCountGuard&) = delete;
  ThreadCountGuard& operator=(const ThreadCountGuard&) = delete;

 private:
  int previous_;
};

}  // namespace qll
