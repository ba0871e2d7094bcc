#include "qll/parallel.hpp"

#include <omp.h>

namespace qll {

int max_threads() noexcept { return omp_get_max_threads(); }

void set_num_threads(int n) noexcept { omp_set_num_threads(n < 1 ? 1 : n); }

ThreadCountGuard::ThreadCountGuard(int n) noexcept : previous_(omp_get_max_threads()) { set_num_threads(n); }

ThreadCountGuard::~ThreadCountGuard() { omp_set_num_threads(previous_); }

}  // namespace qll
