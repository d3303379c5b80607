#include "mplab/parallel.hpp"

#include <omp.h>

namespace mplab {

namespace {
int default_threads = -1;
}

void set_worker_count(int workers) {
  if (default_threads < 0) default_threads = omp_get_max_threads();
  omp_set_num_threads(workers > 0 ? workers : default_threads);
}

int worker_count() { return omp_get_max_threads(); }

}  // namespace mplab
