#pragma once

#include <mutex>

namespace paraspec {

// FFTW planning is not thread safe; every planner call takes this lock.
std::mutex& fftw_plan_mutex();

}  // namespace paraspec
