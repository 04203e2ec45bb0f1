#pragma once

#include <fftw3.h>

#include <mutex>

namespace facedyn::detail {

// FFTW's planner is not re-entrant; executing a plan is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class FftwPlan {
 public:
  explicit FftwPlan(fftw_plan plan) : plan_(plan) {}
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
  ~FftwPlan() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }
  void execute() const { fftw_execute(plan_); }
  fftw_plan get() const { return plan_; }

 private:
  fftw_plan plan_;
};

}  // namespace facedyn::detail
