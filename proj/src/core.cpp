#include "foliant/core.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace foliant {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::NonPositiveMetric: return "NonPositiveMetric";
    case ErrorKind::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorKind::EvaluationAtZeroSection: return "EvaluationAtZeroSection";
    case ErrorKind::StepUnstable: return "StepUnstable";
    case ErrorKind::OdeTolerance: return "OdeTolerance";
    case ErrorKind::NotHolonomyInvariant: return "NotHolonomyInvariant";
    case ErrorKind::OrderMismatch: return "OrderMismatch";
    case ErrorKind::CutoffTooSmall: return "CutoffTooSmall";
    case ErrorKind::ProbeOutOfRange: return "ProbeOutOfRange";
    case ErrorKind::RankMismatch: return "RankMismatch";
    case ErrorKind::TruncationDepthExceeded: return "TruncationDepthExceeded";
    case ErrorKind::NonHermitianBlock: return "NonHermitianBlock";
    case ErrorKind::FitIllConditioned: return "FitIllConditioned";
    case ErrorKind::NonHermitianConnection: return "NonHermitianConnection";
    case ErrorKind::CutoffMismatch: return "CutoffMismatch";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::AssertionFailed: return "AssertionFailed";
  }
  return "Unknown";
}

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int n) { g_threads = std::max(1, n); }
int thread_count() { return g_threads; }

void parallel_for(int n, const std::function<void(int)>& body) {
  const int nt = std::min(thread_count(), n);
  if (nt <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < nt; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace foliant
