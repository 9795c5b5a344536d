#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace foliant {

using cplx = std::complex<double>;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

enum class ErrorKind {
  NonPositiveMetric,
  UnsupportedDimension,
  EvaluationAtZeroSection,
  StepUnstable,
  OdeTolerance,
  NotHolonomyInvariant,
  OrderMismatch,
  CutoffTooSmall,
  ProbeOutOfRange,
  RankMismatch,
  TruncationDepthExceeded,
  NonHermitianBlock,
  FitIllConditioned,
  NonHermitianConnection,
  CutoffMismatch,
  ConfigInvalid,
  AssertionFailed,
};

const char* to_string(ErrorKind k);

/// Every library failure carries one of the kinds above.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// Integer lattice vector with at most two active components.
using IVec = std::array<int, 2>;

inline IVec operator+(IVec a, IVec b) { return {a[0] + b[0], a[1] + b[1]}; }
inline IVec operator-(IVec a, IVec b) { return {a[0] - b[0], a[1] - b[1]}; }
inline IVec operator-(IVec a) { return {-a[0], -a[1]}; }
inline IVec operator*(int s, IVec a) { return {s * a[0], s * a[1]}; }

struct IVecHash {
  std::size_t operator()(const IVec& v) const {
    return std::hash<std::int64_t>()((static_cast<std::int64_t>(v[0]) << 32) ^
                                     static_cast<std::uint32_t>(v[1]));
  }
};

inline double norm2(IVec v, int dim) {
  double s = 0;
  for (int i = 0; i < dim; ++i) s += double(v[i]) * v[i];
  return std::sqrt(s);
}

inline int norm_inf(IVec v, int dim) {
  int s = 0;
  for (int i = 0; i < dim; ++i) s = std::max(s, std::abs(v[i]));
  return s;
}

/// Number of worker threads used by parallel loops (default 1).
void set_thread_count(int n);
int thread_count();

/// Runs body(i) for i in [0, n) on the configured number of threads.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace foliant
