#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace distset {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Default absolute tolerance on constraint residuals for membership tests.
inline constexpr double kMembershipTol = 1e-8;

using Rng = std::mt19937_64;

/// Independent RNG stream for (seed, stream_id), e.g. one stream per chain.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream_id = 0) {
  std::seed_seq seq{seed, stream_id, std::uint64_t{0x9e3779b97f4a7c15ULL}};
  return Rng(seq);
}

inline double sgn(double x) { return (x > 0.0) - (x < 0.0); }

inline double square(double x) { return x * x; }

/// log(sum_i exp(x_i)) over finite entries; -inf if all entries are -inf.
inline double log_sum_exp(const std::vector<double>& xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace distset
