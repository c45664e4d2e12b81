#ifndef QMOMENT_COMBINATORICS_HPP
#define QMOMENT_COMBINATORICS_HPP

#include <array>
#include <cmath>
#include <cstdint>

namespace qmoment {

namespace detail {

constexpr std::array<std::uint64_t, 21> kFactorials = [] {
  std::array<std::uint64_t, 21> f{};
  f[0] = 1;
  for (std::size_t i = 1; i < f.size(); ++i) f[i] = f[i - 1] * i;
  return f;
}();

}  // namespace detail

// Exact below 21!, log-gamma above.
inline double factorial(int n) {
  if (n < 0) return 0.0;
  if (n <= 20) return static_cast<double>(detail::kFactorials[n]);
  return std::exp(std::lgamma(n + 1.0));
}

inline double log_factorial(int n) {
  if (n <= 20) return std::log(factorial(n));
  return std::lgamma(n + 1.0);
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  if (k > n - k) k = n - k;
  if (n <= 60) {
    // C(n, k) * i / (i + 1) style product stays integral at each step
    std::uint64_t c = 1;
    for (int i = 1; i <= k; ++i) c = c * static_cast<std::uint64_t>(n - k + i) / i;
    return static_cast<double>(c);
  }
  return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
}

/// n! / (n - k)!
inline double falling_factorial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= static_cast<double>(n - i);
  return r;
}

/// (2l - 1)!! with (-1)!! = 1.
inline double odd_double_factorial(int l) {
  double r = 1.0;
  for (int i = 1; i <= l; ++i) r *= static_cast<double>(2 * i - 1);
  return r;
}

inline double sign_power(int n) { return (n % 2 == 0) ? 1.0 : -1.0; }

}  // namespace qmoment

#endif  // QMOMENT_COMBINATORICS_HPP
