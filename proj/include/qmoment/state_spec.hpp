#ifndef QMOMENT_STATE_SPEC_HPP
#define QMOMENT_STATE_SPEC_HPP

#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <variant>

#include "qmoment/error.hpp"

namespace qmoment {

namespace states {

struct Fock {
  int n = 0;
};
struct Coherent {
  std::complex<double> alpha;
};
/// Unitless temperature T > 0; mean photon number 1/(e^{1/T} - 1).
struct Thermal {
  double temperature = 1.0;
};
struct EvenCoherent {
  std::complex<double> alpha;
};
struct OddCoherent {
  std::complex<double> alpha;
};

}  // namespace states

using StateSpec = std::variant<states::Fock, states::Coherent, states::Thermal,
                               states::EvenCoherent, states::OddCoherent>;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline double thermal_mean_photons(double temperature) {
  return 1.0 / std::expm1(1.0 / temperature);
}

/// Rejects parameters outside the physical domain of each state kind.
inline void validate(const StateSpec& spec) {
  std::visit(overloaded{
                 [](const states::Fock& s) {
                   if (s.n < 0) throw Error(ErrorCode::InvalidParameter, "Fock N must be >= 0");
                 },
                 [](const states::Thermal& s) {
                   if (!(s.temperature > 0.0) || !std::isfinite(s.temperature)) {
                     throw Error(ErrorCode::InvalidParameter, "thermal temperature must be > 0");
                   }
                 },
                 [](const states::OddCoherent& s) {
                   // |alpha> - |-alpha> vanishes at alpha = 0.
                   if (std::norm(s.alpha) < 1e-8) {
                     throw Error(ErrorCode::InvalidParameter, "odd coherent state needs |alpha| > 1e-4");
                   }
                 },
                 [](const auto&) {},
             },
             spec);
}

namespace detail {

inline double parse_double(std::string_view s) {
  std::string buf(s);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size()) {
    throw Error(ErrorCode::ParseError, "bad number '" + buf + "'");
  }
  return v;
}

inline std::complex<double> parse_complex(std::string_view s) {
  const auto comma = s.find(',');
  if (comma == std::string_view::npos) return {parse_double(s), 0.0};
  return {parse_double(s.substr(0, comma)), parse_double(s.substr(comma + 1))};
}

inline std::string format_complex(std::complex<double> z) {
  char buf[64];
  if (z.imag() == 0.0) {
    std::snprintf(buf, sizeof buf, "%.17g", z.real());
  } else {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", z.real(), z.imag());
  }
  return buf;
}

}  // namespace detail

/// Parses `fock:N`, `coherent:RE[,IM]`, `thermal:T`, `even:RE[,IM]`, `odd:RE[,IM]`.
inline StateSpec parse_state(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorCode::ParseError, "state must look like kind:params, got '" + std::string(text) + "'");
  }
  const auto kind = text.substr(0, colon);
  const auto arg = text.substr(colon + 1);
  StateSpec spec;
  if (kind == "fock") {
    int n = 0;
    const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), n);
    if (ec != std::errc{} || ptr != arg.data() + arg.size()) {
      throw Error(ErrorCode::ParseError, "bad Fock index '" + std::string(arg) + "'");
    }
    spec = states::Fock{n};
  } else if (kind == "coherent") {
    spec = states::Coherent{detail::parse_complex(arg)};
  } else if (kind == "thermal") {
    spec = states::Thermal{detail::parse_double(arg)};
  } else if (kind == "even") {
    spec = states::EvenCoherent{detail::parse_complex(arg)};
  } else if (kind == "odd") {
    spec = states::OddCoherent{detail::parse_complex(arg)};
  } else {
    throw Error(ErrorCode::ParseError, "unknown state kind '" + std::string(kind) + "'");
  }
  validate(spec);
  return spec;
}

inline std::string to_string(const StateSpec& spec) {
  return std::visit(overloaded{
                        [](const states::Fock& s) { return "fock:" + std::to_string(s.n); },
                        [](const states::Coherent& s) { return "coherent:" + detail::format_complex(s.alpha); },
                        [](const states::Thermal& s) {
                          return "thermal:" + detail::format_complex(s.temperature);
                        },
                        [](const states::EvenCoherent& s) { return "even:" + detail::format_complex(s.alpha); },
                        [](const states::OddCoherent& s) { return "odd:" + detail::format_complex(s.alpha); },
                    },
                    spec);
}

}  // namespace qmoment

#endif  // QMOMENT_STATE_SPEC_HPP
