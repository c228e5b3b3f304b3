#pragma once

#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hml {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

// Exit-code aligned error hierarchy (see tools/hml.cpp).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidParameter : Error {
    using Error::Error;
};
struct DomainError : Error {
    using Error::Error;
};
struct NonConvergence : Error {
    using Error::Error;
};
struct VerificationFailure : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidParameter(what);
}

inline double sqr(double x) { return x * x; }

} // namespace hml
