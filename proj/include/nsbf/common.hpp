#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsbf {

using complex = std::complex<double>;
using ComplexSeq = std::vector<complex>;

inline constexpr double pi = std::numbers::pi;
inline constexpr complex I{0.0, 1.0};

// Base for every failure the library reports. Data errors (bad input) and
// numerical failures are kept apart so front-ends can map them to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class OverflowError : public NumericalError {
public:
    explicit OverflowError(const std::string& what) : NumericalError(what), order_(-1) {}
    OverflowError(const std::string& what, int order)
        : NumericalError(what + " (order " + std::to_string(order) + ")"), order_(order) {}
    int order() const noexcept { return order_; }

private:
    int order_;
};

class RankDeficientError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class PoleError : public NumericalError {
public:
    PoleError(const std::string& what, int index)
        : NumericalError(what + " (index " + std::to_string(index) + ")"), index_(index) {}
    int index() const noexcept { return index_; }

private:
    int index_;
};

class IntegrationError : public NumericalError {
public:
    IntegrationError(const std::string& what, double location)
        : NumericalError(what + " at x=" + std::to_string(location)), location_(location) {}
    double location() const noexcept { return location_; }

private:
    double location_;
};

class RootFindingError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

inline bool is_finite(complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// Square root on the branch Im >= 0, the convention for singular numbers.
inline complex sqrt_upper(complex lambda) {
    complex r = std::sqrt(lambda);
    if (r.imag() < 0.0) r = -r;
    return r;
}

}  // namespace nsbf
