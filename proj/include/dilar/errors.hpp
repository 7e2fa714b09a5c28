#pragma once
#include <stdexcept>
#include <string>

namespace dilar {

// Base for everything thrown by this library.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration or command-line usage (CLI exit code 2).
class config_error : public error {
    using error::error;
};

// Unreadable or ill-formed data / checkpoint files (CLI exit code 3).
class data_error : public error {
    using error::error;
};

// Optimization failed persistently (CLI exit code 4).
class fit_error : public error {
    using error::error;
};

// Cone decomposition requested where the energy gradient vanishes; the
// dissipativity cone has no defined axis there.
class degenerate_gradient_error : public error {
    using error::error;
};

// Residual has strictly positive power along the energy gradient, so no
// skew-minus-PSD factorization can reproduce it.
class not_in_cone_error : public error {
    using error::error;
};

// A measurement channel with (numerically) zero variance cannot be
// inverse-variance weighted.
class degenerate_channel_error : public error {
public:
    degenerate_channel_error(const std::string& msg, int ch)
        : error(msg), channel(ch) {}
    int channel;
};

// State left the finite range during integration. `step` is the index of
// the failing step within the current rollout.
class divergence_error : public error {
public:
    divergence_error(const std::string& msg, long s) : error(msg), step(s) {}
    long step;
};

// Reverse-mode differentiation was asked about a value it cannot handle
// (e.g. the gradient of a constant, or with respect to a non-leaf).
class unsupported_operation_error : public error {
    using error::error;
};

}  // namespace dilar
