#pragma once

#include <stdexcept>
#include <string>

namespace cathkin {

/// A structured input file (model, setup, log, descriptor) could not be read.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// An input violated a documented invariant (lengths, grids, trial counts, ...).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A computation produced no usable result (non-finite objective, failed solve).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Not enough samples to evaluate (e.g. velocity from fewer than two points).
class InsufficientDataError : public std::runtime_error {
public:
    explicit InsufficientDataError(const std::string& what) : std::runtime_error(what) {}
};

/// The two imaging planes are too close to parallel to reconstruct 3D points.
/// Carries the smallest singular value of the stacked projector system.
class DegenerateGeometryError : public std::runtime_error {
public:
    DegenerateGeometryError(const std::string& what, double smallest_singular_value)
        : std::runtime_error(what), smallest_singular_value_(smallest_singular_value) {}

    double smallest_singular_value() const noexcept { return smallest_singular_value_; }

private:
    double smallest_singular_value_;
};

}  // namespace cathkin
