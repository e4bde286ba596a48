#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace proxflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (sizes, signs, finiteness).
class ValidationError : public Error {
public:
    using Error::Error;
};

class SymmetryError : public ValidationError {
public:
    explicit SymmetryError(double asymmetry)
        : ValidationError("matrix is not symmetric: max |A_ij - A_ji| = " + std::to_string(asymmetry)),
          asymmetry_(asymmetry) {}
    double asymmetry() const noexcept { return asymmetry_; }

private:
    double asymmetry_;
};

class SingularError : public Error {
public:
    explicit SingularError(double condition_estimate)
        : Error("linear system is singular or ill-conditioned: condition estimate " +
                std::to_string(condition_estimate)),
          condition_(condition_estimate) {}
    double condition_estimate() const noexcept { return condition_; }

private:
    double condition_;
};

class RankError : public Error {
public:
    RankError(std::size_t rank, std::size_t expected)
        : Error("matrix is rank deficient: numerical rank " + std::to_string(rank) + " < " +
                std::to_string(expected)),
          rank_(rank) {}
    std::size_t numerical_rank() const noexcept { return rank_; }

private:
    std::size_t rank_;
};

class UnsupportedOrderError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DegenerateParameterError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// An iteration produced non-finite values or blew past the divergence threshold.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t step) : Error(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace proxflow
