#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace orthokalman {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes that do not fit together.
class DimensionError : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(const std::string& what, std::int64_t pivot)
        : Error(what), pivot_(pivot) {}
    std::int64_t pivot() const noexcept { return pivot_; }

private:
    std::int64_t pivot_;
};

class SingularMatrix : public Error {
public:
    SingularMatrix(const std::string& what, std::int64_t index)
        : Error(what), index_(index) {}
    std::int64_t index() const noexcept { return index_; }

private:
    std::int64_t index_;
};

class InvalidCovariance : public Error {
public:
    using Error::Error;
};

/// Misuse of the filter's step lifecycle.
class LifecycleError : public Error {
public:
    enum class Reason {
        NoSteps,
        EvolveBeforeObserve,
        AlreadyObserved,
        StepForgotten,
        FutureStep,
        NotSmoothed,
        CannotForget,
        UnknownDimension,
    };

    LifecycleError(Reason reason, const std::string& what)
        : Error(what), reason_(reason) {}
    Reason reason() const noexcept { return reason_; }

private:
    Reason reason_;
};

/// The reference solver found the weighted coefficient matrix rank deficient.
class RankDeficient : public Error {
public:
    RankDeficient(const std::string& what, std::int64_t rank, std::int64_t columns)
        : Error(what), rank_(rank), columns_(columns) {}
    std::int64_t rank() const noexcept { return rank_; }
    std::int64_t columns() const noexcept { return columns_; }

private:
    std::int64_t rank_;
    std::int64_t columns_;
};

}  // namespace orthokalman
