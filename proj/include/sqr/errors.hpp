#pragma once

#include <stdexcept>
#include <string>

namespace sqr {

/// Base class for all library errors. Subclasses split into two groups
/// that the CLI maps onto exit codes: data errors (ParseError,
/// DomainViolation, DegenerateColumn) and numeric/validity errors
/// (everything else).
class SqrError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// (eta1, eta2) violates the validity predicate of the family, i.e. the
/// node-conditional log partition diverges.
class InvalidParams : public SqrError {
public:
    using SqrError::SqrError;
};

/// A value lies outside the family domain (negative for Exponential or
/// Poisson, non-integer for Poisson). Carries the offending coordinate
/// when it comes from a data matrix; row/col are 1-based, 0 means unknown.
class DomainViolation : public SqrError {
public:
    explicit DomainViolation(const std::string& what, long row = 0, long col = 0)
        : SqrError(what), row(row), col(col) {}
    long row;
    long col;
};

/// A quadrature cutoff search or truncated summation exhausted its budget
/// without the tail decaying. Treated as evidence of a divergent integral.
class NonConvergence : public SqrError {
public:
    using SqrError::SqrError;
};

/// An intermediate quantity left the representable range even in log space.
class OverflowError : public SqrError {
public:
    using SqrError::SqrError;
};

/// The requested slice level lies above the maximum of the exponent.
class EmptySlice : public SqrError {
public:
    using SqrError::SqrError;
};

/// -Phi failed its Cholesky factorization where negative definiteness is
/// required (Gaussian reduction).
class NotNegativeDefinite : public SqrError {
public:
    using SqrError::SqrError;
};

/// A column has no well-defined univariate MLE (zero mean or variance).
class DegenerateColumn : public SqrError {
public:
    using SqrError::SqrError;
};

/// Malformed CSV or model file. row/col are 1-based, 0 means unknown.
class ParseError : public SqrError {
public:
    explicit ParseError(const std::string& what, long row = 0, long col = 0)
        : SqrError(what), row(row), col(col) {}
    long row;
    long col;
};

/// No feasible starting point for a node-wise fit.
class NoValidStart : public SqrError {
public:
    using SqrError::SqrError;
};

}  // namespace sqr
