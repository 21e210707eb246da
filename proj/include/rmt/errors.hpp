#pragma once

#include <stdexcept>
#include <string>

namespace rmt {

// Exit-code categories used by the CLI:
//   2 = input error, 3 = numerical failure, 4 = empty-group / threshold failure.
class Error : public std::runtime_error {
public:
    Error(const std::string& msg, int exit_code)
        : std::runtime_error(msg), exit_code_(exit_code) {}
    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

class InputError : public Error {
public:
    explicit InputError(const std::string& msg) : Error(msg, 2) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg, 3) {}
};

class ThresholdError : public Error {
public:
    explicit ThresholdError(const std::string& msg) : Error(msg, 4) {}
};

struct NonPositivePrice : InputError {
    NonPositivePrice(long row, long col)
        : InputError("non-positive price at row " + std::to_string(row) +
                     ", column " + std::to_string(col)),
          row(row), col(col) {}
    long row, col;
};

struct TooFewRows : InputError {
    explicit TooFewRows(long rows)
        : InputError("need at least 3 price rows, got " + std::to_string(rows)) {}
};

struct ZeroVarianceColumn : InputError {
    explicit ZeroVarianceColumn(long col)
        : InputError("column " + std::to_string(col) + " has (near-)zero variance"),
          col(col) {}
    long col;
};

struct DimensionMismatch : InputError {
    explicit DimensionMismatch(const std::string& msg) : InputError(msg) {}
};

struct NotNormalized : InputError {
    explicit NotNormalized(double norm)
        : InputError("vector is not unit-norm (|v| = " + std::to_string(norm) + ")") {}
};

struct InvalidParameter : InputError {
    explicit InvalidParameter(const std::string& msg) : InputError(msg) {}
};

struct TooFewEigenvalues : InputError {
    TooFewEigenvalues(long have, long need)
        : InputError("need at least " + std::to_string(need) +
                     " eigenvalues after signal exclusion, got " + std::to_string(have)) {}
};

struct InvalidK : InputError {
    InvalidK(long k, long n)
        : InputError("signal count k = " + std::to_string(k) +
                     " outside [1, " + std::to_string(n) + ")") {}
};

struct InvalidNu : InputError {
    explicit InvalidNu(double nu)
        : InputError("tail index nu = " + std::to_string(nu) + " must exceed 2") {}
};

struct InvalidRho : InputError {
    InvalidRho(double rho, long d)
        : InputError("intra-block correlation " + std::to_string(rho) +
                     " outside (-1/" + std::to_string(d - 1) + ", 1) for block size " +
                     std::to_string(d)) {}
};

struct SubsetTooSmall : InputError {
    SubsetTooSmall(long size, long clusters)
        : InputError("subset of size " + std::to_string(size) +
                     " cannot be split into " + std::to_string(clusters) + " clusters") {}
};

struct CsvError : InputError {
    CsvError(const std::string& msg, long line)
        : InputError("csv line " + std::to_string(line) + ": " + msg) {}
};

struct NotPositiveDefinite : NumericalError {
    explicit NotPositiveDefinite(double min_eigenvalue)
        : NumericalError("matrix is not positive definite (min eigenvalue " +
                         std::to_string(min_eigenvalue) + ")"),
          min_eigenvalue(min_eigenvalue) {}
    double min_eigenvalue;
};

struct ConvergenceFailure : NumericalError {
    explicit ConvergenceFailure(const std::string& msg) : NumericalError(msg) {}
};

struct FitDegenerate : NumericalError {
    explicit FitDegenerate(const std::string& msg) : NumericalError(msg) {}
};

struct NegativeFlatValue : NumericalError {
    explicit NegativeFlatValue(double value)
        : NumericalError("flat band value " + std::to_string(value) +
                         " is not positive; too many signal eigenvalues kept") {}
};

struct EmptyGroup : ThresholdError {
    explicit EmptyGroup(const std::string& which)
        : ThresholdError("group " + which + " is empty at the given threshold") {}
};

struct EmptySubband : ThresholdError {
    explicit EmptySubband(const std::string& which)
        : ThresholdError("subband " + which + " captured no eigenvector") {}
};

} // namespace rmt
