#pragma once

#include <stdexcept>
#include <string>

namespace htsr {

/// Base class for all library errors. `category()` is a stable,
/// machine-parsable tag the CLI prints on failure.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& what)
        : std::runtime_error(what), category_(std::move(category)) {}

    const std::string& category() const { return category_; }

private:
    std::string category_;
};

/// Caller violated a documented precondition (dimension mismatch, bad index).
struct ContractError : Error {
    explicit ContractError(const std::string& what) : Error("contract", what) {}
};

/// A matrix that must be positive definite is not, even after jitter.
struct NotPositiveDefiniteError : Error {
    explicit NotPositiveDefiniteError(const std::string& what)
        : Error("not-positive-definite", what) {}
};

/// The assembled reconciliation precision is indefinite beyond repair.
struct IncoherentForecastsError : Error {
    explicit IncoherentForecastsError(const std::string& what)
        : Error("incoherent-forecasts", what) {}
};

/// Quadrature oracle could not produce moments (budget or zero mass).
struct OracleError : Error {
    explicit OracleError(const std::string& what) : Error("oracle-failure", what) {}
};

/// Hyperparameter optimization failed on every restart.
struct FitError : Error {
    explicit FitError(const std::string& what) : Error("fit-failure", what) {}
};

/// Bad config file, kernel expression, CSV or hierarchy file.
struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error("parse", what) {}
};

}  // namespace htsr
