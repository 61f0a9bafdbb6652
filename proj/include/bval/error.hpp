#pragma once

#include <stdexcept>
#include <string>

namespace bval {

// Mirrors the status codes of the C API one to one.
enum class ErrorCode {
    Domain = 1,
    Bracket = 2,
    Integration = 3,
    LinearAlgebra = 4,
    Dimension = 5,
    Precondition = 6,
    Singular = 7,
    Contract = 8,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(ErrorCode::Domain, w) {}
};
struct BracketError : Error {
    explicit BracketError(const std::string& w) : Error(ErrorCode::Bracket, w) {}
};
struct IntegrationError : Error {
    explicit IntegrationError(const std::string& w) : Error(ErrorCode::Integration, w) {}
};
struct LinearAlgebraError : Error {
    explicit LinearAlgebraError(const std::string& w) : Error(ErrorCode::LinearAlgebra, w) {}
};
struct DimensionError : Error {
    explicit DimensionError(const std::string& w) : Error(ErrorCode::Dimension, w) {}
};
struct PreconditionError : Error {
    explicit PreconditionError(const std::string& w) : Error(ErrorCode::Precondition, w) {}
};
struct SingularError : Error {
    explicit SingularError(const std::string& w) : Error(ErrorCode::Singular, w) {}
};
struct ContractError : Error {
    explicit ContractError(const std::string& w) : Error(ErrorCode::Contract, w) {}
};

}  // namespace bval
