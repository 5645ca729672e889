#pragma once

#include <stdexcept>
#include <string>

namespace lentil {

enum class ErrorCode
{
    invalid_argument = 1,
    parse = 2,
    io = 3,
    solver = 4,
    constraint = 5,
    degenerate = 6,
    internal = 99,
};

// Base exception of the library. The C API maps `code()` onto lentil_status.
class Error : public std::runtime_error
{
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code)
    {
    }
    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

// Two-point solver failure; carries the final residual of the shooting map.
class SolverError : public Error
{
  public:
    SolverError(const std::string& what, double residual)
        : Error(ErrorCode::solver, what + " (residual " + std::to_string(residual) + ")"),
          residual_(residual)
    {
    }
    double residual() const noexcept { return residual_; }

  private:
    double residual_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what)
{
    throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what)
{
    if (!cond)
        throw Error(code, what);
}

}  // namespace lentil
