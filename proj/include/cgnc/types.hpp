#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace cgnc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Errors caused by bad user input (files, arguments). CLI maps these to exit code 2.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Violations of an operation's stated precondition. CLI maps these to exit code 3.
class PreconditionError : public std::runtime_error {
public:
    explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Solver-level failures. CLI maps these to exit code 4.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cgnc
