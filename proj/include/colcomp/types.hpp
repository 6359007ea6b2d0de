#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace colcomp {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Error hierarchy. Everything thrown by the library derives from Error so
// callers can catch one type at the top level.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class TopologyError : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(std::string matrix_name, double min_eigenvalue)
        : Error("matrix '" + matrix_name + "' is not positive definite (min eigenvalue "
                + std::to_string(min_eigenvalue) + ")"),
          matrix(std::move(matrix_name)),
          min_eigenvalue(min_eigenvalue) {}

    std::string matrix;
    double min_eigenvalue;
};

// x = 0 is not strictly feasible for a convex QCQP handed to the barrier solver.
class InfeasibleStart : public Error {
public:
    using Error::Error;
};

// Collaboration already spends sensor i's whole budget, leaving nothing for
// compression.
class BudgetExhausted : public Error {
public:
    BudgetExhausted(Index sensor_index, double spent, double budget)
        : Error("collaboration exhausted budget of sensor " + std::to_string(sensor_index)
                + " (spent " + std::to_string(spent) + " of " + std::to_string(budget) + ")"),
          sensor(sensor_index) {}

    Index sensor;
};

inline void require(bool condition, const std::string& what) {
    if (!condition) throw DimensionMismatch(what);
}

} // namespace colcomp
