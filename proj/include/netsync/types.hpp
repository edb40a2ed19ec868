#pragma once

#include <complex>

#include <Eigen/Dense>

namespace netsync {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline bool all_finite(const Matrix& m) {
    return m.array().isFinite().all();
}

inline bool all_finite(const RealMatrix& m) {
    return m.array().isFinite().all();
}

} // namespace netsync
