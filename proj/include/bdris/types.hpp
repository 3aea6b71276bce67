// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bdris {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLn2 = 0.69314718055994530942;

/// Cyclic user arithmetic: user K+1 is user 1 and user 0 is user K (0-based here).
inline int prev_user(int k, int users) { return (k + users - 1) % users; }
inline int next_user(int k, int users) { return (k + 1) % users; }

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Raised when a NaN/Inf appears in optimizer state; names the offending block.
class NumericalError : public std::runtime_error {
public:
    NumericalError(std::string block, const std::string& what)
        : std::runtime_error(block + ": " + what), block_(std::move(block)) {}
    const std::string& block() const { return block_; }

private:
    std::string block_;
};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    return m.allFinite();
}

}  // namespace bdris
