#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace rfsfuse {

/// Largest state dimension supported. Dynamic-size vectors and matrices are
/// capped here so that they live on the stack (the tracking state is 4-D,
/// the grid oracles are 1-D or 2-D).
inline constexpr int kMaxDim = 4;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline bool is_positive_definite(const Matrix& m) {
    Eigen::LLT<Matrix> llt(m);
    return llt.info() == Eigen::Success;
}

/// log N(x; mean, cov). Returns -inf when cov is not positive-definite.
inline double log_gaussian_pdf(const Vector& x, const Vector& mean, const Matrix& cov) {
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) return -INFINITY;
    const Vector diff = x - mean;
    const Vector solved = llt.matrixL().solve(diff);
    const Matrix& l = llt.matrixLLT();
    double log_det = 0.0;
    for (int i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
    const double k = static_cast<double>(x.size());
    return -0.5 * (k * std::log(2.0 * std::numbers::pi) + log_det + solved.squaredNorm());
}

inline double gaussian_pdf(const Vector& x, const Vector& mean, const Matrix& cov) {
    return std::exp(log_gaussian_pdf(x, mean, cov));
}

/// Squared Mahalanobis distance (x - mean)^T cov^{-1} (x - mean).
inline double mahalanobis_sq(const Vector& x, const Vector& mean, const Matrix& cov) {
    Eigen::LLT<Matrix> llt(cov);
    const Vector solved = llt.matrixL().solve(x - mean);
    return solved.squaredNorm();
}

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a + std::numbers::pi, two_pi);
    if (a <= 0.0) a += two_pi;
    return a - std::numbers::pi;
}

}  // namespace rfsfuse
