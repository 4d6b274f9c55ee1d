#include "rfsfuse/ospa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rfsfuse {

std::vector<std::size_t> hungarian(const Eigen::MatrixXd& cost) {
    const auto n = static_cast<std::size_t>(cost.rows());
    const auto m = static_cast<std::size_t>(cost.cols());
    if (n > m) throw std::invalid_argument("hungarian: more rows than columns");
    if (!cost.allFinite()) throw std::invalid_argument("hungarian: non-finite cost");
    constexpr double kInf = std::numeric_limits<double>::infinity();

    // Shortest augmenting path with row/column potentials; index 0 is a sentinel.
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> match(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, kInf);
        std::vector<bool> used(m + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            double delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> assignment(n);
    for (std::size_t j = 1; j <= m; ++j)
        if (match[j] != 0) assignment[match[j] - 1] = j - 1;
    return assignment;
}

double ospa(std::span<const Eigen::Vector2d> x, std::span<const Eigen::Vector2d> y, const OspaParams& params) {
    if (!(params.order >= 1.0)) throw std::invalid_argument("ospa: order must be >= 1");
    if (!(params.cutoff > 0.0)) throw std::invalid_argument("ospa: cutoff must be > 0");
    if (x.size() > y.size()) std::swap(x, y);
    const std::size_t m = x.size();
    const std::size_t n = y.size();
    if (n == 0) return 0.0;
    const double p = params.order;
    const double c = params.cutoff;

    double total = static_cast<double>(n - m) * std::pow(c, p);
    if (m > 0) {
        Eigen::MatrixXd cost(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::pow(std::min(c, (x[i] - y[j]).norm()), p);
        const std::vector<std::size_t> assignment = hungarian(cost);
        // Sum in sorted order so that the result does not depend on which set is X.
        std::vector<double> matched(m);
        for (std::size_t i = 0; i < m; ++i) matched[i] = cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(assignment[i]));
        std::sort(matched.begin(), matched.end());
        for (double d : matched) total += d;
    }
    return std::min(c, std::pow(total / static_cast<double>(n), 1.0 / p));
}

}  // namespace rfsfuse
