#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace rfsfuse {

struct OspaParams {
    /// Order p >= 1.
    double order = 2.0;
    /// Cutoff c > 0 (m).
    double cutoff = 100.0;
};

/// Minimum-cost assignment of the rows of a rows x cols cost matrix
/// (rows <= cols) to distinct columns. Returns the column of each row.
[[nodiscard]] std::vector<std::size_t> hungarian(const Eigen::MatrixXd& cost);

/// OSPA distance between two sets of 2-D positions, in [0, c]. Both sets
/// empty gives 0.
[[nodiscard]] double ospa(std::span<const Eigen::Vector2d> x, std::span<const Eigen::Vector2d> y,
                          const OspaParams& params = {});

}  // namespace rfsfuse
