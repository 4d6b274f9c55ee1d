#pragma once

#include "rfsfuse/densities.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace rfsfuse {

/// Uniform axis of `points` cells on [lower, upper]; nodes sit at cell centres.
struct Axis {
    double lower;
    double upper;
    std::size_t points;

    [[nodiscard]] double step() const { return (upper - lower) / static_cast<double>(points); }
    [[nodiscard]] double node(std::size_t i) const { return lower + (static_cast<double>(i) + 0.5) * step(); }
};

/// Bounded 1-D or 2-D window of cell centres. Points are indexed row-major
/// with the first axis varying slowest.
class Grid {
public:
    explicit Grid(Axis x);
    Grid(Axis x, Axis y);

    [[nodiscard]] int dim() const { return static_cast<int>(axes_.size()); }
    [[nodiscard]] std::size_t size() const { return size_; }
    [[nodiscard]] double cell_volume() const { return cell_volume_; }
    [[nodiscard]] const std::vector<Axis>& axes() const { return axes_; }
    [[nodiscard]] Vector point(std::size_t index) const;

private:
    std::vector<Axis> axes_;
    std::size_t size_ = 0;
    double cell_volume_ = 0.0;
};

/// Tolerance on the Riemann-sum normalization of a grid PDF.
inline constexpr double kGridNormTol = 1e-6;

/// Single-object PDF tabulated on a grid, optionally carrying a CPMF so that
/// it describes an i.i.d. cluster on the grid.
class GridDensity {
public:
    GridDensity(Grid grid, std::vector<double> values, std::optional<CardinalityPmf> cardinality = std::nullopt);

    /// Tabulate a Gaussian mixture and renormalize the Riemann sum to one.
    static GridDensity from_mixture(const GaussianMixture& gm, const Grid& grid,
                                    std::optional<CardinalityPmf> cardinality = std::nullopt);
    /// Tabulate an arbitrary nonnegative function and renormalize.
    static GridDensity from_function(const Grid& grid, const std::function<double(const Vector&)>& f,
                                     std::optional<CardinalityPmf> cardinality = std::nullopt);

    [[nodiscard]] const Grid& grid() const { return grid_; }
    [[nodiscard]] std::span<const double> values() const { return values_; }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
    [[nodiscard]] const std::optional<CardinalityPmf>& cardinality() const { return cardinality_; }
    /// Truncation order of set integrals over this density.
    [[nodiscard]] std::size_t n_max() const { return cardinality_ ? cardinality_->n_max() : 1; }

    [[nodiscard]] GridDensity with_cardinality(CardinalityPmf rho) const;

private:
    Grid grid_;
    std::vector<double> values_;
    std::optional<CardinalityPmf> cardinality_;
};

/// Multiobject density (or any set function) evaluated on a finite set given
/// as a tuple of grid point indices. The empty tuple is the empty set.
using SetFunction = std::function<double(std::span<const std::size_t>)>;

/// f(X) = |X|! rho(|X|) prod p(x).
[[nodiscard]] SetFunction iid_cluster_set_density(const GridDensity& d);
/// f(∅) = 1 - r, f({x}) = r p(x), zero for two or more objects.
[[nodiscard]] SetFunction bernoulli_set_density(double existence, const GridDensity& spatial);
/// f(X) = exp(-lambda) prod lambda p(x).
[[nodiscard]] SetFunction poisson_set_density(double rate, const GridDensity& spatial);
/// f(X) = exp(-∫D) prod D(x) for a PHD tabulated on `grid`.
[[nodiscard]] SetFunction poisson_set_density_from_phd(std::vector<double> phd, const Grid& grid);
/// Pointwise weighted sum of set functions.
[[nodiscard]] SetFunction weighted_sum(std::vector<SetFunction> terms, std::vector<double> weights);

/// Set integral g(∅) + ∫g({x})dx + 1/2 ∫∫g({x1,x2}) + ... truncated after
/// n_max objects, with ordinary integrals replaced by Riemann sums on `grid`.
[[nodiscard]] double set_integral(const SetFunction& g, const Grid& grid, std::size_t n_max);

/// Visit every ordered tuple of grid indices of length n.
void for_each_tuple(std::size_t grid_size, std::size_t n,
                    const std::function<void(std::span<const std::size_t>)>& visit);

}  // namespace rfsfuse
