#pragma once

#include "rfsfuse/densities.hpp"
#include "rfsfuse/grid.hpp"

#include <limits>

namespace rfsfuse {

/// Returned when the first argument is not absolutely continuous w.r.t. the
/// second (p > kSupportThreshold where q < kVanishingDensity).
inline constexpr double kInfiniteDivergence = std::numeric_limits<double>::infinity();
inline constexpr double kSupportThreshold = 1e-12;
inline constexpr double kVanishingDensity = 1e-300;

/// Minimum quadrature resolution per dimension for Gaussian-mixture KLDs.
inline constexpr std::size_t kMinQuadraturePoints = 200;

/// D(p || q) for grid PDFs on the same grid (Riemann sum).
[[nodiscard]] double kld_pdf(const GridDensity& p, const GridDensity& q);

/// D(p || q) for 1-D or 2-D normalized Gaussian mixtures, by midpoint
/// quadrature on `window` (at least kMinQuadraturePoints per axis).
[[nodiscard]] double kld_pdf(const GaussianMixture& p, const GaussianMixture& q, const Grid& window);

/// As above with a window spanning +-10 standard deviations of both inputs
/// and 400 points per axis.
[[nodiscard]] double kld_pdf(const GaussianMixture& p, const GaussianMixture& q);

/// D(rho1 || rho2) over a common support 0..n_max.
[[nodiscard]] double kld_pmf(const CardinalityPmf& rho1, const CardinalityPmf& rho2);

/// Multiobject KLD by brute-force truncated set integral on `grid`.
[[nodiscard]] double kld_set(const SetFunction& f1, const SetFunction& f2, const Grid& grid, std::size_t n_max);

/// Multiobject KLD between two i.i.d. clusters tabulated on the same grid.
[[nodiscard]] double kld_set(const GridDensity& f1, const GridDensity& f2);

/// Multiobject KLD between densities with Gaussian-mixture spatials,
/// discretized onto `grid` and truncated after n_max objects.
[[nodiscard]] double kld_set(const MultiObjectDensity& f1, const MultiObjectDensity& f2, const Grid& grid,
                             std::size_t n_max);

/// Set function of a density whose spatial PDF is tabulated on `grid`.
[[nodiscard]] SetFunction discretize(const MultiObjectDensity& f, const Grid& grid);

}  // namespace rfsfuse
