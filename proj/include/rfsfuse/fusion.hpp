#pragma once

#include "rfsfuse/densities.hpp"
#include "rfsfuse/grid.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace rfsfuse {

/// Nonnegative fusion weights, one per agent, summing to one within 1e-12.
class FusionWeights {
public:
    /// Agents are numbered 0..n-1.
    explicit FusionWeights(std::vector<double> weights);
    FusionWeights(std::vector<std::size_t> agents, std::vector<double> weights);

    static FusionWeights uniform(std::size_t n);

    [[nodiscard]] std::size_t size() const { return weights_.size(); }
    [[nodiscard]] std::span<const std::size_t> agents() const { return agents_; }
    [[nodiscard]] std::span<const double> values() const { return weights_; }
    [[nodiscard]] double operator[](std::size_t i) const { return weights_[i]; }

private:
    std::vector<std::size_t> agents_;
    std::vector<double> weights_;
};

enum class FusionRule { MIL, MWIG, None };

[[nodiscard]] std::string_view to_string(FusionRule rule);
/// Accepts "MIL", "MWIG", "None" (case-insensitive).
[[nodiscard]] FusionRule parse_fusion_rule(std::string_view name);

/// Raised by MWIG fusion when the fused multiobject density cannot be
/// normalized (the local densities have disjoint supports).
class TotalConflictError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---- Minimum information loss (linear opinion pool) ----

/// Weighted arithmetic mean of spatial PDFs. GM and particle inputs are
/// concatenated with weights scaled by the fusion weights; zero-weight inputs
/// are dropped.
[[nodiscard]] SpatialPdf mil_mixture(std::span<const SpatialPdf> densities, const FusionWeights& w);
/// Pointwise weighted arithmetic mean of grid PDFs.
[[nodiscard]] GridDensity mil_mixture(std::span<const GridDensity> densities, const FusionWeights& w);

/// r = sum w_i r_i; p = sum w_i r_i p_i / sum w_i r_i. If every r_i is zero the
/// result has r = 0 and an empty spatial PDF.
[[nodiscard]] Bernoulli fuse_bernoulli_mil(std::span<const Bernoulli> locals, const FusionWeights& w);

/// rho(n) = sum w_i rho_i(n); p = sum w_i N_i p_i / sum w_j N_j, with N_i the
/// CPMF mean of agent i. Agents with an empty spatial PDF contribute only to
/// the CPMF.
[[nodiscard]] IidCluster fuse_iidcp_mil(std::span<const IidCluster> locals, const FusionWeights& w);

/// lambda = sum w_i lambda_i; the fused PHD is the weighted sum of local PHDs.
[[nodiscard]] Poisson fuse_poisson_mil(std::span<const Poisson> locals, const FusionWeights& w);

/// IIDCP fusion for particle spatials: union of the particle sets with
/// weights scaled by w_i N_i / sum w_j N_j.
[[nodiscard]] IidCluster fuse_particles_mil(std::span<const IidCluster> locals, const FusionWeights& w);

/// Systematic resampling to J equal-weight particles; deterministic in `seed`.
[[nodiscard]] ParticleSet resample_to(const ParticleSet& p, std::size_t count, std::uint64_t seed);

/// Particle budget after fusion: 1000 per expected object, at least 1000.
[[nodiscard]] std::size_t post_fusion_particle_count(double expected_cardinality);

// ---- Minimum weighted information gain (generalized covariance intersection) ----

struct MwigOptions {
    /// Component pairs whose squared Mahalanobis separation exceeds this are
    /// treated as non-overlapping in GM products.
    double pair_gate = 100.0;
    /// Component cap applied between successive pairwise products.
    std::size_t max_intermediate_components = 100;
    /// Components lighter than this fraction of the heaviest are dropped
    /// between successive products.
    double relative_prune = 1e-12;
};

/// [sum a_m G(mu_m, P_m)]^w ~= sum a_m^w k(w, P_m) G(mu_m, P_m / w), where
/// k(w, P) = ∫G(x; mu, P)^w dx. Exact for a single component.
[[nodiscard]] GaussianMixture gm_power(const GaussianMixture& gm, double exponent);

/// Pairwise product of two Gaussian mixtures (unnormalized).
[[nodiscard]] GaussianMixture gm_product(const GaussianMixture& a, const GaussianMixture& b,
                                         const MwigOptions& options = {});

/// Unnormalized prod_i p_i^{w_i} over the agents with positive weight and a
/// non-empty spatial PDF. Its total weight is the spatial overlap constant.
[[nodiscard]] GaussianMixture gm_geometric_mean(std::span<const GaussianMixture> pdfs, const FusionWeights& w,
                                                const MwigOptions& options = {});

[[nodiscard]] Bernoulli fuse_mwig(std::span<const Bernoulli> locals, const FusionWeights& w,
                                  const MwigOptions& options = {});
[[nodiscard]] Poisson fuse_mwig(std::span<const Poisson> locals, const FusionWeights& w,
                                const MwigOptions& options = {});
/// rho(n) ∝ prod_i rho_i(n)^{w_i} C^n, p ∝ prod_i p_i^{w_i}, C = ∫prod_i p_i^{w_i}.
[[nodiscard]] IidCluster fuse_mwig(std::span<const IidCluster> locals, const FusionWeights& w,
                                   const MwigOptions& options = {});
/// Dispatches on the (common) variant of the inputs.
[[nodiscard]] MultiObjectDensity fuse_mwig(std::span<const MultiObjectDensity> locals, const FusionWeights& w,
                                           const MwigOptions& options = {});

// ---- Consensus weights ----

struct MetropolisWeights {
    /// Row-stochastic and symmetric; entry (i, j) is the weight node i gives node j.
    Eigen::MatrixXd matrix;
    /// Row i restricted to the in-neighbours of i (including i itself).
    std::vector<FusionWeights> rows;
    bool connected = true;
};

/// w_ij = 1 / (1 + max(d_i, d_j)) for neighbours, w_ii = 1 - sum_{j != i} w_ij.
/// `adjacency[i]` lists the neighbours of i (self-loops are ignored). A
/// disconnected graph is reported through `connected` and a warning on stderr.
[[nodiscard]] MetropolisWeights metropolis_weights(const std::vector<std::vector<std::size_t>>& adjacency);

}  // namespace rfsfuse
