#pragma once

#include "rfsfuse/linalg.hpp"

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace rfsfuse {

/// Tolerance on the weight sum of a normalized GM or particle set.
inline constexpr double kNormTol = 1e-9;

/// Weighted Gaussian. The covariance is symmetrized at construction and must
/// be positive-definite.
class GaussianComponent {
public:
    GaussianComponent(double weight, Vector mean, Matrix covariance);

    [[nodiscard]] double weight() const { return weight_; }
    [[nodiscard]] const Vector& mean() const { return mean_; }
    [[nodiscard]] const Matrix& covariance() const { return covariance_; }
    [[nodiscard]] int dim() const { return static_cast<int>(mean_.size()); }

    void set_weight(double w);

    [[nodiscard]] double pdf(const Vector& x) const { return gaussian_pdf(x, mean_, covariance_); }

    friend bool operator==(const GaussianComponent&, const GaussianComponent&) = default;

private:
    double weight_;
    Vector mean_;
    Matrix covariance_;
};

/// Ordered list of Gaussian components. Used both as a spatial PDF (weights
/// sum to one) and as a PHD (weights sum to the expected number of objects).
class GaussianMixture {
public:
    GaussianMixture() = default;
    explicit GaussianMixture(std::vector<GaussianComponent> components);

    [[nodiscard]] const std::vector<GaussianComponent>& components() const { return components_; }
    [[nodiscard]] std::size_t size() const { return components_.size(); }
    [[nodiscard]] bool empty() const { return components_.empty(); }
    [[nodiscard]] const GaussianComponent& operator[](std::size_t i) const { return components_[i]; }

    void add(GaussianComponent c);
    void append(const GaussianMixture& other, double scale = 1.0);

    [[nodiscard]] double total_weight() const;
    [[nodiscard]] double evaluate(const Vector& x) const;
    [[nodiscard]] int dim() const { return empty() ? 0 : components_.front().dim(); }

    /// Copy with every weight multiplied by `factor`.
    [[nodiscard]] GaussianMixture scaled(double factor) const;
    /// Copy with weights divided by their sum. Throws on zero total weight.
    [[nodiscard]] GaussianMixture normalized() const;

    friend bool operator==(const GaussianMixture&, const GaussianMixture&) = default;

private:
    std::vector<GaussianComponent> components_;
};

struct Particle {
    double weight;
    Vector state;

    friend bool operator==(const Particle&, const Particle&) = default;
};

class ParticleSet {
public:
    ParticleSet() = default;
    explicit ParticleSet(std::vector<Particle> particles);

    [[nodiscard]] const std::vector<Particle>& particles() const { return particles_; }
    [[nodiscard]] std::size_t size() const { return particles_.size(); }
    [[nodiscard]] bool empty() const { return particles_.empty(); }
    [[nodiscard]] const Particle& operator[](std::size_t i) const { return particles_[i]; }

    [[nodiscard]] double total_weight() const;
    [[nodiscard]] ParticleSet scaled(double factor) const;
    [[nodiscard]] ParticleSet normalized() const;

    friend bool operator==(const ParticleSet&, const ParticleSet&) = default;

private:
    std::vector<Particle> particles_;
};

/// Spatial PDF of a single object. An empty representation stands for an
/// undefined spatial PDF (all fused existence mass was zero).
using SpatialPdf = std::variant<GaussianMixture, ParticleSet>;

[[nodiscard]] double total_weight(const SpatialPdf& p);
[[nodiscard]] bool is_empty(const SpatialPdf& p);
[[nodiscard]] SpatialPdf scaled(const SpatialPdf& p, double factor);
[[nodiscard]] SpatialPdf normalized(const SpatialPdf& p);

/// Throws std::invalid_argument unless `p` is empty or has weights summing to 1.
void require_normalized(const SpatialPdf& p);

/// Cardinality distribution rho(n), n = 0..n_max.
class CardinalityPmf {
public:
    explicit CardinalityPmf(std::vector<double> probabilities);

    /// Point mass at n.
    static CardinalityPmf delta(std::size_t n, std::size_t n_max);
    /// Poisson(lambda) truncated at n_max and renormalized.
    static CardinalityPmf poisson(double lambda, std::size_t n_max);

    [[nodiscard]] std::span<const double> probabilities() const { return probabilities_; }
    [[nodiscard]] double operator[](std::size_t n) const { return n < probabilities_.size() ? probabilities_[n] : 0.0; }
    [[nodiscard]] std::size_t n_max() const { return probabilities_.size() - 1; }

    [[nodiscard]] double mean() const;
    /// argmax; ties go to the lowest n.
    [[nodiscard]] std::size_t map_estimate() const;

    friend bool operator==(const CardinalityPmf&, const CardinalityPmf&) = default;

private:
    std::vector<double> probabilities_;
};

class Bernoulli {
public:
    Bernoulli(double existence, SpatialPdf spatial);

    [[nodiscard]] double existence() const { return existence_; }
    [[nodiscard]] const SpatialPdf& spatial() const { return spatial_; }
    [[nodiscard]] bool has_spatial() const { return !is_empty(spatial_); }

    friend bool operator==(const Bernoulli&, const Bernoulli&) = default;

private:
    double existence_;
    SpatialPdf spatial_;
};

/// Multiobject Poisson process.
class Poisson {
public:
    Poisson(double rate, SpatialPdf spatial);

    [[nodiscard]] double rate() const { return rate_; }
    [[nodiscard]] const SpatialPdf& spatial() const { return spatial_; }
    [[nodiscard]] bool has_spatial() const { return !is_empty(spatial_); }

    friend bool operator==(const Poisson&, const Poisson&) = default;

private:
    double rate_;
    SpatialPdf spatial_;
};

/// i.i.d. cluster process.
class IidCluster {
public:
    IidCluster(CardinalityPmf cardinality, SpatialPdf spatial);

    [[nodiscard]] const CardinalityPmf& cardinality() const { return cardinality_; }
    [[nodiscard]] const SpatialPdf& spatial() const { return spatial_; }
    [[nodiscard]] bool has_spatial() const { return !is_empty(spatial_); }

    friend bool operator==(const IidCluster&, const IidCluster&) = default;

private:
    CardinalityPmf cardinality_;
    SpatialPdf spatial_;
};

using MultiObjectDensity = std::variant<Bernoulli, Poisson, IidCluster>;

/// Mean number of objects: r, lambda or the CPMF mean.
[[nodiscard]] double expected_cardinality(const MultiObjectDensity& f);

/// Probability hypothesis density, i.e. the spatial PDF scaled by the
/// expected number of objects.
[[nodiscard]] SpatialPdf phd(const MultiObjectDensity& f);

/// Poisson process seen as an i.i.d. cluster with truncated Poisson CPMF.
[[nodiscard]] IidCluster to_iid_cluster(const Poisson& f, std::size_t n_max);
[[nodiscard]] IidCluster to_iid_cluster(const Bernoulli& f);

struct Moments {
    Vector mean;
    Matrix covariance;
};

/// Moment-matched mean and covariance of a normalized spatial PDF.
[[nodiscard]] Moments spatial_moments(const SpatialPdf& p);

}  // namespace rfsfuse
