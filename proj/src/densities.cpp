#include "rfsfuse/densities.hpp"

#include "overloaded.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rfsfuse {

namespace {

constexpr double kSymmetryTol = 1e-9;

using detail::overloaded;

}  // namespace

GaussianComponent::GaussianComponent(double weight, Vector mean, Matrix covariance)
    : weight_(weight), mean_(std::move(mean)), covariance_(std::move(covariance)) {
    if (!(weight_ >= 0.0) || !std::isfinite(weight_))
        throw std::invalid_argument("GaussianComponent: weight must be finite and >= 0");
    if (mean_.size() == 0 || covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size())
        throw std::invalid_argument("GaussianComponent: mean/covariance dimension mismatch");
    const double scale = std::max(1.0, covariance_.cwiseAbs().maxCoeff());
    if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale)
        throw std::invalid_argument("GaussianComponent: covariance is not symmetric");
    covariance_ = symmetrized(covariance_);
    if (!is_positive_definite(covariance_))
        throw std::invalid_argument("GaussianComponent: covariance is not positive-definite");
}

void GaussianComponent::set_weight(double w) {
    if (!(w >= 0.0) || !std::isfinite(w))
        throw std::invalid_argument("GaussianComponent: weight must be finite and >= 0");
    weight_ = w;
}

GaussianMixture::GaussianMixture(std::vector<GaussianComponent> components)
    : components_(std::move(components)) {
    for (const auto& c : components_)
        if (c.dim() != components_.front().dim())
            throw std::invalid_argument("GaussianMixture: components of different dimension");
}

void GaussianMixture::add(GaussianComponent c) {
    if (!components_.empty() && c.dim() != dim())
        throw std::invalid_argument("GaussianMixture: component of different dimension");
    components_.push_back(std::move(c));
}

void GaussianMixture::append(const GaussianMixture& other, double scale) {
    components_.reserve(components_.size() + other.size());
    for (const auto& c : other.components_) {
        GaussianComponent copy = c;
        copy.set_weight(c.weight() * scale);
        add(std::move(copy));
    }
}

double GaussianMixture::total_weight() const {
    double s = 0.0;
    for (const auto& c : components_) s += c.weight();
    return s;
}

double GaussianMixture::evaluate(const Vector& x) const {
    double s = 0.0;
    for (const auto& c : components_) s += c.weight() * c.pdf(x);
    return s;
}

GaussianMixture GaussianMixture::scaled(double factor) const {
    GaussianMixture out;
    out.append(*this, factor);
    return out;
}

GaussianMixture GaussianMixture::normalized() const {
    const double w = total_weight();
    if (!(w > 0.0)) throw std::domain_error("GaussianMixture::normalized: zero total weight");
    return scaled(1.0 / w);
}

ParticleSet::ParticleSet(std::vector<Particle> particles) : particles_(std::move(particles)) {
    for (const auto& p : particles_) {
        if (!(p.weight >= 0.0) || !std::isfinite(p.weight))
            throw std::invalid_argument("ParticleSet: weights must be finite and >= 0");
        if (p.state.size() != particles_.front().state.size())
            throw std::invalid_argument("ParticleSet: particles of different dimension");
    }
}

double ParticleSet::total_weight() const {
    double s = 0.0;
    for (const auto& p : particles_) s += p.weight;
    return s;
}

ParticleSet ParticleSet::scaled(double factor) const {
    std::vector<Particle> out = particles_;
    for (auto& p : out) p.weight *= factor;
    return ParticleSet(std::move(out));
}

ParticleSet ParticleSet::normalized() const {
    const double w = total_weight();
    if (!(w > 0.0)) throw std::domain_error("ParticleSet::normalized: zero total weight");
    return scaled(1.0 / w);
}

double total_weight(const SpatialPdf& p) {
    return std::visit([](const auto& s) { return s.total_weight(); }, p);
}

bool is_empty(const SpatialPdf& p) {
    return std::visit([](const auto& s) { return s.empty(); }, p);
}

SpatialPdf scaled(const SpatialPdf& p, double factor) {
    return std::visit([factor](const auto& s) -> SpatialPdf { return s.scaled(factor); }, p);
}

SpatialPdf normalized(const SpatialPdf& p) {
    return std::visit([](const auto& s) -> SpatialPdf { return s.normalized(); }, p);
}

void require_normalized(const SpatialPdf& p) {
    if (is_empty(p)) return;
    const double w = total_weight(p);
    if (std::abs(w - 1.0) > kNormTol)
        throw std::invalid_argument("spatial PDF is not normalized (weight sum " + std::to_string(w) + ")");
}

CardinalityPmf::CardinalityPmf(std::vector<double> probabilities) : probabilities_(std::move(probabilities)) {
    if (probabilities_.empty()) throw std::invalid_argument("CardinalityPmf: empty support");
    double sum = 0.0;
    for (double p : probabilities_) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw std::invalid_argument("CardinalityPmf: probabilities must be finite and >= 0");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kNormTol)
        throw std::invalid_argument("CardinalityPmf: probabilities sum to " + std::to_string(sum));
}

CardinalityPmf CardinalityPmf::delta(std::size_t n, std::size_t n_max) {
    if (n > n_max) throw std::invalid_argument("CardinalityPmf::delta: n > n_max");
    std::vector<double> p(n_max + 1, 0.0);
    p[n] = 1.0;
    return CardinalityPmf(std::move(p));
}

CardinalityPmf CardinalityPmf::poisson(double lambda, std::size_t n_max) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("CardinalityPmf::poisson: lambda < 0");
    if (lambda == 0.0) return delta(0, n_max);
    std::vector<double> p(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n)
        p[n] = std::exp(static_cast<double>(n) * std::log(lambda) - lambda - std::lgamma(static_cast<double>(n) + 1.0));
    const double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) v /= s;
    return CardinalityPmf(std::move(p));
}

double CardinalityPmf::mean() const {
    double m = 0.0;
    for (std::size_t n = 0; n < probabilities_.size(); ++n) m += static_cast<double>(n) * probabilities_[n];
    return m;
}

std::size_t CardinalityPmf::map_estimate() const {
    std::size_t best = 0;
    for (std::size_t n = 1; n < probabilities_.size(); ++n)
        if (probabilities_[n] > probabilities_[best]) best = n;
    return best;
}

Bernoulli::Bernoulli(double existence, SpatialPdf spatial) : existence_(existence), spatial_(std::move(spatial)) {
    if (!(existence_ >= 0.0 && existence_ <= 1.0))
        throw std::invalid_argument("Bernoulli: existence probability outside [0,1]");
    require_normalized(spatial_);
}

Poisson::Poisson(double rate, SpatialPdf spatial) : rate_(rate), spatial_(std::move(spatial)) {
    if (!(rate_ >= 0.0) || !std::isfinite(rate_)) throw std::invalid_argument("Poisson: rate must be >= 0");
    require_normalized(spatial_);
}

IidCluster::IidCluster(CardinalityPmf cardinality, SpatialPdf spatial)
    : cardinality_(std::move(cardinality)), spatial_(std::move(spatial)) {
    require_normalized(spatial_);
}

double expected_cardinality(const MultiObjectDensity& f) {
    return std::visit(overloaded{
                          [](const Bernoulli& b) { return b.existence(); },
                          [](const Poisson& p) { return p.rate(); },
                          [](const IidCluster& c) { return c.cardinality().mean(); },
                      },
                      f);
}

SpatialPdf phd(const MultiObjectDensity& f) {
    const double mass = expected_cardinality(f);
    return std::visit([mass](const auto& d) { return scaled(d.spatial(), mass); }, f);
}

IidCluster to_iid_cluster(const Poisson& f, std::size_t n_max) {
    return IidCluster(CardinalityPmf::poisson(f.rate(), n_max), f.spatial());
}

IidCluster to_iid_cluster(const Bernoulli& f) {
    return IidCluster(CardinalityPmf({1.0 - f.existence(), f.existence()}), f.spatial());
}

Moments spatial_moments(const SpatialPdf& p) {
    if (is_empty(p)) throw std::invalid_argument("spatial_moments: empty spatial PDF");
    return std::visit(
        overloaded{
            [](const GaussianMixture& gm) {
                const double w = gm.total_weight();
                const int d = gm.dim();
                Vector mean = Vector::Zero(d);
                for (const auto& c : gm.components()) mean += c.weight() * c.mean();
                mean /= w;
                Matrix cov = Matrix::Zero(d, d);
                for (const auto& c : gm.components()) {
                    const Vector diff = c.mean() - mean;
                    cov += c.weight() * (c.covariance() + diff * diff.transpose());
                }
                cov /= w;
                return Moments{mean, symmetrized(cov)};
            },
            [](const ParticleSet& ps) {
                const double w = ps.total_weight();
                const int d = static_cast<int>(ps[0].state.size());
                Vector mean = Vector::Zero(d);
                for (const auto& q : ps.particles()) mean += q.weight * q.state;
                mean /= w;
                Matrix cov = Matrix::Zero(d, d);
                for (const auto& q : ps.particles()) {
                    const Vector diff = q.state - mean;
                    cov += q.weight * diff * diff.transpose();
                }
                cov /= w;
                return Moments{mean, symmetrized(cov)};
            },
        },
        p);
}

}  // namespace rfsfuse
