#include "rfsfuse/cphd.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace rfsfuse {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Elementary symmetric functions e_0..e_{max_order} of `values`.
std::vector<double> elementary_symmetric(std::span<const double> values, std::size_t max_order) {
    std::vector<double> e(max_order + 1, 0.0);
    e[0] = 1.0;
    std::size_t filled = 0;
    for (double v : values) {
        filled = std::min(filled + 1, max_order);
        for (std::size_t j = filled; j >= 1; --j) e[j] += v * e[j - 1];
    }
    return e;
}

// log sum_n rho(n) sum_j P(n, j+u) (1-pd)^(n-j-u) scale^j e_j
double log_upsilon_inner(const CardinalityPmf& rho, std::span<const double> esf, double log_scale, double pd,
                         int u) {
    const double log_qd = safe_log(1.0 - pd);
    double total = kNegInf;
    for (std::size_t n = 0; n <= rho.n_max(); ++n) {
        if (rho[n] <= 0.0) continue;
        double inner = kNegInf;
        for (std::size_t j = 0; j < esf.size(); ++j) {
            const long k = static_cast<long>(j) + u;
            if (k > static_cast<long>(n)) break;
            if (esf[j] <= 0.0) continue;
            const long missed = static_cast<long>(n) - k;
            if (missed > 0 && log_qd == kNegInf) continue;
            const double log_perm = std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(missed) + 1.0);
            const double term = log_perm + (missed > 0 ? static_cast<double>(missed) * log_qd : 0.0) +
                                std::log(esf[j]) + static_cast<double>(j) * log_scale;
            inner = log_add(inner, term);
        }
        if (inner != kNegInf) total = log_add(total, std::log(rho[n]) + inner);
    }
    return total;
}

std::vector<double> binomial_thinning(const CardinalityPmf& rho, double survival) {
    const std::size_t n_max = rho.n_max();
    std::vector<double> out(n_max + 1, 0.0);
    for (std::size_t i = 0; i <= n_max; ++i) {
        if (rho[i] == 0.0) continue;
        for (std::size_t j = 0; j <= i; ++j) {
            const double binom = std::exp(std::lgamma(i + 1.0) - std::lgamma(j + 1.0) - std::lgamma(i - j + 1.0));
            out[j] += rho[i] * binom * std::pow(survival, static_cast<double>(j)) *
                      std::pow(1.0 - survival, static_cast<double>(i - j));
        }
    }
    return out;
}

CardinalityPmf normalized_pmf(std::vector<double> p) {
    const double s = std::accumulate(p.begin(), p.end(), 0.0);
    if (!(s > 0.0)) throw std::domain_error("cardinality distribution vanished");
    for (double& v : p) v /= s;
    return CardinalityPmf(std::move(p));
}

GaussianComponent merge_components(std::span<const GaussianComponent* const> parts) {
    double w = 0.0;
    for (const auto* c : parts) w += c->weight();
    const int d = parts.front()->dim();
    Vector mean = Vector::Zero(d);
    for (const auto* c : parts) mean += c->weight() * c->mean();
    mean /= w;
    Matrix cov = Matrix::Zero(d, d);
    for (const auto* c : parts) {
        const Vector diff = c->mean() - mean;
        cov += c->weight() * (c->covariance() + diff * diff.transpose());
    }
    cov /= w;
    return GaussianComponent(w, mean, symmetrized(cov));
}

}  // namespace

MotionModel MotionModel::constant_velocity(double dt, double q_pos, double q_vel, double survival) {
    if (!(survival >= 0.0 && survival <= 1.0)) throw std::invalid_argument("MotionModel: survival outside [0,1]");
    if (q_pos < 0.0 || q_vel < 0.0) throw std::invalid_argument("MotionModel: negative process noise");
    MotionModel m;
    m.dt = dt;
    m.survival = survival;
    m.transition = Matrix::Identity(kStateDim, kStateDim);
    m.transition(0, 1) = dt;
    m.transition(2, 3) = dt;
    m.process_noise = Matrix::Zero(kStateDim, kStateDim);
    m.process_noise.diagonal() << q_pos, q_vel, q_pos, q_vel;
    return m;
}

Measurement SensorModel::measure(const Vector& state) const {
    const double dx = state(0) - x;
    const double dy = state(2) - y;
    return {std::hypot(dx, dy), std::atan2(dy, dx)};
}

Eigen::Vector2d SensorModel::to_cartesian(const Measurement& z) const {
    return {x + z.range * std::cos(z.bearing), y + z.range * std::sin(z.bearing)};
}

double SensorModel::clutter_intensity(const Measurement& z) const {
    const Eigen::Vector2d p = to_cartesian(z);
    if (z.range < 0.0 || !region.contains(p.x(), p.y())) return 0.0;
    return clutter_rate * z.range / region.area();
}

BirthModel BirthModel::from_measurements(std::span<const Measurement> scan, const SensorModel& sensor,
                                         const BirthParams& params) {
    BirthModel birth;
    if (scan.empty()) return birth;
    const std::size_t count = std::min(scan.size(), params.max_components);
    double weight = params.weight;
    if (weight * static_cast<double>(count) > params.max_mass) weight = params.max_mass / static_cast<double>(count);

    // Unscented transform of the measurement noise through the polar-to-Cartesian map.
    constexpr int n = 2;
    constexpr double kappa = 1.0;
    const Eigen::Matrix2d root = ((n + kappa) * sensor.noise).llt().matrixL();
    const double w0 = kappa / (n + kappa);
    const double wi = 1.0 / (2.0 * (n + kappa));
    for (std::size_t k = 0; k < count; ++k) {
        const Eigen::Vector2d z(scan[k].range, scan[k].bearing);
        std::array<Eigen::Vector2d, 2 * n + 1> sigma;
        sigma[0] = z;
        for (int i = 0; i < n; ++i) {
            sigma[1 + i] = z + root.col(i);
            sigma[1 + n + i] = z - root.col(i);
        }
        std::array<Eigen::Vector2d, 2 * n + 1> mapped;
        Eigen::Vector2d mean = Eigen::Vector2d::Zero();
        for (std::size_t i = 0; i < sigma.size(); ++i) {
            mapped[i] = sensor.to_cartesian({sigma[i](0), sigma[i](1)});
            mean += (i == 0 ? w0 : wi) * mapped[i];
        }
        Eigen::Matrix2d pos_cov = Eigen::Matrix2d::Zero();
        for (std::size_t i = 0; i < mapped.size(); ++i) {
            const Eigen::Vector2d d = mapped[i] - mean;
            pos_cov += (i == 0 ? w0 : wi) * d * d.transpose();
        }
        Vector m(kStateDim);
        m << mean(0), 0.0, mean(1), 0.0;
        Matrix p = Matrix::Zero(kStateDim, kStateDim);
        p(0, 0) = pos_cov(0, 0);
        p(0, 2) = p(2, 0) = pos_cov(0, 1);
        p(2, 2) = pos_cov(1, 1);
        p(1, 1) = p(3, 3) = params.velocity_std * params.velocity_std;
        birth.intensity.add(GaussianComponent(weight, m, p));
    }
    return birth;
}

const GaussianMixture& FilterState::spatial() const { return std::get<GaussianMixture>(density.spatial()); }

GaussianMixture FilterState::intensity() const { return spatial().scaled(density.cardinality().mean()); }

FilterState FilterState::empty(std::size_t n_max) {
    return FilterState{IidCluster(CardinalityPmf::delta(0, n_max), GaussianMixture{}), 0};
}

FilterState FilterState::from_intensity(CardinalityPmf cardinality, const GaussianMixture& intensity, int time) {
    const double mass = intensity.total_weight();
    GaussianMixture spatial = mass > 0.0 ? intensity.scaled(1.0 / mass) : GaussianMixture{};
    return FilterState{IidCluster(std::move(cardinality), std::move(spatial)), time};
}

FilterState predict(const FilterState& state, const MotionModel& motion, const BirthModel& birth) {
    const Matrix& a = motion.transition;
    const double surviving_mass = motion.survival * state.density.cardinality().mean();
    GaussianMixture intensity;
    auto propagate = [&](const GaussianComponent& c, double weight) {
        if (weight <= 0.0) return;
        intensity.add(GaussianComponent(weight, a * c.mean(), symmetrized(a * c.covariance() * a.transpose() + motion.process_noise)));
    };
    for (const auto& c : state.spatial().components()) propagate(c, surviving_mass * c.weight());
    for (const auto& c : birth.intensity.components()) propagate(c, c.weight());

    const std::size_t n_max = state.density.cardinality().n_max();
    const std::vector<double> survived = binomial_thinning(state.density.cardinality(), motion.survival);
    const CardinalityPmf born = CardinalityPmf::poisson(birth.mass(), n_max);
    std::vector<double> rho(n_max + 1, 0.0);
    for (std::size_t n = 0; n <= n_max; ++n)
        for (std::size_t j = 0; j <= n; ++j) rho[n] += survived[j] * born[n - j];
    return FilterState::from_intensity(normalized_pmf(std::move(rho)), intensity, state.time + 1);
}

UpdateResult update_detailed(const FilterState& predicted, std::span<const Measurement> scan,
                             const SensorModel& sensor, const UpdateParams& params) {
    const double pd = sensor.detection_probability;
    if (!(pd >= 0.0 && pd <= 1.0)) throw std::invalid_argument("update: detection probability outside [0,1]");
    const CardinalityPmf& rho = predicted.density.cardinality();
    const GaussianMixture& spatial = predicted.spatial();
    const std::size_t n_max = rho.n_max();
    const std::size_t m = scan.size();
    const std::size_t comps = spatial.size();

    std::size_t skipped = 0;

    // Per-component linearization.
    struct Linearized {
        bool valid = false;
        Eigen::Vector2d predicted_z;
        Eigen::Matrix<double, 2, kStateDim> jacobian;
        Eigen::Matrix2d innovation_cov;
        Eigen::LLT<Eigen::Matrix2d> llt;
        double log_norm = 0.0;
    };
    std::vector<Linearized> lin(comps);
    if (pd > 0.0) {
        for (std::size_t j = 0; j < comps; ++j) {
            const auto& c = spatial[j];
            const double dx = c.mean()(0) - sensor.x;
            const double dy = c.mean()(2) - sensor.y;
            const double r2 = dx * dx + dy * dy;
            const double r = std::sqrt(r2);
            if (r < params.min_range) {
                ++skipped;
                continue;
            }
            Linearized& l = lin[j];
            l.valid = true;
            l.predicted_z = {r, std::atan2(dy, dx)};
            l.jacobian.setZero();
            l.jacobian(0, 0) = dx / r;
            l.jacobian(0, 2) = dy / r;
            l.jacobian(1, 0) = -dy / r2;
            l.jacobian(1, 2) = dx / r2;
            const Eigen::Matrix4d p = c.covariance();
            l.innovation_cov = l.jacobian * p * l.jacobian.transpose() + sensor.noise;
            l.innovation_cov = 0.5 * (l.innovation_cov + l.innovation_cov.transpose()).eval();
            l.llt.compute(l.innovation_cov);
            const Eigen::Matrix2d& lm = l.llt.matrixLLT();
            l.log_norm = -std::log(2.0 * std::numbers::pi) - std::log(lm(0, 0)) - std::log(lm(1, 1));
        }
    }

    // log( pd * q_j(z) / kappa(z) ) per (measurement, component); -inf when gated out.
    std::vector<std::vector<double>> log_lr(m, std::vector<double>(comps, kNegInf));
    std::vector<double> lambda(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        const double kappa = std::max(sensor.clutter_intensity(scan[k]), params.min_clutter_intensity);
        const double log_kappa = std::log(kappa);
        for (std::size_t j = 0; j < comps; ++j) {
            if (!lin[j].valid) continue;
            Eigen::Vector2d nu(scan[k].range - lin[j].predicted_z(0), wrap_angle(scan[k].bearing - lin[j].predicted_z(1)));
            const double d2 = lin[j].llt.matrixL().solve(nu).squaredNorm();
            if (d2 > params.gate) continue;
            log_lr[k][j] = std::log(pd) + lin[j].log_norm - 0.5 * d2 - log_kappa;
            lambda[k] += spatial[j].weight() * std::exp(log_lr[k][j]);
        }
    }

    // Scale the ESF arguments to [0, 1] and carry the scale in log form.
    const double scale = lambda.empty() ? 1.0 : std::max(1.0, *std::max_element(lambda.begin(), lambda.end()));
    const double log_scale = std::log(scale);
    std::vector<double> scaled(m);
    for (std::size_t k = 0; k < m; ++k) scaled[k] = lambda[k] / scale;

    const std::vector<double> esf = elementary_symmetric(scaled, std::min(m, n_max));
    const double log_up0 = log_upsilon_inner(rho, esf, log_scale, pd, 0);
    if (log_up0 == kNegInf) throw std::domain_error("CPHD update: measurement set has zero likelihood");
    const double log_up1 = log_upsilon_inner(rho, esf, log_scale, pd, 1);

    // Posterior cardinality.
    std::vector<double> post(n_max + 1, 0.0);
    {
        const double log_qd = safe_log(1.0 - pd);
        for (std::size_t n = 0; n <= n_max; ++n) {
            if (rho[n] <= 0.0) continue;
            double inner = kNegInf;
            for (std::size_t j = 0; j < esf.size() && j <= n; ++j) {
                if (esf[j] <= 0.0) continue;
                const std::size_t missed = n - j;
                if (missed > 0 && log_qd == kNegInf) continue;
                inner = log_add(inner, std::lgamma(n + 1.0) - std::lgamma(missed + 1.0) +
                                           (missed > 0 ? missed * log_qd : 0.0) + std::log(esf[j]) + j * log_scale);
            }
            if (inner != kNegInf) post[n] = std::exp(std::log(rho[n]) + inner - log_up0);
        }
    }

    GaussianMixture intensity;
    if (pd < 1.0 && log_up1 != kNegInf) {
        const double missed_ratio = (1.0 - pd) * std::exp(log_up1 - log_up0);
        for (const auto& c : spatial.components())
            if (c.weight() * missed_ratio > 0.0) intensity.add(GaussianComponent(c.weight() * missed_ratio, c.mean(), c.covariance()));
    }
    std::vector<double> others(m > 0 ? m - 1 : 0);
    for (std::size_t k = 0; k < m; ++k) {
        bool any = false;
        for (std::size_t j = 0; j < comps; ++j) any = any || log_lr[k][j] != kNegInf;
        if (!any) continue;
        std::size_t o = 0;
        for (std::size_t i = 0; i < m; ++i)
            if (i != k) others[o++] = scaled[i];
        const std::vector<double> esf_minus = elementary_symmetric(others, std::min(m - 1, n_max));
        const double log_ratio = log_upsilon_inner(rho, esf_minus, log_scale, pd, 1) - log_up0;
        if (log_ratio == kNegInf) continue;
        for (std::size_t j = 0; j < comps; ++j) {
            if (log_lr[k][j] == kNegInf || spatial[j].weight() <= 0.0) continue;
            const double w = std::exp(std::log(spatial[j].weight()) + log_lr[k][j] + log_ratio);
            if (!(w > 0.0)) continue;
            const auto& c = spatial[j];
            const Linearized& l = lin[j];
            const Eigen::Matrix4d p = c.covariance();
            const Eigen::Matrix<double, kStateDim, 2> gain = l.llt.solve(l.jacobian * p).transpose();
            const Eigen::Vector2d nu(scan[k].range - l.predicted_z(0), wrap_angle(scan[k].bearing - l.predicted_z(1)));
            const Eigen::Vector4d mean = c.mean() + gain * nu;
            const Eigen::Matrix4d ikh = Eigen::Matrix4d::Identity() - gain * l.jacobian;
            const Eigen::Matrix4d cov = ikh * p * ikh.transpose() + gain * sensor.noise * gain.transpose();
            intensity.add(GaussianComponent(w, Vector(mean), symmetrized(Matrix(cov))));
        }
    }

    FilterState state = FilterState::from_intensity(normalized_pmf(std::move(post)), intensity, predicted.time);
    return UpdateResult{std::move(state), std::move(intensity), skipped};
}

FilterState update(const FilterState& predicted, std::span<const Measurement> scan, const SensorModel& sensor,
                   const UpdateParams& params) {
    UpdateResult r = update_detailed(predicted, scan, sensor, params);
    if (r.skipped_components > 0)
        std::cerr << "warning: " << r.skipped_components
                  << " component(s) at singular range skipped in CPHD update\n";
    return std::move(r.state);
}

GaussianMixture reduce_mixture(const GaussianMixture& gm, const ReductionParams& params) {
    if (!(params.prune_threshold > 0.0) || !(params.merge_threshold > 0.0))
        throw std::invalid_argument("reduce: thresholds must be > 0");
    if (gm.empty()) return gm;
    const double mass = gm.total_weight();

    std::vector<const GaussianComponent*> pool;
    for (const auto& c : gm.components())
        if (c.weight() >= params.prune_threshold) pool.push_back(&c);
    if (pool.empty()) {
        // Keep the heaviest component rather than dropping all the mass.
        pool.push_back(&*std::max_element(gm.components().begin(), gm.components().end(),
                                          [](const auto& a, const auto& b) { return a.weight() < b.weight(); }));
    }

    std::vector<GaussianComponent> merged;
    std::vector<bool> used(pool.size(), false);
    std::vector<const GaussianComponent*> group;
    while (true) {
        std::size_t best = pool.size();
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (!used[i] && (best == pool.size() || pool[i]->weight() > pool[best]->weight())) best = i;
        if (best == pool.size()) break;
        group.clear();
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (used[i]) continue;
            if (i == best ||
                mahalanobis_sq(pool[best]->mean(), pool[i]->mean(), pool[i]->covariance()) <= params.merge_threshold) {
                group.push_back(pool[i]);
                used[i] = true;
            }
        }
        merged.push_back(group.size() == 1 ? *group.front() : merge_components(group));
    }

    // `merged` is in non-increasing order of the seed weight; sort by final weight for the cap.
    std::stable_sort(merged.begin(), merged.end(),
                     [](const GaussianComponent& a, const GaussianComponent& b) { return a.weight() > b.weight(); });
    if (merged.size() > params.max_components)
        merged.erase(merged.begin() + static_cast<std::ptrdiff_t>(params.max_components), merged.end());

    GaussianMixture out(std::move(merged));
    const double kept = out.total_weight();
    return kept > 0.0 ? out.scaled(mass / kept) : out;
}

FilterState reduce(const FilterState& state, const ReductionParams& params) {
    const GaussianMixture reduced = reduce_mixture(state.intensity(), params);
    const double mass = reduced.total_weight();
    if (!(mass > 0.0)) {
        const GaussianMixture spatial = reduce_mixture(state.spatial(), params);
        return FilterState{IidCluster(state.density.cardinality(), spatial.empty() ? spatial : spatial.normalized()), state.time};
    }
    return FilterState{IidCluster(state.density.cardinality(), reduced.scaled(1.0 / mass)), state.time};
}

std::vector<Vector> extract(const FilterState& state) {
    const std::size_t n = state.density.cardinality().map_estimate();
    const GaussianMixture& gm = state.spatial();
    std::vector<std::size_t> order(gm.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gm[a].weight() > gm[b].weight(); });
    std::vector<Vector> out;
    for (std::size_t i = 0; i < std::min(n, order.size()); ++i) out.push_back(gm[order[i]].mean());
    return out;
}

}  // namespace rfsfuse
