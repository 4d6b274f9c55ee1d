#include "rfsfuse/fusion.hpp"

#include "overloaded.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <random>
#include <string>

namespace rfsfuse {

namespace {

constexpr double kWeightSumTol = 1e-12;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_sizes(std::size_t n, const FusionWeights& w) {
    if (n == 0) throw std::invalid_argument("fusion: empty list of densities");
    if (n != w.size()) throw std::invalid_argument("fusion: number of densities != number of weights");
}

// sum_i coef_i p_i / sum_i coef_i over the inputs with coef_i > 0 and a
// non-empty spatial PDF. Empty when no input qualifies.
SpatialPdf weighted_union(std::span<const SpatialPdf* const> pdfs, std::span<const double> coefs) {
    const SpatialPdf* first = nullptr;
    double total = 0.0;
    for (std::size_t i = 0; i < pdfs.size(); ++i) {
        if (coefs[i] > 0.0 && !is_empty(*pdfs[i])) {
            total += coefs[i];
            if (first == nullptr) first = pdfs[i];
        }
    }
    if (first == nullptr)
        return std::visit([](const auto& proto) -> SpatialPdf { return std::decay_t<decltype(proto)>{}; }, *pdfs[0]);
    return std::visit(
        [&](const auto& proto) -> SpatialPdf {
            using T = std::decay_t<decltype(proto)>;
            if constexpr (std::is_same_v<T, GaussianMixture>) {
                GaussianMixture out;
                for (std::size_t i = 0; i < pdfs.size(); ++i) {
                    if (!(coefs[i] > 0.0) || is_empty(*pdfs[i])) continue;
                    const auto* gm = std::get_if<GaussianMixture>(pdfs[i]);
                    if (gm == nullptr) throw std::invalid_argument("fusion: mixed GM/particle spatial PDFs");
                    out.append(*gm, coefs[i] / total);
                }
                return out;
            } else {
                std::vector<Particle> out;
                for (std::size_t i = 0; i < pdfs.size(); ++i) {
                    if (!(coefs[i] > 0.0) || is_empty(*pdfs[i])) continue;
                    const auto* ps = std::get_if<ParticleSet>(pdfs[i]);
                    if (ps == nullptr) throw std::invalid_argument("fusion: mixed GM/particle spatial PDFs");
                    for (const auto& q : ps->particles()) out.push_back({q.weight * coefs[i] / total, q.state});
                }
                return ParticleSet(std::move(out));
            }
        },
        *first);
}

// Agents with positive weight. When exactly one agent carries all the weight
// its index is returned through `sole`.
std::vector<std::size_t> contributing(const FusionWeights& w, std::size_t* sole) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] > 0.0) idx.push_back(i);
    if (sole != nullptr) *sole = (idx.size() == 1) ? idx.front() : w.size();
    return idx;
}

const GaussianMixture& require_mixture(const SpatialPdf& p) {
    const auto* gm = std::get_if<GaussianMixture>(&p);
    if (gm == nullptr) throw std::invalid_argument("MWIG fusion requires Gaussian-mixture spatial PDFs");
    return *gm;
}

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

double log_sum_exp(std::span<const double> xs) {
    double m = kNegInf;
    for (double x : xs) m = std::max(m, x);
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

// Keep components heavier than `relative` times the heaviest, at most `cap` of them.
GaussianMixture thin(const GaussianMixture& gm, double relative, std::size_t cap) {
    if (gm.empty()) return gm;
    double wmax = 0.0;
    for (const auto& c : gm.components()) wmax = std::max(wmax, c.weight());
    std::vector<GaussianComponent> kept;
    for (const auto& c : gm.components())
        if (c.weight() > relative * wmax) kept.push_back(c);
    if (kept.size() > cap) {
        std::stable_sort(kept.begin(), kept.end(),
                         [](const GaussianComponent& a, const GaussianComponent& b) { return a.weight() > b.weight(); });
        kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(cap), kept.end());
    }
    return GaussianMixture(std::move(kept));
}

}  // namespace

FusionWeights::FusionWeights(std::vector<double> weights)
    : FusionWeights(std::vector<std::size_t>(weights.size()), weights) {
    std::iota(agents_.begin(), agents_.end(), std::size_t{0});
}

FusionWeights::FusionWeights(std::vector<std::size_t> agents, std::vector<double> weights)
    : agents_(std::move(agents)), weights_(std::move(weights)) {
    if (agents_.size() != weights_.size()) throw std::invalid_argument("FusionWeights: agents/weights size mismatch");
    if (weights_.empty()) throw std::invalid_argument("FusionWeights: no agents");
    double sum = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("FusionWeights: weights must be >= 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > kWeightSumTol)
        throw std::invalid_argument("FusionWeights: weights sum to " + std::to_string(sum));
}

FusionWeights FusionWeights::uniform(std::size_t n) {
    if (n == 0) throw std::invalid_argument("FusionWeights::uniform: no agents");
    return FusionWeights(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

std::string_view to_string(FusionRule rule) {
    switch (rule) {
        case FusionRule::MIL: return "MIL";
        case FusionRule::MWIG: return "MWIG";
        case FusionRule::None: return "None";
    }
    return "?";
}

FusionRule parse_fusion_rule(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "mil") return FusionRule::MIL;
    if (lower == "mwig" || lower == "gci") return FusionRule::MWIG;
    if (lower == "none") return FusionRule::None;
    throw std::invalid_argument("unknown fusion rule '" + std::string(name) + "' (expected MIL, MWIG or None)");
}

SpatialPdf mil_mixture(std::span<const SpatialPdf> densities, const FusionWeights& w) {
    check_sizes(densities.size(), w);
    std::vector<const SpatialPdf*> ptrs;
    for (const auto& d : densities) ptrs.push_back(&d);
    return weighted_union(ptrs, w.values());
}

GridDensity mil_mixture(std::span<const GridDensity> densities, const FusionWeights& w) {
    check_sizes(densities.size(), w);
    const Grid& grid = densities.front().grid();
    std::vector<double> values(grid.size(), 0.0);
    for (std::size_t i = 0; i < densities.size(); ++i) {
        if (densities[i].grid().size() != grid.size()) throw std::invalid_argument("mil_mixture: grid mismatch");
        for (std::size_t k = 0; k < grid.size(); ++k) values[k] += w[i] * densities[i][k];
    }
    return GridDensity(grid, std::move(values));
}

Bernoulli fuse_bernoulli_mil(std::span<const Bernoulli> locals, const FusionWeights& w) {
    check_sizes(locals.size(), w);
    double r = 0.0;
    std::vector<const SpatialPdf*> ptrs;
    std::vector<double> coefs;
    for (std::size_t i = 0; i < locals.size(); ++i) {
        r += w[i] * locals[i].existence();
        ptrs.push_back(&locals[i].spatial());
        coefs.push_back(w[i] * locals[i].existence());
    }
    return Bernoulli(std::clamp(r, 0.0, 1.0), weighted_union(ptrs, coefs));
}

IidCluster fuse_iidcp_mil(std::span<const IidCluster> locals, const FusionWeights& w) {
    check_sizes(locals.size(), w);
    const std::size_t n_max = locals.front().cardinality().n_max();
    std::vector<double> rho(n_max + 1, 0.0);
    std::vector<const SpatialPdf*> ptrs;
    std::vector<double> coefs;
    for (std::size_t i = 0; i < locals.size(); ++i) {
        const auto& card = locals[i].cardinality();
        if (card.n_max() != n_max) throw std::invalid_argument("fuse_iidcp_mil: CPMFs have different n_max");
        for (std::size_t n = 0; n <= n_max; ++n) rho[n] += w[i] * card[n];
        ptrs.push_back(&locals[i].spatial());
        coefs.push_back(w[i] * card.mean());
    }
    return IidCluster(CardinalityPmf(std::move(rho)), weighted_union(ptrs, coefs));
}

Poisson fuse_poisson_mil(std::span<const Poisson> locals, const FusionWeights& w) {
    check_sizes(locals.size(), w);
    double rate = 0.0;
    std::vector<const SpatialPdf*> ptrs;
    std::vector<double> coefs;
    for (std::size_t i = 0; i < locals.size(); ++i) {
        rate += w[i] * locals[i].rate();
        ptrs.push_back(&locals[i].spatial());
        coefs.push_back(w[i] * locals[i].rate());
    }
    return Poisson(rate, weighted_union(ptrs, coefs));
}

IidCluster fuse_particles_mil(std::span<const IidCluster> locals, const FusionWeights& w) {
    for (const auto& l : locals)
        if (!std::holds_alternative<ParticleSet>(l.spatial()))
            throw std::invalid_argument("fuse_particles_mil: spatial PDFs must be particle sets");
    return fuse_iidcp_mil(locals, w);
}

ParticleSet resample_to(const ParticleSet& p, std::size_t count, std::uint64_t seed) {
    if (count == 0) throw std::invalid_argument("resample_to: J must be >= 1");
    const double total = p.total_weight();
    if (!(total > 0.0)) throw std::invalid_argument("resample_to: all particle weights are zero");
    std::mt19937_64 rng(seed);
    const double step = total / static_cast<double>(count);
    const double u0 = std::uniform_real_distribution<double>(0.0, step)(rng);
    std::vector<Particle> out;
    out.reserve(count);
    const double w = 1.0 / static_cast<double>(count);
    std::size_t i = 0;
    double cumulative = p[0].weight;
    for (std::size_t k = 0; k < count; ++k) {
        const double u = u0 + static_cast<double>(k) * step;
        while (u > cumulative && i + 1 < p.size()) cumulative += p[++i].weight;
        out.push_back({w, p[i].state});
    }
    return ParticleSet(std::move(out));
}

std::size_t post_fusion_particle_count(double expected_cardinality) {
    const double n = std::max(1.0, std::round(expected_cardinality));
    return static_cast<std::size_t>(1000.0 * n);
}

GaussianMixture gm_power(const GaussianMixture& gm, double exponent) {
    if (!(exponent > 0.0)) throw std::invalid_argument("gm_power: exponent must be > 0");
    if (exponent == 1.0) return gm;
    GaussianMixture out;
    for (const auto& c : gm.components()) {
        if (c.weight() <= 0.0) continue;
        const int d = c.dim();
        Eigen::LLT<Matrix> llt(c.covariance());
        double log_det = 0.0;
        for (int i = 0; i < d; ++i) log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
        // log of ∫G(x; mu, P)^w dx
        const double log_k = 0.5 * (1.0 - exponent) * (d * std::log(2.0 * std::numbers::pi) + log_det) -
                             0.5 * d * std::log(exponent);
        const double weight = std::exp(exponent * std::log(c.weight()) + log_k);
        out.add(GaussianComponent(weight, c.mean(), c.covariance() / exponent));
    }
    return out;
}

GaussianMixture gm_product(const GaussianMixture& a, const GaussianMixture& b, const MwigOptions& options) {
    GaussianMixture out;
    if (a.empty() || b.empty()) return out;
    if (a.dim() != b.dim()) throw std::invalid_argument("gm_product: dimension mismatch");
    const int d = a.dim();
    const double log_two_pi = std::log(2.0 * std::numbers::pi);
    for (const auto& ca : a.components()) {
        if (ca.weight() <= 0.0) continue;
        for (const auto& cb : b.components()) {
            if (cb.weight() <= 0.0) continue;
            const Matrix s = ca.covariance() + cb.covariance();
            Eigen::LLT<Matrix> llt(s);
            const Vector diff = cb.mean() - ca.mean();
            const double d2 = llt.matrixL().solve(diff).squaredNorm();
            if (d2 > options.pair_gate) continue;
            double log_det = 0.0;
            for (int i = 0; i < d; ++i) log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
            const double log_w =
                std::log(ca.weight()) + std::log(cb.weight()) - 0.5 * (d * log_two_pi + log_det + d2);
            // Product covariance via the gain form A - A S^-1 A.
            const Matrix gain = llt.solve(ca.covariance()).transpose();
            const Vector mean = ca.mean() + gain * diff;
            const Matrix cov = symmetrized(ca.covariance() - gain * ca.covariance());
            out.add(GaussianComponent(std::exp(log_w), mean, cov));
        }
    }
    return out;
}

GaussianMixture gm_geometric_mean(std::span<const GaussianMixture> pdfs, const FusionWeights& w,
                                  const MwigOptions& options) {
    check_sizes(pdfs.size(), w);
    GaussianMixture acc;
    bool started = false;
    for (std::size_t i = 0; i < pdfs.size(); ++i) {
        if (!(w[i] > 0.0) || pdfs[i].empty()) continue;
        GaussianMixture powered = gm_power(pdfs[i], w[i]);
        if (!started) {
            acc = std::move(powered);
            started = true;
        } else {
            acc = thin(gm_product(acc, powered, options), options.relative_prune, options.max_intermediate_components);
        }
    }
    return acc;
}

Bernoulli fuse_mwig(std::span<const Bernoulli> locals, const FusionWeights& w, const MwigOptions& options) {
    check_sizes(locals.size(), w);
    std::size_t sole = 0;
    const auto idx = contributing(w, &sole);
    if (sole < locals.size()) return locals[sole];

    double log_absent = 0.0;
    double log_present = 0.0;
    std::vector<GaussianMixture> spatials;
    std::vector<double> spatial_weights;
    for (std::size_t i : idx) {
        log_absent += w[i] * safe_log(1.0 - locals[i].existence());
        log_present += w[i] * safe_log(locals[i].existence());
        if (locals[i].has_spatial()) {
            spatials.push_back(require_mixture(locals[i].spatial()));
            spatial_weights.push_back(w[i]);
        }
    }
    GaussianMixture g;
    if (!spatials.empty()) {
        // Renormalize over the agents that carry a spatial PDF.
        const double s = std::accumulate(spatial_weights.begin(), spatial_weights.end(), 0.0);
        for (double& v : spatial_weights) v /= s;
        g = gm_geometric_mean(spatials, FusionWeights(spatial_weights), options);
    }
    const double overlap = g.total_weight();
    log_present += safe_log(overlap);
    const double terms[] = {log_absent, log_present};
    const double log_norm = log_sum_exp(terms);
    if (log_norm == kNegInf) throw TotalConflictError("MWIG Bernoulli fusion: zero normalization constant");
    const double r = std::exp(log_present - log_norm);
    if (overlap > 0.0) return Bernoulli(r, g.normalized());
    return Bernoulli(r, GaussianMixture{});
}

Poisson fuse_mwig(std::span<const Poisson> locals, const FusionWeights& w, const MwigOptions& options) {
    check_sizes(locals.size(), w);
    std::size_t sole = 0;
    const auto idx = contributing(w, &sole);
    if (sole < locals.size()) return locals[sole];

    double log_rate = 0.0;
    std::vector<GaussianMixture> spatials;
    std::vector<double> spatial_weights;
    for (std::size_t i : idx) {
        log_rate += w[i] * safe_log(locals[i].rate());
        if (locals[i].has_spatial()) {
            spatials.push_back(require_mixture(locals[i].spatial()));
            spatial_weights.push_back(w[i]);
        }
    }
    if (log_rate == kNegInf || spatials.empty()) return Poisson(0.0, GaussianMixture{});
    const double s = std::accumulate(spatial_weights.begin(), spatial_weights.end(), 0.0);
    for (double& v : spatial_weights) v /= s;
    const GaussianMixture g = gm_geometric_mean(spatials, FusionWeights(spatial_weights), options);
    const double overlap = g.total_weight();
    if (!(overlap > 0.0)) return Poisson(0.0, GaussianMixture{});
    return Poisson(std::exp(log_rate) * overlap, g.normalized());
}

IidCluster fuse_mwig(std::span<const IidCluster> locals, const FusionWeights& w, const MwigOptions& options) {
    check_sizes(locals.size(), w);
    std::size_t sole = 0;
    const auto idx = contributing(w, &sole);
    if (sole < locals.size()) return locals[sole];

    const std::size_t n_max = locals.front().cardinality().n_max();
    std::vector<double> log_rho(n_max + 1, 0.0);
    std::vector<GaussianMixture> spatials;
    std::vector<double> spatial_weights;
    for (std::size_t i : idx) {
        const auto& card = locals[i].cardinality();
        if (card.n_max() != n_max) throw std::invalid_argument("fuse_mwig: CPMFs have different n_max");
        for (std::size_t n = 0; n <= n_max; ++n) log_rho[n] += w[i] * safe_log(card[n]);
        if (locals[i].has_spatial()) {
            spatials.push_back(require_mixture(locals[i].spatial()));
            spatial_weights.push_back(w[i]);
        }
    }
    GaussianMixture g;
    if (!spatials.empty()) {
        const double s = std::accumulate(spatial_weights.begin(), spatial_weights.end(), 0.0);
        for (double& v : spatial_weights) v /= s;
        g = gm_geometric_mean(spatials, FusionWeights(spatial_weights), options);
    }
    const double log_overlap = safe_log(g.total_weight());
    for (std::size_t n = 1; n <= n_max; ++n)
        log_rho[n] = (log_overlap == kNegInf) ? kNegInf : log_rho[n] + static_cast<double>(n) * log_overlap;
    const double log_norm = log_sum_exp(log_rho);
    if (log_norm == kNegInf) throw TotalConflictError("MWIG IIDCP fusion: zero normalization constant");
    std::vector<double> rho(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) rho[n] = std::exp(log_rho[n] - log_norm);
    const double s = std::accumulate(rho.begin(), rho.end(), 0.0);
    for (double& v : rho) v /= s;
    if (log_overlap == kNegInf) return IidCluster(CardinalityPmf(std::move(rho)), GaussianMixture{});
    return IidCluster(CardinalityPmf(std::move(rho)), g.normalized());
}

MultiObjectDensity fuse_mwig(std::span<const MultiObjectDensity> locals, const FusionWeights& w,
                             const MwigOptions& options) {
    check_sizes(locals.size(), w);
    const std::size_t tag = locals.front().index();
    for (const auto& l : locals)
        if (l.index() != tag) throw std::invalid_argument("fuse_mwig: densities of different types");
    auto gather = [&]<class T>(std::type_identity<T>) {
        std::vector<T> typed;
        for (const auto& l : locals) typed.push_back(std::get<T>(l));
        return typed;
    };
    switch (tag) {
        case 0: return fuse_mwig(std::span<const Bernoulli>(gather(std::type_identity<Bernoulli>{})), w, options);
        case 1: return fuse_mwig(std::span<const Poisson>(gather(std::type_identity<Poisson>{})), w, options);
        default: return fuse_mwig(std::span<const IidCluster>(gather(std::type_identity<IidCluster>{})), w, options);
    }
}

MetropolisWeights metropolis_weights(const std::vector<std::vector<std::size_t>>& adjacency) {
    const std::size_t n = adjacency.size();
    if (n == 0) throw std::invalid_argument("metropolis_weights: empty graph");
    std::vector<std::vector<std::size_t>> nbrs(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j : adjacency[i]) {
            if (j >= n) throw std::invalid_argument("metropolis_weights: neighbour index out of range");
            if (j == i) continue;
            nbrs[i].push_back(j);
            nbrs[j].push_back(i);
        }
    }
    for (auto& l : nbrs) {
        std::sort(l.begin(), l.end());
        l.erase(std::unique(l.begin(), l.end()), l.end());
    }

    MetropolisWeights out;
    out.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        double off = 0.0;
        for (std::size_t j : nbrs[i]) {
            const double wij = 1.0 / (1.0 + static_cast<double>(std::max(nbrs[i].size(), nbrs[j].size())));
            out.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = wij;
            off += wij;
        }
        out.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0 - off;
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> agents{i};
        agents.insert(agents.end(), nbrs[i].begin(), nbrs[i].end());
        std::vector<double> ws;
        for (std::size_t j : agents) ws.push_back(out.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        out.rows.emplace_back(std::move(agents), std::move(ws));
    }

    std::vector<bool> seen(n, false);
    std::queue<std::size_t> frontier;
    frontier.push(0);
    seen[0] = true;
    std::size_t visited = 1;
    while (!frontier.empty()) {
        const std::size_t i = frontier.front();
        frontier.pop();
        for (std::size_t j : nbrs[i])
            if (!seen[j]) {
                seen[j] = true;
                ++visited;
                frontier.push(j);
            }
    }
    out.connected = (visited == n);
    if (!out.connected)
        std::cerr << "warning: consensus graph is disconnected; averaging only converges per component\n";
    return out;
}

}  // namespace rfsfuse
