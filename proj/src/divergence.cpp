#include "rfsfuse/divergence.hpp"

#include "overloaded.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rfsfuse {

namespace {

constexpr std::size_t kDefaultQuadraturePoints = 400;
constexpr double kDefaultWindowSigmas = 10.0;

// Accumulates p log(p/q) with the absolute-continuity sentinel. Returns false
// once the sum has become infinite.
struct KlAccumulator {
    double sum = 0.0;
    bool infinite = false;

    void add(double p, double q, double measure) {
        if (infinite || p <= 0.0) return;
        if (q < kVanishingDensity) {
            if (p > kSupportThreshold) infinite = true;
            return;
        }
        sum += measure * p * std::log(p / q);
    }

    [[nodiscard]] double result() const {
        if (infinite) return kInfiniteDivergence;
        return std::max(sum, 0.0);
    }
};

void check_same_grid(const Grid& a, const Grid& b) {
    if (a.size() != b.size() || a.dim() != b.dim() || a.cell_volume() != b.cell_volume())
        throw std::invalid_argument("densities live on different grids");
}

Grid default_window(const GaussianMixture& p, const GaussianMixture& q) {
    const Moments mp = spatial_moments(p);
    const Moments mq = spatial_moments(q);
    std::vector<Axis> axes;
    for (int d = 0; d < p.dim(); ++d) {
        const double sp = std::sqrt(mp.covariance(d, d));
        const double sq = std::sqrt(mq.covariance(d, d));
        double lo = std::min(mp.mean(d) - kDefaultWindowSigmas * sp, mq.mean(d) - kDefaultWindowSigmas * sq);
        double hi = std::max(mp.mean(d) + kDefaultWindowSigmas * sp, mq.mean(d) + kDefaultWindowSigmas * sq);
        // per-component extent, so that narrow far-away components are covered
        for (const auto* gm : {&p, &q})
            for (const auto& c : gm->components()) {
                const double s = std::sqrt(c.covariance()(d, d));
                lo = std::min(lo, c.mean()(d) - kDefaultWindowSigmas * s);
                hi = std::max(hi, c.mean()(d) + kDefaultWindowSigmas * s);
            }
        axes.push_back(Axis{lo, hi, kDefaultQuadraturePoints});
    }
    if (axes.size() == 1) return Grid(axes[0]);
    return Grid(axes[0], axes[1]);
}

}  // namespace

double kld_pdf(const GridDensity& p, const GridDensity& q) {
    check_same_grid(p.grid(), q.grid());
    KlAccumulator acc;
    const double vol = p.grid().cell_volume();
    for (std::size_t i = 0; i < p.grid().size(); ++i) acc.add(p[i], q[i], vol);
    return acc.result();
}

double kld_pdf(const GaussianMixture& p, const GaussianMixture& q, const Grid& window) {
    if (p.empty() || q.empty()) throw std::invalid_argument("kld_pdf: empty mixture");
    if (p.dim() != q.dim() || p.dim() != window.dim())
        throw std::invalid_argument("kld_pdf: dimension mismatch between mixtures and window");
    if (window.dim() > 2) throw std::invalid_argument("kld_pdf: quadrature supports 1-D and 2-D mixtures only");
    for (const Axis& a : window.axes())
        if (a.points < kMinQuadraturePoints)
            throw std::invalid_argument("kld_pdf: quadrature window needs >= 200 points per axis");
    KlAccumulator acc;
    for (std::size_t i = 0; i < window.size(); ++i) {
        const Vector x = window.point(i);
        acc.add(p.evaluate(x), q.evaluate(x), window.cell_volume());
    }
    return acc.result();
}

double kld_pdf(const GaussianMixture& p, const GaussianMixture& q) {
    if (p.empty() || q.empty()) throw std::invalid_argument("kld_pdf: empty mixture");
    return kld_pdf(p, q, default_window(p, q));
}

double kld_pmf(const CardinalityPmf& rho1, const CardinalityPmf& rho2) {
    if (rho1.n_max() != rho2.n_max()) throw std::invalid_argument("kld_pmf: CPMFs have different n_max");
    KlAccumulator acc;
    for (std::size_t n = 0; n <= rho1.n_max(); ++n) acc.add(rho1[n], rho2[n], 1.0);
    return acc.result();
}

double kld_set(const SetFunction& f1, const SetFunction& f2, const Grid& grid, std::size_t n_max) {
    KlAccumulator acc;
    for (std::size_t n = 0; n <= n_max; ++n) {
        const double measure = std::pow(grid.cell_volume(), static_cast<double>(n)) / std::tgamma(static_cast<double>(n) + 1.0);
        for_each_tuple(grid.size(), n, [&](std::span<const std::size_t> xs) { acc.add(f1(xs), f2(xs), measure); });
        if (acc.infinite) break;
    }
    return acc.result();
}

double kld_set(const GridDensity& f1, const GridDensity& f2) {
    check_same_grid(f1.grid(), f2.grid());
    if (!f1.cardinality() || !f2.cardinality()) throw std::invalid_argument("kld_set: grid densities need a CPMF");
    if (f1.n_max() != f2.n_max()) throw std::invalid_argument("kld_set: CPMFs have different n_max");
    return kld_set(iid_cluster_set_density(f1), iid_cluster_set_density(f2), f1.grid(), f1.n_max());
}

SetFunction discretize(const MultiObjectDensity& f, const Grid& grid) {
    auto tabulate = [&grid](const SpatialPdf& s) {
        const auto* gm = std::get_if<GaussianMixture>(&s);
        if (gm == nullptr || gm->empty()) throw std::invalid_argument("discretize: needs a non-empty GM spatial PDF");
        return GridDensity::from_mixture(*gm, grid);
    };
    return std::visit(detail::overloaded{
                          [&](const Bernoulli& b) { return bernoulli_set_density(b.existence(), tabulate(b.spatial())); },
                          [&](const Poisson& p) { return poisson_set_density(p.rate(), tabulate(p.spatial())); },
                          [&](const IidCluster& c) {
                              return iid_cluster_set_density(tabulate(c.spatial()).with_cardinality(c.cardinality()));
                          },
                      },
                      f);
}

double kld_set(const MultiObjectDensity& f1, const MultiObjectDensity& f2, const Grid& grid, std::size_t n_max) {
    return kld_set(discretize(f1, grid), discretize(f2, grid), grid, n_max);
}

}  // namespace rfsfuse
