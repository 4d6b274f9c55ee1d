#include "rfsfuse/invariants.hpp"

#include "rfsfuse/cphd.hpp"
#include "rfsfuse/divergence.hpp"
#include "rfsfuse/fusion.hpp"
#include "rfsfuse/ospa.hpp"
#include "rfsfuse/sim.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

namespace rfsfuse {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); }

GaussianMixture random_mixture(Rng& rng, int dim, std::size_t max_components, double min_variance = 0.5) {
    GaussianMixture gm;
    const std::size_t n = pick(rng, 1, max_components);
    for (std::size_t k = 0; k < n; ++k) {
        Vector mean(dim);
        for (int d = 0; d < dim; ++d) mean(d) = uniform(rng, -10.0, 10.0);
        Matrix a(dim, dim);
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c) a(r, c) = uniform(rng, -1.0, 1.0);
        Matrix cov = a * a.transpose() + min_variance * Matrix::Identity(dim, dim);
        gm.add(GaussianComponent(uniform(rng, 0.05, 1.0), mean, cov));
    }
    return gm.normalized();
}

CardinalityPmf random_pmf(Rng& rng, std::size_t n_max) {
    std::vector<double> p(n_max + 1);
    for (double& v : p) v = uniform(rng, 0.0, 1.0);
    const double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) v /= s;
    return CardinalityPmf(std::move(p));
}

FusionWeights random_weights(Rng& rng, std::size_t n) {
    std::vector<double> w(n);
    for (double& v : w) v = uniform(rng, 0.01, 1.0);
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= s;
    // Absorb rounding so that the sum is one within 1e-12.
    w.back() = 1.0 - std::accumulate(w.begin(), w.end() - 1, 0.0);
    return FusionWeights(std::move(w));
}

bool pmf_normalized(const CardinalityPmf& p) {
    double s = 0.0;
    for (double v : p.probabilities()) {
        if (!(v >= 0.0)) return false;
        s += v;
    }
    return std::abs(s - 1.0) <= 1e-9;
}

bool spatial_normalized(const SpatialPdf& p) { return is_empty(p) || std::abs(total_weight(p) - 1.0) <= 1e-9; }

class Runner {
public:
    Runner(std::uint64_t seed, std::size_t instances) : seed_(seed), instances_(instances) {}

    /// `check` returns an empty string on success, a description otherwise.
    void add(const std::string& name, const std::function<std::string(Rng&)>& check) {
        InvariantCheck result{name, instances_, 0, {}};
        Rng rng(seed_ + std::hash<std::string>{}(name));
        for (std::size_t i = 0; i < instances_; ++i) {
            std::string failure;
            try {
                failure = check(rng);
            } catch (const std::exception& e) {
                failure = std::string("exception: ") + e.what();
            }
            if (!failure.empty()) {
                if (result.failures == 0) result.first_failure = "instance " + std::to_string(i) + ": " + failure;
                ++result.failures;
            }
        }
        results_.push_back(std::move(result));
    }

    std::vector<InvariantCheck> take() { return std::move(results_); }

private:
    std::uint64_t seed_;
    std::size_t instances_;
    std::vector<InvariantCheck> results_;
};

std::string fmt(const char* what, double value) {
    std::ostringstream os;
    os.precision(17);
    os << what << " = " << value;
    return os.str();
}

}  // namespace

std::vector<InvariantCheck> run_invariant_suite(std::uint64_t seed, std::size_t instances) {
    Runner runner(seed, instances);

    runner.add("mil_iidcp_closure_and_phd_linearity", [](Rng& rng) -> std::string {
        const std::size_t n = pick(rng, 2, 4);
        const int dim = static_cast<int>(pick(rng, 1, 2));
        std::vector<IidCluster> locals;
        for (std::size_t i = 0; i < n; ++i) locals.emplace_back(random_pmf(rng, 6), random_mixture(rng, dim, 4));
        const FusionWeights w = random_weights(rng, n);
        const IidCluster fused = fuse_iidcp_mil(locals, w);
        if (!pmf_normalized(fused.cardinality())) return "fused CPMF not normalized";
        if (!spatial_normalized(fused.spatial())) return "fused spatial PDF not normalized";
        // The fused PHD weights must equal the concatenated w_i N_i alpha_ij.
        const auto& gm = std::get<GaussianMixture>(fused.spatial());
        const double fused_mass = fused.cardinality().mean();
        std::size_t k = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& local = std::get<GaussianMixture>(locals[i].spatial());
            for (const auto& c : local.components()) {
                const double expected = w[i] * locals[i].cardinality().mean() * c.weight();
                const double got = fused_mass * gm[k++].weight();
                if (std::abs(expected - got) > 1e-12) return fmt("PHD weight mismatch", expected - got);
            }
        }
        return {};
    });

    runner.add("mil_bernoulli_poisson_closure", [](Rng& rng) -> std::string {
        const std::size_t n = pick(rng, 2, 4);
        std::vector<Bernoulli> bs;
        std::vector<Poisson> ps;
        for (std::size_t i = 0; i < n; ++i) {
            bs.emplace_back(uniform(rng, 0.0, 1.0), random_mixture(rng, 1, 3));
            ps.emplace_back(uniform(rng, 0.0, 10.0), random_mixture(rng, 1, 3));
        }
        const FusionWeights w = random_weights(rng, n);
        const Bernoulli b = fuse_bernoulli_mil(bs, w);
        if (!(b.existence() >= 0.0 && b.existence() <= 1.0)) return fmt("existence", b.existence());
        if (!spatial_normalized(b.spatial())) return "Bernoulli spatial PDF not normalized";
        const Poisson p = fuse_poisson_mil(ps, w);
        double rate = 0.0;
        for (std::size_t i = 0; i < n; ++i) rate += w[i] * ps[i].rate();
        if (std::abs(p.rate() - rate) > 1e-12) return fmt("Poisson rate error", p.rate() - rate);
        if (!spatial_normalized(p.spatial())) return "Poisson spatial PDF not normalized";
        return {};
    });

    runner.add("mwig_closure", [](Rng& rng) -> std::string {
        const std::size_t n = pick(rng, 2, 3);
        std::vector<IidCluster> locals;
        for (std::size_t i = 0; i < n; ++i) locals.emplace_back(random_pmf(rng, 6), random_mixture(rng, 1, 3));
        const IidCluster fused = fuse_mwig(locals, random_weights(rng, n));
        if (!pmf_normalized(fused.cardinality())) return "fused CPMF not normalized";
        if (!spatial_normalized(fused.spatial())) return "fused spatial PDF not normalized";
        return {};
    });

    runner.add("kld_decomposition", [](Rng& rng) -> std::string {
        const Grid grid(Axis{-20.0, 20.0, 50});
        // Wide components keep every density well above the vanishing threshold on the grid.
        const GridDensity p1 = GridDensity::from_mixture(random_mixture(rng, 1, 2, 4.0), grid, random_pmf(rng, 3));
        const GridDensity p2 = GridDensity::from_mixture(random_mixture(rng, 1, 2, 4.0), grid, random_pmf(rng, 3));
        const double brute = kld_set(p1, p2);
        const double split = kld_pmf(*p1.cardinality(), *p2.cardinality()) + p1.cardinality()->mean() * kld_pdf(p1, p2);
        if (std::abs(brute - split) > 1e-4) return fmt("decomposition error", brute - split);
        return {};
    });

    runner.add("reduce_bookkeeping", [](Rng& rng) -> std::string {
        GaussianMixture gm = random_mixture(rng, 4, 40).scaled(uniform(rng, 0.5, 10.0));
        const ReductionParams params{1e-5, 4.0, pick(rng, 1, 30)};
        const GaussianMixture r = reduce_mixture(gm, params);
        if (r.size() > gm.size() || r.size() > params.max_components) return "component count grew or exceeds cap";
        if (std::abs(r.total_weight() - gm.total_weight()) > 1e-9) return fmt("mass change", r.total_weight() - gm.total_weight());
        return {};
    });

    runner.add("consensus_mass_conservation", [](Rng& rng) -> std::string {
        const std::size_t nodes = pick(rng, 2, 6);
        std::vector<Eigen::Vector2d> pos;
        for (std::size_t i = 0; i < nodes; ++i) pos.emplace_back(static_cast<double>(i), 0.0);
        const NetworkGraph graph = NetworkGraph::by_distance(pos, 1.5);
        const MetropolisWeights w = metropolis_weights(graph.adjacency());
        std::vector<FilterState> states;
        for (std::size_t i = 0; i < nodes; ++i)
            states.push_back(FilterState{IidCluster(random_pmf(rng, 8), random_mixture(rng, 4, 5)), 0});
        auto total = [](const std::vector<FilterState>& s) {
            double t = 0.0;
            for (const auto& x : s) t += x.density.cardinality().mean();
            return t;
        };
        const double before = total(states);
        for (int l = 0; l < 5; ++l) {
            states = consensus_step(states, w, ConsensusOptions{});
            if (std::abs(total(states) - before) > 1e-9) return fmt("mass drift", total(states) - before);
        }
        return {};
    });

    runner.add("ospa_axioms", [](Rng& rng) -> std::string {
        auto random_set = [&] {
            std::vector<Eigen::Vector2d> s(pick(rng, 0, 4));
            for (auto& p : s) p = Eigen::Vector2d(uniform(rng, 0.0, 200.0), uniform(rng, 0.0, 200.0));
            return s;
        };
        const auto x = random_set();
        const auto y = random_set();
        const auto z = random_set();
        const double xy = ospa(x, y), yx = ospa(y, x), xz = ospa(x, z), zy = ospa(z, y);
        if (xy != yx) return fmt("asymmetry", xy - yx);
        if (xy > xz + zy + 1e-9) return fmt("triangle violation", xy - xz - zy);
        if (xy < 0.0 || xy > 100.0) return fmt("out of range", xy);
        if (ospa(x, x) != 0.0) return "d(X, X) != 0";
        return {};
    });

    return runner.take();
}

}  // namespace rfsfuse
