#include "rfsfuse/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rfsfuse {

namespace {

void check_axis(const Axis& a) {
    if (!(a.upper > a.lower) || a.points == 0) throw std::invalid_argument("Axis: empty or inverted window");
}

double factorial(std::size_t n) { return std::tgamma(static_cast<double>(n) + 1.0); }

}  // namespace

Grid::Grid(Axis x) : axes_{x} {
    check_axis(x);
    size_ = x.points;
    cell_volume_ = x.step();
}

Grid::Grid(Axis x, Axis y) : axes_{x, y} {
    check_axis(x);
    check_axis(y);
    size_ = x.points * y.points;
    cell_volume_ = x.step() * y.step();
}

Vector Grid::point(std::size_t index) const {
    Vector v(dim());
    if (dim() == 1) {
        v(0) = axes_[0].node(index);
    } else {
        v(0) = axes_[0].node(index / axes_[1].points);
        v(1) = axes_[1].node(index % axes_[1].points);
    }
    return v;
}

GridDensity::GridDensity(Grid grid, std::vector<double> values, std::optional<CardinalityPmf> cardinality)
    : grid_(std::move(grid)), values_(std::move(values)), cardinality_(std::move(cardinality)) {
    if (values_.size() != grid_.size()) throw std::invalid_argument("GridDensity: value count != grid size");
    double mass = 0.0;
    for (double v : values_) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("GridDensity: values must be finite and >= 0");
        mass += v;
    }
    mass *= grid_.cell_volume();
    if (std::abs(mass - 1.0) > kGridNormTol)
        throw std::invalid_argument("GridDensity: Riemann sum is " + std::to_string(mass) + ", expected 1");
}

GridDensity GridDensity::from_function(const Grid& grid, const std::function<double(const Vector&)>& f,
                                       std::optional<CardinalityPmf> cardinality) {
    std::vector<double> values(grid.size());
    double mass = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        values[i] = f(grid.point(i));
        mass += values[i];
    }
    mass *= grid.cell_volume();
    if (!(mass > 0.0)) throw std::domain_error("GridDensity::from_function: zero mass on grid");
    for (double& v : values) v /= mass;
    return GridDensity(grid, std::move(values), std::move(cardinality));
}

GridDensity GridDensity::from_mixture(const GaussianMixture& gm, const Grid& grid,
                                      std::optional<CardinalityPmf> cardinality) {
    if (gm.dim() != grid.dim()) throw std::invalid_argument("GridDensity::from_mixture: dimension mismatch");
    return from_function(grid, [&gm](const Vector& x) { return gm.evaluate(x); }, std::move(cardinality));
}

GridDensity GridDensity::with_cardinality(CardinalityPmf rho) const {
    return GridDensity(grid_, values_, std::move(rho));
}

SetFunction iid_cluster_set_density(const GridDensity& d) {
    if (!d.cardinality()) throw std::invalid_argument("iid_cluster_set_density: grid density has no CPMF");
    return [d](std::span<const std::size_t> xs) {
        const std::size_t n = xs.size();
        double v = factorial(n) * (*d.cardinality())[n];
        for (std::size_t i : xs) v *= d[i];
        return v;
    };
}

SetFunction bernoulli_set_density(double existence, const GridDensity& spatial) {
    if (!(existence >= 0.0 && existence <= 1.0)) throw std::invalid_argument("bernoulli_set_density: r outside [0,1]");
    return [existence, spatial](std::span<const std::size_t> xs) {
        if (xs.empty()) return 1.0 - existence;
        if (xs.size() == 1) return existence * spatial[xs[0]];
        return 0.0;
    };
}

SetFunction poisson_set_density(double rate, const GridDensity& spatial) {
    if (!(rate >= 0.0)) throw std::invalid_argument("poisson_set_density: rate < 0");
    return [rate, spatial](std::span<const std::size_t> xs) {
        double v = std::exp(-rate);
        for (std::size_t i : xs) v *= rate * spatial[i];
        return v;
    };
}

SetFunction poisson_set_density_from_phd(std::vector<double> phd, const Grid& grid) {
    double mass = 0.0;
    for (double v : phd) mass += v;
    mass *= grid.cell_volume();
    return [phd = std::move(phd), mass](std::span<const std::size_t> xs) {
        double v = std::exp(-mass);
        for (std::size_t i : xs) v *= phd[i];
        return v;
    };
}

SetFunction weighted_sum(std::vector<SetFunction> terms, std::vector<double> weights) {
    if (terms.size() != weights.size()) throw std::invalid_argument("weighted_sum: size mismatch");
    return [terms = std::move(terms), weights = std::move(weights)](std::span<const std::size_t> xs) {
        double v = 0.0;
        for (std::size_t i = 0; i < terms.size(); ++i) v += weights[i] * terms[i](xs);
        return v;
    };
}

void for_each_tuple(std::size_t grid_size, std::size_t n,
                    const std::function<void(std::span<const std::size_t>)>& visit) {
    std::vector<std::size_t> idx(n, 0);
    if (n == 0) {
        visit(idx);
        return;
    }
    while (true) {
        visit(idx);
        std::size_t k = n;
        while (k > 0) {
            --k;
            if (++idx[k] < grid_size) break;
            idx[k] = 0;
            if (k == 0) return;
        }
    }
}

double set_integral(const SetFunction& g, const Grid& grid, std::size_t n_max) {
    double total = 0.0;
    for (std::size_t n = 0; n <= n_max; ++n) {
        double sum = 0.0;
        for_each_tuple(grid.size(), n, [&](std::span<const std::size_t> xs) { sum += g(xs); });
        total += sum * std::pow(grid.cell_volume(), static_cast<double>(n)) / factorial(n);
    }
    return total;
}

}  // namespace rfsfuse
