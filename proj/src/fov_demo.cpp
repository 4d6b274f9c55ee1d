#include "rfsfuse/fov_demo.hpp"

#include "rfsfuse/densities.hpp"
#include "rfsfuse/grid.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace rfsfuse {

namespace {

GaussianMixture two_peaks(double shared, double exclusive, double sigma) {
    const Matrix cov = Matrix::Constant(1, 1, sigma * sigma);
    GaussianMixture gm;
    gm.add(GaussianComponent(1.0, Vector::Constant(1, shared), cov));
    gm.add(GaussianComponent(1.0, Vector::Constant(1, exclusive), cov));
    return gm;
}

}  // namespace

std::vector<FovRegionMass> fov_demo(const FovDemoParams& params) {
    if (!(params.offset > 0.0) || !(params.sigma > 0.0)) throw std::invalid_argument("fov_demo: offset and sigma must be > 0");
    if (params.weight1 < 0.0 || params.weight2 < 0.0 || std::abs(params.weight1 + params.weight2 - 1.0) > 1e-12)
        throw std::invalid_argument("fov_demo: weights must be nonnegative and sum to one");
    const GaussianMixture d1 = two_peaks(0.0, -params.offset, params.sigma);
    const GaussianMixture d2 = two_peaks(0.0, params.offset, params.sigma);
    const double half = params.offset + 10.0 * params.sigma;
    const Grid grid(Axis{-half, half, params.points});
    const double boundary = params.offset / 2.0;

    std::vector<FovRegionMass> rows{{"exclusive-1"}, {"shared"}, {"exclusive-2"}};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vector x = grid.point(i);
        const double a = d1.evaluate(x);
        const double b = d2.evaluate(x);
        FovRegionMass& r = rows[x(0) < -boundary ? 0 : (x(0) > boundary ? 2 : 1)];
        const double v = grid.cell_volume();
        r.node1 += v * a;
        r.node2 += v * b;
        r.mil += v * (params.weight1 * a + params.weight2 * b);
        r.mwig += v * std::pow(a, params.weight1) * std::pow(b, params.weight2);
    }
    return rows;
}

std::string fov_demo_csv(const std::vector<FovRegionMass>& rows) {
    std::string out = "region,node1,node2,mil,mwig\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%.6g,%.6g,%.6g,%.6g\n", r.region.c_str(), r.node1, r.node2, r.mil, r.mwig);
        out += buf;
    }
    return out;
}

}  // namespace rfsfuse
