#pragma once

#include <string>
#include <vector>

namespace rfsfuse {

/// Two 1-D Poisson PHDs: node 1 holds a unit-mass peak at the origin (shared
/// region) and one at -offset (seen only by node 1); node 2 holds the same
/// shared peak and one at +offset.
struct FovDemoParams {
    double offset = 30.0;
    double sigma = 3.0;
    double weight1 = 0.5;
    double weight2 = 0.5;
    /// Quadrature nodes over [-offset - 10 sigma, offset + 10 sigma].
    std::size_t points = 4001;
};

struct FovRegionMass {
    /// "exclusive-1", "shared" or "exclusive-2".
    std::string region;
    double node1 = 0.0;
    double node2 = 0.0;
    /// w1 D1 + w2 D2.
    double mil = 0.0;
    /// D1^w1 D2^w2.
    double mwig = 0.0;
};

/// Integrated PHD mass per region (boundaries at +-offset / 2) for both nodes
/// and both fusion rules.
[[nodiscard]] std::vector<FovRegionMass> fov_demo(const FovDemoParams& params = {});

[[nodiscard]] std::string fov_demo_csv(const std::vector<FovRegionMass>& rows);

}  // namespace rfsfuse
