#pragma once

#include "rfsfuse/densities.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace rfsfuse {

/// Target state layout: [x, vx, y, vy] (m, m/s).
inline constexpr int kStateDim = 4;

/// Linear-Gaussian single-target dynamics with survival probability.
struct MotionModel {
    Matrix transition;
    Matrix process_noise;
    double dt = 1.0;
    double survival = 0.95;

    /// White-noise-acceleration model with block transition [[1, T], [0, 1]]
    /// per axis and diagonal process noise diag(q_pos, q_vel, q_pos, q_vel).
    static MotionModel constant_velocity(double dt, double q_pos, double q_vel, double survival);
};

/// Axis-aligned surveillance region.
struct Region {
    double x_min = 0.0;
    double x_max = 5000.0;
    double y_min = 0.0;
    double y_max = 5000.0;

    [[nodiscard]] double area() const { return (x_max - x_min) * (y_max - y_min); }
    [[nodiscard]] bool contains(double x, double y) const {
        return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
    }
};

/// Range (m) and bearing (rad, in (-pi, pi]) from a sensor to a target.
struct Measurement {
    double range;
    double bearing;

    friend bool operator==(const Measurement&, const Measurement&) = default;
};

/// Time-of-arrival / direction-of-arrival sensor with Poisson clutter that is
/// uniform over the surveillance region.
struct SensorModel {
    double x = 0.0;
    double y = 0.0;
    /// Covariance of (range, bearing) noise in m^2 and rad^2.
    Eigen::Matrix2d noise = Eigen::Matrix2d::Identity();
    double detection_probability = 0.98;
    double clutter_rate = 15.0;
    Region region;

    /// Noise-free measurement of a state.
    [[nodiscard]] Measurement measure(const Vector& state) const;
    /// Cartesian position of a (range, bearing) pair.
    [[nodiscard]] Eigen::Vector2d to_cartesian(const Measurement& z) const;
    /// Clutter intensity at z in measurement space: rate * r / area inside
    /// the region (the Jacobian of the polar map), zero outside.
    [[nodiscard]] double clutter_intensity(const Measurement& z) const;
};

struct BirthParams {
    /// Weight of each birth component.
    double weight = 0.15;
    /// Standard deviation of the zero-mean velocity prior (m/s).
    double velocity_std = 10.0;
    /// Upper bound on the total birth mass per scan.
    double max_mass = 2.0;
    std::size_t max_components = 200;
};

/// Measurement-driven birth intensity: one component per measurement of the
/// previous scan, located by inverting the measurement and expressed at that
/// scan's time (predict() propagates it one step).
struct BirthModel {
    GaussianMixture intensity;

    [[nodiscard]] double mass() const { return intensity.total_weight(); }

    static BirthModel none() { return {}; }
    static BirthModel from_measurements(std::span<const Measurement> scan, const SensorModel& sensor,
                                        const BirthParams& params);
};

struct ReductionParams {
    double prune_threshold = 1e-5;
    /// Squared Mahalanobis distance below which components are merged.
    double merge_threshold = 4.0;
    std::size_t max_components = 30;
};

struct UpdateParams {
    /// Squared Mahalanobis gate in measurement space.
    double gate = 30.0;
    /// Ranges below this are treated as singular geometry.
    double min_range = 1.0;
    /// Floor on the clutter intensity so that clutter-free updates stay finite.
    double min_clutter_intensity = 1e-12;
};

/// Local GM-CPHD posterior: an i.i.d. cluster with GM spatial PDF.
struct FilterState {
    IidCluster density;
    int time = 0;

    [[nodiscard]] const GaussianMixture& spatial() const;
    /// PHD = CPMF mean times the spatial PDF.
    [[nodiscard]] GaussianMixture intensity() const;

    /// No targets: CPMF concentrated at 0, empty GM.
    static FilterState empty(std::size_t n_max);
    static FilterState from_intensity(CardinalityPmf cardinality, const GaussianMixture& intensity, int time);
};

[[nodiscard]] FilterState predict(const FilterState& state, const MotionModel& motion, const BirthModel& birth);

struct UpdateResult {
    FilterState state;
    /// Unnormalized posterior intensity (before it is split into CPMF mean and spatial PDF).
    GaussianMixture intensity;
    std::size_t skipped_components = 0;
};

[[nodiscard]] UpdateResult update_detailed(const FilterState& predicted, std::span<const Measurement> scan,
                                           const SensorModel& sensor, const UpdateParams& params = {});
[[nodiscard]] FilterState update(const FilterState& predicted, std::span<const Measurement> scan,
                                 const SensorModel& sensor, const UpdateParams& params = {});

/// Prune, merge and cap a mixture; the result has the input's total weight.
[[nodiscard]] GaussianMixture reduce_mixture(const GaussianMixture& gm, const ReductionParams& params);
/// Reduce the intensity of a filter state; the CPMF is untouched.
[[nodiscard]] FilterState reduce(const FilterState& state, const ReductionParams& params);

/// MAP cardinality n*, then the means of the n* heaviest components (ties to
/// the lowest index).
[[nodiscard]] std::vector<Vector> extract(const FilterState& state);

}  // namespace rfsfuse
