#include "rfsfuse/cphd.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace rfsfuse;
using namespace rfsfuse::testing;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

SensorModel make_sensor(double pd, double clutter) {
    SensorModel s;
    s.x = 2500.0;
    s.y = 0.0;
    s.noise = Eigen::Vector2d(400.0, kDeg * kDeg).asDiagonal();
    s.detection_probability = pd;
    s.clutter_rate = clutter;
    return s;
}

GaussianComponent target(double weight, double x, double y, double pos_var = 100.0) {
    return GaussianComponent(weight, vec({x, 0.0, y, 0.0}), diag({pos_var, 25.0, pos_var, 25.0}));
}

FilterState state_with(const CardinalityPmf& rho, std::vector<GaussianComponent> comps) {
    return FilterState{IidCluster(rho, GaussianMixture(std::move(comps)).normalized()), 0};
}

// Likelihood of z for a component, linearized at its mean (written out here).
double linearized_likelihood(const GaussianComponent& c, const Measurement& z, const SensorModel& s) {
    const double dx = c.mean()(0) - s.x, dy = c.mean()(2) - s.y;
    const double r2 = dx * dx + dy * dy, r = std::sqrt(r2);
    Eigen::Matrix<double, 2, 4> h;
    h << dx / r, 0, dy / r, 0, -dy / r2, 0, dx / r2, 0;
    const Eigen::Matrix4d p = c.covariance();
    const Eigen::Matrix2d cov = h * p * h.transpose() + s.noise;
    Eigen::Vector2d nu(z.range - r, z.bearing - std::atan2(dy, dx));
    nu(1) = std::remainder(nu(1), 2.0 * std::numbers::pi);
    return std::exp(-0.5 * nu.dot(cov.inverse() * nu)) / (2.0 * std::numbers::pi * std::sqrt(cov.determinant()));
}

}  // namespace

TEST_CASE("constant velocity model") {
    const MotionModel m = MotionModel::constant_velocity(2.0, 25.0, 4.0, 0.95);
    const Vector x = m.transition * vec({0, 10, 5, -1});
    CHECK(x(0) == 20.0);
    CHECK(x(2) == 3.0);
    CHECK(m.process_noise(1, 1) == 4.0);
    CHECK_THROWS_AS((void)MotionModel::constant_velocity(1.0, 1.0, 1.0, 1.5), std::invalid_argument);
}

TEST_CASE("sensor geometry") {
    const SensorModel s = make_sensor(0.9, 10.0);
    const Measurement z = s.measure(vec({2500, 0, 1000, 0}));
    CHECK(z.range == doctest::Approx(1000.0));
    CHECK(z.bearing == doctest::Approx(std::numbers::pi / 2));
    const Eigen::Vector2d back = s.to_cartesian(z);
    CHECK(back.x() == doctest::Approx(2500.0));
    CHECK(back.y() == doctest::Approx(1000.0));
}

TEST_CASE("clutter intensity integrates to the clutter rate over measurement space") {
    SensorModel s = make_sensor(0.9, 15.0);
    s.x = 1000.0;
    s.y = 2000.0;
    const int nr = 800, nb = 720;
    const double r_max = 8000.0, dr = r_max / nr, db = 2 * std::numbers::pi / nb;
    double total = 0.0;
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nb; ++j)
            total += s.clutter_intensity({(i + 0.5) * dr, -std::numbers::pi + (j + 0.5) * db}) * dr * db;
    CHECK(total == doctest::Approx(15.0).epsilon(5e-3));
    CHECK(s.clutter_intensity({10000.0, 0.0}) == 0.0);
}

TEST_CASE("predict: deterministic drift with certain survival") {
    MotionModel m = MotionModel::constant_velocity(1.0, 0.0, 0.0, 1.0);
    const FilterState s = state_with(CardinalityPmf({0.0, 0.3, 0.7}), {target(1.0, 100, 200)});
    const FilterState p = predict(s, m, BirthModel::none());
    CHECK(p.density.cardinality() == s.density.cardinality());
    CHECK(p.spatial()[0].mean()(0) == 100.0);
    const FilterState moving = predict(state_with(CardinalityPmf({0.0, 1.0}), {GaussianComponent(1.0, vec({0, 10, 0, -5}), diag({1, 1, 1, 1}))}),
                                       m, BirthModel::none());
    CHECK(moving.spatial()[0].mean()(0) == 10.0);
    CHECK(moving.spatial()[0].mean()(2) == -5.0);
    CHECK(moving.time == 1);
}

TEST_CASE("predict: total death collapses the cardinality") {
    const MotionModel m = MotionModel::constant_velocity(1.0, 25.0, 4.0, 0.0);
    const FilterState p = predict(state_with(CardinalityPmf({0.1, 0.2, 0.7}), {target(1.0, 0, 0)}), m, BirthModel::none());
    CHECK(p.density.cardinality()[0] == 1.0);
    CHECK(p.spatial().empty());
}

TEST_CASE("predict: survival thins the intensity and the cardinality") {
    const MotionModel m = MotionModel::constant_velocity(1.0, 25.0, 4.0, 0.95);
    const FilterState s = state_with(CardinalityPmf::delta(1, 15), {target(1.0, 0, 0)});
    const FilterState p = predict(s, m, BirthModel::none());
    CHECK(p.intensity().total_weight() == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(p.density.cardinality()[1] == doctest::Approx(0.95).epsilon(1e-12));

    // delta(2) thinned by 0.5 is Binomial(2, 0.5)
    const FilterState two = predict(state_with(CardinalityPmf::delta(2, 4), {target(1.0, 0, 0)}),
                                    MotionModel::constant_velocity(1.0, 1.0, 1.0, 0.5), BirthModel::none());
    CHECK(two.density.cardinality()[0] == doctest::Approx(0.25));
    CHECK(two.density.cardinality()[1] == doctest::Approx(0.5));
    CHECK(two.density.cardinality()[2] == doctest::Approx(0.25));
}

TEST_CASE("predict: Poisson birth is convolved into the cardinality") {
    BirthModel birth;
    birth.intensity.add(target(0.3, 1000, 1000));
    const FilterState p = predict(FilterState::empty(15), MotionModel::constant_velocity(1, 25, 4, 0.95), birth);
    for (std::size_t n = 0; n < 5; ++n)
        CHECK(p.density.cardinality()[n] == doctest::Approx(std::pow(0.3, n) * std::exp(-0.3) / std::tgamma(n + 1.0)).epsilon(1e-9));
    CHECK(p.intensity().total_weight() == doctest::Approx(0.3).epsilon(1e-9));
    // birth components are propagated one step as well
    CHECK(p.spatial()[0].covariance()(0, 0) == doctest::Approx(100 + 25 + 25));
}

TEST_CASE("adaptive birth from a scan") {
    const SensorModel s = make_sensor(0.9, 0.0);
    std::vector<Measurement> scan;
    for (int i = 0; i < 20; ++i) scan.push_back({1000.0 + 50 * i, 0.3});
    const BirthModel b = BirthModel::from_measurements(scan, s, BirthParams{});
    CHECK(b.intensity.size() == 20);
    CHECK(b.mass() == doctest::Approx(2.0));
    const Eigen::Vector2d p = s.to_cartesian(scan[0]);
    CHECK(b.intensity[0].mean()(0) == doctest::Approx(p.x()).epsilon(1e-3));
    CHECK(b.intensity[0].mean()(1) == 0.0);
    CHECK(b.intensity[0].covariance()(1, 1) == doctest::Approx(100.0));
    const BirthModel few = BirthModel::from_measurements(std::vector<Measurement>(scan.begin(), scan.begin() + 3), s, BirthParams{});
    CHECK(few.intensity[0].weight() == doctest::Approx(0.15));
    CHECK(BirthModel::from_measurements({}, s, BirthParams{}).intensity.empty());
}

TEST_CASE("update: no detection capability leaves the state unchanged") {
    const FilterState s = state_with(CardinalityPmf({0.2, 0.5, 0.3}), {target(0.6, 1000, 1000), target(0.4, 3000, 2000)});
    const FilterState u = update(s, {}, make_sensor(0.0, 15.0));
    for (std::size_t n = 0; n <= 2; ++n) CHECK(u.density.cardinality()[n] == doctest::Approx(s.density.cardinality()[n]).epsilon(1e-12));
    CHECK(u.spatial()[0].weight() == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("update: an empty scan lowers the expected cardinality") {
    const FilterState s = state_with(CardinalityPmf({0.2, 0.5, 0.3}), {target(1.0, 1000, 1000)});
    const FilterState u = update(s, {}, make_sensor(0.98, 15.0));
    CHECK(u.density.cardinality().mean() < s.density.cardinality().mean());
}

TEST_CASE("update: with a Poisson prior the intensity matches the PHD update") {
    const SensorModel sensor = make_sensor(0.8, 10.0);
    const std::vector<GaussianComponent> comps{target(0.5, 1000, 1500), target(0.3, 3000, 2500, 400.0), target(0.2, 2600, 800)};
    const double lambda = 2.0;
    const FilterState prior = state_with(CardinalityPmf::poisson(lambda, 15), comps);
    const std::vector<Measurement> scan{sensor.measure(vec({1010, 0, 1490, 0})), sensor.measure(vec({2990, 0, 2520, 0})),
                                        {2000.0, 1.0}, {1500.0, 2.0}};
    UpdateParams params;
    params.gate = 1e12;
    const UpdateResult r = update_detailed(prior, scan, sensor, params);

    // PHD update weights computed directly.
    double expected_mass = 0.0;
    for (const auto& c : comps) expected_mass += (1 - 0.8) * lambda * c.weight();
    for (const auto& z : scan) {
        double denom = sensor.clutter_intensity(z);
        std::vector<double> terms;
        for (const auto& c : comps) terms.push_back(0.8 * lambda * c.weight() * linearized_likelihood(c, z, sensor));
        for (double t : terms) denom += t;
        for (double t : terms) expected_mass += t / denom;
    }
    CHECK(r.intensity.total_weight() == doctest::Approx(expected_mass).epsilon(1e-6));
    // missed-detection components come first with weight (1 - pd) lambda w
    CHECK(r.intensity[0].weight() == doctest::Approx(0.2 * lambda * 0.5).epsilon(1e-6));
}

TEST_CASE("update: intensity mass equals the posterior cardinality mean") {
    Gen gen(9);
    const SensorModel sensor = make_sensor(0.9, 15.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<GaussianComponent> comps;
        const std::size_t n = gen.index(1, 6);
        for (std::size_t k = 0; k < n; ++k) comps.push_back(target(gen.uniform(0.1, 1), gen.uniform(200, 4800), gen.uniform(200, 4800)));
        const FilterState prior = state_with(gen.pmf(15), comps);
        std::vector<Measurement> scan;
        const std::size_t m = gen.index(0, 25);
        for (std::size_t k = 0; k < m; ++k) scan.push_back(sensor.measure(vec({gen.uniform(0, 5000), 0, gen.uniform(0, 5000), 0})));
        const UpdateResult r = update_detailed(prior, scan, sensor);
        CHECK(pmf_sum(r.state.density.cardinality()) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(r.intensity.total_weight() - r.state.density.cardinality().mean()) < 1e-6);
    }
}

TEST_CASE("update: a noise-free detection pulls the mean onto the target") {
    const SensorModel sensor = make_sensor(0.98, 0.0);
    const GaussianComponent prior_comp(1.0, vec({1050, 0, 2040, 0}), diag({2500, 25, 2500, 25}));
    const FilterState prior = state_with(CardinalityPmf::delta(1, 15), {prior_comp});
    const Vector truth = vec({1000, 0, 2000, 0});
    const FilterState post = update(prior, std::vector<Measurement>{sensor.measure(truth)}, sensor);
    const Moments m = spatial_moments(post.spatial());
    CHECK(std::abs(m.mean(0) - truth(0)) < std::sqrt(m.covariance(0, 0)));
    CHECK(std::abs(m.mean(2) - truth(2)) < std::sqrt(m.covariance(2, 2)));
    CHECK(post.density.cardinality()[1] == doctest::Approx(1.0));
}

TEST_CASE("update: bearing residuals wrap across +-pi") {
    SensorModel sensor = make_sensor(0.98, 0.0);
    sensor.x = 3000.0;
    sensor.y = 2000.0;
    // target due west of the sensor, straddling the +-pi cut
    const FilterState prior = state_with(CardinalityPmf::delta(1, 15), {GaussianComponent(1.0, vec({2000, 0, 2001, 0}), diag({400, 25, 400, 25}))});
    const Vector truth = vec({2000, 0, 1999, 0});
    const FilterState post = update(prior, std::vector<Measurement>{sensor.measure(truth)}, sensor);
    CHECK(spatial_moments(post.spatial()).mean(2) == doctest::Approx(1999.0).epsilon(1e-3));
}

TEST_CASE("update: components at the sensor position are skipped") {
    const SensorModel sensor = make_sensor(0.9, 5.0);
    const FilterState prior = state_with(CardinalityPmf::delta(1, 15), {target(1.0, sensor.x, sensor.y), target(1.0, 1000, 1000)});
    const UpdateResult r = update_detailed(prior, std::vector<Measurement>{{1000.0, 1.0}}, sensor);
    CHECK(r.skipped_components == 1);
}

TEST_CASE("reduce") {
    const ReductionParams params;
    SUBCASE("separated heavy components are kept") {
        const GaussianMixture gm({target(0.5, 0, 0), target(0.7, 1000, 0)});
        const GaussianMixture r = reduce_mixture(gm, params);
        CHECK(r.size() == 2);
        CHECK(r.total_weight() == doctest::Approx(1.2).epsilon(1e-12));
    }
    SUBCASE("identical components merge with summed weight") {
        const GaussianMixture r = reduce_mixture(GaussianMixture({target(0.5, 10, 10), target(0.25, 10, 10)}), params);
        REQUIRE(r.size() == 1);
        CHECK(r[0].weight() == doctest::Approx(0.75));
        CHECK(r[0].mean()(0) == doctest::Approx(10.0));
        CHECK(r[0].covariance()(0, 0) == doctest::Approx(100.0));
    }
    SUBCASE("merge preserves the first two moments") {
        const GaussianMixture gm({target(0.5, 0, 0), target(0.5, 10, 0)});
        const GaussianMixture r = reduce_mixture(gm, params);
        REQUIRE(r.size() == 1);
        CHECK(r[0].mean()(0) == doctest::Approx(5.0));
        CHECK(r[0].covariance()(0, 0) == doctest::Approx(125.0));
    }
    SUBCASE("cap at 30 keeps the mass") {
        std::vector<GaussianComponent> comps;
        for (int i = 0; i < 40; ++i) comps.push_back(target(0.01 * (i + 1), 200.0 * i, 0));
        const GaussianMixture gm(comps);
        const GaussianMixture r = reduce_mixture(gm, params);
        CHECK(r.size() == 30);
        CHECK(std::abs(r.total_weight() - gm.total_weight()) < 1e-9);
        CHECK(r[0].weight() > r[29].weight());
    }
    SUBCASE("light components are pruned, the heaviest survives") {
        const GaussianMixture r = reduce_mixture(GaussianMixture({target(1e-7, 0, 0), target(2e-7, 5000, 0)}), params);
        REQUIRE(r.size() == 1);
        CHECK(r[0].mean()(0) == 5000.0);
        CHECK(r.total_weight() == doctest::Approx(3e-7));
    }
    SUBCASE("reduce on a filter state keeps the CPMF") {
        const FilterState s = state_with(CardinalityPmf({0.1, 0.4, 0.5}), {target(0.5, 0, 0), target(0.5, 0, 1)});
        const FilterState r = reduce(s, params);
        CHECK(r.density.cardinality() == s.density.cardinality());
        CHECK(r.spatial().size() == 1);
        CHECK(r.spatial().total_weight() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("extract") {
    CHECK(extract(FilterState::empty(15)).empty());
    const FilterState s{IidCluster(CardinalityPmf({0.1, 0.2, 0.6, 0.1}),
                                   GaussianMixture({target(0.9, 1, 0), target(0.8, 2, 0), target(0.1, 3, 0)}).normalized()),
                        0};
    const auto est = extract(s);
    REQUIRE(est.size() == 2);
    CHECK(est[0](0) == 1.0);
    CHECK(est[1](0) == 2.0);
    const FilterState tie{IidCluster(CardinalityPmf({0.5, 0.5}), GaussianMixture({target(1.0, 0, 0)})), 0};
    CHECK(extract(tie).empty());
}

TEST_CASE("single persistent target with perfect detection is tracked") {
    SensorModel sensor = make_sensor(1.0, 0.0);
    sensor.noise = Eigen::Vector2d(1e-6, 1e-10).asDiagonal();
    const MotionModel motion = MotionModel::constant_velocity(1.0, 25.0, 4.0, 0.95);
    FilterState state = FilterState::empty(15);
    std::vector<Measurement> previous;
    Vector x = vec({1500, 8, 2000, -6});
    for (int t = 1; t <= 20; ++t) {
        x = motion.transition * x;
        const std::vector<Measurement> scan{sensor.measure(x)};
        const BirthModel birth = BirthModel::from_measurements(previous, sensor, BirthParams{});
        state = reduce(update(predict(state, motion, birth), scan, sensor), ReductionParams{});
        previous = scan;
        if (t >= 3) CHECK(extract(state).size() == 1);
    }
}
