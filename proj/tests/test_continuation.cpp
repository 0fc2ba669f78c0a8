#include <doctest.h>

#include <cmath>

#include "tat/continuation.hpp"

using namespace tat;

namespace {

SpaceTimeSet fill_like(const SpaceTimeSet& like, const std::function<bool(const Point&, double)>& in) {
    SpaceTimeSet s = like;
    for (int k = 0; k < s.size(); ++k)
        for (int j = 0; j < s.grid.ny(); ++j)
            for (int i = 0; i < s.grid.nx(); ++i) s.slices[k](i, j) = in(s.grid.node(i, j), s.time(k));
    return s;
}

struct DiskSetup {
    GridSpec grid;
    SpeedField speed;
    Region region;
    BoundaryPatch gamma;
    BoundaryPatch full;

    explicit DiskSetup(int cells)
        : grid(GridSpec::square(-2.0, 2.0, cells)),
          speed(SpeedField::constant(grid, 1.0)),
          region(make_region(grid, Disk{Point::Zero(), 1.0})),
          gamma(make_patch(region, {{0.0, 0.75}})),
          full(make_patch(region, {{0.0, 1.0}})) {}

    Point outside(double angle) const { return 1.05 * Point(std::cos(angle), std::sin(angle)); }

    double clearance(const Point& p) const {
        const Point src[1] = {p};
        const DistanceField d = solve_eikonal(speed, src, &region);
        double c = std::numeric_limits<double>::infinity();
        for (const Point& q : gamma.complement_points()) c = std::min(c, *d.at(q));
        return c;
    }

    // Exterior data: zero on Gamma, a space-time bump of height `amp`
    // centred at 315 degrees on the unmeasured arc.
    Trace data(double dt, int steps, double amp) const {
        const auto nodes = region.boundary();
        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(Eigen::Index(full.samples().size()), steps + 1);
        for (std::size_t r = 0; r < full.samples().size(); ++r) {
            const int s = full.samples()[r];
            const double z = (2.0 * M_PI * nodes[s].param - 1.75 * M_PI) / (0.22 * M_PI);
            if (std::abs(z) >= 1.0 || gamma.contains_sample(s)) continue;
            for (int k = 0; k <= steps; ++k) {
                const double t = k * dt;
                if (t < 0.8) v(Eigen::Index(r), k) = amp * std::pow(1.0 - z * z, 4) * std::pow(std::sin(M_PI * t / 0.8), 2);
            }
        }
        return Trace(full, dt, 0.0, std::move(v));
    }

    std::pair<DodReport, DomainOfDependence> check(const Point& p, double H, double shrink, double amp) const {
        const double dt = stable_time_step(speed, H, 0.9);
        const int steps = int(std::llround(H / dt));
        const TimeAxis axis = sampled_axis(dt, steps, 4, H);
        DomainOfDependence D = domain_of_dependence(p, H, region, gamma, speed, shrink, axis.dt, axis.count);
        WaveOptions o;
        o.boundary = BoundaryCondition::reflecting;
        o.snapshotTimes = snapshot_times(D.set);
        const WaveRun run = simulate_exterior(speed, region, data(dt, steps, amp), H, o);
        return {verify_dod(run, speed, D.set), std::move(D)};
    }
};

}  // namespace

TEST_CASE("principal symbol") {
    const GridSpec g = GridSpec::square(-1.0, 1.0, 16);
    const SpeedField one = SpeedField::constant(g, 1.0), two = SpeedField::constant(g, 2.0);
    const Eigen::Vector2d e1(1.0, 0.0), diag = Eigen::Vector2d(1.0, 1.0).normalized();
    CHECK(symbol(one, CovectorSample{Point::Zero(), e1, 0.0}) == doctest::Approx(-1.0));
    CHECK(symbol(one, CovectorSample{Point::Zero(), diag, 1.0}) == doctest::Approx(0.0));
    CHECK(symbol(two, CovectorSample{Point::Zero(), e1, 1.0}) == doctest::Approx(-3.0));
}

TEST_CASE("classification") {
    const GridSpec g = GridSpec::square(-1.0, 1.0, 16);
    const SpeedField one = SpeedField::constant(g, 1.0);
    const Classification t = classify(one, CovectorSample{Point::Zero(), Eigen::Vector2d::Zero(), 1.0});
    CHECK(t.causality == Causality::spacelike);
    CHECK(t.noncharacteristic);
    const Classification n =
        classify(one, CovectorSample{Point::Zero(), Eigen::Vector2d(0.6, 0.8), 1.0});
    CHECK(n.causality == Causality::null);
    CHECK(!n.noncharacteristic);
    const Classification x = classify(one, CovectorSample{Point::Zero(), Eigen::Vector2d(2.0, 0.0), 1.0});
    CHECK(x.causality == Causality::timelike);
    CHECK(x.noncharacteristic);
    CHECK_THROWS_AS(classify(one, CovectorSample{Point::Zero(), Eigen::Vector2d::Zero(), 0.0}),
                    std::invalid_argument);
    CHECK(std::string(to_string(Causality::null)) == "null");

    // The test is generic in the scalar type.
    using L = long double;
    const CovectorSampleT<L> s{Eigen::Matrix<L, 2, 1>(0, 0), Eigen::Matrix<L, 2, 1>(L(0.5), 0), L(1)};
    CHECK(double(symbol(one, s)) == doctest::Approx(0.75));
    CHECK(classify(one, s).causality == Causality::spacelike);
}

TEST_CASE("space-time set helpers") {
    const GridSpec g = GridSpec::square(-1.0, 1.0, 32);
    SpaceTimeSet a{g, 0.1, 0.0, std::vector<Mask>(5, Mask::Constant(g.nx(), g.ny(), false)), "a"};
    SpaceTimeSet b = a;
    CHECK(hausdorff(a, b) == 0.0);
    b.slices[2](10, 10) = true;
    CHECK(std::isinf(hausdorff(a, b)));
    a.slices[2](13, 14) = true;
    CHECK(hausdorff(a, b) == doctest::Approx(5.0 * g.h()));
    CHECK(contained_in(b, a, 5.0 * g.h() + 1e-12));
    CHECK(!contained_in(b, a, 4.0 * g.h()));
    // Same node two slices later: b is now within 0.2 of a, but not a of b.
    a.slices[4](10, 10) = true;
    CHECK(hausdorff(a, b) == doctest::Approx(5.0 * g.h()));
    CHECK(contained_in(b, a, 0.2 + 1e-12));
    CHECK(!contained_in(b, a, 0.19));
    CHECK(!contained_in(a, b, 0.3));
    CHECK(a.count() == 2);
    CHECK(a.slice_at(0.21) == 2);
    CHECK(a.slice_at(0.9) == -1);

    Mask m = Mask::Constant(g.nx(), g.ny(), false);
    m(3, 4) = m(20, 25) = true;
    const Field d2 = squared_distance_transform(g, m);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const double want = std::min((g.node(i, j) - g.node(3, 4)).squaredNorm(),
                                         (g.node(i, j) - g.node(20, 25)).squaredNorm());
            CHECK(d2(i, j) == doctest::Approx(want).epsilon(1e-12));
        }
    CHECK(std::isinf(squared_distance_transform(g, Mask::Constant(g.nx(), g.ny(), false))(0, 0)));
}

TEST_CASE("free-space backward cone") {
    const GridSpec g = GridSpec::square(-2.0, 2.0, 128);
    const double h = g.h();
    const SpeedField c = SpeedField::constant(g, 1.0);
    const Region R = make_region(g, Disk{Point(1.2, 1.2), 0.3});
    const BoundaryPatch P = make_patch(R, {{0.0, 0.5}});
    const Point p(-0.5, -0.5);
    const double H = 0.8;
    const DomainOfDependence D = domain_of_dependence(p, H, R, P, c, 0.0, 0.05, 17);
    CHECK(D.admissible);
    CHECK(std::isinf(D.admissibilityMargin) == false);
    const SpaceTimeSet cone = fill_like(D.set, [&](const Point& x, double t) { return (x - p).norm() + t < H; });
    CHECK(hausdorff(D.set, cone) <= 2.0 * h);
    CHECK(D.set.slices.back().count() == 0);

    const DomainOfDependence Z = domain_of_dependence(p, 0.0, R, P, c, 0.0, 0.05, 5);
    CHECK(Z.set.empty());

    // Growing H only adds points.
    const DomainOfDependence D2 = domain_of_dependence(p, 1.0, R, P, c, 0.0, 0.05, 17);
    CHECK(contained_in(D.set, D2.set));

    CHECK_THROWS_AS(domain_of_dependence(Point(1.2, 1.1), H, R, P, c, 0.0, 0.05, 17), std::invalid_argument);
    CHECK_THROWS_AS(domain_of_dependence(p, -1.0, R, P, c, 0.0, 0.05, 17), std::invalid_argument);
    CHECK_THROWS_AS(domain_of_dependence(p, H, R, P, c, 1.0, 0.05, 17), std::invalid_argument);
}

TEST_CASE("admissibility and surface normals") {
    const DiskSetup s(256);
    const Point p = s.outside(0.75 * M_PI), q = s.outside(1.75 * M_PI);
    const double H = s.clearance(p);
    const DomainOfDependence good = domain_of_dependence(p, H, s.region, s.gamma, s.speed, 0.0, 0.05, 10);
    CHECK(good.admissible);
    const DomainOfDependence bad = domain_of_dependence(q, H, s.region, s.gamma, s.speed, 0.0, 0.05, 10);
    CHECK(!bad.admissible);
    CHECK(bad.admissibilityMargin < 0.0);

    const DomainOfDependence shrunk = domain_of_dependence(p, 0.9 * H, s.region, s.gamma, s.speed, 0.1, 0.05, 10);
    REQUIRE(!shrunk.surfaceNormals.empty());
    for (const CovectorSample& n : shrunk.surfaceNormals) {
        const Classification k = classify(s.speed, n);
        CHECK(k.causality == Causality::spacelike);
        CHECK(k.noncharacteristic);
    }
    CHECK(shrunk.bottom.count() == shrunk.set.slices.front().count());
    CHECK(shrunk.lateral.size() == shrunk.set.size());
}

TEST_CASE("exterior solution vanishes on the domain of dependence") {
    const DiskSetup s(256);
    const Point p = s.outside(0.75 * M_PI), q = s.outside(1.75 * M_PI);
    const double shrink = 0.05, H = (1.0 - shrink) * s.clearance(p);

    const auto [zero, Dz] = s.check(p, H, shrink, 0.0);
    CHECK(zero.maxAbs <= 1e-12);
    CHECK(zero.slicesChecked == Dz.set.size());

    const auto [good, Dg] = s.check(p, H, shrink, 1.0);
    CHECK(Dg.admissible);
    CHECK(good.maxAbs <= 1e-3);

    const auto [bad1, Db] = s.check(q, H, shrink, 1.0);
    CHECK(!Db.admissible);
    CHECK(bad1.maxAbs > 0.1);
    // Linear in the data.
    const auto bad2 = s.check(q, H, shrink, 2.5).first;
    CHECK(bad2.maxAbs == doctest::Approx(2.5 * bad1.maxAbs).epsilon(1e-9));
    CHECK(bad2.energyFraction == doctest::Approx(bad1.energyFraction).epsilon(1e-9));
}

TEST_CASE("verify_dod rejects a mismatched run") {
    const DiskSetup s(128);
    const Point p = s.outside(0.75 * M_PI);
    const double H = 1.0;
    const double dt = stable_time_step(s.speed, H, 0.9);
    const int steps = int(std::llround(H / dt));
    const TimeAxis axis = sampled_axis(dt, steps, 4, H);
    const DomainOfDependence D = domain_of_dependence(p, H, s.region, s.gamma, s.speed, 0.05, axis.dt, axis.count);
    WaveOptions o;
    o.boundary = BoundaryCondition::reflecting;
    const WaveRun run = simulate_exterior(s.speed, s.region, s.data(dt, steps, 1.0), H, o);
    CHECK_THROWS_AS(verify_dod(run, s.speed, D.set), std::invalid_argument);
}

TEST_CASE("cylinder expansion") {
    const GridSpec g = GridSpec::square(-1.5, 1.5, 96);
    const double h = g.h(), tau = 2.0 * h;
    const SpeedField one = SpeedField::constant(g, 1.0);
    const Point z(0.1, -0.2);
    const SpaceTimeSet X = uc_cylinder_expand(z, 0.3, 0.9, one, tau);
    CHECK(X.time(0) == doctest::Approx(-X.time(X.size() - 1)));
    const SpaceTimeSet cone = fill_like(X, [&](const Point& x, double t) { return (x - z).norm() + std::abs(t) < 0.9; });
    CHECK(hausdorff(X, cone) <= 2.0 * h);

    const SpaceTimeSet small = uc_cylinder_expand(z, 0.3, 0.25, one, tau);
    CHECK(contained_in(small, cylinder(z, 0.3, 0.25, one, tau), 2.0 * h));

    // Layered speed: every slice is a sublevel set of the oracle distance.
    const SpeedField layered = SpeedField::layered(g, 1.0, 1.6, 0.0, 0.2);
    const SpaceTimeSet L = uc_cylinder_expand(z, 0.3, 0.9, layered, tau);
    const Point src[1] = {z};
    const DistanceField o = dijkstra_oracle(layered, src);
    const SpaceTimeSet ref = fill_like(L, [&](const Point& x, double t) {
        const Index2 n = g.nearest_node(x);
        return o(n.x(), n.y()) + std::abs(t) < 0.9;
    });
    CHECK(hausdorff(L, ref) <= std::max(3.0 * h, 0.03 * 0.9));
}

TEST_CASE("iterated continuation") {
    const GridSpec g = GridSpec::square(-1.5, 1.5, 96);
    const double h = g.h(), tau = 2.0 * h;
    const SpeedField one = SpeedField::constant(g, 1.0);
    const Point z(0.1, -0.2);
    const double rho = 0.15, H = 0.8;

    // One application: the cone of height H dilated by rho.
    const UcResult single = uc_iterate(z, rho, H, 2.0 * H, one, tau);
    CHECK(single.iterations == 1);
    SpaceTimeSet dilated = uc_cylinder_expand(z, rho, H, one, tau);
    for (Mask& m : dilated.slices) m = squared_distance_transform(g, m) <= rho * rho;
    CHECK(hausdorff(single.set, dilated) <= 2.0 * h);

    std::vector<SpaceTimeSet> sets;
    for (double d : {H, H / 2.0, H / 4.0}) {
        const UcResult r = uc_iterate(z, rho, H, d, one, tau);
        CHECK(r.iterations == int(std::ceil(H / d - 1e-9)));
        CHECK(contained_in(cylinder(z, rho, H, one, tau), r.set, 2.0 * h));
        sets.push_back(r.set);
    }
    CHECK(hausdorff(sets[0], sets[1]) <= 2.0 * h);
    CHECK(hausdorff(sets[0], sets[2]) <= 2.0 * h);

    CHECK_THROWS_AS(uc_iterate(z, rho, H, 0.0, one, tau), std::invalid_argument);
    CHECK_THROWS_AS(uc_iterate(z, rho, H, -0.1, one, tau), std::invalid_argument);
}
