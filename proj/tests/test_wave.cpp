#include <doctest.h>

#include <cmath>
#include <fstream>

#include "tat/geodesic.hpp"
#include "tat/wave.hpp"

using namespace tat;

namespace {

Field standing(const GridSpec& g, double t) {
    Field u(g.nx(), g.ny());
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const Point p = g.node(i, j);
            u(i, j) = std::cos(M_PI * p.x()) * std::cos(M_PI * p.y()) * std::cos(std::sqrt(2.0) * M_PI * t);
        }
    return u;
}

double standing_error(int cells, double T) {
    const GridSpec g = GridSpec::square(0.0, 1.0, cells);
    const SpeedField c = SpeedField::constant(g, 1.0);
    WaveOptions o;
    o.boundary = BoundaryCondition::reflecting;
    const double dt = stable_time_step(c, T, 0.9);
    const int steps = int(std::llround(T / dt));
    WaveStepper s(c, dt, o);
    s.start(standing(g, 0.0));
    for (int k = 1; k < steps; ++k) s.step();
    return (s.u() - standing(g, T)).abs().maxCoeff();
}

struct Setup {
    GridSpec grid = GridSpec::square(-2.0, 2.0, 128);
    SpeedField speed = SpeedField::layered(grid, 1.0, 1.3, 0.1, 0.3);
    Region region = make_region(grid, Disk{Point::Zero(), 1.0});
    BoundaryPatch full = make_patch(region, {{0.0, 1.0}});
    BoundaryPatch arc = make_patch(region, {{0.0, 0.75}});
};

}  // namespace

TEST_CASE("time step") {
    const GridSpec g = GridSpec::square(0.0, 1.0, 64);
    const SpeedField c = SpeedField::constant(g, 2.0);
    const double dt = stable_time_step(c, 1.0, 0.9);
    CHECK(dt <= 0.9 * g.h() / (std::sqrt(2.0) * 2.0) + 1e-15);
    CHECK(std::abs(1.0 / dt - std::round(1.0 / dt)) < 1e-9);
    CHECK_THROWS_AS(WaveStepper(c, g.h(), WaveOptions{}), std::invalid_argument);
    WaveOptions bad;
    bad.cflFactor = 1.2;
    CHECK_THROWS_AS(WaveStepper(c, dt, bad), std::invalid_argument);
}

TEST_CASE("zero initial data stays zero") {
    const Setup s;
    const Phantom f = make_phantom(s.region, {});
    const auto [run, trace] = simulate(s.speed, f, 1.0, s.arc);
    CHECK((run.u == 0.0).all());
    CHECK((trace.values.array() == 0.0).all());
    CHECK(trace.samples() == run.steps + 1);
    CHECK(trace.receivers() == int(s.arc.samples().size()));
    CHECK(energy(s.speed, run.u, run.uPrev) == 0.0);
}

TEST_CASE("standing wave") {
    CHECK(standing_error(128, 1.0) <= 5e-3);
    const double r = standing_error(64, 1.0) / standing_error(128, 1.0);
    CHECK(r >= 3.2);
    CHECK(r <= 4.8);
}

TEST_CASE("energy conservation on a reflecting box") {
    const GridSpec g = GridSpec::square(0.0, 1.0, 128);
    const SpeedField c = SpeedField::constant(g, 1.0);
    WaveOptions o;
    o.boundary = BoundaryCondition::reflecting;
    const double T = 2.0, dt = stable_time_step(c, T, 0.9);
    const int steps = int(std::llround(T / dt));
    WaveStepper st(c, dt, o);
    st.start(standing(g, 0.0));
    // Energy at level k from the central time difference; u^{-1} = u^1.
    Field older = st.u(), cur = st.u_prev();
    double e0 = -1.0, drift = 0.0;
    for (int k = 0; k < steps; ++k) {
        const double e = energy(c, cur, (st.u() - older) / (2.0 * dt));
        if (e0 < 0.0) e0 = e;
        drift = std::max(drift, std::abs(e - e0) / e0);
        older = cur;
        cur = st.u();
        st.step();
    }
    CHECK(drift <= 1e-3);

    const Setup s;
    WaveOptions r;
    r.boundary = BoundaryCondition::reflecting;
    r.recordEnergy = true;
    const Phantom f = make_phantom(s.region, {{Point(0.2, -0.1), 0.4, 1.0, 3}});
    const auto run = simulate(s.speed, f, 1.0, s.full, r).first;
    CHECK(int(run.energyHistory.size()) == run.steps);
    CHECK(energy(run, s.speed) > 0.0);
}

TEST_CASE("sponge absorbs outgoing energy") {
    const Setup s;
    WaveOptions o;
    o.recordEnergy = true;
    const Phantom f = make_phantom(s.region, {{Point(0.0, 0.0), 0.3, 1.0, 3}});
    const auto run = simulate(s.speed, f, 6.0, s.full, o).first;
    CHECK(run.energyHistory.back() < 1e-2 * run.energyHistory.front());
}

TEST_CASE("finite propagation speed") {
    const GridSpec g = GridSpec::square(-2.0, 2.0, 1024);
    const SpeedField c = SpeedField::layered(g, 1.0, 1.3, 0.1, 0.3);
    const Region R = make_region(g, Disk{Point::Zero(), 1.0});
    const Phantom f = make_phantom(R, {{Point(0.2, -0.1), 0.3, 1.0, 3}});
    WaveOptions o;
    o.boundary = BoundaryCondition::reflecting;
    o.snapshotTimes = {0.3, 0.6, 0.9};
    const auto run = simulate(c, f, 1.0, make_patch(R, {{0.0, 1.0}}), o).first;
    REQUIRE(run.snapshots.size() == 3);
    std::vector<Point> support;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            if (f.values()(i, j) != 0.0) support.push_back(g.node(i, j));
    const DistanceField d = solve_eikonal(c, support);
    for (const Snapshot& snap : run.snapshots) {
        CHECK(std::abs(snap.time - o.snapshotTimes[&snap - run.snapshots.data()]) <= run.dt / 2);
        const Mask outside = d.values() > snap.time;
        CHECK(energy(c, snap.u, snap.ut, &outside) / energy(c, snap.u, snap.ut) <= 1e-6);
    }
}

TEST_CASE("linearity") {
    const Setup s;
    const Phantom a = make_phantom(s.region, {{Point(0.3, 0.1), 0.3, 1.0, 3}});
    const Phantom b = make_phantom(s.region, {{Point(-0.2, -0.3), 0.25, -0.6, 2}});
    const Phantom ab = make_phantom(s.region, {{Point(0.3, 0.1), 0.3, 1.0, 3}, {Point(-0.2, -0.3), 0.25, -0.6, 2}});
    const Trace ta = simulate(s.speed, a, 1.5, s.arc).second;
    const Trace tb = simulate(s.speed, b, 1.5, s.arc).second;
    const Trace tab = simulate(s.speed, ab, 1.5, s.arc).second;
    CHECK((tab.values - ta.values - tb.values).cwiseAbs().maxCoeff() <= 1e-12 * tab.values.cwiseAbs().maxCoeff());
}

TEST_CASE("leapfrog runs backwards") {
    const Setup s;
    WaveOptions o;
    o.boundary = BoundaryCondition::reflecting;
    const Phantom f = make_phantom(s.region, {{Point(0.1, 0.2), 0.4, 1.0, 3}});
    const double dt = stable_time_step(s.speed, 1.0, 0.9);
    WaveStepper fwd(s.speed, dt, o);
    fwd.start(f.values());
    for (int k = 1; k < 40; ++k) fwd.step();
    WaveStepper back(s.speed, dt, o);
    back.set_state(fwd.u_prev(), fwd.u());
    for (int k = 0; k < 39; ++k) back.step();
    // Back at level 0 after 39 reversed steps from level 39/40.
    CHECK((back.u() - f.values()).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("worker count does not change results") {
    const Setup s;
    const Phantom f = make_phantom(s.region, {{Point(0.1, 0.2), 0.4, 1.0, 3}});
    WaveOptions one, three;
    one.workers = 1;
    three.workers = 3;
    const auto a = simulate(s.speed, f, 1.0, s.arc, one);
    const auto b = simulate(s.speed, f, 1.0, s.arc, three);
    CHECK((a.first.u == b.first.u).all());
    CHECK(a.second.values == b.second.values);
}

TEST_CASE("blow-up is reported with the step") {
    const Setup s;
    const double dt = stable_time_step(s.speed, 1.0, 0.9);
    WaveStepper st(s.speed, dt, WaveOptions{});
    Field u = Field::Zero(s.grid.nx(), s.grid.ny());
    u(60, 60) = NAN;
    st.set_state(u, Field::Zero(s.grid.nx(), s.grid.ny()), 7);
    try {
        st.step();
        FAIL("no blow-up detected");
    } catch (const BlowUpError& e) {
        CHECK(e.step() == 8);
    }
}

TEST_CASE("exterior problem") {
    Setup s;
    s.grid = GridSpec::square(-2.0, 2.0, 512);
    s.speed = SpeedField::layered(s.grid, 1.0, 1.3, 0.1, 0.3);
    s.region = make_region(s.grid, Disk{Point::Zero(), 1.0});
    s.full = make_patch(s.region, {{0.0, 1.0}});
    s.arc = make_patch(s.region, {{0.0, 0.75}});
    const double T = 1.2;
    const Phantom f = make_phantom(s.region, {{Point(0.3, -0.2), 0.4, 1.0, 3}, {Point(-0.4, 0.3), 0.3, -0.7, 3}});
    WaveOptions o;
    o.boundary = BoundaryCondition::reflecting;
    const auto [run, trace] = simulate(s.speed, f, T, s.full, o);

    const Trace zero(s.full, trace.dt, 0.0, Eigen::MatrixXd::Zero(trace.receivers(), trace.samples()));
    const WaveRun z = simulate_exterior(s.speed, s.region, zero, T, o);
    CHECK((z.u == 0.0).all());

    // Feeding back the forward boundary values reproduces the exterior field.
    const WaveRun v = simulate_exterior(s.speed, s.region, trace, T, o);
    const Mask ext = !s.region.inside() && !dirichlet_nodes(s.region);
    const double scale = ext.select(run.u.abs(), 0.0).maxCoeff();
    const double diff = ext.select((v.u - run.u).abs(), 0.0).maxCoeff();
    CHECK(scale > 0.0);
    CHECK(diff <= 5e-2 * scale);

    CHECK_THROWS_AS(simulate_exterior(s.speed, s.region, Trace(s.arc, trace.dt, 0.0, Eigen::MatrixXd::Zero(
                                                                                              s.arc.samples().size(),
                                                                                              trace.samples())),
                                      T, o),
                    std::invalid_argument);
}

TEST_CASE("even extension") {
    const Setup s;
    Eigen::MatrixXd v(1, 3);
    v << 1.0, 2.0, 3.0;
    const BoundaryPatch one = make_patch(s.region, {{0.0, 1.0 / double(s.region.boundary().size()) * 0.5}});
    REQUIRE(one.samples().size() == 1);
    const Trace e = even_extension(Trace(one, 0.1, 0.0, v));
    REQUIRE(e.samples() == 5);
    Eigen::RowVectorXd want(5);
    want << 3.0, 2.0, 1.0, 2.0, 3.0;
    CHECK(e.values.row(0) == want);
    CHECK(e.t0 == doctest::Approx(-0.2));

    const Trace z = even_extension(Trace(s.arc, 0.1, 0.0, Eigen::MatrixXd::Zero(s.arc.samples().size(), 4)));
    CHECK(z.samples() == 7);
    CHECK((z.values.array() == 0.0).all());
}

TEST_CASE("trace files") {
    const Setup s;
    const Phantom f = make_phantom(s.region, {{Point(0.1, 0.2), 0.3, 1.0, 3}});
    const Trace t = simulate(s.speed, f, 0.5, s.arc).second;
    const fs::path dir = fs::temp_directory_path() / "tat_test_wave";
    fs::remove_all(dir);
    write_trace_csv(dir / "trace.csv", t);
    std::ifstream in(dir / "trace.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("time,s", 0) == 0);
    CHECK(std::count(header.begin(), header.end(), ',') == t.receivers());
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == t.samples());

    write_trace(dir / "trace", t);
    const Trace back = read_trace(dir / "trace", s.region);
    CHECK(back.values == t.values);
    CHECK(back.dt == t.dt);
    CHECK(back.patch.samples() == t.patch.samples());
    fs::remove_all(dir);
}
