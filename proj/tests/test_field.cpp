#include <doctest.h>

#include <cmath>
#include <fstream>

#include "tat/field_io.hpp"
#include "tat/patch.hpp"
#include "tat/phantom.hpp"
#include "tat/speed.hpp"

using namespace tat;

TEST_CASE("grid validation") {
    CHECK_NOTHROW(GridSpec::square(-1.0, 1.0, 8).validate());
    CHECK_THROWS_AS(GridSpec::square(-1.0, 1.0, 4).validate(), std::invalid_argument);
    GridSpec g;
    g.spacing = Eigen::Vector2d(0.1, -0.1);
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);

    const GridSpec s = GridSpec::square(-2.0, 2.0, 256);
    CHECK(s.h() == doctest::Approx(1.0 / 64.0));
    CHECK(s.nx() == 257);
    const Index2 c = s.nearest_node(Point(0.005, -0.01));
    CHECK(c.x() == 128);
    CHECK(c.y() == 127);
}

TEST_CASE("bilinear sampling reproduces linear functions") {
    const GridSpec g = GridSpec::square(0.0, 1.0, 16);
    Field f(g.nx(), g.ny());
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) f(i, j) = 2.0 * g.node(i, j).x() - 3.0 * g.node(i, j).y() + 0.5;
    for (const Point& p : {Point(0.33, 0.71), Point(0.0, 1.0), Point(0.999, 0.001)})
        CHECK(sample_bilinear(g, f, p) == doctest::Approx(2.0 * p.x() - 3.0 * p.y() + 0.5));
    const BilinearStencil st = bilinear_stencil(g, Point(0.33, 0.71));
    CHECK(st.w00 + st.w10 + st.w01 + st.w11 == doctest::Approx(1.0));
}

TEST_CASE("speed fields and their bound") {
    const GridSpec g = GridSpec::square(-1.0, 1.0, 64);
    const SpeedField c = SpeedField::constant(g, 2.0);
    CHECK(c.is_constant());
    CHECK(c.bound() > 2.0);
    CHECK_THROWS_AS(SpeedField::constant(g, 2.0, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(SpeedField::constant(g, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(SpeedField(g, Field::Constant(g.nx(), g.ny(), NAN)), std::invalid_argument);

    const SpeedField l = SpeedField::layered(g, 1.0, 2.0, 0.0, 4.0 * g.h());
    CHECK(l.at(Point(0.3, -0.5)) == doctest::Approx(1.0));
    CHECK(l.at(Point(-0.3, 0.5)) == doctest::Approx(2.0));
    CHECK(l.min() == doctest::Approx(1.0));
    CHECK(l.max() == doctest::Approx(2.0));
}

TEST_CASE("region signed distance and boundary sampling") {
    const GridSpec g = GridSpec::square(-2.0, 2.0, 256);
    const double h = g.h();
    const Region disk = make_region(g, Disk{Point::Zero(), 1.0});
    const Index2 o = g.nearest_node(Point::Zero());
    CHECK(std::abs(disk.phi(o.x(), o.y()) + 1.0) <= h);
    CHECK(std::abs(double(disk.boundary().size()) - 2.0 * M_PI / h) <= 2.0);
    CHECK(disk.perimeter() == doctest::Approx(2.0 * M_PI).epsilon(1e-3));
    for (const auto& b : disk.boundary()) {
        CHECK(std::abs(b.point.norm() - 1.0) < 1e-9);
        CHECK((b.normal - b.point).norm() < 1e-9);
    }

    const Region ell = make_region(g, Ellipse{Point::Zero(), 1.0, 0.5});
    CHECK(std::abs(ell.phi(o.x(), o.y()) + 0.5) <= 2.0 * h);

    CHECK_THROWS_AS(make_region(g, Disk{Point::Zero(), 1.95}), std::invalid_argument);
    CHECK_THROWS_AS(make_region(g, Disk{Point::Zero(), -1.0}), std::invalid_argument);
}

TEST_CASE("rounded polygon distance against a brute-force boundary") {
    const RoundedPolygon poly{{Point(-0.8, -0.6), Point(0.9, -0.5), Point(0.2, 0.9)}, 0.2};
    // The boundary is the set at distance r from the core triangle: sample the
    // core densely and take min distance minus r, with the sign from containment.
    std::vector<Point> core;
    const auto& v = poly.vertices;
    for (std::size_t e = 0; e < v.size(); ++e)
        for (int k = 0; k < 4000; ++k) core.push_back(v[e] + (k / 4000.0) * (v[(e + 1) % v.size()] - v[e]));
    auto inside_core = [&](const Point& p) {
        for (std::size_t e = 0; e < v.size(); ++e) {
            const Eigen::Vector2d a = v[(e + 1) % v.size()] - v[e], b = p - v[e];
            if (a.x() * b.y() - a.y() * b.x() < 0.0) return false;
        }
        return true;
    };
    for (const Point& p : {Point(0.0, 0.0), Point(1.2, 0.4), Point(-1.0, -1.0), Point(0.1, 0.95), Point(0.5, -0.3)}) {
        double dmin = 1e9;
        for (const Point& q : core) dmin = std::min(dmin, (p - q).norm());
        const double expected = inside_core(p) ? -dmin - poly.cornerRadius : dmin - poly.cornerRadius;
        CHECK(signed_distance(poly, p) == doctest::Approx(expected).epsilon(1e-3));
    }
    CHECK_THROWS_AS(make_region(GridSpec::square(-2.0, 2.0, 64),
                                RoundedPolygon{{Point(0, 0), Point(1, 0), Point(0.5, 0.2), Point(0.5, 1)}, 0.1}),
                    std::invalid_argument);
}

TEST_CASE("boundary patches") {
    const GridSpec g = GridSpec::square(-2.0, 2.0, 256);
    const Region R = make_region(g, Disk{Point::Zero(), 1.0});
    const BoundaryPatch full = make_patch(R, {{0.0, 1.0}});
    CHECK(full.complement_samples().empty());
    CHECK(full.is_full());
    const BoundaryPatch none = make_patch(R, {});
    CHECK(none.samples().empty());
    const BoundaryPatch half = make_patch(R, {{0.0, 0.5}});
    CHECK(std::abs(int(half.samples().size()) - int(half.complement_samples().size())) <= 2);
    CHECK(half.samples().size() + half.complement_samples().size() == R.boundary().size());
    for (const Point& p : half.sample_points()) CHECK(p.y() >= -1e-9);
    // Wrapping arc: [0.75, 1] and [0, 0.25] is the right half.
    const BoundaryPatch right = make_patch(R, {{0.75, 1.0}, {0.0, 0.25}});
    for (const Point& p : right.sample_points()) CHECK(p.x() >= -1e-9);
    CHECK_THROWS_AS(make_patch(R, {{0.6, 0.2}}), std::invalid_argument);
}

TEST_CASE("phantoms") {
    const GridSpec g = GridSpec::square(-2.0, 2.0, 256);
    const Region R = make_region(g, Disk{Point::Zero(), 1.0});
    CHECK((make_phantom(R, {}).values() == 0.0).all());

    const Bump b{Point::Zero(), 0.1, 1.0, 3};
    CHECK(b(Point::Zero()) == doctest::Approx(1.0));
    CHECK(b(Point(0.1, 0.0)) == 0.0);
    CHECK(b(Point(0.05, 0.09)) == 0.0);
    const Phantom one = make_phantom(R, {b});
    const Index2 o = g.nearest_node(Point::Zero());
    CHECK(one.values()(o.x(), o.y()) == doctest::Approx(1.0));

    const Bump a{Point(-0.375, 0.0), 0.2, 0.5, 3}, c{Point(0.375, 0.0), 0.2, 2.0, 3};
    const Phantom two = make_phantom(R, {a, c});
    CHECK(two.values().maxCoeff() == doctest::Approx(2.0));
    const Phantom first = make_phantom(R, {a}), second = make_phantom(R, {c});
    CHECK(((first.values() + second.values()) - two.values()).abs().maxCoeff() < 1e-15);

    try {
        make_phantom(R, {a, {Point(0.9, 0.0), 0.2, 1.0, 3}});
        FAIL("protruding bump accepted");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("bump 1") != std::string::npos);
    }
}

TEST_CASE("field files round trip and detect tampering") {
    const fs::path dir = fs::temp_directory_path() / "tat_test_field_io";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const GridSpec g = GridSpec::square(-1.0, 1.0, 16);
    Field f(g.nx(), g.ny());
    for (Eigen::Index n = 0; n < f.size(); ++n) f(n) = std::sin(0.37 * double(n));
    write_field(dir / "f", g, f, "phantom", {{"note", "x"}});
    const FieldFile back = read_field(dir / "f");
    CHECK(back.grid == g);
    CHECK(back.kind == "phantom");
    CHECK((back.values == f).all());
    CHECK(back.meta["note"] == "x");

    {
        std::fstream bin(with_suffix(dir / "f", ".bin"), std::ios::in | std::ios::out | std::ios::binary);
        bin.seekp(40);
        bin.put(char(0x5a));
    }
    CHECK_THROWS(read_field(dir / "f"));
    CHECK_THROWS(read_field(dir / "missing"));
    fs::remove_all(dir);
}
