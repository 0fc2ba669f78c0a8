#include "tat/region.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tat {
namespace {

constexpr double kPi = std::numbers::pi;

// Nearest point on an ellipse with semi-axes e0 >= e1 to a first-quadrant
// point y, by bisection on the Lagrange multiplier (Eberly).
double ellipse_root(double r0, double z0, double z1, double g) {
    const double n0 = r0 * z0;
    double s0 = z1 - 1.0;
    double s1 = g < 0.0 ? 0.0 : std::hypot(n0, z1) - 1.0;
    double s = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        s = 0.5 * (s0 + s1);
        if (s == s0 || s == s1) break;
        const double ratio0 = n0 / (s + r0);
        const double ratio1 = z1 / (s + 1.0);
        g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if (g > 0.0)
            s0 = s;
        else if (g < 0.0)
            s1 = s;
        else
            break;
    }
    return s;
}

Point ellipse_closest_first_quadrant(double e0, double e1, double y0, double y1) {
    if (y1 > 0.0) {
        if (y0 > 0.0) {
            const double z0 = y0 / e0;
            const double z1 = y1 / e1;
            const double g = z0 * z0 + z1 * z1 - 1.0;
            if (g == 0.0) return {y0, y1};
            const double r0 = (e0 / e1) * (e0 / e1);
            const double sbar = ellipse_root(r0, z0, z1, g);
            return {r0 * y0 / (sbar + r0), y1 / (sbar + 1.0)};
        }
        return {0.0, e1};
    }
    const double numer0 = e0 * y0;
    const double denom0 = e0 * e0 - e1 * e1;
    if (numer0 < denom0) {
        const double xde0 = numer0 / denom0;
        return {e0 * xde0, e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0))};
    }
    return {e0, 0.0};
}

Point ellipse_closest(const Ellipse& e, const Point& p) {
    Point y = p - e.center;
    const bool swap = e.a < e.b;
    const double e0 = swap ? e.b : e.a;
    const double e1 = swap ? e.a : e.b;
    if (swap) std::swap(y.x(), y.y());
    const double sx = y.x() < 0.0 ? -1.0 : 1.0;
    const double sy = y.y() < 0.0 ? -1.0 : 1.0;
    Point q = ellipse_closest_first_quadrant(e0, e1, std::abs(y.x()), std::abs(y.y()));
    q.x() *= sx;
    q.y() *= sy;
    if (swap) std::swap(q.x(), q.y());
    return q + e.center;
}

bool ellipse_inside(const Ellipse& e, const Point& p) {
    const Point y = p - e.center;
    return (y.x() / e.a) * (y.x() / e.a) + (y.y() / e.b) * (y.y() / e.b) < 1.0;
}

Eigen::Vector2d outward_normal(const Point& from, const Point& to) {
    const Eigen::Vector2d d = (to - from).normalized();
    return {d.y(), -d.x()};
}

struct SegmentHit {
    Point point;
    double distance = 0.0;
    int edge = 0;
};

SegmentHit closest_on_polygon(const std::vector<Point>& v, const Point& p) {
    SegmentHit best;
    best.distance = std::numeric_limits<double>::infinity();
    const int n = int(v.size());
    for (int k = 0; k < n; ++k) {
        const Point& a = v[k];
        const Point& b = v[(k + 1) % n];
        const Eigen::Vector2d ab = b - a;
        const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
        const Point q = a + t * ab;
        const double d = (p - q).norm();
        if (d < best.distance) best = {q, d, k};
    }
    return best;
}

bool polygon_inside(const std::vector<Point>& v, const Point& p) {
    const int n = int(v.size());
    for (int k = 0; k < n; ++k) {
        const Eigen::Vector2d e = v[(k + 1) % n] - v[k];
        const Eigen::Vector2d w = p - v[k];
        if (e.x() * w.y() - e.y() * w.x() < 0.0) return false;
    }
    return true;
}

RoundedPolygon normalized_polygon(RoundedPolygon poly) {
    const int n = int(poly.vertices.size());
    if (n < 3) throw std::invalid_argument("rounded polygon needs at least 3 vertices");
    if (!(poly.cornerRadius > 0.0)) throw std::invalid_argument("rounded polygon needs a positive corner radius");
    double area = 0.0;
    for (int k = 0; k < n; ++k) {
        const Point& a = poly.vertices[k];
        const Point& b = poly.vertices[(k + 1) % n];
        area += a.x() * b.y() - b.x() * a.y();
    }
    if (std::abs(area) < 1e-14) throw std::invalid_argument("rounded polygon core is degenerate");
    if (area < 0.0) std::reverse(poly.vertices.begin(), poly.vertices.end());
    for (int k = 0; k < n; ++k) {
        const Eigen::Vector2d e0 = poly.vertices[(k + 1) % n] - poly.vertices[k];
        const Eigen::Vector2d e1 = poly.vertices[(k + 2) % n] - poly.vertices[(k + 1) % n];
        if (e0.x() * e1.y() - e0.y() * e1.x() < -1e-12)
            throw std::invalid_argument("rounded polygon core must be convex");
        if (e0.norm() < 1e-14) throw std::invalid_argument("rounded polygon has repeated vertices");
    }
    return poly;
}

struct Extent {
    Point lo, hi;
};

Extent shape_extent(const Shape& shape) {
    return std::visit(
        [](const auto& s) -> Extent {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Disk>) {
                return {s.center.array() - s.radius, s.center.array() + s.radius};
            } else if constexpr (std::is_same_v<T, Ellipse>) {
                return {s.center - Point(s.a, s.b), s.center + Point(s.a, s.b)};
            } else {
                Extent e{s.vertices.front(), s.vertices.front()};
                for (const Point& v : s.vertices) {
                    e.lo = e.lo.cwiseMin(v);
                    e.hi = e.hi.cwiseMax(v);
                }
                e.lo.array() -= s.cornerRadius;
                e.hi.array() += s.cornerRadius;
                return e;
            }
        },
        shape);
}

std::vector<BoundaryNode> sample_disk(const Disk& d, double h, double& perimeter) {
    perimeter = 2.0 * kPi * d.radius;
    const int n = std::max(8, int(std::ceil(perimeter / h)));
    std::vector<BoundaryNode> out(n);
    for (int k = 0; k < n; ++k) {
        const double theta = 2.0 * kPi * k / n;
        const Eigen::Vector2d u(std::cos(theta), std::sin(theta));
        out[k] = {d.center + d.radius * u, u, d.radius * theta, double(k) / n};
    }
    return out;
}

std::vector<BoundaryNode> sample_ellipse(const Ellipse& e, double h, double& perimeter) {
    // Cumulative arc length on a fine angle table, inverted by interpolation.
    const int table = 1 << 15;
    std::vector<double> s(table + 1, 0.0);
    auto speed = [&](double t) { return std::hypot(e.a * std::sin(t), e.b * std::cos(t)); };
    for (int k = 0; k < table; ++k) {
        const double t0 = 2.0 * kPi * k / table;
        const double dt = 2.0 * kPi / table;
        s[k + 1] = s[k] + dt / 6.0 * (speed(t0) + 4.0 * speed(t0 + 0.5 * dt) + speed(t0 + dt));
    }
    perimeter = s[table];
    const int n = std::max(8, int(std::ceil(perimeter / h)));
    std::vector<BoundaryNode> out(n);
    int cursor = 0;
    for (int k = 0; k < n; ++k) {
        const double target = perimeter * k / n;
        while (cursor < table - 1 && s[cursor + 1] < target) ++cursor;
        const double frac = (target - s[cursor]) / (s[cursor + 1] - s[cursor]);
        const double t = 2.0 * kPi * (cursor + frac) / table;
        const Point p = e.center + Point(e.a * std::cos(t), e.b * std::sin(t));
        const Eigen::Vector2d n2 =
            Eigen::Vector2d(std::cos(t) / e.a, std::sin(t) / e.b).normalized();
        out[k] = {p, n2, target, double(k) / n};
    }
    return out;
}

std::vector<BoundaryNode> sample_rounded_polygon(const RoundedPolygon& poly, double h, double& perimeter) {
    const auto& v = poly.vertices;
    const int m = int(v.size());
    const double r = poly.cornerRadius;
    // Piece k: offset edge k, then the arc at vertex k + 1.
    std::vector<double> edgeLen(m), turn(m);
    perimeter = 0.0;
    for (int k = 0; k < m; ++k) {
        edgeLen[k] = (v[(k + 1) % m] - v[k]).norm();
        const Eigen::Vector2d n0 = outward_normal(v[k], v[(k + 1) % m]);
        const Eigen::Vector2d n1 = outward_normal(v[(k + 1) % m], v[(k + 2) % m]);
        turn[k] = std::atan2(n0.x() * n1.y() - n0.y() * n1.x(), n0.dot(n1));
        perimeter += edgeLen[k] + r * turn[k];
    }
    const int n = std::max(8, int(std::ceil(perimeter / h)));
    std::vector<BoundaryNode> out(n);
    for (int k = 0; k < n; ++k) {
        double s = perimeter * k / n;
        const double arc = s;
        int piece = 0;
        while (piece < m - 1 && s >= edgeLen[piece] + r * turn[piece]) {
            s -= edgeLen[piece] + r * turn[piece];
            ++piece;
        }
        const Point& a = v[piece];
        const Point& b = v[(piece + 1) % m];
        const Eigen::Vector2d n0 = outward_normal(a, b);
        BoundaryNode node;
        if (s < edgeLen[piece]) {
            node.point = a + (b - a) * (s / edgeLen[piece]) + r * n0;
            node.normal = n0;
        } else {
            const double angle = std::min((s - edgeLen[piece]) / r, turn[piece]);
            const Eigen::Vector2d u = Eigen::Rotation2Dd(angle) * n0;
            node.point = b + r * u;
            node.normal = u;
        }
        node.arcLength = arc;
        node.param = double(k) / n;
        out[k] = node;
    }
    return out;
}

}  // namespace

double signed_distance(const Shape& shape, const Point& p) {
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Disk>) {
                return (p - s.center).norm() - s.radius;
            } else if constexpr (std::is_same_v<T, Ellipse>) {
                const double d = (p - ellipse_closest(s, p)).norm();
                return ellipse_inside(s, p) ? -d : d;
            } else {
                const SegmentHit hit = closest_on_polygon(s.vertices, p);
                const double core = polygon_inside(s.vertices, p) ? -hit.distance : hit.distance;
                return core - s.cornerRadius;
            }
        },
        shape);
}

Point closest_boundary_point(const Shape& shape, const Point& p) {
    return std::visit(
        [&](const auto& s) -> Point {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Disk>) {
                Eigen::Vector2d u = p - s.center;
                const double len = u.norm();
                u = len > 0.0 ? Eigen::Vector2d(u / len) : Eigen::Vector2d::UnitX();
                return s.center + s.radius * u;
            } else if constexpr (std::is_same_v<T, Ellipse>) {
                return ellipse_closest(s, p);
            } else {
                const SegmentHit hit = closest_on_polygon(s.vertices, p);
                const int m = int(s.vertices.size());
                Eigen::Vector2d u;
                if (!polygon_inside(s.vertices, p) && hit.distance > 1e-14)
                    u = (p - hit.point) / hit.distance;
                else
                    u = outward_normal(s.vertices[hit.edge], s.vertices[(hit.edge + 1) % m]);
                return hit.point + s.cornerRadius * u;
            }
        },
        shape);
}

Region::Region(const GridSpec& grid, Shape shape) {
    grid.validate();
    if (auto* poly = std::get_if<RoundedPolygon>(&shape)) *poly = normalized_polygon(*poly);
    if (auto* d = std::get_if<Disk>(&shape); d && !(d->radius > 0.0))
        throw std::invalid_argument("disk radius must be positive");
    if (auto* e = std::get_if<Ellipse>(&shape); e && !(e->a > 0.0 && e->b > 0.0))
        throw std::invalid_argument("ellipse semi-axes must be positive");

    const double h = grid.h();
    const Extent ext = shape_extent(shape);
    const double margin = 4.0 * h;
    const Point lo = grid.origin;
    const Point hi = grid.upper();
    if (ext.lo.x() - lo.x() < margin || ext.lo.y() - lo.y() < margin || hi.x() - ext.hi.x() < margin ||
        hi.y() - ext.hi.y() < margin)
        throw std::invalid_argument("region touches the grid boundary (needs a margin of 4h = " +
                                    std::to_string(margin) + ")");

    auto data = std::make_shared<Data>();
    data->grid = grid;
    data->shape = shape;
    data->phi = grid.make_array<double>();
    for (int j = 0; j < grid.ny(); ++j)
        for (int i = 0; i < grid.nx(); ++i) data->phi(i, j) = tat::signed_distance(shape, grid.node(i, j));
    data->inside = data->phi < 0.0;

    double perimeter = 0.0;
    data->boundary = std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Disk>)
                return sample_disk(s, h, perimeter);
            else if constexpr (std::is_same_v<T, Ellipse>)
                return sample_ellipse(s, h, perimeter);
            else
                return sample_rounded_polygon(s, h, perimeter);
        },
        shape);
    data->perimeter = perimeter;
    data_ = std::move(data);
}

double Region::boundary_position(const Point& p) const {
    const auto& nodes = data_->boundary;
    const int n = int(nodes.size());
    const Point b = closest_boundary_point(data_->shape, p);
    int best = 0;
    double bestDist = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
        const double d = (nodes[k].point - b).squaredNorm();
        if (d < bestDist) {
            bestDist = d;
            best = k;
        }
    }
    // Project onto the chords to either side and keep the closer one.
    auto project = [&](int from) {
        const Point& a = nodes[from].point;
        const Point& c = nodes[(from + 1) % n].point;
        const Eigen::Vector2d ac = c - a;
        const double t = std::clamp((b - a).dot(ac) / ac.squaredNorm(), 0.0, 1.0);
        return std::pair{t, (a + t * ac - b).squaredNorm()};
    };
    const int prev = (best + n - 1) % n;
    const auto [tf, df] = project(best);
    const auto [tb, db] = project(prev);
    if (df <= db) return best + tf;
    const double pos = prev + tb;
    return pos >= n ? pos - n : pos;
}

Region make_region(const GridSpec& grid, const Shape& shape) { return Region(grid, shape); }

}  // namespace tat
