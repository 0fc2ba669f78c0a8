#ifndef TAT_REGION_HPP
#define TAT_REGION_HPP

#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "tat/grid.hpp"

namespace tat {

struct Disk {
    Point center = Point::Zero();
    double radius = 1.0;
};

/// Axis-aligned ellipse with semi-axes a (along x1) and b (along x2).
struct Ellipse {
    Point center = Point::Zero();
    double a = 1.0;
    double b = 1.0;
};

/// Convex core polygon dilated by `cornerRadius`: straight edges stay straight
/// and every vertex becomes a circular arc.
struct RoundedPolygon {
    std::vector<Point> vertices;
    double cornerRadius = 0.1;
};

using Shape = std::variant<Disk, Ellipse, RoundedPolygon>;

/// Exact signed distance to the shape boundary, negative inside.
double signed_distance(const Shape& shape, const Point& p);

/// Nearest point on the shape boundary.
Point closest_boundary_point(const Shape& shape, const Point& p);

/// A boundary sample. `arcLength` runs counter-clockwise from the shape's
/// start point and `param` = arcLength / perimeter lies in [0, 1).
struct BoundaryNode {
    Point point;
    Eigen::Vector2d normal;
    double arcLength = 0.0;
    double param = 0.0;
};

/// The domain Omega = {phi < 0} together with its sampled boundary.
class Region {
public:
    Region(const GridSpec& grid, Shape shape);

    const GridSpec& grid() const { return data_->grid; }
    const Shape& shape() const { return data_->shape; }
    const Field& phi() const { return data_->phi; }
    double phi(int i, int j) const { return data_->phi(i, j); }
    std::span<const BoundaryNode> boundary() const { return data_->boundary; }
    double perimeter() const { return data_->perimeter; }

    /// Nodes with phi < 0.
    const Mask& inside() const { return data_->inside; }

    double signed_distance(const Point& p) const { return tat::signed_distance(data_->shape, p); }

    /// Fractional index into boundary() of the projection of p onto the
    /// boundary; the integer part is a sample index, the remainder the
    /// position towards the next sample (cyclically).
    double boundary_position(const Point& p) const;

    bool same_as(const Region& other) const { return data_ == other.data_; }

private:
    struct Data {
        GridSpec grid;
        Shape shape;
        Field phi;
        Mask inside;
        std::vector<BoundaryNode> boundary;
        double perimeter = 0.0;
    };
    std::shared_ptr<const Data> data_;
};

/// Builds the region, rejecting shapes that come within 4h of the grid edge.
Region make_region(const GridSpec& grid, const Shape& shape);

}  // namespace tat

#endif  // TAT_REGION_HPP
