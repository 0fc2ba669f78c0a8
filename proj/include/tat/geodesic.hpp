#ifndef TAT_GEODESIC_HPP
#define TAT_GEODESIC_HPP

#include <optional>
#include <span>
#include <vector>

#include "tat/region.hpp"
#include "tat/speed.hpp"

namespace tat {

/// Polyline in physical coordinates.
struct Path {
    std::vector<Point> points;
    bool closed = false;
};

/// Length of a path in the metric c^-2 delta, i.e. its travel time, by the
/// composite midpoint rule. Throws for fewer than two points or points
/// outside the grid.
double curve_length(const Path& path, const SpeedField& speed);

enum class DistanceMode { free_space, exterior };

/// A seed of a distance computation: travel time starts at `offset` at `point`.
struct Seed {
    Point point;
    double offset = 0.0;
};

/// Travel time to a source set. Nodes that no admissible curve reaches (the
/// obstacle interior in exterior mode, or cut-off pockets) are flagged in
/// `reachable` and their `values` entry carries no meaning.
class DistanceField {
public:
    DistanceField(GridSpec grid, Field values, Mask reachable, std::vector<Point> sources, DistanceMode mode,
                  std::optional<Region> obstacle, SpeedField speed);

    const GridSpec& grid() const { return grid_; }
    const Field& values() const { return values_; }
    const Mask& reachable() const { return reachable_; }
    const std::vector<Point>& sources() const { return sources_; }
    DistanceMode mode() const { return mode_; }
    const std::optional<Region>& obstacle() const { return obstacle_; }
    const SpeedField& speed() const { return speed_; }

    bool reachable(int i, int j) const { return reachable_(i, j); }
    double operator()(int i, int j) const { return values_(i, j); }

    /// Travel time at an arbitrary point. Uses bilinear interpolation when the
    /// enclosing cell is fully reachable, otherwise the cheapest straight hop
    /// from a reachable node within 2h. Empty if nothing is reachable nearby.
    std::optional<double> at(const Point& p) const;

private:
    GridSpec grid_;
    Field values_;
    Mask reachable_;
    std::vector<Point> sources_;
    DistanceMode mode_;
    std::optional<Region> obstacle_;
    SpeedField speed_;
};

/// First-order Godunov fast marching for |grad d| = 1/c on the 8-neighbour
/// stencil (axis and diagonal triangles). In exterior mode the obstacle's
/// nodes (phi < 0) and diagonals cutting it are excluded from the stencil. Sources strictly
/// inside the obstacle are dropped; throws if none remain or if `sources` is
/// empty.
DistanceField solve_eikonal(const SpeedField& speed, std::span<const Point> sources,
                            const Region* obstacle = nullptr);

/// Shortest paths on the 16-neighbour grid graph, edge weight = length /
/// c(midpoint); obstacle nodes and edges through the obstacle are removed.
DistanceField dijkstra_oracle(const SpeedField& speed, std::span<const Point> sources,
                              const Region* obstacle = nullptr);

/// Raw marching result with per-seed offsets and the index of the seed each
/// node's value descends from (ties go to the lowest index). Values may be
/// negative.
struct MarchResult {
    Field values;
    Mask reachable;
    LabelField witness;
};
MarchResult march_from_seeds(const SpeedField& speed, std::span<const Seed> seeds, const Region* obstacle = nullptr);

struct LipschitzReport {
    double maxViolation = 0.0;  ///< max of |grad d| - 1/c over checked nodes
    Index2 location = Index2::Constant(-1);
    double tolerance = 0.0;
    bool passed = true;
};

/// Central-difference check of |grad d| <= 1/c at interior nodes whose four
/// neighbours are reachable, with 1/c taken as its largest value on the
/// five-point stencil. Passes iff maxViolation <= constant * h.
LipschitzReport lipschitz_check(const DistanceField& dist, const SpeedField& speed, double constant = 2.0);

/// Same check on a bare field and reachability mask.
LipschitzReport lipschitz_check(const GridSpec& grid, const Field& values, const Mask& reachable,
                                const SpeedField& speed, double constant = 2.0);

/// Central-difference gradient of a distance field at node (i, j); empty
/// when a stencil neighbour is unreachable or off-grid.
std::optional<Eigen::Vector2d> distance_gradient(const DistanceField& dist, int i, int j);

}  // namespace tat

#endif  // TAT_GEODESIC_HPP
