#ifndef TAT_PATCH_HPP
#define TAT_PATCH_HPP

#include <vector>

#include "tat/region.hpp"

namespace tat {

/// Closed interval of the normalized boundary parameter, 0 <= lo <= hi <= 1.
struct Arc {
    double lo = 0.0;
    double hi = 1.0;
};

/// Detector patch Gamma: the boundary samples whose parameter falls in one of
/// the arcs. The remaining samples form the unmeasured part of the boundary.
class BoundaryPatch {
public:
    BoundaryPatch(Region region, std::vector<Arc> arcs);

    const Region& region() const { return region_; }
    /// Merged, sorted arcs.
    const std::vector<Arc>& arcs() const { return arcs_; }
    /// Indices into region().boundary().
    const std::vector<int>& samples() const { return samples_; }
    const std::vector<int>& complement_samples() const { return complement_; }

    std::vector<Point> sample_points() const;
    std::vector<Point> complement_points() const;

    bool empty() const { return samples_.empty(); }
    bool is_full() const { return complement_.empty(); }
    bool contains_sample(int boundaryIndex) const { return membership_[boundaryIndex]; }

private:
    Region region_;
    std::vector<Arc> arcs_;
    std::vector<int> samples_;
    std::vector<int> complement_;
    std::vector<bool> membership_;
};

/// Throws std::invalid_argument for intervals outside [0, 1] or with lo > hi.
BoundaryPatch make_patch(const Region& region, std::vector<Arc> arcs);

}  // namespace tat

#endif  // TAT_PATCH_HPP
