#include "tat/patch.hpp"

#include <algorithm>
#include <stdexcept>

namespace tat {

BoundaryPatch::BoundaryPatch(Region region, std::vector<Arc> arcs) : region_(std::move(region)) {
    for (const Arc& a : arcs)
        if (!(a.lo >= 0.0 && a.hi <= 1.0 && a.lo <= a.hi))
            throw std::invalid_argument("patch arc [" + std::to_string(a.lo) + ", " + std::to_string(a.hi) +
                                        "] is outside the boundary parameter range [0, 1]");
    std::sort(arcs.begin(), arcs.end(), [](const Arc& x, const Arc& y) { return x.lo < y.lo; });
    for (const Arc& a : arcs) {
        if (!arcs_.empty() && a.lo <= arcs_.back().hi)
            arcs_.back().hi = std::max(arcs_.back().hi, a.hi);
        else
            arcs_.push_back(a);
    }

    const auto nodes = region_.boundary();
    membership_.assign(nodes.size(), false);
    for (int k = 0; k < int(nodes.size()); ++k) {
        const double t = nodes[k].param;
        const bool in = std::any_of(arcs_.begin(), arcs_.end(), [&](const Arc& a) { return t >= a.lo && t <= a.hi; });
        membership_[k] = in;
        (in ? samples_ : complement_).push_back(k);
    }
}

std::vector<Point> BoundaryPatch::sample_points() const {
    std::vector<Point> out;
    out.reserve(samples_.size());
    for (int k : samples_) out.push_back(region_.boundary()[k].point);
    return out;
}

std::vector<Point> BoundaryPatch::complement_points() const {
    std::vector<Point> out;
    out.reserve(complement_.size());
    for (int k : complement_) out.push_back(region_.boundary()[k].point);
    return out;
}

BoundaryPatch make_patch(const Region& region, std::vector<Arc> arcs) { return BoundaryPatch(region, std::move(arcs)); }

}  // namespace tat
