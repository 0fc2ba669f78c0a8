#include "tat/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "tat/parallel.hpp"

namespace tat {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_region(const Region& region, const BoundaryPatch& patch, const SpeedField& speed) {
    if (!patch.region().same_as(region))
        throw std::invalid_argument("patch belongs to a different region");
    if (speed.grid() != region.grid()) throw std::invalid_argument("speed and region use different grids");
}

struct MarginBuffer {
    Field margin;
    LabelField witness;
};

// Keeps the strictly larger candidate, so the lowest sample index wins ties
// when candidates arrive in index order.
void absorb(MarginBuffer& acc, const MarginBuffer& next, const Mask& domain) {
    for (Eigen::Index k = 0; k < acc.margin.size(); ++k) {
        if (!domain(k) || next.witness(k) < 0) continue;
        if (acc.witness(k) < 0 || next.margin(k) > acc.margin(k)) {
            acc.margin(k) = next.margin(k);
            acc.witness(k) = next.witness(k);
        }
    }
}

MarginBuffer subsample_margin(const BoundaryPatch& patch, const SpeedField& speed, const std::vector<double>& w,
                              int k, const Mask& domain) {
    const GridSpec& grid = speed.grid();
    const auto points = patch.sample_points();
    const auto chosen = subsample_indices(int(points.size()), k);
    const int workers = std::min<int>(worker_count(), int(chosen.size()));
    std::vector<MarginBuffer> partial(workers, {grid.make_array(-kInf), grid.make_array(-1)});
    parallel_chunks(
        int(chosen.size()),
        [&](int lo, int hi, int worker) {
            MarginBuffer& acc = partial[worker];
            for (int c = lo; c < hi; ++c) {
                const int s = chosen[c];
                const Point src[1] = {points[s]};
                const DistanceField d = solve_eikonal(speed, src);
                for (Eigen::Index n = 0; n < acc.margin.size(); ++n) {
                    if (!domain(n)) continue;
                    const double v = w[s] - d.values()(n);
                    if (acc.witness(n) < 0 || v > acc.margin(n)) {
                        acc.margin(n) = v;
                        acc.witness(n) = s;
                    }
                }
            }
        },
        workers);
    MarginBuffer out{grid.make_array(-kInf), grid.make_array(-1)};
    for (const auto& p : partial) absorb(out, p, domain);
    return out;
}

}  // namespace

const char* to_string(CoverageStrategy s) {
    return s == CoverageStrategy::offset_eikonal ? "offset-eikonal" : "subsample";
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::satisfied: return "satisfied";
        case Verdict::violated: return "violated";
        default: return "indeterminate";
    }
}

std::vector<int> subsample_indices(int n, int k) {
    if (k < 1) throw std::invalid_argument("subsample count must be at least 1");
    k = std::min(k, n);
    std::vector<int> idx(k);
    for (int j = 0; j < k; ++j) idx[j] = int(std::int64_t(j) * n / k);
    return idx;
}

std::vector<double> exterior_clearance(const Region& region, const BoundaryPatch& patch, const SpeedField& speed) {
    require_same_region(region, patch, speed);
    if (patch.empty()) return {};
    std::vector<double> w(patch.samples().size(), kInf);
    if (patch.is_full()) return w;
    const auto complement = patch.complement_points();
    const DistanceField d = solve_eikonal(speed, complement, &region);
    const auto points = patch.sample_points();
    for (std::size_t s = 0; s < points.size(); ++s) w[s] = d.at(points[s]).value_or(kInf);
    return w;
}

double min_time(const Region& region, const BoundaryPatch& patch, const SpeedField& speed) {
    require_same_region(region, patch, speed);
    if (patch.empty()) throw std::invalid_argument("minimal time needs a nonempty detector patch");
    const DistanceField d = solve_eikonal(speed, patch.sample_points());
    const Mask& inside = region.inside();
    double t = 0.0;
    for (Eigen::Index n = 0; n < inside.size(); ++n)
        if (inside(n)) t = std::max(t, d.values()(n));
    return t;
}

CoverageReport check_property_p(const Region& region, const BoundaryPatch& patch, const SpeedField& speed,
                                const CoverageOptions& options) {
    require_same_region(region, patch, speed);
    const GridSpec& grid = region.grid();
    const double h = grid.h();

    CoverageReport r;
    r.grid = grid;
    r.domain = region.inside();
    r.epsilon = options.epsilon.value_or(3.0 * h);
    r.requested = r.used = options.strategy;
    r.margin = Field::Zero(grid.nx(), grid.ny());
    r.witness = grid.make_array(-1);

    if (patch.empty()) {
        r.marginKind = MarginKind::minus_infinity;
        r.margin = r.domain.select(Field::Constant(grid.nx(), grid.ny(), -kInf), 0.0);
        r.minMargin = -kInf;
        r.tMin = kInf;
        r.verdict = Verdict::violated;
        r.satisfied = false;
        return r;
    }

    r.clearance = exterior_clearance(region, patch, speed);
    r.tMin = min_time(region, patch, speed);

    const auto inf = std::find(r.clearance.begin(), r.clearance.end(), kInf);
    if (inf != r.clearance.end()) {
        // Any p with infinite clearance witnesses every x.
        r.marginKind = MarginKind::plus_infinity;
        r.margin = r.domain.select(Field::Constant(grid.nx(), grid.ny(), kInf), 0.0);
        r.witness = r.domain.select(LabelField::Constant(grid.nx(), grid.ny(), int(inf - r.clearance.begin())), -1);
        r.minMargin = kInf;
        r.verdict = Verdict::satisfied;
        r.satisfied = true;
        return r;
    }

    const int k = std::min<int>(options.subsampleCount, int(patch.samples().size()));
    MarginBuffer result;
    bool done = false;
    if (options.strategy == CoverageStrategy::offset_eikonal) {
        const auto points = patch.sample_points();
        std::vector<Seed> seeds(points.size());
        for (std::size_t s = 0; s < points.size(); ++s) seeds[s] = {points[s], -r.clearance[s]};
        const MarchResult m = march_from_seeds(speed, seeds);
        for (std::size_t s = 0; s < points.size(); ++s)
            r.compatibilityDefect =
                std::max(r.compatibilityDefect, -r.clearance[s] - sample_bilinear(grid, m.values, points[s]));
        if (!options.fallback || r.compatibilityDefect <= options.compatibilityTolerance.value_or(2.0 * h)) {
            result.margin = r.domain.select(-m.values, 0.0);
            result.witness = r.domain.select(m.witness, -1);
            done = true;
        }
    }
    if (!done) {
        r.used = CoverageStrategy::subsample;
        r.subsampleCount = k;
        result = subsample_margin(patch, speed, r.clearance, k, r.domain);
        result.margin = r.domain.select(result.margin, 0.0);
    }
    r.margin = std::move(result.margin);
    r.witness = std::move(result.witness);

    r.minMargin = kInf;
    for (int j = 0; j < grid.ny(); ++j)
        for (int i = 0; i < grid.nx(); ++i)
            if (r.domain(i, j) && r.margin(i, j) < r.minMargin) {
                r.minMargin = r.margin(i, j);
                r.minLocation = Index2(i, j);
            }
    if (r.minMargin > r.epsilon)
        r.verdict = Verdict::satisfied;
    else if (r.minMargin < -r.epsilon)
        r.verdict = Verdict::violated;
    else
        r.verdict = Verdict::indeterminate;
    r.satisfied = r.verdict == Verdict::satisfied;
    return r;
}

double witness_clearance(const CoverageReport& report, int i, int j) {
    const int s = report.witness(i, j);
    if (s < 0) throw std::out_of_range("node has no witness");
    return report.clearance[s];
}

}  // namespace tat
