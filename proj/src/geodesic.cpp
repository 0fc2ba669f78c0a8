#include "tat/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace tat {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nodes within this many h of a seed are initialized with the straight-line
// travel time instead of being marched; this removes the point-source
// singularity from the first-order scheme.
constexpr double kSeedRadius = 3.0;

struct HeapEntry {
    double value;
    Eigen::Index index;
    bool operator>(const HeapEntry& other) const {
        return value > other.value || (value == other.value && index > other.index);
    }
};
using MinHeap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>>;

double straight_time(const SpeedField& speed, const Point& a, const Point& b) {
    constexpr int pieces = 4;
    const Eigen::Vector2d step = (b - a) / pieces;
    double t = 0.0;
    for (int k = 0; k < pieces; ++k) t += step.norm() / speed.at(a + (k + 0.5) * step);
    return t;
}

bool segment_clear(const Region* obstacle, const Point& a, const Point& b, double h) {
    if (!obstacle) return true;
    for (double f : {0.25, 0.5, 0.75, 1.0})
        if (obstacle->signed_distance(a + f * (b - a)) < -0.05 * h) return false;
    return true;
}

struct SeedState {
    Field values;
    LabelField witness;
    std::vector<Eigen::Index> seeded;
};

// Straight-line initialization around each seed; ties keep the lowest seed.
SeedState seed_nodes(const SpeedField& speed, std::span<const Seed> seeds, const Mask& blocked,
                     const Region* obstacle) {
    const GridSpec& grid = speed.grid();
    const double h = grid.h();
    SeedState st{grid.make_array(kInf), grid.make_array(-1), {}};
    for (int s = 0; s < int(seeds.size()); ++s) {
        const Point& p = seeds[s].point;
        const Eigen::Vector2d q = grid.to_index(p);
        const int ri = int(std::ceil(kSeedRadius * h / grid.spacing.x()));
        const int rj = int(std::ceil(kSeedRadius * h / grid.spacing.y()));
        const int i0 = std::max(0, int(std::floor(q.x())) - ri), i1 = std::min(grid.dims.x(), int(std::ceil(q.x())) + ri);
        const int j0 = std::max(0, int(std::floor(q.y())) - rj), j1 = std::min(grid.dims.y(), int(std::ceil(q.y())) + rj);
        bool any = false;
        for (int pass = 0; pass < 2 && !any; ++pass) {
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i) {
                    if (blocked(i, j)) continue;
                    const Point x = grid.node(i, j);
                    const double r = (x - p).norm();
                    if (r > kSeedRadius * h) continue;
                    // The second pass only runs when every nearby node is shadowed.
                    if (pass == 0 && !segment_clear(obstacle, p, x, h)) continue;
                    const double t = seeds[s].offset + (r == 0.0 ? 0.0 : straight_time(speed, p, x));
                    any = true;
                    if (t < st.values(i, j)) {
                        if (st.witness(i, j) < 0) st.seeded.push_back(Eigen::Index(i) + Eigen::Index(j) * grid.nx());
                        st.values(i, j) = t;
                        st.witness(i, j) = s;
                    }
                }
        }
    }
    return st;
}

Mask blocked_mask(const GridSpec& grid, const Region* obstacle) {
    if (!obstacle) return Mask::Constant(grid.nx(), grid.ny(), false);
    if (obstacle->grid() != grid) throw std::invalid_argument("obstacle and speed field use different grids");
    return obstacle->inside();
}

std::vector<Seed> valid_seeds(std::span<const Point> sources, const Region* obstacle, const GridSpec& grid,
                              std::vector<Point>& kept) {
    if (sources.empty()) throw std::invalid_argument("distance source set is empty");
    std::vector<Seed> seeds;
    for (const Point& p : sources) {
        if (!grid.contains(p)) throw std::invalid_argument("distance source lies outside the grid");
        if (obstacle && obstacle->signed_distance(p) < -1e-9 * grid.h()) continue;
        seeds.push_back({p, 0.0});
        kept.push_back(p);
    }
    if (seeds.empty()) throw std::invalid_argument("every distance source lies inside the obstacle");
    return seeds;
}

}  // namespace

double curve_length(const Path& path, const SpeedField& speed) {
    const auto& pts = path.points;
    if (pts.size() < 2) throw std::invalid_argument("a path needs at least two points");
    for (const Point& p : pts)
        if (!speed.grid().contains(p)) throw std::invalid_argument("path point lies outside the grid");
    double length = 0.0;
    const std::size_t segments = path.closed ? pts.size() : pts.size() - 1;
    for (std::size_t k = 0; k < segments; ++k) {
        const Point& a = pts[k];
        const Point& b = pts[(k + 1) % pts.size()];
        length += (b - a).norm() / speed.at(0.5 * (a + b));
    }
    return length;
}

DistanceField::DistanceField(GridSpec grid, Field values, Mask reachable, std::vector<Point> sources,
                             DistanceMode mode, std::optional<Region> obstacle, SpeedField speed)
    : grid_(std::move(grid)),
      values_(std::move(values)),
      reachable_(std::move(reachable)),
      sources_(std::move(sources)),
      mode_(mode),
      obstacle_(std::move(obstacle)),
      speed_(std::move(speed)) {}

std::optional<double> DistanceField::at(const Point& p) const {
    const BilinearStencil s = bilinear_stencil(grid_, p);
    if (reachable_(s.i, s.j) && reachable_(s.i + 1, s.j) && reachable_(s.i, s.j + 1) && reachable_(s.i + 1, s.j + 1))
        return s.w00 * values_(s.i, s.j) + s.w10 * values_(s.i + 1, s.j) + s.w01 * values_(s.i, s.j + 1) +
               s.w11 * values_(s.i + 1, s.j + 1);
    const double h = grid_.h();
    const Eigen::Vector2d q = grid_.to_index(p);
    std::optional<double> best;
    const int r = 2;
    for (int j = std::max(0, int(std::floor(q.y())) - r); j <= std::min(grid_.dims.y(), int(std::ceil(q.y())) + r); ++j)
        for (int i = std::max(0, int(std::floor(q.x())) - r); i <= std::min(grid_.dims.x(), int(std::ceil(q.x())) + r);
             ++i) {
            if (!reachable_(i, j)) continue;
            const Point x = grid_.node(i, j);
            const double d = (x - p).norm();
            if (d > 2.0 * h + 1e-12) continue;
            const double t = values_(i, j) + d / speed_.at(0.5 * (x + p));
            if (!best || t < *best) best = t;
        }
    return best;
}

MarchResult march_from_seeds(const SpeedField& speed, std::span<const Seed> seeds, const Region* obstacle) {
    const GridSpec& grid = speed.grid();
    const Mask blocked = blocked_mask(grid, obstacle);
    SeedState st = seed_nodes(speed, seeds, blocked, obstacle);
    Field& T = st.values;
    LabelField& witness = st.witness;

    const int nx = grid.nx();
    const int ny = grid.ny();
    const double hx = grid.spacing.x();
    const double hy = grid.spacing.y();
    Mask accepted = Mask::Constant(nx, ny, false);

    MinHeap heap;
    for (Eigen::Index idx : st.seeded) heap.push({T(idx), idx});

    // Diagonal moves are allowed unless the segment's midpoint lies inside the obstacle.
    auto diagonal_clear = [&](int i, int j, int di, int dj) {
        if (!obstacle) return true;
        return obstacle->signed_distance(0.5 * (grid.node(i, j) + grid.node(i + di, j + dj))) >= 0.0;
    };

    // Candidate from node (i, j) given accepted neighbours on the 8-stencil:
    // one-sided updates along each edge and the upwind update on each of the
    // eight triangles (axis neighbour, adjacent diagonal neighbour).
    auto update = [&](int i, int j) {
        const double slow = 1.0 / speed(i, j);
        double best = T(i, j);
        int label = witness(i, j);
        bool improved = false;
        auto offer = [&](double t, int l) {
            if (t < best || (t == best && improved && l < label)) {
                best = t;
                label = l;
                improved = true;
            }
        };
        auto known = [&](int ii, int jj) {
            return ii >= 0 && jj >= 0 && ii < nx && jj < ny && accepted(ii, jj);
        };
        static constexpr int axes[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (const auto& a : axes) {
            const int ai = i + a[0], aj = j + a[1];
            const double la = a[0] != 0 ? hx : hy;
            const double lb = a[0] != 0 ? hy : hx;
            const bool haveA = known(ai, aj);
            if (haveA) offer(T(ai, aj) + la * slow, witness(ai, aj));
            for (int side : {-1, 1}) {
                const int di = a[0] != 0 ? a[0] : side;
                const int dj = a[0] != 0 ? side : a[1];
                const int bi = i + di, bj = j + dj;
                if (!known(bi, bj) || !diagonal_clear(i, j, di, dj)) continue;
                const double tb = T(bi, bj);
                // Each diagonal belongs to two triangles; offer its edge update once.
                if (a[0] != 0) offer(tb + std::hypot(hx, hy) * slow, witness(bi, bj));
                if (!haveA) continue;
                const double ta = T(ai, aj);
                const double drop = ta - tb;
                if (drop < 0.0) continue;
                const double rad = slow * slow - drop * drop / (lb * lb);
                if (rad < 0.0) continue;
                const double t = ta + la * std::sqrt(rad);
                if ((t - ta) / (la * la) < drop / (lb * lb)) continue;
                offer(t, witness(bi, bj));
            }
        }
        if (improved && best < T(i, j)) {
            T(i, j) = best;
            witness(i, j) = label;
            heap.push({best, Eigen::Index(i) + Eigen::Index(j) * nx});
        }
    };

    while (!heap.empty()) {
        const HeapEntry top = heap.top();
        heap.pop();
        const int i = int(top.index % nx);
        const int j = int(top.index / nx);
        if (accepted(i, j) || top.value > T(i, j)) continue;
        accepted(i, j) = true;
        for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di) {
                const int a = i + di, b = j + dj;
                if ((di == 0 && dj == 0) || a < 0 || b < 0 || a >= nx || b >= ny) continue;
                if (accepted(a, b) || blocked(a, b)) continue;
                update(a, b);
            }
    }

    MarchResult out;
    out.reachable = accepted;
    out.values = accepted.select(T, 0.0);
    out.witness = accepted.select(witness, -1);
    return out;
}

DistanceField solve_eikonal(const SpeedField& speed, std::span<const Point> sources, const Region* obstacle) {
    std::vector<Point> kept;
    const auto seeds = valid_seeds(sources, obstacle, speed.grid(), kept);
    MarchResult m = march_from_seeds(speed, seeds, obstacle);
    return DistanceField(speed.grid(), std::move(m.values), std::move(m.reachable), std::move(kept),
                         obstacle ? DistanceMode::exterior : DistanceMode::free_space,
                         obstacle ? std::optional<Region>(*obstacle) : std::nullopt, speed);
}

DistanceField dijkstra_oracle(const SpeedField& speed, std::span<const Point> sources, const Region* obstacle) {
    const GridSpec& grid = speed.grid();
    std::vector<Point> kept;
    const auto seeds = valid_seeds(sources, obstacle, grid, kept);
    const Mask blocked = blocked_mask(grid, obstacle);
    SeedState st = seed_nodes(speed, seeds, blocked, obstacle);
    Field& D = st.values;

    static constexpr int offsets[16][2] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1}, {1, 1},  {1, -1},
                                           {-1, 1}, {-1, -1}, {1, 2},  {2, 1},  {-1, 2}, {-2, 1},
                                           {1, -2}, {2, -1}, {-1, -2}, {-2, -1}};
    const int nx = grid.nx();
    const int ny = grid.ny();
    Mask done = Mask::Constant(nx, ny, false);
    MinHeap heap;
    for (Eigen::Index idx : st.seeded) heap.push({D(idx), idx});
    while (!heap.empty()) {
        const HeapEntry top = heap.top();
        heap.pop();
        const int i = int(top.index % nx);
        const int j = int(top.index / nx);
        if (done(i, j) || top.value > D(i, j)) continue;
        done(i, j) = true;
        const Point x = grid.node(i, j);
        for (const auto& o : offsets) {
            const int a = i + o[0];
            const int b = j + o[1];
            if (a < 0 || b < 0 || a >= nx || b >= ny || done(a, b) || blocked(a, b)) continue;
            const Point y = grid.node(a, b);
            const Point mid = 0.5 * (x + y);
            if (obstacle && sample_bilinear(grid, obstacle->phi(), mid) < 0.0) continue;
            const double w = (y - x).norm() / speed.at(mid);
            if (D(i, j) + w < D(a, b)) {
                D(a, b) = D(i, j) + w;
                heap.push({D(a, b), Eigen::Index(a) + Eigen::Index(b) * nx});
            }
        }
    }
    Field values = done.select(D, 0.0);
    return DistanceField(grid, std::move(values), std::move(done), std::move(kept),
                         obstacle ? DistanceMode::exterior : DistanceMode::free_space,
                         obstacle ? std::optional<Region>(*obstacle) : std::nullopt, speed);
}

std::optional<Eigen::Vector2d> distance_gradient(const DistanceField& dist, int i, int j) {
    const GridSpec& g = dist.grid();
    if (!g.is_interior(i, j)) return std::nullopt;
    const Mask& r = dist.reachable();
    if (!r(i, j) || !r(i - 1, j) || !r(i + 1, j) || !r(i, j - 1) || !r(i, j + 1)) return std::nullopt;
    const Field& d = dist.values();
    return Eigen::Vector2d((d(i + 1, j) - d(i - 1, j)) / (2.0 * g.spacing.x()),
                           (d(i, j + 1) - d(i, j - 1)) / (2.0 * g.spacing.y()));
}

LipschitzReport lipschitz_check(const GridSpec& grid, const Field& d, const Mask& r, const SpeedField& speed,
                                double constant) {
    if (speed.grid() != grid) throw std::invalid_argument("distance and speed fields use different grids");
    LipschitzReport rep;
    rep.tolerance = constant * grid.h();
    rep.maxViolation = -kInf;
    for (int j = 1; j < grid.dims.y(); ++j)
        for (int i = 1; i < grid.dims.x(); ++i) {
            if (!r(i, j) || !r(i - 1, j) || !r(i + 1, j) || !r(i, j - 1) || !r(i, j + 1)) continue;
            const double gx = (d(i + 1, j) - d(i - 1, j)) / (2.0 * grid.spacing.x());
            const double gy = (d(i, j + 1) - d(i, j - 1)) / (2.0 * grid.spacing.y());
            // The difference quotient spans the stencil, so the bound is the
            // largest slowness on it.
            const double cmin = std::min({speed(i, j), speed(i - 1, j), speed(i + 1, j), speed(i, j - 1), speed(i, j + 1)});
            const double v = std::hypot(gx, gy) - 1.0 / cmin;
            if (v > rep.maxViolation) {
                rep.maxViolation = v;
                rep.location = Index2(i, j);
            }
        }
    if (rep.location.x() < 0) rep.maxViolation = 0.0;
    rep.passed = rep.maxViolation <= rep.tolerance;
    return rep;
}

LipschitzReport lipschitz_check(const DistanceField& dist, const SpeedField& speed, double constant) {
    return lipschitz_check(dist.grid(), dist.values(), dist.reachable(), speed, constant);
}

}  // namespace tat
