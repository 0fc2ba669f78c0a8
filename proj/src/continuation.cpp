#include "tat/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tat {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_axis(const SpaceTimeSet& a, const SpaceTimeSet& b) {
    if (a.grid != b.grid) throw std::invalid_argument("space-time sets use different grids");
    if (a.size() != b.size() || (a.size() > 1 && std::abs(a.dt - b.dt) > 1e-12 * std::abs(a.dt)) ||
        std::abs(a.t0 - b.t0) > 1e-12 * std::max(1.0, std::abs(a.t0)))
        throw std::invalid_argument("space-time sets use different time axes");
}

// Lower envelope of parabolas (Felzenszwalb-Huttenlocher) along one line with
// node spacing h; f holds squared distances, +inf for "no site".
void edt_line(std::vector<double>& f, double h, std::vector<int>& v, std::vector<double>& z, std::vector<double>& out) {
    const int n = int(f.size());
    const double h2 = h * h;
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (!std::isfinite(f[q])) continue;
        double s = -kInf;
        while (k >= 0) {
            const int r = v[k];
            s = ((f[q] + h2 * q * q) - (f[r] + h2 * r * r)) / (2.0 * h2 * (q - r));
            if (s <= z[k]) {
                --k;
                continue;
            }
            break;
        }
        if (k < 0) s = -kInf;
        ++k;
        v[k] = q;
        z[k] = s;
    }
    if (k < 0) {
        std::fill(out.begin(), out.end(), kInf);
        f = out;
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (j < k && z[j + 1] < q) ++j;
        const double d = h * (q - v[j]);
        out[q] = d * d + f[v[j]];
    }
    f = out;
}

double directed_hausdorff(const SpaceTimeSet& a, const std::vector<Field>& edtB, const SpaceTimeSet& b) {
    double worst = 0.0;
    for (int k = 0; k < a.size(); ++k) {
        const Mask& s = a.slices[k];
        for (Eigen::Index n = 0; n < s.size(); ++n) {
            if (!s(n)) continue;
            double best = kInf;
            // Walk outwards in time; stop once the time gap alone exceeds the best.
            for (int off = 0; off < b.size(); ++off) {
                bool any = false;
                for (int l : {k - off, k + off}) {
                    if (l < 0 || l >= b.size() || (off == 0 && l != k)) continue;
                    const double dtl = a.time(k) - b.time(l);
                    if (dtl * dtl >= best) continue;
                    any = true;
                    best = std::min(best, edtB[l](n) + dtl * dtl);
                }
                const double gap = off * b.dt;
                if (!any && gap * gap >= best) break;
            }
            worst = std::max(worst, best);
            if (!std::isfinite(worst)) return kInf;
        }
    }
    return std::sqrt(worst);
}

std::vector<Field> slice_transforms(const SpaceTimeSet& s) {
    std::vector<Field> out;
    out.reserve(s.slices.size());
    for (const Mask& m : s.slices) out.push_back(squared_distance_transform(s.grid, m));
    return out;
}

SpaceTimeSet symmetric_set(const GridSpec& grid, double extent, double tau, std::string label) {
    if (!(tau > 0.0)) throw std::invalid_argument("time spacing must be positive");
    const int K = int(std::floor(extent / tau + 1e-9));
    SpaceTimeSet s;
    s.grid = grid;
    s.dt = tau;
    s.t0 = -K * tau;
    s.slices.assign(2 * K + 1, Mask::Constant(grid.nx(), grid.ny(), false));
    s.label = std::move(label);
    return s;
}

}  // namespace

Eigen::Index SpaceTimeSet::count() const {
    Eigen::Index n = 0;
    for (const Mask& m : slices) n += m.count();
    return n;
}

int SpaceTimeSet::slice_at(double t) const {
    if (slices.empty()) return -1;
    if (slices.size() == 1) return std::abs(t - t0) <= 1e-9 * std::max(1.0, std::abs(t0)) ? 0 : -1;
    const int k = int(std::llround((t - t0) / dt));
    if (k < 0 || k >= size() || std::abs(time(k) - t) > 0.5 * dt) return -1;
    return k;
}

Field squared_distance_transform(const GridSpec& grid, const Mask& mask) {
    const int nx = grid.nx(), ny = grid.ny();
    Field d = mask.select(Field::Zero(nx, ny), kInf);
    const int n = std::max(nx, ny);
    std::vector<int> v(n);
    std::vector<double> z(n + 1), out, line;
    for (int j = 0; j < ny; ++j) {
        line.assign(d.col(j).data(), d.col(j).data() + nx);
        out.assign(nx, 0.0);
        edt_line(line, grid.spacing.x(), v, z, out);
        for (int i = 0; i < nx; ++i) d(i, j) = line[i];
    }
    for (int i = 0; i < nx; ++i) {
        line.resize(ny);
        for (int j = 0; j < ny; ++j) line[j] = d(i, j);
        out.assign(ny, 0.0);
        edt_line(line, grid.spacing.y(), v, z, out);
        for (int j = 0; j < ny; ++j) d(i, j) = line[j];
    }
    return d;
}

double hausdorff(const SpaceTimeSet& a, const SpaceTimeSet& b) {
    require_same_axis(a, b);
    const bool ea = a.empty(), eb = b.empty();
    if (ea && eb) return 0.0;
    if (ea || eb) return kInf;
    return std::max(directed_hausdorff(a, slice_transforms(b), b), directed_hausdorff(b, slice_transforms(a), a));
}

bool contained_in(const SpaceTimeSet& inner, const SpaceTimeSet& outer, double slack) {
    require_same_axis(inner, outer);
    if (inner.empty()) return true;
    if (outer.empty()) return false;
    return directed_hausdorff(inner, slice_transforms(outer), outer) <= slack;
}

const char* to_string(Causality c) {
    switch (c) {
        case Causality::spacelike: return "spacelike";
        case Causality::null: return "null";
        default: return "timelike";
    }
}

DomainOfDependence domain_of_dependence(const Point& p, double H, const Region& region, const BoundaryPatch& patch,
                                        const SpeedField& speed, double deltaShrink, double dt, int count,
                                        std::optional<double> slack) {
    if (!patch.region().same_as(region)) throw std::invalid_argument("patch belongs to a different region");
    if (region.signed_distance(p) <= 0.0) throw std::invalid_argument("domain of dependence needs p outside closed Omega");
    if (H < 0.0) throw std::invalid_argument("H must be nonnegative");
    if (!(deltaShrink >= 0.0 && deltaShrink < 1.0)) throw std::invalid_argument("deltaShrink must lie in [0, 1)");
    if (count < 1 || !(dt > 0.0)) throw std::invalid_argument("time axis needs count >= 1 and dt > 0");
    const GridSpec& grid = region.grid();
    const double h = grid.h();
    const double shrink = 1.0 - deltaShrink;

    const Point src[1] = {p};
    DistanceField d = solve_eikonal(speed, src, &region);
    const Mask exterior = d.reachable() && !region.inside();
    const Mask dir = dirichlet_nodes(region);

    SpaceTimeSet U;
    U.grid = grid;
    U.dt = dt;
    U.t0 = 0.0;
    U.label = "domain of dependence";
    SpaceTimeSet lateral = U;
    lateral.label = "lateral boundary";
    const Field scaled = shrink * d.values();
    for (int k = 0; k < count; ++k) {
        const double t = k * dt;
        U.slices.push_back(exterior && (scaled + t < H));
        lateral.slices.push_back(U.slices.back() && dir);
    }

    double margin = kInf;
    for (const Point& q : patch.complement_points()) margin = std::min(margin, shrink * d.at(q).value_or(kInf) - H);

    std::vector<CovectorSample> normals;
    for (int j = 1; j < grid.dims.y(); ++j)
        for (int i = 1; i < grid.dims.x(); ++i) {
            if (!exterior(i, j) || !(scaled(i, j) < H) || region.phi(i, j) <= h) continue;
            const auto g = distance_gradient(d, i, j);
            if (!g) continue;
            normals.push_back({grid.node(i, j), shrink * *g, 1.0});
        }

    Mask bottom = U.slices.front();
    return DomainOfDependence{std::move(U),
                              std::move(d),
                              deltaShrink,
                              H,
                              margin >= -slack.value_or(2.0 * h),
                              margin,
                              std::move(bottom),
                              std::move(normals),
                              std::move(lateral)};
}

TimeAxis sampled_axis(double runDt, int runSteps, int stride, double tEnd) {
    if (stride < 1) throw std::invalid_argument("time stride must be at least 1");
    const double dt = stride * runDt;
    const int byRun = runSteps / stride;
    const int byEnd = int(std::floor(tEnd / dt + 1e-9));
    return {dt, std::max(0, std::min(byRun, byEnd)) + 1};
}

std::vector<double> snapshot_times(const SpaceTimeSet& set) {
    std::vector<double> t;
    for (int k = 0; k < set.size(); ++k) t.push_back(set.time(k));
    return t;
}

DodReport verify_dod(const WaveRun& run, const SpeedField& speed, const SpaceTimeSet& U) {
    if (run.grid != U.grid || speed.grid() != U.grid)
        throw std::invalid_argument("run, speed and domain of dependence use different grids");
    DodReport r;
    const Mask& exterior = run.active.size() ? Mask(run.active) : Mask::Constant(U.grid.nx(), U.grid.ny(), true);
    for (int k = 0; k < U.size(); ++k) {
        const Snapshot* snap = nullptr;
        for (const Snapshot& s : run.snapshots)
            if (std::abs(s.time - U.time(k)) <= 0.5 * run.dt) snap = &s;
        if (!snap)
            throw std::invalid_argument("run has no snapshot at t = " + std::to_string(U.time(k)) +
                                        " (mismatched discretization)");
        const Mask& m = U.slices[k];
        for (int j = 0; j < U.grid.ny(); ++j)
            for (int i = 0; i < U.grid.nx(); ++i)
                if (m(i, j) && std::abs(snap->u(i, j)) > r.maxAbs) {
                    r.maxAbs = std::abs(snap->u(i, j));
                    r.location = Index2(i, j);
                    r.slice = k;
                }
        const Mask all = exterior || m;
        const double total = energy(speed, snap->u, snap->ut, &all);
        if (total > 0.0) r.energyFraction = std::max(r.energyFraction, energy(speed, snap->u, snap->ut, &m) / total);
        ++r.slicesChecked;
    }
    return r;
}

SpaceTimeSet uc_cylinder_expand(const Point& z, double rho, double D, const SpeedField& speed, double tau) {
    if (!(rho > 0.0) || !(D > 0.0)) throw std::invalid_argument("cylinder radius and height must be positive");
    const Point src[1] = {z};
    const DistanceField d = solve_eikonal(speed, src);
    SpaceTimeSet X = symmetric_set(speed.grid(), D, tau, "double cone");
    for (int k = 0; k < X.size(); ++k) X.slices[k] = d.values() + std::abs(X.time(k)) < D;
    return X;
}

SpaceTimeSet cylinder(const Point& z, double rho, double D, const SpeedField& speed, double tau) {
    const Point src[1] = {z};
    const DistanceField d = solve_eikonal(speed, src);
    SpaceTimeSet C = symmetric_set(speed.grid(), D, tau, "cylinder");
    for (auto& s : C.slices) s = d.values() < rho;
    return C;
}

UcResult uc_iterate(const DistanceField& d, double rho, double H, double deltaInj, double tau) {
    if (!(deltaInj > 0.0)) throw std::invalid_argument("deltaInj must be positive");
    if (!(rho > 0.0) || !(H > 0.0)) throw std::invalid_argument("rho and H must be positive");
    const double delta = std::min(deltaInj, H);
    SpaceTimeSet Y = symmetric_set(d.grid(), H, tau, "unique continuation");
    const Field& dist = d.values();
    for (auto& s : Y.slices) s = d.reachable() && dist < rho;
    const int iterations = int(std::ceil(H / delta - 1e-12));
    for (int n = 0; n < iterations; ++n) {
        const double r = rho + n * delta;
        const double Hn = H - n * delta;
        for (int k = 0; k < Y.size(); ++k) {
            const double t = std::abs(Y.time(k));
            if (!(t < Hn)) continue;
            Y.slices[k] = Y.slices[k] || (d.reachable() && dist < r + std::min(Hn - t, delta));
        }
    }
    return {std::move(Y), iterations};
}

UcResult uc_iterate(const Point& p, double rho, double H, double deltaInj, const SpeedField& speed, double tau) {
    if (!(deltaInj > 0.0)) throw std::invalid_argument("deltaInj must be positive");
    const Point src[1] = {p};
    return uc_iterate(solve_eikonal(speed, src), rho, H, deltaInj, tau);
}

}  // namespace tat
