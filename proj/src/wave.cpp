#include "tat/wave.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "tat/parallel.hpp"

namespace tat {
namespace {

// Trapezoid weight of node index i on an axis with n nodes.
double edge_weight(int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; }

Field sponge_profile(const GridSpec& grid, int width, double strength) {
    Field s = Field::Zero(grid.nx(), grid.ny());
    if (width <= 0) return s;
    for (int j = 0; j < grid.ny(); ++j)
        for (int i = 0; i < grid.nx(); ++i) {
            const int depth = std::min({i, j, grid.nx() - 1 - i, grid.ny() - 1 - j});
            if (depth >= width) continue;
            const double r = double(width - depth) / width;
            s(i, j) = strength * r * r;
        }
    return s;
}

int steps_for(double tMax, double dt) { return int(std::llround(tMax / dt)); }

std::vector<int> snapshot_steps(const std::vector<double>& times, double dt, int steps) {
    std::vector<int> out;
    for (double t : times) {
        if (t < 0.0) throw std::invalid_argument("snapshot times must be nonnegative");
        out.push_back(std::min(steps, int(std::llround(t / dt))));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Drives a stepper from level 0 to `steps`, collecting snapshots, energy and
// per-level samples. Snapshots and energy at level k need level k + 1, so one
// extra level is computed when the last snapshot sits at `steps`.
template <class Sample>
void run_levels(WaveStepper& stepper, int steps, const WaveOptions& options, WaveRun& run, Sample&& sample) {
    const auto snaps = snapshot_steps(options.snapshotTimes, stepper.dt(), steps);
    const SpeedField& speed = stepper.speed();
    const double dt = stepper.dt();
    std::size_t nextSnap = 0;
    // stepper holds (u^1, u^0) after start(); u^{-1} = u^1 by symmetry.
    Field older = stepper.u();
    Field current = stepper.u_prev();
    Field finalPrev;
    sample(0, current);
    for (int k = 0;; ++k) {
        const Field& next = stepper.u();
        const bool wantSnap = nextSnap < snaps.size() && snaps[nextSnap] == k;
        if (wantSnap || options.recordEnergy) {
            const Field ut = (next - older) / (2.0 * dt);
            if (wantSnap) {
                run.snapshots.push_back({k, k * dt, current, ut});
                ++nextSnap;
            }
            if (options.recordEnergy && k < steps) run.energyHistory.push_back(energy(speed, current, ut, &run.active));
        }
        if (k + 1 > steps) break;
        sample(k + 1, next);
        if (k + 1 == steps) {
            run.u = next;
            finalPrev = current;
            if (nextSnap >= snaps.size()) break;
        }
        older = std::move(current);
        current = next;
        stepper.step();
    }
    run.uPrev = std::move(finalPrev);
    if (steps == 0) {
        run.u = current;
        run.uPrev = stepper.u();
    }
}

void validate_options(const WaveOptions& o) {
    if (!(o.cflFactor > 0.0 && o.cflFactor <= 0.95)) throw std::invalid_argument("cflFactor must lie in (0, 0.95]");
    if (o.spongeWidth < 0) throw std::invalid_argument("sponge width must be nonnegative");
}

}  // namespace

const char* to_string(BoundaryCondition bc) { return bc == BoundaryCondition::sponge ? "sponge" : "reflecting"; }

BoundaryCondition boundary_condition_from_string(const std::string& s) {
    if (s == "sponge") return BoundaryCondition::sponge;
    if (s == "reflecting") return BoundaryCondition::reflecting;
    throw std::invalid_argument("unknown boundary condition '" + s + "' (expected sponge or reflecting)");
}

Trace::Trace(BoundaryPatch p, double dt_, double t0_, Eigen::MatrixXd v)
    : patch(std::move(p)), dt(dt_), t0(t0_), values(std::move(v)) {
    if (values.rows() != Eigen::Index(patch.samples().size()))
        throw std::invalid_argument("trace row count does not match the patch samples");
}

double stable_time_step(const SpeedField& speed, double tMax, double cflFactor) {
    if (!(tMax > 0.0)) throw std::invalid_argument("tMax must be positive");
    const double limit = cflFactor * speed.grid().spacing.minCoeff() / (std::sqrt(2.0) * speed.max());
    return tMax / std::ceil(tMax / limit - 1e-12);
}

WaveStepper::WaveStepper(SpeedField speed, double dt, const WaveOptions& options, std::optional<Mask> active)
    : speed_(std::move(speed)), grid_(speed_.grid()), dt_(dt) {
    validate_options(options);
    const double limit = 0.95 * grid_.spacing.minCoeff() / (std::sqrt(2.0) * speed_.max());
    if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12))
        throw std::invalid_argument("time step " + std::to_string(dt) + " violates the CFL limit " +
                                    std::to_string(limit));
    c2_ = speed_.values().square();
    if (options.boundary == BoundaryCondition::sponge) {
        sigmaMax_ = options.spongeStrength.value_or(0.25 * speed_.max() / (std::max(1, options.spongeWidth) * grid_.h()));
        sigma_ = sponge_profile(grid_, options.spongeWidth, sigmaMax_);
        absorbingEdges_ = true;
    } else {
        sigma_ = Field::Zero(grid_.nx(), grid_.ny());
    }
    active_ = active ? std::move(*active) : Mask::Constant(grid_.nx(), grid_.ny(), true);
    workers_ = options.workers > 0 ? options.workers : worker_count();
    u_ = uPrev_ = Field::Zero(grid_.nx(), grid_.ny());
}

Field WaveStepper::apply(const Field& u) const {
    const int nx = grid_.nx(), ny = grid_.ny();
    const double ix2 = 1.0 / (grid_.spacing.x() * grid_.spacing.x());
    const double iy2 = 1.0 / (grid_.spacing.y() * grid_.spacing.y());
    Field out = Field::Zero(nx, ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            if (!active_(i, j)) continue;
            const double c = u(i, j);
            const double w = u(i > 0 ? i - 1 : 1, j), e = u(i < nx - 1 ? i + 1 : nx - 2, j);
            const double s = u(i, j > 0 ? j - 1 : 1), n = u(i, j < ny - 1 ? j + 1 : ny - 2);
            out(i, j) = c2_(i, j) * ((w - 2.0 * c + e) * ix2 + (s - 2.0 * c + n) * iy2);
        }
    return out;
}

void WaveStepper::start(const Field& u0) {
    if (u0.rows() != grid_.nx() || u0.cols() != grid_.ny()) throw std::invalid_argument("initial state off grid");
    uPrev_ = u0;
    u_ = u0 + 0.5 * dt_ * dt_ * apply(u0);
    u_ = active_.select(u_, u0);
    index_ = 1;
    if (hook_) hook_(1, u_);
}

void WaveStepper::set_state(Field u, Field uPrev, int index) {
    if (u.rows() != grid_.nx() || u.cols() != grid_.ny() || uPrev.rows() != grid_.nx() || uPrev.cols() != grid_.ny())
        throw std::invalid_argument("state off grid");
    u_ = std::move(u);
    uPrev_ = std::move(uPrev);
    index_ = index;
}

void WaveStepper::advance_rows(int lo, int hi, Field& next) const {
    const int nx = grid_.nx(), ny = grid_.ny();
    const double ix2 = 1.0 / (grid_.spacing.x() * grid_.spacing.x());
    const double iy2 = 1.0 / (grid_.spacing.y() * grid_.spacing.y());
    const double dt2 = dt_ * dt_;
    for (int j = lo; j < hi; ++j)
        for (int i = 0; i < nx; ++i) {
            if (!active_(i, j)) {
                next(i, j) = u_(i, j);
                continue;
            }
            const double c = u_(i, j);
            const double w = u_(i > 0 ? i - 1 : 1, j), e = u_(i < nx - 1 ? i + 1 : nx - 2, j);
            const double s = u_(i, j > 0 ? j - 1 : 1), n = u_(i, j < ny - 1 ? j + 1 : ny - 2);
            const double lap = (w - 2.0 * c + e) * ix2 + (s - 2.0 * c + n) * iy2;
            const double a = 0.5 * sigma_(i, j) * dt_;
            next(i, j) = (2.0 * c - (1.0 - a) * uPrev_(i, j) + dt2 * c2_(i, j) * lap) / (1.0 + a);
        }
}

double WaveStepper::mur(int i, int j, double h) const {
    const double cdt = speed_(i, j) * dt_;
    return (cdt - h) / (cdt + h);
}

// First-order one-way (Mur) update on the outermost nodes: outgoing waves
// leave instead of bouncing back through the sponge.
void WaveStepper::absorb_edges(Field& next) const {
    const int nx = grid_.nx(), ny = grid_.ny();
    const double hx = grid_.spacing.x(), hy = grid_.spacing.y();
    for (int j = 0; j < ny; ++j) {
        if (active_(0, j)) next(0, j) = u_(1, j) + mur(0, j, hx) * (next(1, j) - u_(0, j));
        if (active_(nx - 1, j))
            next(nx - 1, j) = u_(nx - 2, j) + mur(nx - 1, j, hx) * (next(nx - 2, j) - u_(nx - 1, j));
    }
    for (int i = 0; i < nx; ++i) {
        if (active_(i, 0)) next(i, 0) = u_(i, 1) + mur(i, 0, hy) * (next(i, 1) - u_(i, 0));
        if (active_(i, ny - 1))
            next(i, ny - 1) = u_(i, ny - 2) + mur(i, ny - 1, hy) * (next(i, ny - 2) - u_(i, ny - 1));
    }
}

Field WaveStepper::apply_transpose(const Field& w) const {
    const int nx = grid_.nx(), ny = grid_.ny();
    const double ix2 = 1.0 / (grid_.spacing.x() * grid_.spacing.x());
    const double iy2 = 1.0 / (grid_.spacing.y() * grid_.spacing.y());
    const Field v = active_.select(c2_ * w, 0.0);
    // Gather form of the mirrored Laplacian's transpose: the mirror makes the
    // edge node count its inner neighbour twice.
    Field out(nx, ny);
    parallel_chunks(
        ny,
        [&](int lo, int hi, int) {
            for (int j = lo; j < hi; ++j)
                for (int i = 0; i < nx; ++i) {
                    double x = 0.0, y = 0.0;
                    if (i > 0) x += v(i - 1, j) * (i - 1 == 0 ? 2.0 : 1.0);
                    if (i < nx - 1) x += v(i + 1, j) * (i + 1 == nx - 1 ? 2.0 : 1.0);
                    if (j > 0) y += v(i, j - 1) * (j - 1 == 0 ? 2.0 : 1.0);
                    if (j < ny - 1) y += v(i, j + 1) * (j + 1 == ny - 1 ? 2.0 : 1.0);
                    out(i, j) = (x - 2.0 * v(i, j)) * ix2 + (y - 2.0 * v(i, j)) * iy2;
                }
        },
        std::min(workers_, ny));
    return out;
}

void WaveStepper::step_transpose(Field& next, Field& current, Field& previous) const {
    const int nx = grid_.nx(), ny = grid_.ny();
    if (absorbingEdges_) {
        // Reverse of absorb_edges: y pass first, then x pass.
        const double hx = grid_.spacing.x(), hy = grid_.spacing.y();
        auto undo = [&](int ti, int tj, int si, int sj, int ni, int nj, double h) {
            if (!active_(ti, tj)) return;
            const double v = next(ti, tj);
            const double k = mur(ti, tj, h);
            next(ti, tj) = 0.0;
            current(si, sj) += v;
            next(ni, nj) += k * v;
            current(ti, tj) -= k * v;
        };
        for (int i = nx - 1; i >= 0; --i) {
            undo(i, ny - 1, i, ny - 2, i, ny - 2, hy);
            undo(i, 0, i, 1, i, 1, hy);
        }
        for (int j = ny - 1; j >= 0; --j) {
            undo(nx - 1, j, nx - 2, j, nx - 2, j, hx);
            undo(0, j, 1, j, 1, j, hx);
        }
    }
    const double dt2 = dt_ * dt_;
    const Field a = 0.5 * dt_ * sigma_;
    const Field beta = 1.0 / (1.0 + a);
    const Field scaled = active_.select(beta * next, 0.0);
    current += active_.select(2.0 * scaled, next) + apply_transpose(dt2 * scaled);
    previous -= (1.0 - a) * scaled;
    next.setZero();
}

void WaveStepper::step() {
    Field next(grid_.nx(), grid_.ny());
    parallel_chunks(
        grid_.ny(), [&](int lo, int hi, int) { advance_rows(lo, hi, next); }, std::min(workers_, grid_.ny()));
    if (absorbingEdges_) absorb_edges(next);
    ++index_;
    if (hook_) hook_(index_, next);
    if (!next.allFinite())
        throw BlowUpError(index_, "wave solution became non-finite at step " + std::to_string(index_));
    uPrev_ = std::move(u_);
    u_ = std::move(next);
}

std::pair<WaveRun, Trace> simulate(const SpeedField& speed, const Phantom& phantom, double tMax,
                                   const BoundaryPatch& patch, const WaveOptions& options) {
    validate_options(options);
    const GridSpec& grid = speed.grid();
    if (phantom.grid() != grid) throw std::invalid_argument("phantom and speed use different grids");
    if (patch.region().grid() != grid) throw std::invalid_argument("patch and speed use different grids");
    const double dt = stable_time_step(speed, tMax, options.cflFactor);
    const int steps = steps_for(tMax, dt);

    WaveStepper stepper(speed, dt, options);
    WaveRun run;
    run.grid = grid;
    run.dt = dt;
    run.steps = steps;
    run.boundary = options.boundary;
    run.spongeWidth = options.boundary == BoundaryCondition::sponge ? options.spongeWidth : 0;
    run.spongeStrength = stepper.sponge_strength();
    run.active = stepper.active();

    const auto points = patch.sample_points();
    Eigen::MatrixXd values(Eigen::Index(points.size()), steps + 1);
    std::vector<BilinearStencil> stencils;
    for (const Point& p : points) stencils.push_back(bilinear_stencil(grid, p));

    stepper.start(phantom.values());
    run_levels(stepper, steps, options, run, [&](int level, const Field& u) {
        for (std::size_t r = 0; r < stencils.size(); ++r) {
            const auto& s = stencils[r];
            values(Eigen::Index(r), level) = s.w00 * u(s.i, s.j) + s.w10 * u(s.i + 1, s.j) +
                                             s.w01 * u(s.i, s.j + 1) + s.w11 * u(s.i + 1, s.j + 1);
        }
    });
    return {std::move(run), Trace(patch, dt, 0.0, std::move(values))};
}

Mask dirichlet_nodes(const Region& region) {
    const GridSpec& g = region.grid();
    const Mask& in = region.inside();
    Mask d = Mask::Constant(g.nx(), g.ny(), false);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            if (in(i, j)) continue;
            d(i, j) = (i > 0 && in(i - 1, j)) || (i < g.nx() - 1 && in(i + 1, j)) || (j > 0 && in(i, j - 1)) ||
                      (j < g.ny() - 1 && in(i, j + 1));
        }
    return d;
}

WaveRun simulate_exterior(const SpeedField& speed, const Region& region, const Trace& data, double tMax,
                          const WaveOptions& options) {
    validate_options(options);
    const GridSpec& grid = speed.grid();
    if (region.grid() != grid) throw std::invalid_argument("region and speed use different grids");
    if (!data.patch.is_full()) throw std::invalid_argument("exterior boundary data must cover the whole boundary");
    if (data.samples() < 1) throw std::invalid_argument("boundary data has no time samples");
    const double dt = stable_time_step(speed, tMax, options.cflFactor);
    const int steps = steps_for(tMax, dt);

    const Mask dir = dirichlet_nodes(region);
    const Mask active = !(region.inside() || dir);

    // Row of the trace for each boundary sample.
    const int nb = int(region.boundary().size());
    std::vector<int> row(nb, -1);
    for (std::size_t r = 0; r < data.patch.samples().size(); ++r) row[data.patch.samples()[r]] = int(r);

    // A Dirichlet node x at distance delta from its boundary point B takes
    // the linear interpolant between g(B) and u at y = B + (delta + 2h) n;
    // y's cell corners lie more than h from the boundary, hence are updated
    // nodes.
    struct Tap {
        Eigen::Index node;
        int r0, r1;
        double f;
        double alpha;
        BilinearStencil far;
    };
    const double h = grid.h();
    std::vector<Tap> taps;
    for (int j = 0; j < grid.ny(); ++j)
        for (int i = 0; i < grid.nx(); ++i) {
            if (!dir(i, j)) continue;
            const Point x = grid.node(i, j);
            const double pos = region.boundary_position(x);
            const int s0 = int(std::floor(pos)) % nb;
            const Point b = closest_boundary_point(region.shape(), x);
            const double delta = (x - b).norm();
            Eigen::Vector2d n;
            if (delta > 1e-9 * h) {
                n = (x - b) / delta;
            } else {
                const double e = 1e-6 * h;
                n = Eigen::Vector2d(region.signed_distance(x + Point(e, 0)) - region.signed_distance(x - Point(e, 0)),
                                    region.signed_distance(x + Point(0, e)) - region.signed_distance(x - Point(0, e)))
                        .normalized();
            }
            const Point y = b + (delta + 2.0 * h) * n;
            if (!grid.contains(y)) throw std::invalid_argument("region too close to the grid edge for exterior runs");
            taps.push_back({Eigen::Index(i) + Eigen::Index(j) * grid.nx(), row[s0], row[(s0 + 1) % nb],
                            pos - std::floor(pos), delta / (delta + 2.0 * h), bilinear_stencil(grid, y)});
        }

    auto boundary_values = [&, dt](int level, Field& u) {
        const double t = level * dt;
        double q = (t - data.t0) / data.dt;
        q = std::clamp(q, 0.0, double(data.samples() - 1));
        const int k0 = std::min(int(std::floor(q)), data.samples() - 1);
        const int k1 = std::min(k0 + 1, data.samples() - 1);
        const double ft = q - k0;
        for (const Tap& tap : taps) {
            auto g = [&](int k) { return (1.0 - tap.f) * data.values(tap.r0, k) + tap.f * data.values(tap.r1, k); };
            const double gb = (1.0 - ft) * g(k0) + ft * g(k1);
            const auto& s = tap.far;
            const double uy = s.w00 * u(s.i, s.j) + s.w10 * u(s.i + 1, s.j) + s.w01 * u(s.i, s.j + 1) +
                              s.w11 * u(s.i + 1, s.j + 1);
            u(tap.node) = gb + tap.alpha * (uy - gb);
        }
    };

    WaveStepper stepper(speed, dt, options, active);
    WaveRun run;
    run.grid = grid;
    run.dt = dt;
    run.steps = steps;
    run.boundary = options.boundary;
    run.spongeWidth = options.boundary == BoundaryCondition::sponge ? options.spongeWidth : 0;
    run.spongeStrength = stepper.sponge_strength();
    run.active = active;

    Field u0 = Field::Zero(grid.nx(), grid.ny());
    boundary_values(0, u0);
    // Zero initial velocity in the exterior; the data's own start supplies level 1.
    stepper.set_state(u0, u0, 0);
    stepper.set_boundary_hook(boundary_values);
    Field u1 = u0 + 0.5 * dt * dt * stepper.apply(u0);
    boundary_values(1, u1);
    stepper.set_state(u1, u0, 1);
    run_levels(stepper, steps, options, run, [](int, const Field&) {});
    return run;
}

double energy(const SpeedField& speed, const Field& u, const Field& ut, const Mask* subset) {
    const GridSpec& g = speed.grid();
    const int nx = g.nx(), ny = g.ny();
    const double hx = g.spacing.x(), hy = g.spacing.y();
    double e = 0.0;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            if (subset && !(*subset)(i, j)) continue;
            const double c = u(i, j);
            // One-sided differences on both sides, mirrored at the grid edge.
            const double dxp = (u(i < nx - 1 ? i + 1 : nx - 2, j) - c) / hx;
            const double dxm = (c - u(i > 0 ? i - 1 : 1, j)) / hx;
            const double dyp = (u(i, j < ny - 1 ? j + 1 : ny - 2) - c) / hy;
            const double dym = (c - u(i, j > 0 ? j - 1 : 1)) / hy;
            const double grad2 = 0.5 * (dxp * dxp + dxm * dxm + dyp * dyp + dym * dym);
            const double kin = ut(i, j) * ut(i, j) / (speed(i, j) * speed(i, j));
            e += edge_weight(i, nx) * edge_weight(j, ny) * (kin + grad2);
        }
    return 0.5 * e * hx * hy;
}

double energy(const WaveRun& run, const SpeedField& speed, const Mask* subset) {
    if (run.u.size() == 0 || run.uPrev.size() == 0) throw std::invalid_argument("run has no final state");
    WaveOptions o;
    o.boundary = run.boundary;
    o.spongeWidth = std::max(run.spongeWidth, 0);
    o.spongeStrength = run.spongeStrength;
    o.cflFactor = 0.95;
    WaveStepper s(speed, run.dt, o, run.active);
    s.set_state(run.u, run.uPrev, run.steps);
    // Boundary nodes outside `active` hold their last values, which is all the
    // gradient term needs.
    s.step();
    const Field ut = (s.u() - run.uPrev) / (2.0 * run.dt);
    return energy(speed, run.u, ut, subset);
}

Trace even_extension(const Trace& trace) {
    int zero = 0;
    if (trace.t0 != 0.0) {
        const double q = -trace.t0 / trace.dt;
        zero = int(std::llround(q));
        if (trace.t0 > 0.0 || std::abs(q - zero) > 1e-9 || zero >= trace.samples())
            throw std::invalid_argument("trace does not contain t = 0 on its sample grid");
    }
    const int n = trace.samples() - zero;
    Eigen::MatrixXd v(trace.values.rows(), 2 * n - 1);
    for (int k = 0; k < n; ++k) {
        v.col(n - 1 + k) = trace.values.col(zero + k);
        v.col(n - 1 - k) = trace.values.col(zero + k);
    }
    return Trace(trace.patch, trace.dt, -(n - 1) * trace.dt, std::move(v));
}

void write_trace_csv(const fs::path& file, const Trace& trace) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << std::setprecision(17) << "time";
    const auto nodes = trace.patch.region().boundary();
    for (int s : trace.patch.samples()) out << ",s" << nodes[s].param;
    out << '\n';
    for (int k = 0; k < trace.samples(); ++k) {
        out << trace.time(k);
        for (int r = 0; r < trace.receivers(); ++r) out << ',' << trace.values(r, k);
        out << '\n';
    }
}

void write_trace(const fs::path& stem, const Trace& trace, const json& meta) {
    json m = meta;
    m["dt"] = trace.dt;
    m["t0"] = trace.t0;
    m["arcs"] = to_json(trace.patch.arcs());
    m["boundary_samples"] = trace.patch.samples();
    write_matrix(stem, trace.values, "trace", m);
}

Trace read_trace(const fs::path& stem, const Region& region) {
    json meta;
    std::string kind;
    Eigen::MatrixXd values = read_matrix(stem, &meta, &kind);
    if (kind != "trace") throw std::runtime_error(stem.string() + " holds a '" + kind + "', not a trace");
    BoundaryPatch patch = make_patch(region, arcs_from_json(meta.at("arcs")));
    if (meta.contains("boundary_samples") && meta.at("boundary_samples").get<std::vector<int>>() != patch.samples())
        throw std::runtime_error(stem.string() + " was recorded on a different boundary sampling");
    return Trace(std::move(patch), meta.at("dt").get<double>(), meta.at("t0").get<double>(), std::move(values));
}

}  // namespace tat
