#include "tat/inversion.hpp"

#include <cmath>
#include <random>

namespace tat {
namespace {

struct Receivers {
    std::vector<BilinearStencil> stencils;

    explicit Receivers(const BoundaryPatch& patch) {
        const GridSpec& grid = patch.region().grid();
        for (const Point& p : patch.sample_points()) stencils.push_back(bilinear_stencil(grid, p));
    }

    void gather(const Field& u, Eigen::MatrixXd& values, int level) const {
        for (std::size_t r = 0; r < stencils.size(); ++r) {
            const auto& s = stencils[r];
            values(Eigen::Index(r), level) = s.w00 * u(s.i, s.j) + s.w10 * u(s.i + 1, s.j) +
                                             s.w01 * u(s.i, s.j + 1) + s.w11 * u(s.i + 1, s.j + 1);
        }
    }

    void scatter(const Eigen::MatrixXd& values, int level, Field& u) const {
        for (std::size_t r = 0; r < stencils.size(); ++r) {
            const auto& s = stencils[r];
            const double v = values(Eigen::Index(r), level);
            u(s.i, s.j) += s.w00 * v;
            u(s.i + 1, s.j) += s.w10 * v;
            u(s.i, s.j + 1) += s.w01 * v;
            u(s.i + 1, s.j + 1) += s.w11 * v;
        }
    }
};

int step_count(double tMax, double dt) { return int(std::llround(tMax / dt)); }

}  // namespace

Trace forward_operator(const Phantom& f, const BoundaryPatch& patch, const SpeedField& speed, double tMax,
                       const WaveOptions& options) {
    WaveOptions o = options;
    o.snapshotTimes.clear();
    o.recordEnergy = false;
    return simulate(speed, f, tMax, patch, o).second;
}

Trace forward_operator(const Field& f, const BoundaryPatch& patch, const SpeedField& speed, double tMax,
                       const WaveOptions& options) {
    const GridSpec& grid = speed.grid();
    if (patch.region().grid() != grid) throw std::invalid_argument("patch and speed use different grids");
    if (f.rows() != grid.nx() || f.cols() != grid.ny()) throw std::invalid_argument("initial field off grid");
    const double dt = stable_time_step(speed, tMax, options.cflFactor);
    const int steps = step_count(tMax, dt);
    const Receivers rx(patch);
    Eigen::MatrixXd values(Eigen::Index(rx.stencils.size()), steps + 1);
    WaveStepper stepper(speed, dt, options);
    rx.gather(f, values, 0);
    if (steps > 0) {
        stepper.start(f);
        rx.gather(stepper.u(), values, 1);
        for (int k = 2; k <= steps; ++k) {
            stepper.step();
            rx.gather(stepper.u(), values, k);
        }
    }
    return Trace(patch, dt, 0.0, std::move(values));
}

Field adjoint_operator_full(const Trace& residual, const SpeedField& speed, double tMax, const WaveOptions& options) {
    const GridSpec& grid = speed.grid();
    if (residual.patch.region().grid() != grid) throw std::invalid_argument("trace and speed use different grids");
    const double dt = stable_time_step(speed, tMax, options.cflFactor);
    const int steps = step_count(tMax, dt);
    if (residual.t0 != 0.0 || residual.samples() != steps + 1 || std::abs(residual.dt - dt) > 1e-12 * dt)
        throw std::invalid_argument("trace does not match the forward discretization (dt " + std::to_string(dt) +
                                    ", " + std::to_string(steps + 1) + " samples from t = 0)");
    const Receivers rx(residual.patch);
    const WaveStepper stepper(speed, dt, options);
    const int nx = grid.nx(), ny = grid.ny();

    // Adjoints of levels k (cur) and k - 1 (prev), walking k down to 1.
    Field cur = Field::Zero(nx, ny);
    rx.scatter(residual.values, steps, cur);
    if (steps == 0) return cur;
    Field prev = Field::Zero(nx, ny);
    rx.scatter(residual.values, steps - 1, prev);
    for (int k = steps; k >= 2; --k) {
        Field older = Field::Zero(nx, ny);
        rx.scatter(residual.values, k - 2, older);
        stepper.step_transpose(cur, prev, older);
        cur = std::move(prev);
        prev = std::move(older);
    }
    // Level 1 = level 0 + dt^2/2 A level 0.
    prev += cur + stepper.apply_transpose(0.5 * dt * dt * cur);
    return prev;
}

Field adjoint_operator(const Trace& residual, const SpeedField& speed, double tMax, const WaveOptions& options) {
    Field f = adjoint_operator_full(residual, speed, tMax, options);
    return residual.patch.region().inside().select(f, 0.0);
}

double inner(const Trace& a, const Trace& b) {
    if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols())
        throw std::invalid_argument("traces have different shapes");
    return (a.values.array() * b.values.array()).sum();
}

double norm(const Trace& t) { return t.values.norm(); }

Mask support_mask(const Region& region, std::optional<double> margin) {
    return region.phi() <= -margin.value_or(2.0 * region.grid().h());
}

NormEstimate estimate_operator_norm(const BoundaryPatch& patch, const SpeedField& speed, double tMax,
                                    int powerIterations, std::uint64_t seed, const WaveOptions& options) {
    if (powerIterations < 1) throw std::invalid_argument("power iteration count must be positive");
    const Mask P = support_mask(patch.region());
    if (!P.any()) throw std::invalid_argument("support mask is empty");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const GridSpec& grid = speed.grid();
    Field v(grid.nx(), grid.ny());
    for (Eigen::Index n = 0; n < v.size(); ++n) v(n) = uni(rng);
    v = P.select(v, 0.0);
    v /= std::sqrt(v.square().sum());
    NormEstimate out{0.0, {}};
    for (int it = 0; it < powerIterations; ++it) {
        Field w = adjoint_operator(forward_operator(v, patch, speed, tMax, options), speed, tMax, options);
        w = P.select(w, 0.0);
        const double lambda = std::sqrt(w.square().sum());
        out.value = std::sqrt(lambda);
        out.history.push_back(out.value);
        if (lambda == 0.0) break;
        v = w / lambda;
    }
    return out;
}

InversionRun landweber(const Trace& data, const BoundaryPatch& patch, const SpeedField& speed, double tMax,
                       int iterations, double stepSize, const Region& support, const WaveOptions& options,
                       const IterateCallback& onIterate) {
    if (iterations < 0) throw std::invalid_argument("iteration count must be nonnegative");
    if (!(stepSize > 0.0)) throw std::invalid_argument("stepSize must be positive");
    if (!data.patch.region().same_as(patch.region()) || data.patch.samples() != patch.samples())
        throw std::invalid_argument("data were recorded on a different patch");
    const Mask P = support_mask(support);
    const GridSpec& grid = speed.grid();

    InversionRun run{Field::Zero(grid.nx(), grid.ny()), {}, stepSize, 0, patch, tMax, speed};
    int rising = 0;
    for (int k = 0;; ++k) {
        Trace r = forward_operator(run.estimate, patch, speed, tMax, options);
        r.values = data.values - r.values;
        const double res = norm(r);
        if (!std::isfinite(res)) throw DivergenceError("residual became non-finite; use a smaller stepSize", run.residualHistory);
        if (!run.residualHistory.empty()) rising = res > run.residualHistory.back() ? rising + 1 : 0;
        run.residualHistory.push_back(res);
        if (rising >= 3)
            throw DivergenceError("Landweber residual grew for 3 consecutive iterations (stepSize " +
                                      std::to_string(stepSize) + "); try a smaller stepSize, below 2 / ||Lambda||^2",
                                  run.residualHistory);
        if (k == iterations) break;
        run.estimate = P.select(run.estimate + stepSize * adjoint_operator(r, speed, tMax, options), 0.0);
        run.iterations = k + 1;
        if (onIterate) onIterate(k + 1, run.estimate);
    }
    return run;
}

double relative_error(const Field& estimate, const Field& truth) {
    const double d = std::sqrt(truth.square().sum());
    if (d == 0.0) throw std::invalid_argument("reference field is zero");
    return std::sqrt((estimate - truth).square().sum()) / d;
}

}  // namespace tat
