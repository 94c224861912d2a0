#include "subsim/masing.hpp"

#include "subsim/model.hpp"
#include "subsim/rk4.hpp"

#include <cmath>

namespace subsim {

double masing_rate(double r, double v_rel, double k, double r_u, double alpha,
                   std::optional<double> r_star) {
    double q;
    if (r_star)
        q = (r - *r_star) / (2.0 * r_u);
    else
        q = r / r_u;
    return k * v_rel * (1.0 - std::pow(std::abs(q), alpha));
}

namespace {

// z(n), v(n), r(n), E_in, E_visc, W_f; stack-allocated up to 7 stories
using StateM = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 24, 1>;

struct MasingStepper {
    const MasingParams& p;
    const GroundMotion& motion;
    Index n;
    std::vector<MasingHystState> hyst;       // per story
    std::vector<double> virgin_dir;          // travel direction while on the virgin curve; 0 = unset

    StateM rhs(double t, const StateM& x) const {
        const double u = motion.at(t);
        StateM dx(x.size());
        double e_in = 0.0, e_visc = 0.0, w_f = 0.0;

        // story spring-rate assembly shared by the damping term
        StateM cv_spring(n), r_dot(n), drate(n);
        for (Index i = 0; i < n; ++i) {
            const double vi = x[n + i];
            const double v_below = i == 0 ? 0.0 : x[n + i - 1];
            drate[i] = vi - v_below;
            r_dot[i] = masing_rate(x[2 * n + i], drate[i], p.k[i], p.r_u[i], p.alpha[i],
                                   hyst[static_cast<std::size_t>(i)].r_star());
            cv_spring[i] = p.k[i] * drate[i];
        }

        for (Index i = 0; i < n; ++i) {
            const double vi = x[n + i];
            const double f_h = x[2 * n + i] - (i + 1 < n ? x[2 * n + i + 1] : 0.0);
            const double cv =
                p.c_m * p.masses[i] * vi + p.c_k * (cv_spring[i] - (i + 1 < n ? cv_spring[i + 1] : 0.0));
            dx[i] = vi;
            dx[n + i] = -u - (cv + f_h) / p.masses[i];
            dx[2 * n + i] = r_dot[i];
            e_in -= p.masses[i] * u * vi;
            e_visc += vi * cv;
            w_f += x[2 * n + i] * drate[i];
        }
        dx[3 * n] = e_in;
        dx[3 * n + 1] = e_visc;
        dx[3 * n + 2] = w_f;
        return dx;
    }

    double drift(const StateM& x, Index i) const { return x[i] - (i == 0 ? 0.0 : x[i - 1]); }
    double drift_rate(const StateM& x, Index i) const {
        return x[n + i] - (i == 0 ? 0.0 : x[n + i - 1]);
    }

    double curve_dir(Index i) const {
        const auto& hs = hyst[static_cast<std::size_t>(i)];
        return hs.stack.empty() ? virgin_dir[static_cast<std::size_t>(i)]
                                : hs.stack.back().direction;
    }

    // Events, located by linear back-interpolation and handled earliest-first:
    //  - load reversal: the drift rate flips against the active curve's
    //    travel direction; push the reversal point, the new curve runs from
    //    it. Tying the event to the curve direction keeps near-zero rate
    //    jitter at force plateaus from re-triggering the same reversal.
    //  - closure: the deflection reaches the point where the active curve
    //    meets the one below it; pop the finished cycle.
    StateM step(double t, const StateM& x0, double h, int depth = 0) {
        auto f = [this](double tt, const StateM& xx) { return rhs(tt, xx); };
        const StateM x1 = rk4::step(f, t, x0, h);

        double tau = 2.0;
        Index story = -1;
        bool is_reversal = false;
        double new_dir = 0.0;
        for (Index i = 0; i < n; ++i) {
            const auto& hs = hyst[static_cast<std::size_t>(i)];
            const double s0 = drift_rate(x0, i), s1 = drift_rate(x1, i);
            const double cd = curve_dir(i);
            if (s0 * s1 < 0.0 && (cd == 0.0 || s0 * cd > 0.0)) {
                const double ti = s0 / (s0 - s1);
                if (ti < tau) {
                    tau = ti;
                    story = i;
                    is_reversal = true;
                    new_dir = s1 > 0.0 ? 1.0 : -1.0;
                }
            } else if (cd != 0.0 && s0 * cd < 0.0 && s1 * cd < 0.0 && tau > 0.0) {
                // sustained motion against the recorded direction: the
                // reversal itself fell below event resolution, repair now
                tau = 0.0;
                story = i;
                is_reversal = true;
                new_dir = s0 > 0.0 ? 1.0 : -1.0;
            }
            if (const auto dc = hs.closure_deflection()) {
                const double dir = hs.stack.back().direction;
                const double g0 = (drift(x0, i) - *dc) * dir, g1 = (drift(x1, i) - *dc) * dir;
                if (g0 < 0.0 && g1 >= 0.0) {
                    const double ti = g0 / (g0 - g1);
                    if (ti < tau) {
                        tau = ti;
                        story = i;
                        is_reversal = false;
                    }
                }
            }
        }

        if (tau > 1.0 || depth >= 40) {
            for (Index i = 0; i < n; ++i) {
                const double s1 = drift_rate(x1, i);
                if (hyst[static_cast<std::size_t>(i)].stack.empty() && s1 != 0.0)
                    virgin_dir[static_cast<std::size_t>(i)] = s1 > 0.0 ? 1.0 : -1.0;
            }
            return x1;
        }

        tau = std::clamp(tau, 0.0, 1.0);
        const StateM xe = tau * h < 1e-14 ? x0 : rk4::step(f, t, x0, tau * h);
        auto& hs = hyst[static_cast<std::size_t>(story)];
        if (is_reversal) {
            hs.push_reversal(drift(xe, story), xe[2 * n + story], new_dir);
        } else {
            const double dir = hs.stack.back().direction;
            hs.pop_cycle();
            if (hs.stack.empty()) virgin_dir[static_cast<std::size_t>(story)] = dir;
        }
        // a reversal landing on or past its closure point un-reverses at once;
        // deep pops can also expose further already-crossed cycles
        while (hs.crossed(drift(xe, story))) {
            const double dir = hs.stack.back().direction;
            hs.pop_cycle();
            if (hs.stack.empty()) virgin_dir[static_cast<std::size_t>(story)] = dir;
        }
        const double rest = (1.0 - tau) * h;
        return rest < 1e-14 ? xe : step(t + tau * h, xe, rest, depth + 1);
    }
};

} // namespace

MasingTrace simulate_masing_trace(const MasingParams& params, const GroundMotion& motion,
                                  double out_dt, int substeps) {
    params.validate();
    if (substeps < 1) throw std::invalid_argument("simulate_masing: substeps must be >= 1");
    if (out_dt <= 0.0) out_dt = motion.dt;
    const double h = motion.dt / substeps;
    const auto out_every = static_cast<Index>(std::llround(out_dt / h));
    if (out_every < 1 || std::abs(static_cast<double>(out_every) * h - out_dt) > 1e-9 * out_dt)
        throw std::invalid_argument("simulate_masing: out_dt must be a multiple of the integration step");
    const auto n_out = static_cast<Index>(std::floor(motion.duration() / out_dt + 1e-9));

    const Index n = params.n_stories();
    if (3 * n + 3 > 24) throw std::invalid_argument("simulate_masing: too many stories");
    MasingStepper stepper{params, motion, n, std::vector<MasingHystState>(static_cast<std::size_t>(n)),
                          std::vector<double>(static_cast<std::size_t>(n), 0.0)};
    StateM x = StateM::Zero(3 * n + 3);

    MasingTrace trace;
    trace.dt = out_dt;
    trace.drifts.resize(n_out, n);
    trace.story_force.resize(n_out, n);
    trace.energy_input.resize(n_out);
    trace.energy_viscous.resize(n_out);
    trace.work_hysteretic.resize(n_out);

    Index micro = 0;
    for (Index m = 0; m < n_out; ++m) {
        for (Index s = 0; s < out_every; ++s, ++micro)
            x = stepper.step(static_cast<double>(micro) * h, x, h);
        if (!x.allFinite()) throw SimulationError("masing: diverged", m);
        for (Index i = 0; i < n; ++i) {
            trace.drifts(m, i) = stepper.drift(x, i);
            trace.story_force(m, i) = x[2 * n + i];
        }
        trace.energy_input[m] = x[3 * n];
        trace.energy_viscous[m] = x[3 * n + 1];
        trace.work_hysteretic[m] = x[3 * n + 2];
    }
    return trace;
}

Vector simulate_masing(const MasingParams& params, const GroundMotion& motion, double out_dt,
                       int substeps) {
    const MasingTrace trace = simulate_masing_trace(params, motion, out_dt, substeps);
    const Index n_out = trace.drifts.rows(), n = trace.drifts.cols();
    Vector out(n_out * n);
    for (Index m = 0; m < n_out; ++m)
        for (Index i = 0; i < n; ++i) out[m * n + i] = trace.drifts(m, i);
    return out;
}

} // namespace subsim
