#include "subsim/bilinear.hpp"

#include "subsim/model.hpp"
#include "subsim/rk4.hpp"

#include <cmath>
#include <utility>

namespace subsim {

namespace {

using State5 = Eigen::Matrix<double, 5, 1>; // z, v, E_in, E_visc, W_f

double branch_deflection(const BilinearHystState& hyst, double z, double z_y) {
    switch (hyst.branch) {
        case BilinearBranch::YieldPos: return z_y;
        case BilinearBranch::YieldNeg: return -z_y;
        default: return z - hyst.plastic_offset;
    }
}

struct BilinearStepper {
    const BilinearParams& p;
    const GroundMotion& motion;
    BilinearHystState hyst;

    double force(double z) const {
        return p.k2 * z + (p.k1 - p.k2) * branch_deflection(hyst, z, p.z_y);
    }

    State5 rhs(double t, const State5& x) const {
        const double u = motion.at(t);
        const double v = x[1];
        const double f = force(x[0]);
        State5 dx;
        dx[0] = v;
        dx[1] = (-p.m * u - p.c * v - f) / p.m;
        dx[2] = -p.m * u * v;
        dx[3] = p.c * v * v;
        dx[4] = f * v;
        return dx;
    }

    // One micro step with event localization: yield onset while elastic
    // (|z - offset| reaching z_y) and yield exit (velocity sign change).
    // Transitions are located by linear back-interpolation and the step is
    // restarted from the transition point, so the force stays continuous.
    State5 step(double t, const State5& x0, double h, int depth = 0) {
        auto f = [this](double tt, const State5& xx) { return rhs(tt, xx); };
        const State5 x1 = rk4::step(f, t, x0, h);

        double tau = 2.0;
        BilinearBranch next = hyst.branch;
        if (hyst.branch == BilinearBranch::Elastic) {
            const double e0 = x0[0] - hyst.plastic_offset;
            const double e1 = x1[0] - hyst.plastic_offset;
            if (e1 > p.z_y) {
                tau = e0 >= p.z_y ? 0.0 : (p.z_y - e0) / (e1 - e0);
                next = BilinearBranch::YieldPos;
            }
            if (e1 < -p.z_y) {
                const double tau_neg = e0 <= -p.z_y ? 0.0 : (-p.z_y - e0) / (e1 - e0);
                if (tau_neg < tau) {
                    tau = tau_neg;
                    next = BilinearBranch::YieldNeg;
                }
            }
        } else {
            const double dir = hyst.branch == BilinearBranch::YieldPos ? 1.0 : -1.0;
            if (dir * x1[1] < 0.0) {
                tau = dir * x0[1] <= 0.0 ? 0.0 : x0[1] / (x0[1] - x1[1]);
                next = BilinearBranch::Elastic;
            }
        }

        if (tau > 1.0 || depth >= 24) return x1;

        tau = std::clamp(tau, 0.0, 1.0);
        const State5 xe = tau * h < 1e-14 ? x0 : rk4::step(f, t, x0, tau * h);
        if (next == BilinearBranch::Elastic) {
            // leaving a yield branch freezes the band at the reversal point
            hyst.plastic_offset =
                xe[0] - (hyst.branch == BilinearBranch::YieldPos ? p.z_y : -p.z_y);
        }
        hyst.branch = next;
        const double rest = (1.0 - tau) * h;
        return rest < 1e-14 ? xe : step(t + tau * h, xe, rest, depth + 1);
    }
};

} // namespace

std::pair<double, BilinearHystState> restoring_force_bilinear(const BilinearHystState& state,
                                                              double z, double dz,
                                                              const BilinearParams& params) {
    BilinearHystState next = state;
    double e = z - next.plastic_offset;
    if (e > params.z_y) {
        next.plastic_offset = z - params.z_y;
        e = params.z_y;
    } else if (e < -params.z_y) {
        next.plastic_offset = z + params.z_y;
        e = -params.z_y;
    }
    if (e == params.z_y && dz > 0.0)
        next.branch = BilinearBranch::YieldPos;
    else if (e == -params.z_y && dz < 0.0)
        next.branch = BilinearBranch::YieldNeg;
    else
        next.branch = BilinearBranch::Elastic;
    const double f = params.k2 * z + (params.k1 - params.k2) * e;
    return {f, next};
}

BilinearTrace simulate_bilinear_trace(const BilinearParams& params, const GroundMotion& motion,
                                      double out_dt, int substeps) {
    params.validate();
    if (substeps < 1) throw std::invalid_argument("simulate_bilinear: substeps must be >= 1");
    if (out_dt <= 0.0) out_dt = motion.dt;
    const double h = motion.dt / substeps;
    const auto out_every = static_cast<Index>(std::llround(out_dt / h));
    if (out_every < 1 || std::abs(static_cast<double>(out_every) * h - out_dt) > 1e-9 * out_dt)
        throw std::invalid_argument("simulate_bilinear: out_dt must be a multiple of the integration step");
    const auto n_out =
        static_cast<Index>(std::floor(motion.duration() / out_dt + 1e-9));

    BilinearStepper stepper{params, motion, BilinearHystState{}};
    State5 x = State5::Zero();

    BilinearTrace trace;
    trace.dt = out_dt;
    trace.displacement.resize(n_out);
    trace.velocity.resize(n_out);
    trace.force.resize(n_out);
    trace.energy_input.resize(n_out);
    trace.energy_viscous.resize(n_out);
    trace.work_hysteretic.resize(n_out);

    Index micro = 0;
    for (Index n = 0; n < n_out; ++n) {
        for (Index s = 0; s < out_every; ++s, ++micro)
            x = stepper.step(static_cast<double>(micro) * h, x, h);
        if (!x.allFinite()) throw SimulationError("bilinear: diverged", n);
        trace.displacement[n] = x[0];
        trace.velocity[n] = x[1];
        trace.force[n] = stepper.force(x[0]);
        trace.energy_input[n] = x[2];
        trace.energy_viscous[n] = x[3];
        trace.work_hysteretic[n] = x[4];
    }
    return trace;
}

Vector simulate_bilinear(const BilinearParams& params, const GroundMotion& motion, double out_dt,
                         int substeps) {
    return simulate_bilinear_trace(params, motion, out_dt, substeps).displacement;
}

Vector simulate_bilinear_state_noise(const BilinearParams& params, const GroundMotion& motion,
                                     const ConstVectorRef& q_diag, RngStream& rng, int substeps) {
    params.validate();
    if (q_diag.size() != 2)
        throw std::invalid_argument("simulate_bilinear_state_noise: q_diag must have size 2");
    const double h = motion.dt / substeps;
    const Index n_out = motion.n_samples();
    const double sd_z = std::sqrt(q_diag[0]), sd_v = std::sqrt(q_diag[1]);

    BilinearStepper stepper{params, motion, BilinearHystState{}};
    State5 x = State5::Zero();
    Vector out(n_out);
    Index micro = 0;
    for (Index n = 0; n < n_out; ++n) {
        for (Index s = 0; s < substeps; ++s, ++micro)
            x = stepper.step(static_cast<double>(micro) * h, x, h);
        x[0] += sd_z * rng.normal();
        x[1] += sd_v * rng.normal();
        if (!x.allFinite()) throw SimulationError("bilinear: diverged", n);
        out[n] = x[0];
    }
    return out;
}

} // namespace subsim
