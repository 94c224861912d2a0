#ifndef SUBSIM_MASING_HPP
#define SUBSIM_MASING_HPP

#include "subsim/ground_motion.hpp"
#include "subsim/types.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace subsim {

/// Shear building with extended-Masing story hysteresis and Rayleigh
/// damping: M z'' + C z' + f_h = -M 1 u(t), f_h,i = r_i - r_{i+1}.
struct MasingParams {
    Vector masses;   // per story, kg
    Vector k;        // small-amplitude inter-story stiffness, N/m
    Vector r_u;      // story ultimate strength, N
    Vector alpha;    // elastic-to-plastic transition exponent
    double c_m = 0.0;
    double c_k = 0.0;

    Index n_stories() const { return masses.size(); }

    void validate() const {
        const Index n = masses.size();
        if (n < 1 || k.size() != n || r_u.size() != n || alpha.size() != n)
            throw std::invalid_argument("MasingParams: per-story arrays must agree in size");
        if (!(masses.array() > 0.0).all() || !(k.array() > 0.0).all() ||
            !(r_u.array() > 0.0).all() || !(alpha.array() > 0.0).all())
            throw std::invalid_argument("MasingParams: masses, k, r_u, alpha must be > 0");
        if (c_m < 0.0 || c_k < 0.0)
            throw std::invalid_argument("MasingParams: damping coefficients must be >= 0");
    }
};

/// Restoring-force rate. Without r_star this is the initial (virgin) curve
/// k*v*(1 - |r/r_u|^a); with r_star the interior curve with denominator 2*r_u.
double masing_rate(double r, double v_rel, double k, double r_u, double alpha,
                   std::optional<double> r_star = std::nullopt);

/// Reversal point: where a loading curve reversed, and the direction the
/// new curve departs in (sign of the drift rate after the reversal).
struct ReversalPoint {
    double deflection = 0.0;
    double force = 0.0;
    double direction = 1.0;
};

/// Per-story hysteresis memory: the stack of open reversal points. The top
/// entry's force is the r* of the active curve; an empty stack means the
/// virgin curve. Closing a sub-cycle pops its reversal pair and the
/// trajectory continues on the curve it interrupted.
struct MasingHystState {
    std::vector<ReversalPoint> stack;

    std::optional<double> r_star() const {
        return stack.empty() ? std::nullopt : std::optional<double>(stack.back().force);
    }

    void push_reversal(double deflection, double force, double direction) {
        stack.push_back({deflection, force, direction});
    }

    /// Deflection at which the active curve rejoins the one below it:
    /// the parent reversal point, or the mirror image of the first reversal
    /// when only the virgin curve is below. Curves from a reversal pass
    /// through that point exactly (factor-2 similarity), so reaching it is
    /// the crossing event.
    std::optional<double> closure_deflection() const {
        if (stack.empty()) return std::nullopt;
        if (stack.size() == 1) return -stack.front().deflection;
        return stack[stack.size() - 2].deflection;
    }

    /// True once the active curve has reached or passed its closure point in
    /// its travel direction. Evaluated with >= so that a reversal landing
    /// exactly on the closure point counts as an immediate un-reversal.
    bool crossed(double deflection) const {
        const auto target = closure_deflection();
        if (!target) return false;
        return (deflection - *target) * stack.back().direction >= 0.0;
    }

    /// Applies the crossing rule at the closure point.
    void pop_cycle() {
        if (stack.size() >= 2) {
            stack.pop_back();
            stack.pop_back();
        } else {
            stack.clear();
        }
    }
};

struct MasingTrace {
    Matrix drifts;        // n_out rows, one column per story (inter-story)
    Matrix story_force;   // r_i at the output rate
    Vector energy_input;
    Vector energy_viscous;
    Vector work_hysteretic;
    double dt = 0.0;
};

MasingTrace simulate_masing_trace(const MasingParams& params, const GroundMotion& motion,
                                  double out_dt = -1.0, int substeps = 20);

/// Inter-story drift series, channel-major per time step
/// (z_1, z_2 - z_1, z_3 - z_2 at each output time).
Vector simulate_masing(const MasingParams& params, const GroundMotion& motion,
                       double out_dt = -1.0, int substeps = 20);

} // namespace subsim

#endif
