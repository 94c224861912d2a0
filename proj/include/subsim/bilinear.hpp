#ifndef SUBSIM_BILINEAR_HPP
#define SUBSIM_BILINEAR_HPP

#include "subsim/ground_motion.hpp"
#include "subsim/types.hpp"

#include <stdexcept>

namespace subsim {

/// SDOF oscillator with bilinear hysteretic restoring force and linear
/// viscous damping: m z'' + c z' + f_h(z) = -m u(t).
struct BilinearParams {
    double m = 1.0;
    double c = 0.0;
    double k1 = 1.0;
    double k2 = 0.0;
    double z_y = 1.0;

    void validate() const {
        if (!(m > 0.0) || !(k1 > 0.0) || k2 < 0.0 || !(z_y > 0.0) || c < 0.0)
            throw std::invalid_argument("BilinearParams: need m,k1,z_y > 0 and c,k2 >= 0");
    }
};

enum class BilinearBranch { Elastic, YieldPos, YieldNeg };

/// Position of the elastic band on the displacement axis plus the active
/// branch. The restoring force is k2*z + (k1-k2)*clamp(z - plastic_offset, +-z_y),
/// continuous in time by construction.
struct BilinearHystState {
    double plastic_offset = 0.0;
    BilinearBranch branch = BilinearBranch::Elastic;
};

/// Restoring force at displacement z with the branch state updated for the
/// instantaneous velocity dz. Pure transition logic; total function.
std::pair<double, BilinearHystState> restoring_force_bilinear(const BilinearHystState& state,
                                                              double z, double dz,
                                                              const BilinearParams& params);

/// Response histories at the output rate plus energy accounting terms.
struct BilinearTrace {
    Vector displacement;
    Vector velocity;
    Vector force;         // hysteretic restoring force
    Vector energy_input;  // -m u z' integrated
    Vector energy_viscous;
    Vector work_hysteretic;  // includes the recoverable elastic part
    double dt = 0.0;
};

/// Integrates from rest. out_dt must be a multiple of the integration step
/// motion.dt / substeps; it defaults to motion.dt.
BilinearTrace simulate_bilinear_trace(const BilinearParams& params, const GroundMotion& motion,
                                      double out_dt = -1.0, int substeps = 20);

/// Displacement series only.
Vector simulate_bilinear(const BilinearParams& params, const GroundMotion& motion,
                         double out_dt = -1.0, int substeps = 20);

/// Displacement series with Gaussian state noise (variances q_diag for
/// displacement and velocity) added after each observation step; the
/// observation sees the perturbed state.
Vector simulate_bilinear_state_noise(const BilinearParams& params, const GroundMotion& motion,
                                     const ConstVectorRef& q_diag, class RngStream& rng,
                                     int substeps = 20);

} // namespace subsim

#endif
