#ifndef SUBSIM_GROUND_MOTION_HPP
#define SUBSIM_GROUND_MOTION_HPP

#include "subsim/types.hpp"

#include <stdexcept>

namespace subsim {

/// Uniformly sampled ground-acceleration history, SI units (m/s^2).
/// `accel` already carries the scale factor; `scale` is kept for provenance.
struct GroundMotion {
    double dt = 0.0;
    Vector accel;
    double scale = 1.0;

    GroundMotion() = default;
    GroundMotion(double dt_, Vector accel_, double scale_ = 1.0)
        : dt(dt_), accel(std::move(accel_)), scale(scale_) {
        if (!(dt > 0.0)) throw std::invalid_argument("GroundMotion: dt must be > 0");
        if (accel.size() == 0) throw std::invalid_argument("GroundMotion: empty record");
        if (!accel.allFinite()) throw std::invalid_argument("GroundMotion: non-finite acceleration");
    }

    Index n_samples() const { return accel.size(); }
    double duration() const { return dt * static_cast<double>(accel.size()); }

    /// Linear interpolation at time t. Sample i is the value at t = i*dt;
    /// past the last sample the record holds its final value.
    double at(double t) const {
        if (t <= 0.0) return accel[0];
        const double s = t / dt;
        const auto i = static_cast<Index>(s);
        if (i >= accel.size() - 1) return accel[accel.size() - 1];
        const double frac = s - static_cast<double>(i);
        return accel[i] + frac * (accel[i + 1] - accel[i]);
    }
};

} // namespace subsim

#endif
