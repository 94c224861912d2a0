#ifndef SUBSIM_RK4_HPP
#define SUBSIM_RK4_HPP

#include "subsim/model.hpp"
#include "subsim/types.hpp"

#include <vector>

namespace subsim::rk4 {

/// One classical 4th-order step. `State` is any Eigen vector type and
/// `Deriv` a callable f(t, x) -> dx/dt.
template <class State, class Deriv>
State step(Deriv&& f, double t, const State& x, double dt) {
    const State k1 = f(t, x);
    const State k2 = f(t + 0.5 * dt, State(x + (0.5 * dt) * k1));
    const State k3 = f(t + 0.5 * dt, State(x + (0.5 * dt) * k2));
    const State k4 = f(t + dt, State(x + dt * k3));
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Fixed-step trajectory, states recorded after every step (x0 excluded).
/// Throws SimulationError when the state leaves the finite range.
template <class State, class Deriv>
std::vector<State> integrate(Deriv&& f, State x0, double t0, double dt, Index n_steps) {
    std::vector<State> out;
    out.reserve(static_cast<std::size_t>(n_steps));
    State x = std::move(x0);
    double t = t0;
    for (Index i = 0; i < n_steps; ++i) {
        x = step(f, t, x, dt);
        t = t0 + static_cast<double>(i + 1) * dt;
        if (!x.allFinite()) throw SimulationError("rk4: non-finite state", i);
        out.push_back(x);
    }
    return out;
}

} // namespace subsim::rk4

#endif
