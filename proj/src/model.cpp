#include "subsim/model.hpp"

#include "subsim/nuisance.hpp"

#include <cmath>

namespace subsim {

HierarchicalSample forward_draw(const ModelClassSpec& model, const ConstVectorRef& theta,
                                const Dataset& data, Norm norm, RngStream& rng,
                                bool suppress_noise) {
    HierarchicalSample s;
    s.theta = theta;

    const auto& sim = model.forward();
    Vector g = model.state_noise_diag()
                   ? sim.response_with_state_noise(theta, data.input, *model.state_noise_diag(), rng)
                   : sim.response(theta, data.input);
    if (g.size() != data.observed.size())
        throw std::invalid_argument("forward_draw: simulator output length != observed length");

    double s2 = 0.0;
    if (model.nuisance_mode() == NuisanceMode::FixedSigma) {
        s2 = model.fixed_sigma() * model.fixed_sigma();
    } else {
        s2 = sigma2_mle(data.observed, g);
    }
    s.sigma2 = s2;

    if (!suppress_noise && s2 > 0.0) {
        const double sd = std::sqrt(s2);
        for (Index i = 0; i < g.size(); ++i) g[i] += sd * rng.normal();
    }
    s.output = std::move(g);
    s.discrepancy = discrepancy(s.output, data.observed, norm);
    return s;
}

} // namespace subsim
