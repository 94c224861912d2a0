#ifndef SUBSIM_DATASET_HPP
#define SUBSIM_DATASET_HPP

#include "subsim/detail/hash.hpp"
#include "subsim/ground_motion.hpp"
#include "subsim/types.hpp"

#include <cstdint>
#include <stdexcept>

namespace subsim {

/// Measured input plus observed output series. The observed vector is laid
/// out channel-major per time step: [z_1^1 .. z_1^{No}, z_2^1 .. ].
struct Dataset {
    GroundMotion input;
    Vector observed;
    Index n_steps = 0;
    Index n_channels = 0;

    Dataset() = default;
    Dataset(GroundMotion input_, Vector observed_, Index n_channels_)
        : input(std::move(input_)), observed(std::move(observed_)), n_channels(n_channels_) {
        if (n_channels <= 0) throw std::invalid_argument("Dataset: n_channels must be >= 1");
        if (observed.size() == 0 || observed.size() % n_channels != 0)
            throw std::invalid_argument("Dataset: observed length must be a positive multiple of n_channels");
        n_steps = observed.size() / n_channels;
    }

    /// Content hash over (dt, input, observed); changes iff any of them does.
    std::uint64_t digest() const {
        detail::Fnv1a h;
        h.update_pod(input.dt);
        h.update_pod(static_cast<std::uint64_t>(input.accel.size()));
        h.update_doubles(input.accel.data(), static_cast<std::size_t>(input.accel.size()));
        h.update_pod(static_cast<std::uint64_t>(n_channels));
        h.update_doubles(observed.data(), static_cast<std::size_t>(observed.size()));
        return h.digest();
    }
};

} // namespace subsim

#endif
