#ifndef SUBSIM_MODAL_HPP
#define SUBSIM_MODAL_HPP

#include "subsim/types.hpp"

#include <Eigen/Dense>

#include <numbers>
#include <stdexcept>

namespace subsim {

/// C = c_M * M + c_K * K.
inline Matrix rayleigh_damping(double c_m, double c_k, const Matrix& mass, const Matrix& stiffness) {
    if (mass.rows() != mass.cols() || stiffness.rows() != stiffness.cols() ||
        mass.rows() != stiffness.rows())
        throw std::invalid_argument("rayleigh_damping: shape mismatch");
    return c_m * mass + c_k * stiffness;
}

/// Undamped natural frequencies in Hz, ascending, from K phi = lambda M phi.
inline Vector modal_frequencies(const Matrix& mass, const Matrix& stiffness) {
    if (mass.rows() != mass.cols() || stiffness.rows() != stiffness.cols() ||
        mass.rows() != stiffness.rows())
        throw std::invalid_argument("modal_frequencies: shape mismatch");
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(stiffness, mass,
                                                            Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("modal_frequencies: eigensolver failed");
    Vector freqs = solver.eigenvalues();
    for (Index i = 0; i < freqs.size(); ++i) {
        if (freqs[i] < -1e-9 * freqs.cwiseAbs().maxCoeff())
            throw std::runtime_error("modal_frequencies: negative eigenvalue");
        freqs[i] = std::sqrt(std::max(freqs[i], 0.0)) / (2.0 * std::numbers::pi);
    }
    return freqs;
}

/// Modal damping ratios implied by Rayleigh damping at the given frequencies.
inline Vector rayleigh_damping_ratios(double c_m, double c_k, const Vector& freqs_hz) {
    Vector zeta(freqs_hz.size());
    for (Index i = 0; i < zeta.size(); ++i) {
        const double w = 2.0 * std::numbers::pi * freqs_hz[i];
        zeta[i] = 0.5 * (c_m / w + c_k * w);
    }
    return zeta;
}

/// Tridiagonal stiffness of a shear building with story stiffnesses k..
inline Matrix shear_building_stiffness(const Vector& story_k) {
    const Index n = story_k.size();
    Matrix k = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        k(i, i) += story_k[i];
        if (i + 1 < n) {
            k(i, i) += story_k[i + 1];
            k(i, i + 1) -= story_k[i + 1];
            k(i + 1, i) -= story_k[i + 1];
        }
    }
    return k;
}

} // namespace subsim

#endif
