#ifndef SUBSIM_METRIC_HPP
#define SUBSIM_METRIC_HPP

#include "subsim/types.hpp"

#include <stdexcept>

namespace subsim {

enum class Norm { L2, Linf };

/// Tolerance ball around the observed output vector; the boundary is inclusive.
struct DataRegion {
    Norm norm = Norm::L2;
    double epsilon = 0.0;

    DataRegion() = default;
    DataRegion(Norm n, double eps) : norm(n), epsilon(eps) {
        if (!(eps > 0.0)) throw std::invalid_argument("DataRegion: epsilon must be > 0");
    }
};

template <class Derived>
double vector_norm(const Eigen::MatrixBase<Derived>& v, Norm norm) {
    return norm == Norm::L2 ? v.norm() : v.template lpNorm<Eigen::Infinity>();
}

/// Distance between a simulated output and the observed vector.
template <class DerivedA, class DerivedB>
double discrepancy(const Eigen::MatrixBase<DerivedA>& y, const Eigen::MatrixBase<DerivedB>& z_hat,
                   Norm norm = Norm::L2) {
    if (y.size() != z_hat.size()) throw std::invalid_argument("discrepancy: length mismatch");
    return vector_norm(y - z_hat, norm);
}

template <class DerivedA, class DerivedB>
bool in_region(const Eigen::MatrixBase<DerivedA>& y, const Eigen::MatrixBase<DerivedB>& z_hat,
               const DataRegion& region) {
    return discrepancy(y, z_hat, region.norm) <= region.epsilon;
}

inline const char* norm_name(Norm n) { return n == Norm::L2 ? "l2" : "linf"; }

} // namespace subsim

#endif
