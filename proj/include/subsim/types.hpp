#ifndef SUBSIM_TYPES_HPP
#define SUBSIM_TYPES_HPP

#include <Eigen/Core>

#include <cstdint>

namespace subsim {

using Scalar = double;
using Index = Eigen::Index;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

template <class Derived>
using DenseBase = Eigen::DenseBase<Derived>;

/// Read-only view over any contiguous double vector (Eigen block, map, ...).
using ConstVectorRef = Eigen::Ref<const Vector>;

} // namespace subsim

#endif
