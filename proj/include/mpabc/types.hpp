#pragma once

#include <Eigen/Dense>

namespace mpabc {

using Scalar = double;

template <typename T>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using Matrix = MatrixX<Scalar>;
using Vector = VectorX<Scalar>;

} // namespace mpabc
