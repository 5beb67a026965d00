#pragma once
#include <array>
#include <numbers>
#include <Eigen/Core>

namespace nomafd {
namespace util {

template <class Scalar_, int Rows_=Eigen::Dynamic, int Cols_=Eigen::Dynamic>
using mat_type = Eigen::Matrix<Scalar_, Rows_, Cols_>;

template <class Scalar_, int Rows_=Eigen::Dynamic>
using vec_type = Eigen::Matrix<Scalar_, Rows_, 1>;

template <class Scalar_>
using vec2_type = Eigen::Matrix<Scalar_, 2, 1>;

template <class Scalar_>
using mat2_type = Eigen::Matrix<Scalar_, 2, 2>;

template <class Scalar_>
using vec4_type = Eigen::Matrix<Scalar_, 4, 1>;

template <class Scalar_>
using mat4_type = Eigen::Matrix<Scalar_, 4, 4>;

using bool_mat_type = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

template <class T>
inline constexpr T ln2 = std::numbers::ln2_v<T>;

} // namespace util

/// Powers indexed (user, subcarrier). Users 0..M-1 are uplink, M..M+N-1 downlink.
template <class ValueType>
using PowerMatrix = util::mat_type<ValueType>;

inline constexpr int no_user = -1;

} // namespace nomafd
