#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnrs {

template <class S> using Vec2 = Eigen::Matrix<S, 2, 1>;
template <class S> using Vec3 = Eigen::Matrix<S, 3, 1>;
template <class S> using Vec4 = Eigen::Matrix<S, 4, 1>;
template <class S> using Mat4 = Eigen::Matrix<S, 4, 4>;

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;
using Vec4d = Vec4<double>;
using Mat4d = Mat4<double>;
using ArrayXd = Eigen::ArrayXd;
using ArrayXXd = Eigen::ArrayXXd;

// Rank-3 Christoffel block Gamma^a_{bc}; outer index is the upper slot.
template <class S> using Christoffel = std::array<Mat4<S>, 4>;
using Christoffeld = Christoffel<double>;

inline constexpr double pi = 3.14159265358979323846;

// C2 monotone ramp: 0 for x<=0, 1 for x>=1.
template <class S> S smoothstep5(S x) {
  if (x <= S(0)) return S(0);
  if (x >= S(1)) return S(1);
  return x * x * x * (S(10) + x * (S(-15) + S(6) * x));
}

// Ramp from 0 at lo to 1 at hi; lo < hi required.
template <class S> S ramp(S x, S lo, S hi) { return smoothstep5((x - lo) / (hi - lo)); }

using ScalarField4 = std::function<double(const Vec4d&)>;

inline ScalarField4 constant_field(double c) {
  return ScalarField4{[c](const Vec4d&) { return c; }};
}

}  // namespace pnrs
