#pragma once

#include <Eigen/Dense>

namespace levylab {

/// Largest state dimension supported by the stack-allocated work types.
inline constexpr int kMaxDim = 8;

/// Dynamic-size vector/matrix with inline storage up to kMaxDim; the hot loops
/// use these so no per-step heap allocation happens.
template <class S>
using VecT = Eigen::Matrix<S, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
template <class S>
using MatT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

using Vec = VecT<double>;
using Mat = MatT<double>;

}  // namespace levylab
