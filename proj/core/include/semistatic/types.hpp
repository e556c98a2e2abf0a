#ifndef SEMISTATIC_TYPES_HPP
#define SEMISTATIC_TYPES_HPP

#include <Eigen/Dense>

namespace semistatic {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace semistatic

#endif
