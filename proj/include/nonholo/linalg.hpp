#pragma once

#include <vector>

#include <Eigen/Dense>

namespace nonholo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double max_abs(const Vec& x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; }

/// 2-norm condition number of a symmetric positive definite matrix.
double spd_condition(const Mat& a);

/// 2-norm condition number of a general square matrix (SVD).
double condition_number(const Mat& a);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace nonholo
