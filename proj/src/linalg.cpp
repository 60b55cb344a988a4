#include "cvxrelu/linalg.hpp"

#include <cmath>

namespace cvxrelu {

namespace {

int rank_from(const Vec& sv, double rel_tol) {
  if (sv.size() == 0) return 0;
  const double top = sv(0);
  if (top <= 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * top) ++r;
  return r;
}

}  // namespace

int numerical_rank(const Mat& A, double rel_tol) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(A);
  return rank_from(svd.singularValues(), rel_tol);
}

Mat null_space(const Mat& A, double rel_tol) {
  const Eigen::Index n = A.cols();
  if (n == 0) return Mat(0, 0);
  if (A.rows() == 0) return Mat::Identity(n, n);
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
  const int r = rank_from(svd.singularValues(), rel_tol);
  return svd.matrixV().rightCols(n - r);
}

Mat range_basis(const Mat& A, double rel_tol) {
  if (A.size() == 0) return Mat(A.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU);
  const int r = rank_from(svd.singularValues(), rel_tol);
  return svd.matrixU().leftCols(r);
}

Mat complement_projector(const Mat& A, int n) {
  Mat P = Mat::Identity(n, n);
  if (A.size() == 0) return P;
  Mat Q = range_basis(A);
  return P - Q * Q.transpose();
}

Vec least_squares(const Mat& A, const Vec& b) {
  if (A.cols() == 0) return Vec(0);
  return A.completeOrthogonalDecomposition().solve(b);
}

double binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

}  // namespace cvxrelu
