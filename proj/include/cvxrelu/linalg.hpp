#pragma once

#include "cvxrelu/types.hpp"

namespace cvxrelu {

// Numerical rank with a threshold relative to the largest singular value.
int numerical_rank(const Mat& A, double rel_tol = 1e-9);

// Orthonormal basis of the null space of A (columns).
Mat null_space(const Mat& A, double rel_tol = 1e-9);

// Orthonormal basis of the column space of A.
Mat range_basis(const Mat& A, double rel_tol = 1e-9);

// Projector onto the orthogonal complement of range(A); identity when A is empty.
Mat complement_projector(const Mat& A, int n);

Vec least_squares(const Mat& A, const Vec& b);

double binomial(int n, int k);

}  // namespace cvxrelu
