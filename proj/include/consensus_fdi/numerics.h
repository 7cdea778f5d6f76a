#pragma once

#include <Eigen/Core>

namespace consensus_fdi {

/// Relative singular-value cutoff used when deciding numerical rank.
inline constexpr double kDefaultRankTol = 1e-10;

/// Moore-Penrose pseudoinverse via SVD. Singular values below
/// tol * sigma_max are treated as zero.
Eigen::MatrixXd PseudoInverse(const Eigen::Ref<const Eigen::MatrixXd>& m,
                              double tol = kDefaultRankTol);

/// Rows form an orthonormal basis of the left null space of `m`
/// (B * m = 0, B * B^T = I). Has rows() - rank(m) rows, possibly zero.
Eigen::MatrixXd LeftNullBasis(const Eigen::Ref<const Eigen::MatrixXd>& m,
                              double tol = kDefaultRankTol);

int NumericalRank(const Eigen::Ref<const Eigen::MatrixXd>& m,
                  double tol = kDefaultRankTol);

/// m^p by repeated squaring; m^0 is the identity. Throws NonSquare.
Eigen::MatrixXd MatrixPower(const Eigen::Ref<const Eigen::MatrixXd>& m, int p);

/// Largest eigenvalue modulus. Throws NonSquare.
double SpectralRadius(const Eigen::Ref<const Eigen::MatrixXd>& m);

}  // namespace consensus_fdi
