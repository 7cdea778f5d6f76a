#include "consensus_fdi/numerics.h"

#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "consensus_fdi/errors.h"

namespace consensus_fdi {
namespace {

Eigen::JacobiSVD<Eigen::MatrixXd> Decompose(
    const Eigen::Ref<const Eigen::MatrixXd>& m, int options) {
  if (m.size() == 0) throw SvdFailure("SVD of an empty matrix");
  if (!m.allFinite()) throw SvdFailure("SVD input has non-finite entries");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, options);
  if (svd.info() != Eigen::Success) throw SvdFailure("SVD did not converge");
  return svd;
}

int RankOf(const Eigen::VectorXd& sigma, double tol) {
  if (sigma.size() == 0 || sigma(0) == 0.0) return 0;
  const double cutoff = tol * sigma(0);
  int rank = 0;
  while (rank < sigma.size() && sigma(rank) > cutoff) ++rank;
  return rank;
}

void RequireSquare(const Eigen::Ref<const Eigen::MatrixXd>& m, const char* op) {
  if (m.rows() != m.cols()) {
    throw NonSquare(std::string(op) + ": matrix is " + std::to_string(m.rows()) +
                    "x" + std::to_string(m.cols()));
  }
}

}  // namespace

Eigen::MatrixXd PseudoInverse(const Eigen::Ref<const Eigen::MatrixXd>& m,
                              double tol) {
  const auto svd = Decompose(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const int rank = RankOf(sigma, tol);
  const Eigen::VectorXd inv = sigma.head(rank).cwiseInverse();
  return svd.matrixV().leftCols(rank) * inv.asDiagonal() *
         svd.matrixU().leftCols(rank).transpose();
}

Eigen::MatrixXd LeftNullBasis(const Eigen::Ref<const Eigen::MatrixXd>& m,
                              double tol) {
  const auto svd = Decompose(m, Eigen::ComputeFullU);
  const int rank = RankOf(svd.singularValues(), tol);
  return svd.matrixU().rightCols(m.rows() - rank).transpose();
}

int NumericalRank(const Eigen::Ref<const Eigen::MatrixXd>& m, double tol) {
  if (m.size() == 0) return 0;
  return RankOf(Decompose(m, 0).singularValues(), tol);
}

Eigen::MatrixXd MatrixPower(const Eigen::Ref<const Eigen::MatrixXd>& m, int p) {
  RequireSquare(m, "MatrixPower");
  if (p < 0) throw Error("MatrixPower: negative exponent");
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  Eigen::MatrixXd base = m;
  while (p > 0) {
    if (p & 1) result = result * base;
    p >>= 1;
    if (p > 0) base = base * base;
  }
  return result;
}

double SpectralRadius(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  RequireSquare(m, "SpectralRadius");
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  if (es.info() != Eigen::Success) throw Error("SpectralRadius: eigensolver failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace consensus_fdi
