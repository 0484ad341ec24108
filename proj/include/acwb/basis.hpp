#ifndef ACWB_BASIS_HPP_
#define ACWB_BASIS_HPP_

// Design and penalty construction for structured base learners: B-spline
// bases, difference penalties, centering against the linear span, tensor
// products, dummy encodings, and the degrees-of-freedom <-> penalty mapping.
//
// Everything here is a pure function templated on the scalar type.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include "acwb/common.hpp"

namespace acwb {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Clamped knot vector: degree+1 copies of each boundary plus the interior knots.
template <typename Scalar>
struct KnotVector {
  std::vector<Scalar> interior;
  int degree = 3;
  Scalar lower = 0;
  Scalar upper = 1;

  Index dimension() const { return static_cast<Index>(interior.size()) + degree + 1; }

  std::vector<Scalar> full() const {
    std::vector<Scalar> t;
    t.reserve(interior.size() + 2 * static_cast<std::size_t>(degree + 1));
    t.insert(t.end(), static_cast<std::size_t>(degree + 1), lower);
    t.insert(t.end(), interior.begin(), interior.end());
    t.insert(t.end(), static_cast<std::size_t>(degree + 1), upper);
    return t;
  }

  void validate() const {
    if (degree < 0 || degree > 15) throw std::invalid_argument("spline degree must lie in [0, 15]");
    if (!(lower < upper)) throw std::invalid_argument("spline boundary must satisfy lower < upper");
    if (dimension() < 1) throw std::invalid_argument("spline basis has no functions");
    if (!std::is_sorted(interior.begin(), interior.end()))
      throw std::invalid_argument("interior knots must be sorted");
    for (Scalar k : interior)
      if (k < lower || k > upper) throw std::invalid_argument("interior knot outside the boundary");
  }
};

template <typename Scalar>
KnotVector<Scalar> equidistant_knots(Scalar lower, Scalar upper, int n_interior, int degree) {
  KnotVector<Scalar> kv;
  kv.degree = degree;
  kv.lower = lower;
  kv.upper = upper;
  for (int k = 1; k <= n_interior; ++k)
    kv.interior.push_back(lower + (upper - lower) * Scalar(k) / Scalar(n_interior + 1));
  return kv;
}

inline constexpr int kMaxSplineDegree = 15;

// Evaluates the degree+1 basis functions that can be nonzero at x (Cox-de Boor
// triangle). Writes them to `values` and returns the index of the first one.
// x is clamped to the boundary.
template <typename Scalar>
Index bspline_local(Scalar x, const KnotVector<Scalar>& kv, std::span<const Scalar> knots, std::span<Scalar> values) {
  const int p = kv.degree;
  const Index q = kv.dimension();
  x = std::clamp(x, kv.lower, kv.upper);
  // Span index mu with t[mu] <= x < t[mu+1]; the right boundary belongs to the last span.
  Index mu;
  if (x >= kv.upper) {
    mu = q - 1;
    while (mu > p && !(knots[static_cast<std::size_t>(mu)] < knots[static_cast<std::size_t>(mu + 1)])) --mu;
  } else {
    auto it = std::upper_bound(knots.begin() + p, knots.begin() + q + 1, x);
    mu = static_cast<Index>(it - knots.begin()) - 1;
  }
  std::array<Scalar, kMaxSplineDegree + 1> left{}, right{};
  values[0] = Scalar(1);
  for (int j = 1; j <= p; ++j) {
    left[static_cast<std::size_t>(j)] = x - knots[static_cast<std::size_t>(mu + 1 - j)];
    right[static_cast<std::size_t>(j)] = knots[static_cast<std::size_t>(mu + j)] - x;
    Scalar saved = 0;
    for (int r = 0; r < j; ++r) {
      const Scalar denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const Scalar temp = denom == Scalar(0) ? Scalar(0) : values[static_cast<std::size_t>(r)] / denom;
      values[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    values[static_cast<std::size_t>(j)] = saved;
  }
  return mu - p;
}

// n x q sparse B-spline design; degree+1 nonzeros per row.
template <typename Scalar>
Eigen::SparseMatrix<Scalar> bspline_design_sparse(const VectorX<Scalar>& x, const KnotVector<Scalar>& kv) {
  kv.validate();
  const auto knots = kv.full();
  const int p = kv.degree;
  std::vector<Eigen::Triplet<Scalar>> trip;
  trip.reserve(static_cast<std::size_t>(x.size() * (p + 1)));
  std::vector<Scalar> vals(static_cast<std::size_t>(p + 1));
  for (Index i = 0; i < x.size(); ++i) {
    const Index first = bspline_local<Scalar>(x[i], kv, knots, vals);
    for (int k = 0; k <= p; ++k)
      if (vals[static_cast<std::size_t>(k)] != Scalar(0))
        trip.emplace_back(i, first + k, vals[static_cast<std::size_t>(k)]);
  }
  Eigen::SparseMatrix<Scalar> B(x.size(), kv.dimension());
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

template <typename Scalar>
MatrixX<Scalar> bspline_design(const VectorX<Scalar>& x, const KnotVector<Scalar>& kv) {
  return MatrixX<Scalar>(bspline_design_sparse<Scalar>(x, kv));
}

// P = D'D with D the order-th forward difference operator, (dim-order) x dim.
template <typename Scalar>
MatrixX<Scalar> difference_matrix(int order, Index dim) {
  if (order < 1) throw std::invalid_argument("difference order must be positive");
  if (dim <= order) throw std::invalid_argument("penalty dimension must exceed the difference order");
  MatrixX<Scalar> D = MatrixX<Scalar>::Identity(dim, dim);
  for (int k = 0; k < order; ++k) {
    const Index r = D.rows() - 1;
    D = (D.bottomRows(r) - D.topRows(r)).eval();
  }
  return D;
}

template <typename Scalar>
MatrixX<Scalar> difference_penalty(int order, Index dim) {
  const MatrixX<Scalar> D = difference_matrix<Scalar>(order, dim);
  return D.transpose() * D;
}

template <typename Scalar>
MatrixX<Scalar> ridge_penalty(Index dim) {
  return MatrixX<Scalar>::Identity(dim, dim);
}

template <typename Scalar>
struct CenteredBasis {
  // q x (q-2): maps centered coefficients to raw spline coefficients.
  MatrixX<Scalar> transform;
  MatrixX<Scalar> design;   // B * transform
  MatrixX<Scalar> penalty;  // transform' P transform
};

// Null-space basis of the 2 x q constraint [1 x]' B: spline coefficient
// directions whose fitted curves are orthogonal to every affine function of x
// in the training inner product.
template <typename Scalar, typename Design>
MatrixX<Scalar> centering_transform(const Design& basis, const VectorX<Scalar>& x) {
  const Index n = x.size();
  const Index q = basis.cols();
  if (basis.rows() != n) throw std::invalid_argument("design and x differ in length");
  if (q < 3) throw std::invalid_argument("centering needs at least 3 basis functions");
  const Scalar mean = x.mean();
  const Scalar sd = std::sqrt((x.array() - mean).square().sum() / Scalar(std::max<Index>(n - 1, 1)));
  if (!(sd > Scalar(0))) throw std::invalid_argument("centering requires a non-constant feature");
  MatrixX<Scalar> affine(n, 2);
  affine.col(0).setOnes();
  affine.col(1) = (x.array() - mean) / sd;
  const MatrixX<Scalar> ct = (affine.transpose() * basis).transpose();  // q x 2
  Eigen::HouseholderQR<MatrixX<Scalar>> qr(ct);
  const MatrixX<Scalar> R = qr.matrixQR().template triangularView<Eigen::Upper>();
  const Scalar r0 = std::abs(R(0, 0));
  if (!(r0 > Scalar(0)) || std::abs(R(1, 1)) <= Scalar(1e-10) * r0)
    throw std::invalid_argument("centering constraint is rank deficient (constant feature)");
  const MatrixX<Scalar> Q = qr.householderQ() * MatrixX<Scalar>::Identity(q, q);
  return Q.rightCols(q - 2);
}

template <typename Scalar>
CenteredBasis<Scalar> center_spline_basis(const MatrixX<Scalar>& design, const VectorX<Scalar>& x,
                                          const MatrixX<Scalar>& penalty) {
  CenteredBasis<Scalar> out;
  out.transform = centering_transform<Scalar>(design, x);
  out.design = design * out.transform;
  out.penalty = out.transform.transpose() * penalty * out.transform;
  return out;
}

inline constexpr Index kMaxTensorWidth = 10000;

// Row-wise Kronecker product: row i of the result is kron(A.row(i), B.row(i)).
template <typename Scalar>
Eigen::SparseMatrix<Scalar> row_kronecker(const Eigen::SparseMatrix<Scalar>& A, const Eigen::SparseMatrix<Scalar>& B) {
  if (A.rows() != B.rows()) throw std::invalid_argument("tensor product needs matching row counts");
  if (A.cols() * B.cols() > kMaxTensorWidth) throw std::invalid_argument("tensor product width exceeds 10^4");
  using RowMajor = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;
  const RowMajor a = A;
  const RowMajor b = B;
  std::vector<Eigen::Triplet<Scalar>> trip;
  for (Index i = 0; i < a.rows(); ++i)
    for (typename RowMajor::InnerIterator ia(a, i); ia; ++ia)
      for (typename RowMajor::InnerIterator ib(b, i); ib; ++ib)
        trip.emplace_back(i, ia.col() * B.cols() + ib.col(), ia.value() * ib.value());
  Eigen::SparseMatrix<Scalar> out(A.rows(), A.cols() * B.cols());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

template <typename Scalar>
MatrixX<Scalar> kronecker(const MatrixX<Scalar>& A, const MatrixX<Scalar>& B) {
  MatrixX<Scalar> out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < A.cols(); ++j) out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

// Kronecker-sum penalty PA (x) I + I (x) PB.
template <typename Scalar>
MatrixX<Scalar> tensor_penalty(const MatrixX<Scalar>& penA, const MatrixX<Scalar>& penB) {
  if (penA.rows() * penB.rows() > kMaxTensorWidth) throw std::invalid_argument("tensor product width exceeds 10^4");
  return kronecker<Scalar>(penA, MatrixX<Scalar>::Identity(penB.rows(), penB.rows())) +
         kronecker<Scalar>(MatrixX<Scalar>::Identity(penA.rows(), penA.rows()), penB);
}

template <typename Scalar>
struct TensorProduct {
  MatrixX<Scalar> design;
  MatrixX<Scalar> penalty;
};

template <typename Scalar>
TensorProduct<Scalar> tensor_product(const MatrixX<Scalar>& designA, const MatrixX<Scalar>& designB,
                                     const MatrixX<Scalar>& penA, const MatrixX<Scalar>& penB) {
  if (designA.rows() != designB.rows()) throw std::invalid_argument("tensor product needs matching row counts");
  if (designA.cols() * designB.cols() > kMaxTensorWidth) throw std::invalid_argument("tensor product width exceeds 10^4");
  TensorProduct<Scalar> out;
  out.design.resize(designA.rows(), designA.cols() * designB.cols());
  for (Index i = 0; i < designA.rows(); ++i)
    for (Index a = 0; a < designA.cols(); ++a)
      out.design.row(i).segment(a * designB.cols(), designB.cols()) = designA(i, a) * designB.row(i);
  out.penalty = tensor_penalty<Scalar>(penA, penB);
  return out;
}

// One indicator column per level, no reference level.
template <typename Scalar>
Eigen::SparseMatrix<Scalar> dummy_encode_sparse(std::span<const std::int32_t> codes, Index n_levels) {
  if (n_levels < 1) throw std::invalid_argument("dummy encoding needs at least one level");
  std::vector<Eigen::Triplet<Scalar>> trip;
  trip.reserve(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] < 0 || codes[i] >= n_levels) throw std::invalid_argument("level code out of range");
    trip.emplace_back(static_cast<Index>(i), codes[i], Scalar(1));
  }
  Eigen::SparseMatrix<Scalar> X(static_cast<Index>(codes.size()), n_levels);
  X.setFromTriplets(trip.begin(), trip.end());
  return X;
}

template <typename Scalar>
MatrixX<Scalar> dummy_encode(std::span<const std::int32_t> codes, Index n_levels) {
  if (codes.empty()) throw std::invalid_argument("cannot encode an empty column");
  return MatrixX<Scalar>(dummy_encode_sparse<Scalar>(codes, n_levels));
}

// Hat-matrix trace tr(X (X'X + lambda P)^-1 X') from the Gram matrix G = X'X.
template <typename Scalar>
Scalar smoother_trace(const MatrixX<Scalar>& gram, const MatrixX<Scalar>& penalty, Scalar lambda) {
  MatrixX<Scalar> A = gram + lambda * penalty;
  Eigen::LDLT<MatrixX<Scalar>> ldlt(A);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < Scalar(1e-13)) {
    A.diagonal().array() += Scalar(1e-10) * std::max(Scalar(1), gram.diagonal().cwiseAbs().maxCoeff());
    ldlt.compute(A);
  }
  return ldlt.solve(gram).trace();
}

// Numerical rank of a symmetric PSD matrix.
template <typename Scalar>
Index psd_rank(const MatrixX<Scalar>& m, Scalar rel_tol = Scalar(1e-10)) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(m, Eigen::EigenvaluesOnly);
  const VectorX<Scalar> ev = es.eigenvalues();
  const Scalar top = ev.cwiseAbs().maxCoeff();
  if (!(top > Scalar(0))) return 0;
  return static_cast<Index>((ev.array() > rel_tol * top).count());
}

// Demmler-Reinsch form of the smoother trace, trace(lambda) = sum_i 1 / (1 + lambda s_i).
// With G = V diag(d) V', coefficients outside the range of G only enter the
// penalty, so they are minimized out (Schur complement P_eff); s holds the
// eigenvalues of d^-1/2 V' P_eff V d^-1/2 over the range of G.
template <typename Scalar>
struct TraceSpectrum {
  VectorX<Scalar> s;  // ascending; the unpenalized directions come first as exact zeros
  Index unpenalized = 0;

  Index rank() const { return s.size(); }
  Scalar trace(Scalar lambda) const { return (Scalar(1) / (Scalar(1) + lambda * s.array())).sum(); }
  // Limit as lambda grows.
  Scalar limit() const { return static_cast<Scalar>(unpenalized); }
};

template <typename Scalar>
MatrixX<Scalar> psd_pinv(const MatrixX<Scalar>& m, Scalar rel_tol = Scalar(1e-10)) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(m);
  const VectorX<Scalar>& ev = es.eigenvalues();
  const Scalar top = ev.size() ? ev.cwiseAbs().maxCoeff() : Scalar(0);
  VectorX<Scalar> inv = VectorX<Scalar>::Zero(ev.size());
  for (Index i = 0; i < ev.size(); ++i)
    if (ev[i] > rel_tol * top) inv[i] = Scalar(1) / ev[i];
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

template <typename Scalar>
TraceSpectrum<Scalar> trace_spectrum(const MatrixX<Scalar>& gram, const MatrixX<Scalar>& penalty) {
  const Index q = gram.rows();
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eg(gram);
  const VectorX<Scalar>& d = eg.eigenvalues();
  const Scalar dtop = q ? d.cwiseAbs().maxCoeff() : Scalar(0);
  std::vector<Index> range, null;
  for (Index i = 0; i < q; ++i) (d[i] > Scalar(1e-10) * dtop ? range : null).push_back(i);
  const auto r = static_cast<Index>(range.size());
  const auto k = static_cast<Index>(null.size());
  MatrixX<Scalar> Vr(q, r), Vn(q, k);
  VectorX<Scalar> w(r);
  for (Index i = 0; i < r; ++i) {
    Vr.col(i) = eg.eigenvectors().col(range[static_cast<std::size_t>(i)]);
    w[i] = Scalar(1) / std::sqrt(d[range[static_cast<std::size_t>(i)]]);
  }
  for (Index i = 0; i < k; ++i) Vn.col(i) = eg.eigenvectors().col(null[static_cast<std::size_t>(i)]);
  MatrixX<Scalar> P = Vr.transpose() * penalty * Vr;
  if (k > 0) {
    const MatrixX<Scalar> Prn = Vr.transpose() * penalty * Vn;
    const MatrixX<Scalar> Pnn = Vn.transpose() * penalty * Vn;
    P -= Prn * psd_pinv<Scalar>(Scalar(0.5) * (Pnn + Pnn.transpose())) * Prn.transpose();
  }
  MatrixX<Scalar> M = w.asDiagonal() * P * w.asDiagonal();
  M = Scalar(0.5) * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(M, Eigen::EigenvaluesOnly);
  TraceSpectrum<Scalar> out;
  out.s = es.eigenvalues().cwiseMax(Scalar(0));
  // The null dimension is read off P_eff in orthonormal coordinates, where it
  // is well scaled; the d^-1/2 weighting can spread s over many decades.
  out.unpenalized = r - psd_rank<Scalar>(Scalar(0.5) * (P + P.transpose()));
  out.s.head(out.unpenalized).setZero();
  return out;
}

class DfUnreachable : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Penalty strength lambda giving trace(X (X'X + lambda P)^-1 X') = df.
// Root search on log(lambda) with the Illinois variant of regula falsi; the
// trace is strictly decreasing in lambda. Returns 0 when df >= rank(X).
template <typename Scalar>
Scalar df_to_lambda_gram(const MatrixX<Scalar>& gram, const MatrixX<Scalar>& penalty, Scalar df,
                         Scalar tol = Scalar(1e-10)) {
  if (!(df > Scalar(0))) throw std::invalid_argument("degrees of freedom must be positive");
  const auto spec = trace_spectrum<Scalar>(gram, penalty);
  if (df >= Scalar(spec.rank())) return Scalar(0);
  if (df <= spec.limit() + tol)
    throw DfUnreachable("df unreachable: below the limiting trace of the penalty null space");

  auto f = [&](Scalar log_lambda) { return spec.trace(std::exp(log_lambda)) - df; };
  const Scalar top = std::max(spec.s.maxCoeff(), std::numeric_limits<Scalar>::min());
  Scalar lo = -std::log(top) - Scalar(10);
  Scalar hi = -std::log(top) + Scalar(10);
  Scalar flo = f(lo);
  Scalar fhi = f(hi);
  for (int k = 0; k < 60 && flo < Scalar(0); ++k) {
    lo -= Scalar(10);
    flo = f(lo);
  }
  for (int k = 0; k < 60 && fhi > Scalar(0); ++k) {
    hi += Scalar(10);
    fhi = f(hi);
  }
  if (std::abs(flo) <= tol) return std::exp(lo);
  if (std::abs(fhi) <= tol) return std::exp(hi);
  int side = 0;
  Scalar mid = lo;
  for (int it = 0; it < 500; ++it) {
    mid = (lo * fhi - hi * flo) / (fhi - flo);
    const Scalar fm = f(mid);
    if (std::abs(fm) <= tol || hi - lo < Scalar(1e-14)) break;
    if (fm > Scalar(0)) {
      lo = mid;
      flo = fm;
      if (side == -1) fhi /= Scalar(2);
      side = -1;
    } else {
      hi = mid;
      fhi = fm;
      if (side == 1) flo /= Scalar(2);
      side = 1;
    }
  }
  return std::exp(mid);
}

template <typename Scalar>
Scalar df_to_lambda(const MatrixX<Scalar>& design, const MatrixX<Scalar>& penalty, Scalar df) {
  const MatrixX<Scalar> gram = design.transpose() * design;
  return df_to_lambda_gram<Scalar>(gram, penalty, df);
}

}  // namespace acwb

#endif  // ACWB_BASIS_HPP_
