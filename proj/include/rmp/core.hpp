#pragma once

// Riemannian motion policy algebra: (f, A) pairs, soft normalization and
// metric-weighted combination.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace rmp {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;

template <typename Scalar>
struct RobotState {
  Vec3<Scalar> position = Vec3<Scalar>::Zero();
  Vec3<Scalar> velocity = Vec3<Scalar>::Zero();

  bool allFinite() const { return position.allFinite() && velocity.allFinite(); }
};

/// An acceleration f paired with its Riemannian metric A. The metric is kept
/// symmetric; construct through make() to symmetrize external input.
template <typename Scalar>
struct Policy {
  Vec3<Scalar> f = Vec3<Scalar>::Zero();
  Mat3<Scalar> A = Mat3<Scalar>::Zero();

  static Policy make(const Vec3<Scalar>& f, const Mat3<Scalar>& A) {
    return Policy{f, Scalar(0.5) * (A + A.transpose())};
  }
  static Policy zero() { return Policy{}; }

  bool isZeroMetric() const { return (A.array() == Scalar(0)).all(); }
};

using Policyd = Policy<double>;
using RobotStated = RobotState<double>;

/// Partial sums (sum A_i f_i, sum A_i) of a policy combination. Partial sums
/// from disjoint policy sets add, so callers can tree-reduce in any grouping
/// and resolve once at the end.
template <typename Scalar>
struct PolicySum {
  Vec3<Scalar> weighted_f = Vec3<Scalar>::Zero();
  Mat3<Scalar> metric = Mat3<Scalar>::Zero();

  static PolicySum of(const Policy<Scalar>& p) { return PolicySum{p.A * p.f, p.A}; }

  PolicySum& operator+=(const PolicySum& o) {
    weighted_f += o.weighted_f;
    metric += o.metric;
    return *this;
  }
  PolicySum& operator+=(const Policy<Scalar>& p) { return *this += of(p); }

  friend PolicySum operator+(PolicySum a, const PolicySum& b) { return a += b; }
};

using PolicySumd = PolicySum<double>;

template <typename Scalar>
inline constexpr Scalar kPinvRelativeCutoff = Scalar(1e-8);

/// Pseudoinverse of a symmetric PSD matrix. Eigenvalues at or below
/// kPinvRelativeCutoff * lambda_max are treated as zero.
template <typename Scalar>
Mat3<Scalar> pseudoInverseSym(const Mat3<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<Mat3<Scalar>> es(m);
  const auto& lambda = es.eigenvalues();
  const Scalar lambda_max = lambda.maxCoeff();
  if (!(lambda_max > Scalar(0))) return Mat3<Scalar>::Zero();
  const Scalar cutoff = kPinvRelativeCutoff<Scalar> * lambda_max;
  Vec3<Scalar> inv;
  for (int i = 0; i < 3; ++i) inv[i] = lambda[i] > cutoff ? Scalar(1) / lambda[i] : Scalar(0);
  const auto& V = es.eigenvectors();
  return V * inv.asDiagonal() * V.transpose();
}

template <typename Scalar>
Policy<Scalar> resolve(const PolicySum<Scalar>& sum) {
  return Policy<Scalar>::make(pseudoInverseSym<Scalar>(sum.metric) * sum.weighted_f, sum.metric);
}

/// Pairwise (tree) reduction of partial sums. The tree shape depends only on
/// sums.size(), so results are reproducible bit for bit.
template <typename Scalar>
PolicySum<Scalar> treeReduce(std::span<const PolicySum<Scalar>> sums) {
  if (sums.empty()) return {};
  if (sums.size() == 1) return sums.front();
  const std::size_t half = sums.size() / 2;
  return treeReduce<Scalar>(sums.first(half)) + treeReduce<Scalar>(sums.subspan(half));
}

/// Streaming pairwise summation: push terms one at a time, read the total
/// with finish(). Same tree as treeReduce for power-of-two block sizes while
/// keeping only O(log n) partials alive.
template <typename Scalar>
class PairwiseAccumulator {
 public:
  void push(const PolicySum<Scalar>& s) {
    PolicySum<Scalar> carry = s;
    std::size_t level = 0;
    while (count_ & (std::size_t{1} << level)) {
      carry = stack_[level] + carry;
      ++level;
    }
    stack_[level] = carry;
    ++count_;
  }

  PolicySum<Scalar> finish() const {
    PolicySum<Scalar> total;
    bool first = true;
    for (std::size_t level = 0; level < kLevels; ++level) {
      if (!(count_ & (std::size_t{1} << level))) continue;
      total = first ? stack_[level] : stack_[level] + total;
      first = false;
    }
    return total;
  }

  std::size_t count() const { return count_; }

 private:
  static constexpr std::size_t kLevels = 64;
  std::array<PolicySum<Scalar>, kLevels> stack_{};
  std::size_t count_ = 0;
};

/// Metric-weighted mean of a set of policies: ((sum A_i)^+ sum A_i f_i, sum A_i).
template <typename Scalar>
Policy<Scalar> combine(std::span<const Policy<Scalar>> policies) {
  std::vector<PolicySum<Scalar>> sums;
  sums.reserve(policies.size());
  for (const auto& p : policies) sums.push_back(PolicySum<Scalar>::of(p));
  return resolve<Scalar>(treeReduce<Scalar>(std::span<const PolicySum<Scalar>>(sums)));
}

template <typename Scalar>
Policy<Scalar> combine(std::initializer_list<Policy<Scalar>> policies) {
  return combine<Scalar>(std::span<const Policy<Scalar>>(policies.begin(), policies.size()));
}

/// v / (|v| + c log(1 + exp(-2 c |v|))). Output norm is strictly below one.
template <typename Derived>
Vec3<typename Derived::Scalar> softNormalize(const Eigen::MatrixBase<Derived>& v,
                                             typename Derived::Scalar c) {
  using Scalar = typename Derived::Scalar;
  const Scalar n = v.norm();
  if (n == Scalar(0)) return Vec3<Scalar>::Zero();
  return v / (n + c * std::log1p(std::exp(Scalar(-2) * c * n)));
}

template <typename Scalar>
bool isPsd(const Mat3<Scalar>& A, Scalar tol = Scalar(1e-9)) {
  const Mat3<Scalar> sym = Scalar(0.5) * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Mat3<Scalar>> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

}  // namespace rmp
