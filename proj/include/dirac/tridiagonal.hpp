#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dirac/errors.hpp"

// Symmetric tridiagonal kernels. d: diagonal (size n), e: off-diagonal (size n-1).
namespace dirac::tridiag {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// LDL^T of (T - shift) without pivoting.
template <typename Scalar>
class Ldlt {
 public:
  Ldlt(const Vec<Scalar>& d, const Vec<Scalar>& e, Scalar shift, Scalar pivot_tol = Scalar(1e-13))
      : e_(e), piv_(d.size()) {
    const Eigen::Index n = d.size();
    for (Eigen::Index i = 0; i < n; ++i) {
      Scalar p = d[i] - shift;
      if (i > 0) p -= e_[i - 1] * e_[i - 1] / piv_[i - 1];
      if (std::abs(p) < pivot_tol) {
        ok_ = false;
        bad_ = i;
        return;
      }
      piv_[i] = p;
    }
  }
  bool ok() const { return ok_; }
  Eigen::Index failed_index() const { return bad_; }

  Vec<Scalar> solve(const Vec<Scalar>& b) const {
    const Eigen::Index n = piv_.size();
    Vec<Scalar> x = b;
    for (Eigen::Index i = 1; i < n; ++i) x[i] -= e_[i - 1] / piv_[i - 1] * x[i - 1];
    for (Eigen::Index i = 0; i < n; ++i) x[i] /= piv_[i];
    for (Eigen::Index i = n - 2; i >= 0; --i) x[i] -= e_[i] / piv_[i] * x[i + 1];
    return x;
  }
  // Column of (T - shift)^{-1} at index j.
  Vec<Scalar> column(Eigen::Index j) const {
    Vec<Scalar> b = Vec<Scalar>::Zero(piv_.size());
    b[j] = Scalar(1);
    return solve(b);
  }

 private:
  Vec<Scalar> e_;
  Vec<Scalar> piv_;
  bool ok_ = true;
  Eigen::Index bad_ = -1;
};

// Number of eigenvalues strictly below x (Sturm sequence).
template <typename Scalar>
Eigen::Index sturm_count(const Vec<Scalar>& d, const Vec<Scalar>& e, Scalar x) {
  const Eigen::Index n = d.size();
  const Scalar tiny = std::numeric_limits<Scalar>::min() / std::numeric_limits<Scalar>::epsilon();
  Eigen::Index count = 0;
  Scalar q = d[0] - x;
  if (q < 0) ++count;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (std::abs(q) < tiny) q = q < 0 ? -tiny : tiny;
    q = d[i] - x - e[i - 1] * e[i - 1] / q;
    if (q < 0) ++count;
  }
  return count;
}

template <typename Scalar>
Scalar gershgorin_radius(const Vec<Scalar>& d, const Vec<Scalar>& e) {
  const Eigen::Index n = d.size();
  Scalar r = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Scalar s = std::abs(d[i]);
    if (i > 0) s += std::abs(e[i - 1]);
    if (i + 1 < n) s += std::abs(e[i]);
    r = std::max(r, s);
  }
  return r;
}

// Eigenvalue with 0-based rank j by bisection.
template <typename Scalar>
Scalar bisect_rank(const Vec<Scalar>& d, const Vec<Scalar>& e, Eigen::Index j, Scalar lo, Scalar hi) {
  for (int it = 0; it < 200; ++it) {
    Scalar mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(d, e, mid) > j)
      hi = mid;
    else
      lo = mid;
  }
  return lo + (hi - lo) / 2;
}

// Eigenvalues in [a, b), ascending.
template <typename Scalar>
Vec<Scalar> eigenvalues_in(const Vec<Scalar>& d, const Vec<Scalar>& e, Scalar a, Scalar b) {
  const Scalar r = gershgorin_radius(d, e) * Scalar(1.0001) + Scalar(1e-300);
  a = std::max(a, -r);
  b = std::min(b, r);
  if (!(a < b)) return Vec<Scalar>();
  const Eigen::Index lo_rank = sturm_count(d, e, a);
  const Eigen::Index hi_rank = sturm_count(d, e, b);
  Vec<Scalar> out(hi_rank - lo_rank);
  for (Eigen::Index j = lo_rank; j < hi_rank; ++j) out[j - lo_rank] = bisect_rank(d, e, j, a, b);
  return out;
}

// Implicit-shift QL. On return d holds eigenvalues (ascending); if z is given it must be the
// identity (or a basis to rotate) and receives eigenvectors as columns.
template <typename Scalar>
void ql_implicit(Vec<Scalar>& d, Vec<Scalar> e_in, Mat<Scalar>* z, int max_iter = 60) {
  const Eigen::Index n = d.size();
  if (n == 0) return;
  Vec<Scalar> e(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) e[i] = e_in[i];
  e[n - 1] = 0;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  for (Eigen::Index l = 0; l < n; ++l) {
    int iter = 0;
    Eigen::Index mm;
    do {
      for (mm = l; mm < n - 1; ++mm) {
        Scalar dd = std::abs(d[mm]) + std::abs(d[mm + 1]);
        if (std::abs(e[mm]) <= eps * dd) break;
      }
      if (mm != l) {
        if (iter++ == max_iter)
          throw Error(ErrorKind::convergence_failure, "QL iteration cap at index " + std::to_string(l));
        Scalar g = (d[l + 1] - d[l]) / (Scalar(2) * e[l]);
        Scalar r = std::hypot(g, Scalar(1));
        g = d[mm] - d[l] + e[l] / (g + (g >= 0 ? std::abs(r) : -std::abs(r)));
        Scalar s = 1, c = 1, p = 0;
        Eigen::Index i;
        for (i = mm - 1; i >= l; --i) {
          Scalar f = s * e[i];
          Scalar b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == Scalar(0)) {
            d[i + 1] -= p;
            e[mm] = 0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + Scalar(2) * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          if (z) {
            for (Eigen::Index k = 0; k < z->rows(); ++k) {
              f = (*z)(k, i + 1);
              (*z)(k, i + 1) = s * (*z)(k, i) + c * f;
              (*z)(k, i) = c * (*z)(k, i) - s * f;
            }
          }
        }
        if (r == Scalar(0) && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[mm] = 0;
      }
    } while (mm != l);
  }
  // sort ascending
  std::vector<Eigen::Index> order(n);
  for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return d[a] < d[b]; });
  Vec<Scalar> ds(n);
  for (Eigen::Index i = 0; i < n; ++i) ds[i] = d[order[i]];
  d = ds;
  if (z) {
    Mat<Scalar> zs(z->rows(), n);
    for (Eigen::Index i = 0; i < n; ++i) zs.col(i) = z->col(order[i]);
    *z = std::move(zs);
  }
}

// Tridiagonal LU with partial pivoting of (T - shift), for inverse iteration.
template <typename Scalar>
class PivotedLu {
 public:
  PivotedLu(const Vec<Scalar>& d, const Vec<Scalar>& e, Scalar shift, Scalar tiny)
      : n_(d.size()), a_(n_), b_(n_), c_(n_), l_(n_), swap_(n_, false) {
    // row i: sub l, diag a, super b, super2 c
    Vec<Scalar> diag = d.array() - shift;
    Scalar sub_next = n_ > 1 ? e[0] : Scalar(0);
    a_[0] = diag[0];
    b_[0] = n_ > 1 ? e[0] : Scalar(0);
    c_[0] = 0;
    for (Eigen::Index i = 0; i + 1 < n_; ++i) {
      Scalar sub = sub_next;  // T(i+1, i)
      Scalar dn = diag[i + 1];
      Scalar en = i + 2 < n_ ? e[i + 1] : Scalar(0);
      if (std::abs(a_[i]) >= std::abs(sub)) {
        Scalar mlt = a_[i] == Scalar(0) ? Scalar(0) : sub / a_[i];
        l_[i] = mlt;
        a_[i + 1] = dn - mlt * b_[i];
        b_[i + 1] = en;
        c_[i + 1] = 0;
      } else {
        // swap rows i and i+1
        swap_[i] = true;
        Scalar mlt = a_[i] / sub;
        l_[i] = mlt;
        Scalar ai = sub, bi = dn, ci = en;
        a_[i + 1] = b_[i] - mlt * dn;
        b_[i + 1] = c_[i] - mlt * en;
        c_[i + 1] = 0;
        a_[i] = ai;
        b_[i] = bi;
        c_[i] = ci;
      }
      if (i + 2 < n_) sub_next = e[i + 1];
    }
    for (Eigen::Index i = 0; i < n_; ++i)
      if (std::abs(a_[i]) < tiny) a_[i] = a_[i] < 0 ? -tiny : tiny;
  }

  void solve_in_place(Vec<Scalar>& x) const {
    for (Eigen::Index i = 0; i + 1 < n_; ++i) {
      if (swap_[i]) std::swap(x[i], x[i + 1]);
      x[i + 1] -= l_[i] * x[i];
    }
    for (Eigen::Index i = n_ - 1; i >= 0; --i) {
      Scalar s = x[i];
      if (i + 1 < n_) s -= b_[i] * x[i + 1];
      if (i + 2 < n_) s -= c_[i] * x[i + 2];
      x[i] = s / a_[i];
    }
  }

 private:
  Eigen::Index n_;
  Vec<Scalar> a_, b_, c_, l_;
  std::vector<bool> swap_;
};

// Eigenvectors for given eigenvalues (ascending) by inverse iteration; vectors of eigenvalues
// closer than cluster_tol * ||T|| are re-orthogonalised against each other.
template <typename Scalar>
Mat<Scalar> inverse_iteration(const Vec<Scalar>& d, const Vec<Scalar>& e, const Vec<Scalar>& lambda,
                              Scalar cluster_tol = Scalar(1e-5)) {
  const Eigen::Index n = d.size();
  const Eigen::Index k = lambda.size();
  Mat<Scalar> V(n, k);
  const Scalar norm = std::max(gershgorin_radius(d, e), Scalar(1e-300));
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  Eigen::Index cluster_start = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (j > 0 && lambda[j] - lambda[j - 1] > cluster_tol * norm) cluster_start = j;
    Scalar shift = lambda[j];
    // separate coincident shifts inside a cluster
    if (j > cluster_start) {
      Scalar prev = lambda[j - 1];
      if (shift - prev < Scalar(10) * eps * norm) shift = prev + Scalar(10) * eps * norm;
    }
    PivotedLu<Scalar> lu(d, e, shift, eps * norm);
    Vec<Scalar> x(n);
    std::uint64_t state = 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(j + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      state ^= state >> 12;
      state ^= state << 25;
      state ^= state >> 27;
      x[i] = Scalar(static_cast<double>((state * 0x2545F4914F6CDD1DULL) >> 11) * 0x1.0p-53 - 0.5);
    }
    x.normalize();
    for (int it = 0; it < 8; ++it) {
      lu.solve_in_place(x);
      for (Eigen::Index c = cluster_start; c < j; ++c) x -= V.col(c).dot(x) * V.col(c);
      Scalar nx = x.norm();
      x /= nx;
      if (it >= 1 && nx > Scalar(1) / (Scalar(1000) * eps * norm) ) {
        // converged in the usual dstein sense; one more sweep for accuracy
        lu.solve_in_place(x);
        for (Eigen::Index c = cluster_start; c < j; ++c) x -= V.col(c).dot(x) * V.col(c);
        x.normalize();
        break;
      }
    }
    // deterministic sign: first largest component positive
    Eigen::Index arg;
    x.cwiseAbs().maxCoeff(&arg);
    if (x[arg] < 0) x = -x;
    V.col(j) = x;
  }
  return V;
}

}  // namespace dirac::tridiag
