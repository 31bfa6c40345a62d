#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace kjet {

/// Throws std::invalid_argument with `msg` when `cond` is false.
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

/// Index basis for the homogeneous polynomials of a fixed degree on R^dim:
/// all exponent vectors alpha with |alpha| = degree, in lexicographic order.
/// Coefficient spaces of symmetric tensors are indexed through this object.
class MonomialBasis {
 public:
  MonomialBasis(int dim, int degree) : dim_(dim), degree_(degree) {
    require(dim >= 1 && degree >= 0, "MonomialBasis: bad dim/degree");
    std::vector<int> alpha(dim, 0);
    build(alpha, 0, degree);
    for (int i = 0; i < static_cast<int>(exponents_.size()); ++i)
      rank_[exponents_[i]] = i;
  }

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(exponents_.size()); }

  const std::vector<int>& exponent(int i) const { return exponents_[i]; }

  int rank(const std::vector<int>& alpha) const {
    auto it = rank_.find(alpha);
    require(it != rank_.end(), "MonomialBasis: exponent not in basis");
    return it->second;
  }

  /// Rank of the monomial obtained from a (not necessarily sorted) index
  /// tuple (i_1,...,i_k), i.e. x_{i_1}*...*x_{i_k}.
  int rank_of_tuple(const std::vector<int>& idx) const {
    std::vector<int> alpha(dim_, 0);
    for (int i : idx) {
      require(i >= 0 && i < dim_, "index out of range");
      ++alpha[i];
    }
    return rank(alpha);
  }

  /// Sorted index tuple (i_1 <= ... <= i_k) of monomial i.
  std::vector<int> tuple(int i) const {
    std::vector<int> idx;
    idx.reserve(degree_);
    const auto& a = exponents_[i];
    for (int v = 0; v < dim_; ++v)
      for (int c = 0; c < a[v]; ++c) idx.push_back(v);
    return idx;
  }

  /// degree! / prod(alpha_v!) -- the number of distinct arrangements.
  double multinomial(int i) const {
    const auto& a = exponents_[i];
    double r = factorial(degree_);
    for (int v = 0; v < dim_; ++v) r /= factorial(a[v]);
    return r;
  }

  static double factorial(int n) {
    double r = 1.0;
    for (int k = 2; k <= n; ++k) r *= k;
    return r;
  }

  /// Shared, cached basis per (dim, degree).
  static const MonomialBasis& get(int dim, int degree) {
    static std::mutex mtx;
    static std::map<std::pair<int, int>, std::unique_ptr<MonomialBasis>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_pair(dim, degree);
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache.emplace(key, std::make_unique<MonomialBasis>(dim, degree)).first;
    return *it->second;
  }

  /// Visits every distinct arrangement of the index tuple of monomial i.
  template <typename F>
  void for_each_arrangement(int i, F&& fn) const {
    std::vector<int> idx = tuple(i);
    // tuple() returns the sorted arrangement; iterate permutations.
    do {
      fn(idx);
    } while (std::next_permutation(idx.begin(), idx.end()));
  }

 private:
  void build(std::vector<int>& alpha, int pos, int left) {
    if (pos == dim_ - 1) {
      alpha[pos] = left;
      exponents_.push_back(alpha);
      return;
    }
    for (int c = left; c >= 0; --c) {
      alpha[pos] = c;
      build(alpha, pos + 1, left - c);
    }
    alpha[pos] = 0;
  }

  int dim_;
  int degree_;
  std::vector<std::vector<int>> exponents_;
  std::map<std::vector<int>, int> rank_;
};

}  // namespace kjet
