#pragma once

#include <bit>
#include <cstdint>
#include <vector>

namespace apmf {

// Dynamic bitset over node ids.
class NodeSet {
 public:
  NodeSet() = default;
  explicit NodeSet(int n) : n_(n), w_((n + 63) / 64, 0) {}

  int universe() const { return n_; }
  bool test(int v) const { return w_[v >> 6] >> (v & 63) & 1; }
  void set(int v) { w_[v >> 6] |= std::uint64_t{1} << (v & 63); }
  void reset(int v) { w_[v >> 6] &= ~(std::uint64_t{1} << (v & 63)); }
  void clear() { std::fill(w_.begin(), w_.end(), 0); }

  int count() const {
    int c = 0;
    for (auto x : w_) c += std::popcount(x);
    return c;
  }
  int count_and(const NodeSet& o) const {
    int c = 0;
    for (std::size_t i = 0; i < w_.size(); ++i) c += std::popcount(w_[i] & o.w_[i]);
    return c;
  }
  bool empty() const {
    for (auto x : w_)
      if (x) return false;
    return true;
  }

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < w_.size(); ++i)
      for (std::uint64_t x = w_[i]; x; x &= x - 1) f(int(i * 64 + std::countr_zero(x)));
  }
  std::vector<int> to_vector() const {
    std::vector<int> out;
    out.reserve(count());
    for_each([&](int v) { out.push_back(v); });
    return out;
  }
  static NodeSet from(int n, const std::vector<int>& ids) {
    NodeSet s(n);
    for (int v : ids) s.set(v);
    return s;
  }

  NodeSet& operator&=(const NodeSet& o) {
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] &= o.w_[i];
    return *this;
  }
  NodeSet& operator|=(const NodeSet& o) {
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] |= o.w_[i];
    return *this;
  }
  bool operator==(const NodeSet& o) const = default;

  const std::vector<std::uint64_t>& words() const { return w_; }
  std::vector<std::uint64_t>& words() { return w_; }

 private:
  int n_ = 0;
  std::vector<std::uint64_t> w_;
};

}  // namespace apmf
