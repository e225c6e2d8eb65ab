#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <utility>
#include <vector>

namespace speedup {

using FeatureId = std::uint32_t;

/// Sparse real vector kept as (id, value) pairs sorted by id. Explicit zeros
/// are dropped so that equality compares mathematical vectors.
class SparseVector {
 public:
  using Entry = std::pair<FeatureId, double>;

  SparseVector() = default;
  SparseVector(std::initializer_list<Entry> entries) {
    for (const auto& [id, v] : entries) add(id, v);
  }

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  double get(FeatureId id) const {
    auto it = lower(id);
    return (it != entries_.end() && it->first == id) ? it->second : 0.0;
  }

  void add(FeatureId id, double value) {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                               [](const Entry& e, FeatureId key) { return e.first < key; });
    if (it != entries_.end() && it->first == id) {
      it->second += value;
      if (it->second == 0.0) entries_.erase(it);
    } else if (value != 0.0) {
      entries_.insert(it, {id, value});
    }
  }

  void set(FeatureId id, double value) {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                               [](const Entry& e, FeatureId key) { return e.first < key; });
    if (it != entries_.end() && it->first == id) {
      if (value == 0.0) {
        entries_.erase(it);
      } else {
        it->second = value;
      }
    } else if (value != 0.0) {
      entries_.insert(it, {id, value});
    }
  }

  /// this += scale * other, via a single merge pass.
  void axpy(double scale, const SparseVector& other) {
    if (other.empty() || scale == 0.0) return;
    std::vector<Entry> out;
    out.reserve(entries_.size() + other.entries_.size());
    auto a = entries_.begin();
    auto b = other.entries_.begin();
    while (a != entries_.end() || b != other.entries_.end()) {
      if (b == other.entries_.end() || (a != entries_.end() && a->first < b->first)) {
        out.push_back(*a++);
      } else if (a == entries_.end() || b->first < a->first) {
        double v = scale * b->second;
        if (v != 0.0) out.emplace_back(b->first, v);
        ++b;
      } else {
        double v = a->second + scale * b->second;
        if (v != 0.0) out.emplace_back(a->first, v);
        ++a;
        ++b;
      }
    }
    entries_ = std::move(out);
  }

  SparseVector& operator+=(const SparseVector& other) {
    axpy(1.0, other);
    return *this;
  }
  SparseVector& operator-=(const SparseVector& other) {
    axpy(-1.0, other);
    return *this;
  }

  double dot(const SparseVector& other) const {
    double sum = 0.0;
    auto a = entries_.begin();
    auto b = other.entries_.begin();
    while (a != entries_.end() && b != other.entries_.end()) {
      if (a->first < b->first) {
        ++a;
      } else if (b->first < a->first) {
        ++b;
      } else {
        sum += a->second * b->second;
        ++a;
        ++b;
      }
    }
    return sum;
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& e : entries_) s += e.second * e.second;
    return s;
  }
  double norm() const { return std::sqrt(squared_norm()); }

  friend SparseVector operator+(SparseVector lhs, const SparseVector& rhs) { return lhs += rhs; }
  friend SparseVector operator-(SparseVector lhs, const SparseVector& rhs) { return lhs -= rhs; }
  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  std::vector<Entry>::const_iterator lower(FeatureId id) const {
    return std::lower_bound(entries_.begin(), entries_.end(), id,
                            [](const Entry& e, FeatureId key) { return e.first < key; });
  }

  std::vector<Entry> entries_;
};

}  // namespace speedup
