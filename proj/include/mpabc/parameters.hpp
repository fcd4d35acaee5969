#pragma once

#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mpabc {

/// Named real parameters in insertion order. Names are unique and values finite.
class ParameterVector {
 public:
  using Entry = std::pair<std::string, double>;

  ParameterVector() = default;
  ParameterVector(std::initializer_list<Entry> entries);

  /// Inserts or overwrites; a new name is appended at the end.
  void set(std::string_view name, double value);

  double at(std::string_view name) const;
  std::optional<double> find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name).has_value(); }

  /// Copy of *this with every entry of `overrides` applied.
  ParameterVector merged(const ParameterVector& overrides) const;

  std::vector<std::string> names() const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  friend bool operator==(const ParameterVector&, const ParameterVector&) = default;

 private:
  std::vector<Entry> entries_;
};

} // namespace mpabc
