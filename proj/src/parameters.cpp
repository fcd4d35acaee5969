#include "mpabc/parameters.hpp"

#include <algorithm>
#include <cmath>

#include "mpabc/errors.hpp"

namespace mpabc {

ParameterVector::ParameterVector(std::initializer_list<Entry> entries) {
  for (const auto& [name, value] : entries) set(name, value);
}

void ParameterVector::set(std::string_view name, double value) {
  if (!std::isfinite(value)) throw ModelError("parameter '" + std::string(name) + "' is not finite");
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.first == name; });
  if (it != entries_.end())
    it->second = value;
  else
    entries_.emplace_back(std::string(name), value);
}

std::optional<double> ParameterVector::find(std::string_view name) const {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.first == name; });
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

double ParameterVector::at(std::string_view name) const {
  if (auto v = find(name)) return *v;
  throw ModelError("missing parameter '" + std::string(name) + "'");
}

ParameterVector ParameterVector::merged(const ParameterVector& overrides) const {
  ParameterVector out = *this;
  for (const auto& [name, value] : overrides) out.set(name, value);
  return out;
}

std::vector<std::string> ParameterVector::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.first);
  return out;
}

} // namespace mpabc
