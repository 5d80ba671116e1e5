#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pdtmc/ratfunc/bigrational.hpp"

namespace pdtmc {

/// Handle to a named parameter. Indices are assigned in interning order.
struct ParamId {
  std::uint32_t index = 0;
  auto operator<=>(const ParamId&) const = default;
};

/// The set of parameter names a family of polynomials ranges over.
class ParamSpace {
 public:
  ParamSpace() = default;
  explicit ParamSpace(const std::vector<std::string>& names) {
    for (const auto& n : names) intern(n);
  }

  ParamId intern(std::string_view name) {
    if (auto id = find(name)) return *id;
    const auto idx = static_cast<std::uint32_t>(names_.size());
    names_.emplace_back(name);
    index_.emplace(names_.back(), idx);
    return ParamId{idx};
  }

  std::optional<ParamId> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return ParamId{it->second};
  }

  const std::string& name(ParamId id) const { return names_.at(id.index); }
  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  bool operator==(const ParamSpace& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// An exact point in parameter space.
using ParamValuation = std::map<ParamId, BigRational>;

}  // namespace pdtmc
