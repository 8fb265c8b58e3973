#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ddpmctl {

/// A simulation or solver produced a non-finite value or failed to converge.
/// `index` carries the offending step/epoch/iteration when one is known.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(what), index_(index) {}

  [[nodiscard]] std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  std::optional<std::size_t> index_;
};

}  // namespace ddpmctl
