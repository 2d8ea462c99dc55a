#pragma once

#include <compare>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>

namespace rdpos {

/// Integer identifier tagged with the kind of entity it names. Ordering is
/// numeric, which coincides with the lexicographic order of the zero-padded
/// display names.
template <class Tag>
struct Id {
  std::uint32_t value{};

  friend constexpr auto operator<=>(Id, Id) = default;
};

using VehicleId = Id<struct VehicleTag>;
using CandidateId = Id<struct CandidateTag>;

inline std::string to_string(VehicleId id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "v%03u", id.value);
  return buf;
}

inline std::string to_string(CandidateId id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "r%03u", id.value);
  return buf;
}

}  // namespace rdpos

template <class Tag>
struct std::hash<rdpos::Id<Tag>> {
  std::size_t operator()(rdpos::Id<Tag> id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
