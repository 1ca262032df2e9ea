#pragma once

#include <string_view>

namespace cusumseg {

/// Side of the tracked boundary. Omega1 is the brain-tissue (bright) side,
/// Omega2 the skull / extracranial / background side.
enum class RegionLabel { Omega1, Omega2 };

inline RegionLabel other(RegionLabel r) {
    return r == RegionLabel::Omega1 ? RegionLabel::Omega2 : RegionLabel::Omega1;
}

inline std::string_view to_string(RegionLabel r) {
    return r == RegionLabel::Omega1 ? "Omega1" : "Omega2";
}

}  // namespace cusumseg
