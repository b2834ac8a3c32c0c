#pragma once

#include "elab/planner/executor.hpp"

#include <string>

namespace elab::vds {
class VirtualDataSystem;
}

namespace elab::cosmic {

inline constexpr int max_shower_inputs = 8;

/// VDL for every shipped transformation: the lifetime, flux and shower
/// studies and the atomic steps they are built from.
std::string library_vdl();

/// Executables for the atomic transformations in library_vdl().
planner::Registry make_registry();

/// Defines the library in `vds` (idempotent).
void install_library(vds::VirtualDataSystem& vds);

} // namespace elab::cosmic
