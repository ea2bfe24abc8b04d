#pragma once

#include "gosplit/experiment.hpp"

namespace fixtures {

// Default system (MobileNetV2 profile, paper-scale device/server/radio).
inline gosplit::SystemParams default_system() {
  return gosplit::build_system(gosplit::ExperimentConfig{});
}

inline gosplit::AccuracyLUT default_lut(const gosplit::SystemParams& sys) {
  return gosplit::build_lut(gosplit::ExperimentConfig{}, sys);
}

// Three-stage toy network with F = [1e6, 2e6, 4e6].
inline gosplit::SplitProfile toy_profile() {
  return gosplit::SplitProfile({{1000.0, 1e6}, {2e5, 2e6}, {10.0, 4e6}});
}

}  // namespace fixtures
