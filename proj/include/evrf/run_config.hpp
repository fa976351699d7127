#pragma once

#include "evrf/config.hpp"
#include "evrf/synth.hpp"
#include "evrf/training.hpp"

namespace evrf::io {

// [train] + [model] sections -> TrainConfig. Every field is addressable;
// unrecognized keys fail via Config::reject_unknown_keys at the call site.
train::TrainConfig load_train_config(Config& config);

// [scene] section: preset name plus shape/trajectory overrides.
synth::AnalyticScene load_scene(Config& config);

// [gen] section -> dataset generation settings.
synth::GenConfig load_gen_config(Config& config);

}  // namespace evrf::io
