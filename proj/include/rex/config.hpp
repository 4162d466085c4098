// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "rex/synth.hpp"
#include "rex/train.hpp"

namespace rex {

// Plain key-value config files: one "key = value" per line, '#' comments.
// Unknown keys are errors. List-valued keys may repeat.

/// Keys: base_lr, batch_size, epochs, warmup_fraction, seeds (comma list),
/// adam_beta1, adam_beta2, adam_eps, grad_clip, allow_zero_epochs, dim,
/// ff_dim, max_len, vocab_size, vocab_min_count, init_scale, lowercase.
TrainConfig parse_train_config(std::string_view text, TrainConfig base = {});
TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base = {});

/// Scalar keys mirror SynthConfig fields. Repeatable keys:
///   relation = <name> <SUBJ_TYPE> <OBJ_TYPE>
///   template = <label>[,<label>...] | <tokens with SUBJ and OBJ>
///   cues     = <TYPE> | <word> <word> ...
///   shared_cues = <word> <word> ...
/// Any relation/template/cues line replaces the corresponding default list.
SynthConfig parse_synth_config(std::string_view text, SynthConfig base = SynthConfig::defaults());
SynthConfig load_synth_config(const std::filesystem::path& path,
                              SynthConfig base = SynthConfig::defaults());

std::string format_synth_config(const SynthConfig& cfg);

}  // namespace rex
