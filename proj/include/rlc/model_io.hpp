#pragma once

#include <string>
#include <string_view>

#include "rlc/anfis.hpp"

namespace rlc::anfis {

inline constexpr int kModelFormatVersion = 1;

/// Everything persisted alongside a trained model.
struct ModelFile {
  AnfisModel model;
  TrainHistory history;
  TrainConfig train_config;
  features::FactorKind factor_kind = features::FactorKind::WeeklySystem;
  std::string source_label;
};

/// JSON text. Doubles are written in shortest round-trip form, so
/// load(save(m)) reproduces every parameter bit for bit.
std::string save_model(const ModelFile& file);

/// Throws MalformedModelFile or VersionMismatch.
ModelFile load_model(std::string_view text);

}  // namespace rlc::anfis
