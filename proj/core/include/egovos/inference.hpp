#pragma once

#include <map>
#include <vector>

#include "egovos/dataset.hpp"
#include "egovos/segmenter.hpp"
#include "egovos/tta.hpp"

namespace egovos {

struct SequencePrediction {
  /// Original-size masks for every frame from the first annotated one on;
  /// the first annotated frame carries its ground truth.
  std::map<int, MaskMap> masks;
};

/// Propagates the first annotated mask through the sequence once per variant
/// (each with its own memory bank), maps every variant's probabilities back to
/// the padded frame, ensembles them, and crops to the original size.
/// A single {1.0, unflipped} variant is plain single-pass inference.
SequencePrediction predict_sequence(const Model& model, const SequenceData& seq,
                                    const std::vector<Variant>& variants);

}  // namespace egovos
