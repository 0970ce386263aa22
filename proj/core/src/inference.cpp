#include "egovos/inference.hpp"

#include "egovos/errors.hpp"
#include "egovos/raster.hpp"

namespace egovos {

SequencePrediction predict_sequence(const Model& model, const SequenceData& seq,
                                    const std::vector<Variant>& variants) {
  if (variants.empty()) throw ConfigError("inference needs at least one variant");
  if (seq.annotated.empty()) throw ConfigError("sequence " + seq.sequence + " has no annotated frame");
  NoGradGuard no_grad;
  const int first = seq.annotated.front();
  const int T = static_cast<int>(seq.frames.size());
  const int H = seq.frames[first].height(), W = seq.frames[first].width();
  const int r = model.config().memory.write_interval;
  const MaskMap gt0 = seq.padded_mask(first);

  std::vector<std::vector<ProbabilityVolume>> per_frame(T);
  for (const Variant& v : variants) {
    std::optional<Tensor> d0;
    if (const Tensor* d = seq.depth(first)) d0 = apply_variant(*d, v);
    MemoryBank bank = init_from_first_frame(model, apply_variant(seq.frames[first], v),
                                            d0 ? &*d0 : nullptr, apply_variant(gt0, v), first);
    for (int t = first + 1; t < T; ++t) {
      std::optional<Tensor> dt;
      if (const Tensor* d = seq.depth(t)) dt = apply_variant(*d, v);
      SegmentResult res = segment_frame(model, apply_variant(seq.frames[t], v),
                                        dt ? &*dt : nullptr, t, bank, r);
      per_frame[t].push_back(invert_probability(res.probs, v, H, W));
    }
  }

  SequencePrediction out;
  out.masks.emplace(first, seq.masks.at(first));
  for (int t = first + 1; t < T; ++t) {
    EnsembleResult e = ensemble(per_frame[t]);
    out.masks.emplace(t, crop(e.mask, seq.orig_h(), seq.orig_w()));
  }
  return out;
}

}  // namespace egovos
