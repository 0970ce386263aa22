#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "egovos/types.hpp"

namespace egovos {

/// |P ∩ G| / |P ∪ G| over pixels labelled `object`; 1 when both are empty.
double jaccard(const MaskMap& pred, const MaskMap& gt, int object);

/// Object pixels with a 4-neighbour outside the object. Pixels beyond the
/// image border count as outside. Row-major 0/1 flags.
std::vector<unsigned char> object_boundary(const MaskMap& mask, int object);

/// ceil(0.008 * image diagonal).
int default_boundary_tolerance(int height, int width);

/// Boundary F-measure: a boundary pixel matches when the other boundary has a
/// pixel within Euclidean distance `tolerance` (disk dilation). 1 when both
/// boundaries are empty; negative tolerance selects the default.
double boundary_f(const MaskMap& pred, const MaskMap& gt, int object, int tolerance = -1);

inline double jf_mean(double j, double f) { return 0.5 * (j + f); }

struct SequenceScore {
  std::string sequence;
  std::vector<double> object_j;  // mean over scored frames, per object
  std::vector<double> object_f;
  double j = 0;
  double f = 0;
  double jf = 0;
  std::vector<int> evaluated_frames;

  /// Aggregates per-object means: J and F are object means, J&F their mean.
  static SequenceScore from_object_means(std::string sequence, std::vector<double> object_j,
                                         std::vector<double> object_f,
                                         std::vector<int> evaluated_frames);
  nlohmann::json to_json() const;
};

/// Scores every annotated frame except the first (the given reference).
/// `preds` and `gts` are keyed by frame index and share the original size.
SequenceScore evaluate_sequence(const std::map<int, MaskMap>& preds,
                                const std::map<int, MaskMap>& gts,
                                const std::vector<int>& annotated, std::string sequence = "");

struct DatasetReport {
  std::vector<SequenceScore> sequences;
  double j = 0;
  double f = 0;
  double jf = 0;

  /// Fixed-width text table: one row per sequence plus the mean.
  std::string table() const;
  nlohmann::json to_json() const;
};

/// Unweighted mean over sequences.
DatasetReport evaluate_dataset(const std::vector<SequenceScore>& scores);

}  // namespace egovos
