#include "egovos/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "egovos/errors.hpp"

namespace egovos {

namespace {

void check_pair(const MaskMap& pred, const MaskMap& gt, int object) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw ShapeError("prediction and ground truth differ in size");
  }
  const int n = std::max(pred.num_objects(), gt.num_objects());
  if (object < 1 || object > n) {
    throw ShapeError("object id " + std::to_string(object) + " out of range [1," +
                     std::to_string(n) + "]");
  }
}

// Marks every pixel within Euclidean distance `r` of a set pixel.
std::vector<unsigned char> dilate_disk(const std::vector<unsigned char>& src, int h, int w, int r) {
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (dy * dy + dx * dx <= r * r) offsets.emplace_back(dy, dx);
  std::vector<unsigned char> out(src.size(), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!src[static_cast<std::size_t>(y) * w + x]) continue;
      for (auto [dy, dx] : offsets) {
        const int yy = y + dy, xx = x + dx;
        if (yy >= 0 && yy < h && xx >= 0 && xx < w) out[static_cast<std::size_t>(yy) * w + xx] = 1;
      }
    }
  return out;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 1.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

}  // namespace

double jaccard(const MaskMap& pred, const MaskMap& gt, int object) {
  check_pair(pred, gt, object);
  std::size_t inter = 0, uni = 0;
  const auto& p = pred.labels();
  const auto& g = gt.labels();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool a = p[i] == object, b = g[i] == object;
    inter += a && b;
    uni += a || b;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<unsigned char> object_boundary(const MaskMap& mask, int object) {
  const int h = mask.height(), w = mask.width();
  std::vector<unsigned char> out(static_cast<std::size_t>(h) * w, 0);
  auto inside = [&](int y, int x) {
    return y >= 0 && y < h && x >= 0 && x < w && mask.at(y, x) == object;
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (inside(y, x) &&
          (!inside(y - 1, x) || !inside(y + 1, x) || !inside(y, x - 1) || !inside(y, x + 1)))
        out[static_cast<std::size_t>(y) * w + x] = 1;
  return out;
}

int default_boundary_tolerance(int height, int width) {
  return static_cast<int>(std::ceil(0.008 * std::hypot(height, width)));
}

double boundary_f(const MaskMap& pred, const MaskMap& gt, int object, int tolerance) {
  check_pair(pred, gt, object);
  const int h = gt.height(), w = gt.width();
  if (tolerance < 0) tolerance = default_boundary_tolerance(h, w);
  const auto pb = object_boundary(pred, object);
  const auto gb = object_boundary(gt, object);
  const std::size_t np = std::accumulate(pb.begin(), pb.end(), std::size_t{0});
  const std::size_t ng = std::accumulate(gb.begin(), gb.end(), std::size_t{0});
  if (np == 0 && ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;
  const auto gd = dilate_disk(gb, h, w, tolerance);
  const auto pd = dilate_disk(pb, h, w, tolerance);
  std::size_t matched_p = 0, matched_g = 0;
  for (std::size_t i = 0; i < pb.size(); ++i) {
    matched_p += pb[i] && gd[i];
    matched_g += gb[i] && pd[i];
  }
  const double precision = static_cast<double>(matched_p) / np;
  const double recall = static_cast<double>(matched_g) / ng;
  if (precision + recall == 0) return 0.0;
  return 2 * precision * recall / (precision + recall);
}

SequenceScore SequenceScore::from_object_means(std::string sequence, std::vector<double> object_j,
                                               std::vector<double> object_f,
                                               std::vector<int> evaluated_frames) {
  SequenceScore s;
  s.sequence = std::move(sequence);
  s.j = mean_of(object_j);
  s.f = mean_of(object_f);
  s.jf = jf_mean(s.j, s.f);
  s.object_j = std::move(object_j);
  s.object_f = std::move(object_f);
  s.evaluated_frames = std::move(evaluated_frames);
  return s;
}

nlohmann::json SequenceScore::to_json() const {
  return {{"sequence", sequence}, {"J", j},         {"F", f},
          {"JF", jf},             {"object_J", object_j}, {"object_F", object_f},
          {"evaluated_frames", evaluated_frames}};
}

SequenceScore evaluate_sequence(const std::map<int, MaskMap>& preds,
                                const std::map<int, MaskMap>& gts,
                                const std::vector<int>& annotated, std::string sequence) {
  if (annotated.size() < 2) {
    throw ConfigError("sequence " + sequence + " has no annotated frames besides the first");
  }
  std::vector<int> scored(annotated.begin() + 1, annotated.end());
  int n = 0;
  for (int idx : annotated) {
    auto g = gts.find(idx);
    if (g == gts.end()) throw ConfigError("missing ground truth for frame " + std::to_string(idx));
    n = std::max(n, g->second.num_objects());
  }
  std::vector<double> jsum(n, 0.0), fsum(n, 0.0);
  for (int idx : scored) {
    auto p = preds.find(idx);
    if (p == preds.end()) {
      throw ConfigError("missing prediction for annotated frame " + std::to_string(idx) +
                        (sequence.empty() ? "" : " of " + sequence));
    }
    const MaskMap& gt = gts.at(idx);
    for (int obj = 1; obj <= n; ++obj) {
      jsum[obj - 1] += jaccard(p->second, gt, obj);
      fsum[obj - 1] += boundary_f(p->second, gt, obj);
    }
  }
  for (int i = 0; i < n; ++i) {
    jsum[i] /= static_cast<double>(scored.size());
    fsum[i] /= static_cast<double>(scored.size());
  }
  return SequenceScore::from_object_means(std::move(sequence), std::move(jsum), std::move(fsum),
                                          std::move(scored));
}

DatasetReport evaluate_dataset(const std::vector<SequenceScore>& scores) {
  if (scores.empty()) throw ConfigError("evaluate_dataset needs at least one sequence");
  DatasetReport r;
  r.sequences = scores;
  for (const auto& s : scores) {
    r.j += s.j;
    r.f += s.f;
    r.jf += s.jf;
  }
  const double n = static_cast<double>(scores.size());
  r.j /= n;
  r.f /= n;
  r.jf /= n;
  return r;
}

std::string DatasetReport::table() const {
  std::ostringstream os;
  char line[160];
  os << "# J&F report: per-sequence scores; mean row is the unweighted mean over sequences\n";
  std::snprintf(line, sizeof line, "%-24s | %7s | %7s | %7s\n", "Sequence", "J&F", "J", "F");
  os << line << std::string(24, '-') << "-+-" << std::string(7, '-') << "-+-"
     << std::string(7, '-') << "-+-" << std::string(7, '-') << '\n';
  auto row = [&](const std::string& name, double jf, double jj, double ff) {
    std::snprintf(line, sizeof line, "%-24s | %6.1f%% | %6.1f%% | %6.1f%%\n", name.c_str(),
                  100 * jf, 100 * jj, 100 * ff);
    os << line;
  };
  for (const auto& s : sequences) row(s.sequence, s.jf, s.j, s.f);
  row("mean", jf, j, f);
  return os.str();
}

nlohmann::json DatasetReport::to_json() const {
  nlohmann::json seqs = nlohmann::json::array();
  for (const auto& s : sequences) seqs.push_back(s.to_json());
  return {{"aggregation", "unweighted mean over sequences"},
          {"J", j},
          {"F", f},
          {"JF", jf},
          {"sequences", seqs}};
}

}  // namespace egovos
