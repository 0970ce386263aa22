#include "egovos/raster.hpp"

#include "egovos/errors.hpp"
#include "egovos/ops.hpp"

namespace egovos {

namespace {

// Symmetric mirror index for any integer position.
int mirror(int i, int n) {
  const int period = 2 * n;
  int k = i % period;
  if (k < 0) k += period;
  return k < n ? k : period - 1 - k;
}

struct RasterView {
  int channels, height, width;
};

RasterView view_of(const Tensor& t) {
  if (t.rank() == 3) return {t.dim(0), t.dim(1), t.dim(2)};
  if (t.rank() == 2) return {1, t.dim(0), t.dim(1)};
  throw ShapeError("raster must be [C,H,W] or [H,W], got " + shape_string(t.shape()));
}

std::vector<int> like(const Tensor& t, int height, int width) {
  if (t.rank() == 3) return {t.dim(0), height, width};
  return {height, width};
}

}  // namespace

Frame pad_to_multiple(const Tensor& image, int m) {
  if (m < 1) throw ShapeError("padding multiple must be >= 1");
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) == 0 || image.dim(2) == 0) {
    throw ShapeError("pad_to_multiple needs a nonempty [3,h,w] image, got " +
                     shape_string(image.shape()));
  }
  const int h = image.dim(1), w = image.dim(2);
  const int ph = (h + m - 1) / m * m, pw = (w + m - 1) / m * m;
  return Frame(pad_reflect(image, ph, pw), h, w);
}

Tensor pad_reflect(const Tensor& raster, int height, int width) {
  const RasterView v = view_of(raster);
  if (v.height == 0 || v.width == 0) throw ShapeError("cannot pad an empty raster");
  if (height < v.height || width < v.width) throw ShapeError("pad target smaller than raster");
  Tensor out(like(raster, height, width));
  for (int c = 0; c < v.channels; ++c)
    for (int y = 0; y < height; ++y) {
      const int sy = mirror(y, v.height);
      for (int x = 0; x < width; ++x) {
        out[(static_cast<std::size_t>(c) * height + y) * width + x] =
            raster[(static_cast<std::size_t>(c) * v.height + sy) * v.width + mirror(x, v.width)];
      }
    }
  return out;
}

MaskMap pad_reflect(const MaskMap& mask, int height, int width) {
  if (mask.height() == 0 || mask.width() == 0) throw ShapeError("cannot pad an empty mask");
  if (height < mask.height() || width < mask.width()) throw ShapeError("pad target too small");
  std::vector<int> labels(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      labels[static_cast<std::size_t>(y) * width + x] =
          mask.at(mirror(y, mask.height()), mirror(x, mask.width()));
  return MaskMap(height, width, mask.num_objects(), std::move(labels));
}

Tensor crop(const Tensor& raster, int height, int width) {
  const RasterView v = view_of(raster);
  if (height > v.height || width > v.width) throw ShapeError("crop larger than raster");
  Tensor out(like(raster, height, width));
  for (int c = 0; c < v.channels; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        out[(static_cast<std::size_t>(c) * height + y) * width + x] =
            raster[(static_cast<std::size_t>(c) * v.height + y) * v.width + x];
  return out;
}

MaskMap crop(const MaskMap& mask, int height, int width) {
  if (height > mask.height() || width > mask.width()) throw ShapeError("crop larger than mask");
  std::vector<int> labels(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) labels[static_cast<std::size_t>(y) * width + x] = mask.at(y, x);
  return MaskMap(height, width, mask.num_objects(), std::move(labels));
}

MaskMap argmax_decode(const Tensor& scores) {
  if (scores.rank() != 3 || scores.dim(0) < 1) {
    throw ShapeError("argmax_decode expects [(N+1),H,W]");
  }
  const int c = scores.dim(0), h = scores.dim(1), w = scores.dim(2);
  const std::size_t px = static_cast<std::size_t>(h) * w;
  std::vector<int> labels(px, 0);
  for (std::size_t p = 0; p < px; ++p) {
    int best = 0;
    for (int k = 1; k < c; ++k)
      if (scores[k * px + p] > scores[best * px + p]) best = k;
    labels[p] = best;
  }
  return MaskMap(h, w, c - 1, std::move(labels));
}

MaskMap argmax_decode(const ProbabilityVolume& p) { return argmax_decode(p.probs()); }

Tensor resize_bilinear(const Tensor& raster, int height, int width) {
  const RasterView v = view_of(raster);
  NoGradGuard no_grad;
  Var in(raster.reshaped({v.channels, v.height, v.width}));
  Tensor out = ops::resize_bilinear(in, height, width).value();
  return out.reshaped(like(raster, height, width));
}

MaskMap resize_nearest(const MaskMap& mask, int height, int width) {
  if (height <= 0 || width <= 0) throw ShapeError("empty resize target");
  std::vector<int> labels(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(mask.height() - 1, static_cast<int>((y + 0.5) * mask.height() / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(mask.width() - 1, static_cast<int>((x + 0.5) * mask.width() / width));
      labels[static_cast<std::size_t>(y) * width + x] = mask.at(sy, sx);
    }
  }
  return MaskMap(height, width, mask.num_objects(), std::move(labels));
}

Tensor flip_horizontal(const Tensor& raster) {
  const RasterView v = view_of(raster);
  Tensor out(raster.shape());
  for (int c = 0; c < v.channels; ++c)
    for (int y = 0; y < v.height; ++y) {
      const std::size_t row = (static_cast<std::size_t>(c) * v.height + y) * v.width;
      for (int x = 0; x < v.width; ++x) out[row + x] = raster[row + v.width - 1 - x];
    }
  return out;
}

MaskMap flip_horizontal(const MaskMap& mask) {
  std::vector<int> labels(mask.labels().size());
  const int w = mask.width();
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < w; ++x) labels[static_cast<std::size_t>(y) * w + x] = mask.at(y, w - 1 - x);
  return MaskMap(mask.height(), w, mask.num_objects(), std::move(labels));
}

Tensor downsample_indicator(const MaskMap& mask, int object, int factor) {
  if (factor < 1 || mask.height() % factor || mask.width() % factor) {
    throw ShapeError("mask size is not a multiple of the downsampling factor");
  }
  const int h = mask.height() / factor, w = mask.width() / factor;
  Tensor out({1, h, w});
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.at(y, x) == object) out.at(0, y / factor, x / factor) = 1.0;
  return out;
}

}  // namespace egovos
