#include <algorithm>
#include <cmath>
#include <numeric>

#include "pixcurate/errors.hpp"
#include "pixcurate/metrics.hpp"

namespace pixcurate {

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<std::size_t> nms_indices(const std::vector<BBox>& boxes, double iou_threshold) {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw ValidationError("IoU threshold must be in [0, 1]");
  }
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return boxes[l].score > boxes[r].score; });
  std::vector<std::size_t> kept;
  for (const std::size_t i : order) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return iou(boxes[i], boxes[k]) > iou_threshold;
    });
    if (!suppressed) kept.push_back(i);
  }
  return kept;
}

std::vector<BBox> nms(const std::vector<BBox>& boxes, double iou_threshold) {
  std::vector<BBox> out;
  for (const std::size_t i : nms_indices(boxes, iou_threshold)) out.push_back(boxes[i]);
  return out;
}

std::vector<BBox> filter_by_area(const std::vector<BBox>& boxes, double min_area) {
  std::vector<BBox> out;
  std::copy_if(boxes.begin(), boxes.end(), std::back_inserter(out),
               [&](const BBox& b) { return b.area() >= min_area; });
  return out;
}

PatchSpec crop_with_padding(const BBox& box, int img_w, int img_h, double pad) {
  if (!(box.x_min < box.x_max && box.y_min < box.y_max)) {
    throw ValidationError("degenerate bounding box");
  }
  if (pad < 0.0) throw ValidationError("padding must be non-negative");
  if (img_w < 1 || img_h < 1) throw ValidationError("image dimensions must be positive");
  const double px = pad * (box.x_max - box.x_min);
  const double py = pad * (box.y_max - box.y_min);
  const auto x0 = static_cast<int>(std::clamp(std::floor(box.x_min - px), 0.0, double(img_w)));
  const auto y0 = static_cast<int>(std::clamp(std::floor(box.y_min - py), 0.0, double(img_h)));
  const auto x1 = static_cast<int>(std::clamp(std::ceil(box.x_max + px), 0.0, double(img_w)));
  const auto y1 = static_cast<int>(std::clamp(std::ceil(box.y_max + py), 0.0, double(img_h)));
  if (x1 <= x0 || y1 <= y0) throw ValidationError("bounding box lies outside the image");
  return PatchSpec{x0, y0, x1 - x0, y1 - y0, 0};
}

}  // namespace pixcurate
