#include "screencorr/geometry.hpp"

#include <algorithm>

#include "screencorr/errors.hpp"

namespace screencorr {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedDocument: return "MalformedDocument";
    case ErrorCode::kMalformedBounds: return "MalformedBounds";
    case ErrorCode::kDuplicateElementId: return "DuplicateElementId";
    case ErrorCode::kUnknownCategoryName: return "UnknownCategoryName";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyScreen: return "EmptyScreen";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kUnknownCategory: return "UnknownCategory";
    case ErrorCode::kModelVersionMismatch: return "ModelVersionMismatch";
    case ErrorCode::kEmptyIndex: return "EmptyIndex";
    case ErrorCode::kEmptyAnnotationStore: return "EmptyAnnotationStore";
    case ErrorCode::kNoMatch: return "NoMatch";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kCheckpointMismatch: return "CheckpointMismatch";
  }
  return "Error";
}

bool BoundingBox::valid() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  return x1 <= x2 && y1 <= y2 && in_unit(x1) && in_unit(y1) && in_unit(x2) && in_unit(y2);
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

}  // namespace screencorr
