#include <cmath>

#include "screencorr/errors.hpp"
#include "screencorr/trainer.hpp"

namespace screencorr {

GradCheckReport grad_check(EncoderModel model, const ModalityTokens& sample, const std::vector<int>& mask,
                           double step) {
  const MaskedTokens masked = apply_mask(sample, mask);
  std::vector<double> analytic(model.layout().total_size(), 0.0);
  loss_and_gradient(model, sample, masked, false, nullptr, analytic);
  for (double g : analytic) {
    if (!std::isfinite(g)) throw Error(ErrorCode::kNonFiniteGradient, "analytic gradient is not finite");
  }

  GradCheckReport report;
  std::span<double> values = model.values();
  for (const TensorSpec& t : model.layout().tensors()) {
    double diff_sq = 0.0, an_sq = 0.0, fd_sq = 0.0;
    for (std::size_t i = t.offset; i < t.offset + t.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = compute_loss(model, sample, masked).total;
      values[i] = saved - step;
      const double down = compute_loss(model, sample, masked).total;
      values[i] = saved;
      const double fd = (up - down) / (2.0 * step);
      if (!std::isfinite(fd)) throw Error(ErrorCode::kNonFiniteGradient, "finite difference for " + t.name);
      diff_sq += (analytic[i] - fd) * (analytic[i] - fd);
      an_sq += analytic[i] * analytic[i];
      fd_sq += fd * fd;
    }
    GradCheckEntry e;
    e.tensor = t.name;
    e.analytic_norm = std::sqrt(an_sq);
    e.numeric_norm = std::sqrt(fd_sq);
    e.relative_error = std::sqrt(diff_sq) / std::max(1e-8, e.analytic_norm + e.numeric_norm);
    report.max_relative_error = std::max(report.max_relative_error, e.relative_error);
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace screencorr
