#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tgnn/model.hpp"

namespace tgnn {

/// Gradients of the batch MSE loss, one tensor per ModelParams tensor with
/// identical shapes.
struct GradientSet : TensorBundle {
  ModelDims dims;
};

GradientSet zero_gradients(const ModelDims& dims);

struct BackwardResult {
  double loss = 0.0;
  GradientSet grads;
};

/// Mean squared error over the batch plus its gradient w.r.t. every
/// parameter, by reverse-mode differentiation through the full L-step
/// recurrence. The relu subgradient at exactly 0 is taken as 0.
///
/// Per-window contributions are computed independently (the parallel version
/// fans them out over OpenMP threads) and then reduced in window index
/// order, so both versions produce bitwise-identical results for any thread
/// count.
BackwardResult backward(std::span<const FeatureWindow> batch,
                        const TemporalGraphSpec& spec, const ModelParams& params);
BackwardResult backward_serial(std::span<const FeatureWindow> batch,
                               const TemporalGraphSpec& spec,
                               const ModelParams& params);

/// Batch loss only (no gradients); the forward path the oracle differentiates.
double batch_loss(std::span<const FeatureWindow> batch,
                  const TemporalGraphSpec& spec, const ModelParams& params);

/// Central-difference oracle: (loss(p + h e_k) - loss(p - h e_k)) / 2h for
/// every scalar parameter. Independent of the reverse-mode path.
GradientSet finite_diff_grad(std::span<const FeatureWindow> batch,
                             const TemporalGraphSpec& spec,
                             const ModelParams& params, double step = 1e-5);

struct GradCheckReport {
  double max_rel_err = 0.0;
  bool pass = false;
  std::string worst_tensor;
  std::size_t attempts = 0;   // resamples used to stay clear of relu kinks
  double min_abs_preact = 0.0;
};

/// Builds a random batch and parameters from the seed, then compares
/// backward against finite differences coordinate-wise with
/// rel_err = |a - f| / max(1e-8, |a| + |f|).
GradCheckReport gradient_check(std::uint64_t seed, const ModelDims& dims,
                               double tol = 1e-4, std::size_t window_len = 12,
                               std::size_t batch_size = 8);

}  // namespace tgnn
