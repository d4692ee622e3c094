#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tgnn/graph.hpp"
#include "tgnn/numerics.hpp"

namespace tgnn {

struct ModelDims {
  std::size_t nodes = 4;       // |V|
  std::size_t feature_dim = 1; // d, per-node features
  std::size_t gcn_hidden = 8;  // per-node embedding size
  std::size_t hidden = 16;     // recurrent state size

  std::size_t gru_input() const { return nodes * gcn_hidden; }
  bool operator==(const ModelDims&) const = default;
};

/// All learnable tensors. Gradients, Adam moments and checkpoints reuse this
/// layout; for_each_tensor fixes the canonical tensor order everywhere
/// (optimizer updates, serialization, flattening).
struct TensorBundle {
  Matrix gcn_w;                 // gcn_hidden x feature_dim, neighbor term
  Matrix gcn_u;                 // gcn_hidden x feature_dim, self term
  Matrix gru_wr, gru_wz, gru_wn; // hidden x gru_input
  Matrix gru_ur, gru_uz, gru_un; // hidden x hidden
  std::vector<double> gru_br, gru_bz, gru_bn; // hidden
  std::vector<double> fc_w;     // hidden
  double fc_b = 0.0;
};

/// Visits every tensor as (name, span) in the canonical order:
/// gcn_w, gcn_u, gru_wr, gru_wz, gru_wn, gru_ur, gru_uz, gru_un,
/// gru_br, gru_bz, gru_bn, fc_w, fc_b.
template <typename Bundle, typename Fn>
void for_each_tensor(Bundle& bundle, Fn&& fn) {
  fn("gcn_w", std::span(bundle.gcn_w.data));
  fn("gcn_u", std::span(bundle.gcn_u.data));
  fn("gru_wr", std::span(bundle.gru_wr.data));
  fn("gru_wz", std::span(bundle.gru_wz.data));
  fn("gru_wn", std::span(bundle.gru_wn.data));
  fn("gru_ur", std::span(bundle.gru_ur.data));
  fn("gru_uz", std::span(bundle.gru_uz.data));
  fn("gru_un", std::span(bundle.gru_un.data));
  fn("gru_br", std::span(bundle.gru_br));
  fn("gru_bz", std::span(bundle.gru_bz));
  fn("gru_bn", std::span(bundle.gru_bn));
  fn("fc_w", std::span(bundle.fc_w));
  fn("fc_b", std::span(&bundle.fc_b, 1));
}

struct ModelParams : TensorBundle {
  ModelDims dims;
  std::uint64_t init_seed = 0;
};

/// L consecutive scaled node-feature vectors plus the scaled power target.
/// features is row-major: step t occupies [t*step_dim, (t+1)*step_dim).
struct FeatureWindow {
  std::int64_t target_timestamp = 0;
  double target = 0.0;
  std::size_t steps = 0;
  std::size_t step_dim = 0;  // nodes * feature_dim
  std::vector<double> features;

  std::span<const double> step(std::size_t t) const {
    return std::span(features).subspan(t * step_dim, step_dim);
  }
  bool operator==(const FeatureWindow&) const = default;
};

/// Weight matrices via uniform_init with their fan-in, biases zero.
/// Tensors are drawn from a single stream in canonical order.
ModelParams init_params(std::uint64_t seed, const ModelDims& dims);

/// Allocates a zero bundle with the shapes implied by dims.
TensorBundle zero_bundle(const ModelDims& dims);

struct GcnTrace {
  std::span<double> neighbor_mean;  // nodes * feature_dim
};

struct GruTrace {
  std::span<double> reset;     // r gate
  std::span<double> update;    // u gate
  std::span<double> cand;      // n = tanh(...)
  std::span<double> rec_cand;  // q = U_n * h_prev, reused by the backward pass
};

/// Spatial layer: per node i,
///   z_i = relu( gcn_w * mean_{j in N(i)} x_j + gcn_u * x_i )
/// with the neighbor term zero when N(i) is empty. Outputs are concatenated
/// in node order into z_out (length nodes*gcn_hidden). min_abs_preact, when
/// given, is lowered to the smallest |preactivation| seen (relu kink probe).
void gcn_forward(std::span<const double> x, const TemporalGraphSpec& spec,
                 const ModelParams& params, std::span<double> z_out,
                 GcnTrace* trace = nullptr, double* min_abs_preact = nullptr);

/// One recurrent update:
///   r = sigmoid(W_r z + U_r h + b_r)
///   u = sigmoid(W_z z + U_z h + b_z)
///   n = tanh(W_n z + r .* (U_n h) + b_n)
///   h_next = (1 - u) .* n + u .* h_prev
void gru_step(std::span<const double> z, std::span<const double> h_prev,
              const ModelParams& params, std::span<double> h_next,
              GruTrace* trace = nullptr);

/// Linear head, no output activation: fc_w . h + fc_b.
double fc_head(std::span<const double> h, const ModelParams& params);

/// Full rollout: h starts at zero, each step feeds gcn output into the GRU,
/// the head reads the final hidden state. Pure function of its inputs.
double model_forward(const FeatureWindow& window, const TemporalGraphSpec& spec,
                     const ModelParams& params);

/// Per-window predictions. The parallel version distributes windows across
/// OpenMP threads; outputs land in indexed slots so results are identical to
/// the serial reference for any thread count.
std::vector<double> predict_many(std::span<const FeatureWindow> windows,
                                 const TemporalGraphSpec& spec,
                                 const ModelParams& params);
std::vector<double> predict_many_serial(std::span<const FeatureWindow> windows,
                                        const TemporalGraphSpec& spec,
                                        const ModelParams& params);

void validate_window(const FeatureWindow& window, const TemporalGraphSpec& spec,
                     const ModelParams& params);

}  // namespace tgnn
