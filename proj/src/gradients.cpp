#include "tgnn/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace tgnn {

namespace {

/// Per-window forward activations kept for the reverse sweep.
struct Trace {
  std::size_t steps = 0;
  std::vector<double> z;              // steps x gru_input (post-relu)
  std::vector<double> neighbor_mean;  // steps x nodes*feature_dim
  std::vector<double> reset, update, cand, rec_cand;  // steps x hidden
  std::vector<double> h;              // (steps+1) x hidden, h[0] = 0

  void resize(const ModelDims& dims, std::size_t L) {
    steps = L;
    z.assign(L * dims.gru_input(), 0.0);
    neighbor_mean.assign(L * dims.nodes * dims.feature_dim, 0.0);
    reset.assign(L * dims.hidden, 0.0);
    update.assign(L * dims.hidden, 0.0);
    cand.assign(L * dims.hidden, 0.0);
    rec_cand.assign(L * dims.hidden, 0.0);
    h.assign((L + 1) * dims.hidden, 0.0);
  }
};

struct Scratch {
  std::vector<double> dh, dh_prev, dn, du, da_n, dr, dq, da_u, da_r;
  std::vector<double> dz;

  void resize(const ModelDims& dims) {
    const std::size_t h = dims.hidden;
    dh.assign(h, 0.0);
    dh_prev.assign(h, 0.0);
    dn.assign(h, 0.0);
    du.assign(h, 0.0);
    da_n.assign(h, 0.0);
    dr.assign(h, 0.0);
    dq.assign(h, 0.0);
    da_u.assign(h, 0.0);
    da_r.assign(h, 0.0);
    dz.assign(dims.gru_input(), 0.0);
  }
};

double forward_traced(const FeatureWindow& window, const TemporalGraphSpec& spec,
                      const ModelParams& params, Trace& trace) {
  const ModelDims& dims = params.dims;
  const std::size_t h = dims.hidden;
  const std::size_t in = dims.gru_input();
  const std::size_t nd = dims.nodes * dims.feature_dim;
  trace.resize(dims, window.steps);

  for (std::size_t t = 0; t < window.steps; ++t) {
    GcnTrace gcn_trace{std::span(trace.neighbor_mean).subspan(t * nd, nd)};
    std::span<double> z_t = std::span(trace.z).subspan(t * in, in);
    gcn_forward(window.step(t), spec, params, z_t, &gcn_trace);

    GruTrace gru_trace{
        std::span(trace.reset).subspan(t * h, h),
        std::span(trace.update).subspan(t * h, h),
        std::span(trace.cand).subspan(t * h, h),
        std::span(trace.rec_cand).subspan(t * h, h),
    };
    gru_step(z_t, std::span(trace.h).subspan(t * h, h), params,
             std::span(trace.h).subspan((t + 1) * h, h), &gru_trace);
  }
  return fc_head(std::span(trace.h).subspan(window.steps * h, h), params);
}

/// Reverse sweep for one window. upstream is dLoss/dPrediction; gradients are
/// accumulated into grads (which the caller zeroed).
void backward_traced(const FeatureWindow& window, const ModelParams& params,
                     const Trace& trace, double upstream, TensorBundle& grads,
                     Scratch& ws) {
  const ModelDims& dims = params.dims;
  const std::size_t h = dims.hidden;
  const std::size_t in = dims.gru_input();
  const std::size_t d = dims.feature_dim;
  const std::size_t hg = dims.gcn_hidden;
  const std::size_t nd = dims.nodes * d;
  ws.resize(dims);

  // Head: p = fc_w . h_L + fc_b.
  std::span<const double> h_last = std::span(trace.h).subspan(window.steps * h, h);
  grads.fc_b += upstream;
  for (std::size_t k = 0; k < h; ++k) {
    grads.fc_w[k] += upstream * h_last[k];
    ws.dh[k] = upstream * params.fc_w[k];
  }

  for (std::size_t t = window.steps; t-- > 0;) {
    std::span<const double> z_t = std::span(trace.z).subspan(t * in, in);
    std::span<const double> r = std::span(trace.reset).subspan(t * h, h);
    std::span<const double> u = std::span(trace.update).subspan(t * h, h);
    std::span<const double> n = std::span(trace.cand).subspan(t * h, h);
    std::span<const double> q = std::span(trace.rec_cand).subspan(t * h, h);
    std::span<const double> h_prev = std::span(trace.h).subspan(t * h, h);
    std::span<const double> x_t = window.step(t);
    std::span<const double> mean_t =
        std::span(trace.neighbor_mean).subspan(t * nd, nd);

    // h_next = (1-u).n + u.h_prev
    for (std::size_t k = 0; k < h; ++k) {
      ws.dn[k] = ws.dh[k] * (1.0 - u[k]);
      ws.du[k] = ws.dh[k] * (h_prev[k] - n[k]);
      ws.dh_prev[k] = ws.dh[k] * u[k];
    }

    // n = tanh(W_n z + r.q + b_n), q = U_n h_prev
    std::fill(ws.dz.begin(), ws.dz.end(), 0.0);
    for (std::size_t k = 0; k < h; ++k) {
      ws.da_n[k] = ws.dn[k] * (1.0 - n[k] * n[k]);
      ws.dr[k] = ws.da_n[k] * q[k];
      ws.dq[k] = ws.da_n[k] * r[k];
    }
    outer_accum(grads.gru_wn, ws.da_n, z_t);
    vec_accum(grads.gru_bn, ws.da_n);
    matvec_transposed_accum(params.gru_wn, ws.da_n, ws.dz);
    outer_accum(grads.gru_un, ws.dq, h_prev);
    matvec_transposed_accum(params.gru_un, ws.dq, ws.dh_prev);

    // u = sigmoid(W_z z + U_z h_prev + b_z)
    for (std::size_t k = 0; k < h; ++k) {
      ws.da_u[k] = ws.du[k] * u[k] * (1.0 - u[k]);
    }
    outer_accum(grads.gru_wz, ws.da_u, z_t);
    vec_accum(grads.gru_bz, ws.da_u);
    matvec_transposed_accum(params.gru_wz, ws.da_u, ws.dz);
    outer_accum(grads.gru_uz, ws.da_u, h_prev);
    matvec_transposed_accum(params.gru_uz, ws.da_u, ws.dh_prev);

    // r = sigmoid(W_r z + U_r h_prev + b_r)
    for (std::size_t k = 0; k < h; ++k) {
      ws.da_r[k] = ws.dr[k] * r[k] * (1.0 - r[k]);
    }
    outer_accum(grads.gru_wr, ws.da_r, z_t);
    vec_accum(grads.gru_br, ws.da_r);
    matvec_transposed_accum(params.gru_wr, ws.da_r, ws.dz);
    outer_accum(grads.gru_ur, ws.da_r, h_prev);
    matvec_transposed_accum(params.gru_ur, ws.da_r, ws.dh_prev);

    // z_i = relu(gcn_w . mean_i + gcn_u . x_i); relu'(0) := 0, so the mask
    // is exactly z > 0.
    for (std::size_t i = 0; i < dims.nodes; ++i) {
      for (std::size_t k = 0; k < hg; ++k) {
        const std::size_t zi = i * hg + k;
        if (z_t[zi] <= 0.0) continue;
        const double ds = ws.dz[zi];
        for (std::size_t c = 0; c < d; ++c) {
          grads.gcn_u(k, c) += ds * x_t[i * d + c];
          grads.gcn_w(k, c) += ds * mean_t[i * d + c];
        }
      }
    }

    std::swap(ws.dh, ws.dh_prev);
  }
}

/// One window's loss term and gradient contribution. Identical code runs in
/// the serial and parallel drivers, so per-window results are bitwise equal.
double window_contribution(const FeatureWindow& window,
                           const TemporalGraphSpec& spec,
                           const ModelParams& params, double inv_batch,
                           TensorBundle& grads, Trace& trace, Scratch& ws) {
  const double p_hat = forward_traced(window, spec, params, trace);
  const double err = p_hat - window.target;
  backward_traced(window, params, trace, 2.0 * err * inv_batch, grads, ws);
  return err * err;
}

void add_bundle(TensorBundle& into, const TensorBundle& from) {
  vec_accum(into.gcn_w.data, from.gcn_w.data);
  vec_accum(into.gcn_u.data, from.gcn_u.data);
  vec_accum(into.gru_wr.data, from.gru_wr.data);
  vec_accum(into.gru_wz.data, from.gru_wz.data);
  vec_accum(into.gru_wn.data, from.gru_wn.data);
  vec_accum(into.gru_ur.data, from.gru_ur.data);
  vec_accum(into.gru_uz.data, from.gru_uz.data);
  vec_accum(into.gru_un.data, from.gru_un.data);
  vec_accum(into.gru_br, from.gru_br);
  vec_accum(into.gru_bz, from.gru_bz);
  vec_accum(into.gru_bn, from.gru_bn);
  vec_accum(into.fc_w, from.fc_w);
  into.fc_b += from.fc_b;
}

void check_batch(std::span<const FeatureWindow> batch,
                 const TemporalGraphSpec& spec, const ModelParams& params) {
  if (batch.empty()) {
    fail(ErrorKind::EmptyBatch, "backward: batch must be non-empty");
  }
  for (const FeatureWindow& w : batch) validate_window(w, spec, params);
}

void check_grads_finite(const GradientSet& grads) {
  for_each_tensor(const_cast<GradientSet&>(grads),
                  [](const char* name, std::span<double> values) {
                    ensure_finite(values, name);
                  });
}

}  // namespace

GradientSet zero_gradients(const ModelDims& dims) {
  GradientSet g;
  static_cast<TensorBundle&>(g) = zero_bundle(dims);
  g.dims = dims;
  return g;
}

BackwardResult backward_serial(std::span<const FeatureWindow> batch,
                               const TemporalGraphSpec& spec,
                               const ModelParams& params) {
  check_batch(batch, spec, params);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  BackwardResult result;
  result.grads = zero_gradients(params.dims);

  Trace trace;
  Scratch ws;
  double loss_sum = 0.0;
  for (const FeatureWindow& window : batch) {
    TensorBundle window_grads = zero_bundle(params.dims);
    loss_sum += window_contribution(window, spec, params, inv_batch,
                                    window_grads, trace, ws);
    add_bundle(result.grads, window_grads);
  }
  result.loss = loss_sum * inv_batch;
  check_grads_finite(result.grads);
  return result;
}

BackwardResult backward(std::span<const FeatureWindow> batch,
                        const TemporalGraphSpec& spec,
                        const ModelParams& params) {
  check_batch(batch, spec, params);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  const std::int64_t n = static_cast<std::int64_t>(batch.size());

  std::vector<TensorBundle> per_window(batch.size());
  std::vector<double> losses(batch.size(), 0.0);
  std::exception_ptr error;

#pragma omp parallel
  {
    Trace trace;
    Scratch ws;
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      try {
        const std::size_t w = static_cast<std::size_t>(i);
        per_window[w] = zero_bundle(params.dims);
        losses[w] = window_contribution(batch[w], spec, params, inv_batch,
                                        per_window[w], trace, ws);
      } catch (...) {
#pragma omp critical
        if (!error) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);

  BackwardResult result;
  result.grads = zero_gradients(params.dims);
  double loss_sum = 0.0;
  for (std::size_t w = 0; w < batch.size(); ++w) {
    loss_sum += losses[w];
    add_bundle(result.grads, per_window[w]);
  }
  result.loss = loss_sum * inv_batch;
  check_grads_finite(result.grads);
  return result;
}

double batch_loss(std::span<const FeatureWindow> batch,
                  const TemporalGraphSpec& spec, const ModelParams& params) {
  if (batch.empty()) {
    fail(ErrorKind::EmptyBatch, "batch_loss: batch must be non-empty");
  }
  double sum = 0.0;
  for (const FeatureWindow& window : batch) {
    const double err = model_forward(window, spec, params) - window.target;
    sum += err * err;
  }
  return sum / static_cast<double>(batch.size());
}

GradientSet finite_diff_grad(std::span<const FeatureWindow> batch,
                             const TemporalGraphSpec& spec,
                             const ModelParams& params, double step) {
  if (batch.empty()) {
    fail(ErrorKind::EmptyBatch, "finite_diff_grad: batch must be non-empty");
  }
  ModelParams probe = params;
  GradientSet grads = zero_gradients(params.dims);

  std::vector<std::span<double>> probe_tensors, grad_tensors;
  for_each_tensor(probe, [&](const char*, std::span<double> s) {
    probe_tensors.push_back(s);
  });
  for_each_tensor(grads, [&](const char*, std::span<double> s) {
    grad_tensors.push_back(s);
  });

  for (std::size_t t = 0; t < probe_tensors.size(); ++t) {
    for (std::size_t k = 0; k < probe_tensors[t].size(); ++k) {
      const double saved = probe_tensors[t][k];
      probe_tensors[t][k] = saved + step;
      const double up = batch_loss(batch, spec, probe);
      probe_tensors[t][k] = saved - step;
      const double down = batch_loss(batch, spec, probe);
      probe_tensors[t][k] = saved;
      grad_tensors[t][k] = (up - down) / (2.0 * step);
    }
  }
  return grads;
}

namespace {

TemporalGraphSpec check_graph_for(const ModelDims& dims) {
  if (dims.nodes == 4 && dims.feature_dim == 1) {
    return default_parameter_graph();
  }
  // Synthetic star graph for other sizes: every node feeds the last one.
  std::vector<std::string> names;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < dims.nodes; ++i) {
    names.push_back("n" + std::to_string(i));
    if (i + 1 < dims.nodes) {
      edges.push_back({static_cast<int>(i), static_cast<int>(dims.nodes - 1)});
    }
  }
  return build_parameter_graph(std::move(names), std::move(edges),
                               dims.feature_dim);
}

std::vector<FeatureWindow> random_batch(SeededRng& rng, const ModelDims& dims,
                                        std::size_t window_len,
                                        std::size_t batch_size) {
  std::vector<FeatureWindow> batch(batch_size);
  const std::size_t step_dim = dims.nodes * dims.feature_dim;
  for (std::size_t b = 0; b < batch_size; ++b) {
    FeatureWindow& w = batch[b];
    w.steps = window_len;
    w.step_dim = step_dim;
    w.features.resize(window_len * step_dim);
    for (double& v : w.features) v = rng.next_double();
    w.target = rng.next_double();
    w.target_timestamp = static_cast<std::int64_t>(b);
  }
  return batch;
}

double min_abs_gcn_preact(std::span<const FeatureWindow> batch,
                          const TemporalGraphSpec& spec,
                          const ModelParams& params) {
  double min_abs = std::numeric_limits<double>::infinity();
  std::vector<double> z(params.dims.gru_input());
  for (const FeatureWindow& w : batch) {
    for (std::size_t t = 0; t < w.steps; ++t) {
      gcn_forward(w.step(t), spec, params, z, nullptr, &min_abs);
    }
  }
  return min_abs;
}

}  // namespace

GradCheckReport gradient_check(std::uint64_t seed, const ModelDims& dims,
                               double tol, std::size_t window_len,
                               std::size_t batch_size) {
  const TemporalGraphSpec spec = check_graph_for(dims);
  // Probe step for the comparison run. The oracle's 1e-5 default is fine for
  // plain use, but here near-zero gradients (~1e-9) hit the 1e-8 floor in the
  // relative-error denominator, and at h=1e-5 the loss-evaluation roundoff in
  // the central difference (~1e-12) alone reads as rel_err ~1e-4. A 10x wider
  // step cuts that noise 10x while h^2 truncation stays far below tolerance.
  const double fd_step = 1e-4;
  // Central differences are invalid across relu kinks, so resample until no
  // preactivation sits close enough to 0 for a +/- fd_step probe to cross it.
  const double kink_margin = std::max(1e-6, 10.0 * fd_step);

  SeededRng master(seed);
  ModelParams params;
  std::vector<FeatureWindow> batch;
  GradCheckReport report;

  // If no attempt clears the margin, fall back to the widest clearance seen
  // rather than whatever came last.
  constexpr std::size_t kMaxAttempts = 32;
  double best_clearance = -1.0;
  ModelParams best_params;
  std::vector<FeatureWindow> best_batch;
  for (std::size_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const std::uint64_t params_seed = master.next_u64();
    const std::uint64_t batch_seed = master.next_u64();
    params = init_params(params_seed, dims);
    SeededRng batch_rng(batch_seed);
    batch = random_batch(batch_rng, dims, window_len, batch_size);
    report.attempts = attempt + 1;
    const double clearance = min_abs_gcn_preact(batch, spec, params);
    if (clearance > best_clearance) {
      best_clearance = clearance;
      best_params = params;
      best_batch = batch;
    }
    if (clearance >= kink_margin) break;
  }
  params = std::move(best_params);
  batch = std::move(best_batch);
  report.min_abs_preact = best_clearance;

  const BackwardResult analytic = backward(batch, spec, params);
  const GradientSet numeric = finite_diff_grad(batch, spec, params, fd_step);

  std::vector<std::pair<const char*, std::span<double>>> a_tensors, f_tensors;
  for_each_tensor(const_cast<GradientSet&>(analytic.grads),
                  [&](const char* name, std::span<double> s) {
                    a_tensors.emplace_back(name, s);
                  });
  for_each_tensor(const_cast<GradientSet&>(numeric),
                  [&](const char* name, std::span<double> s) {
                    f_tensors.emplace_back(name, s);
                  });

  for (std::size_t t = 0; t < a_tensors.size(); ++t) {
    for (std::size_t k = 0; k < a_tensors[t].second.size(); ++k) {
      const double a = a_tensors[t].second[k];
      const double f = f_tensors[t].second[k];
      const double rel =
          std::abs(a - f) / std::max(1e-8, std::abs(a) + std::abs(f));
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_tensor = a_tensors[t].first;
      }
    }
  }
  report.pass = report.max_rel_err < tol;
  return report;
}

}  // namespace tgnn
