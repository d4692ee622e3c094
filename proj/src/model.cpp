#include "tgnn/model.hpp"

#include <cmath>
#include <exception>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tgnn {

ModelParams init_params(std::uint64_t seed, const ModelDims& dims) {
  if (dims.nodes == 0 || dims.feature_dim == 0 || dims.gcn_hidden == 0 ||
      dims.hidden == 0) {
    fail(ErrorKind::BadDims, "init_params: all dimensions must be >= 1");
  }
  ModelParams p;
  p.dims = dims;
  p.init_seed = seed;
  SeededRng rng(seed);

  const std::size_t d = dims.feature_dim;
  const std::size_t hg = dims.gcn_hidden;
  const std::size_t h = dims.hidden;
  const std::size_t in = dims.gru_input();

  p.gcn_w = uniform_init(rng, hg, d, d);
  p.gcn_u = uniform_init(rng, hg, d, d);
  p.gru_wr = uniform_init(rng, h, in, in);
  p.gru_wz = uniform_init(rng, h, in, in);
  p.gru_wn = uniform_init(rng, h, in, in);
  p.gru_ur = uniform_init(rng, h, h, h);
  p.gru_uz = uniform_init(rng, h, h, h);
  p.gru_un = uniform_init(rng, h, h, h);
  p.gru_br.assign(h, 0.0);
  p.gru_bz.assign(h, 0.0);
  p.gru_bn.assign(h, 0.0);
  p.fc_w = uniform_init(rng, h, 1, h).data;
  p.fc_b = 0.0;
  return p;
}

TensorBundle zero_bundle(const ModelDims& dims) {
  TensorBundle b;
  const std::size_t d = dims.feature_dim;
  const std::size_t hg = dims.gcn_hidden;
  const std::size_t h = dims.hidden;
  const std::size_t in = dims.gru_input();
  b.gcn_w = Matrix(hg, d);
  b.gcn_u = Matrix(hg, d);
  b.gru_wr = Matrix(h, in);
  b.gru_wz = Matrix(h, in);
  b.gru_wn = Matrix(h, in);
  b.gru_ur = Matrix(h, h);
  b.gru_uz = Matrix(h, h);
  b.gru_un = Matrix(h, h);
  b.gru_br.assign(h, 0.0);
  b.gru_bz.assign(h, 0.0);
  b.gru_bn.assign(h, 0.0);
  b.fc_w.assign(h, 0.0);
  b.fc_b = 0.0;
  return b;
}

void gcn_forward(std::span<const double> x, const TemporalGraphSpec& spec,
                 const ModelParams& params, std::span<double> z_out,
                 GcnTrace* trace, double* min_abs_preact) {
  const std::size_t nodes = spec.node_count();
  const std::size_t d = params.dims.feature_dim;
  const std::size_t hg = params.dims.gcn_hidden;
  if (x.size() != nodes * d) {
    fail(ErrorKind::ShapeMismatch, "gcn_forward: feature vector has length " +
                                       std::to_string(x.size()) + ", expected " +
                                       std::to_string(nodes * d));
  }
  if (z_out.size() != nodes * hg) {
    fail(ErrorKind::ShapeMismatch, "gcn_forward: output span has wrong length");
  }
  if (spec.feature_dim != d || nodes != params.dims.nodes) {
    fail(ErrorKind::ShapeMismatch, "gcn_forward: graph and params disagree on dims");
  }

  std::vector<double> mean_local;
  double* mean = nullptr;
  if (trace != nullptr) {
    mean = trace->neighbor_mean.data();
  } else {
    mean_local.assign(d, 0.0);
    mean = mean_local.data();
  }

  for (std::size_t i = 0; i < nodes; ++i) {
    double* mean_i = trace != nullptr ? mean + i * d : mean;
    const auto& sources = spec.in_neighbors[i];
    for (std::size_t c = 0; c < d; ++c) mean_i[c] = 0.0;
    if (!sources.empty()) {
      for (int j : sources) {
        for (std::size_t c = 0; c < d; ++c) {
          mean_i[c] += x[static_cast<std::size_t>(j) * d + c];
        }
      }
      const double inv = 1.0 / static_cast<double>(sources.size());
      for (std::size_t c = 0; c < d; ++c) mean_i[c] *= inv;
    }

    for (std::size_t k = 0; k < hg; ++k) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        s += params.gcn_w(k, c) * mean_i[c] + params.gcn_u(k, c) * x[i * d + c];
      }
      if (min_abs_preact != nullptr && std::abs(s) < *min_abs_preact) {
        *min_abs_preact = std::abs(s);
      }
      z_out[i * hg + k] = relu(s);
    }
  }
}

void gru_step(std::span<const double> z, std::span<const double> h_prev,
              const ModelParams& params, std::span<double> h_next,
              GruTrace* trace) {
  const std::size_t h = params.dims.hidden;
  const std::size_t in = params.dims.gru_input();
  if (z.size() != in || h_prev.size() != h || h_next.size() != h) {
    fail(ErrorKind::ShapeMismatch, "gru_step: input lengths do not match dims");
  }

  std::vector<double> scratch;
  double *r, *u, *n, *q;
  if (trace != nullptr) {
    r = trace->reset.data();
    u = trace->update.data();
    n = trace->cand.data();
    q = trace->rec_cand.data();
  } else {
    scratch.assign(4 * h, 0.0);
    r = scratch.data();
    u = r + h;
    n = u + h;
    q = n + h;
  }

  std::span<double> rs(r, h), us(u, h), ns(n, h), qs(q, h);
  matvec(params.gru_un, h_prev, qs);

  matvec(params.gru_wr, z, rs);
  matvec_accum(params.gru_ur, h_prev, rs);
  matvec(params.gru_wz, z, us);
  matvec_accum(params.gru_uz, h_prev, us);
  matvec(params.gru_wn, z, ns);
  for (std::size_t k = 0; k < h; ++k) {
    r[k] = sigmoid(r[k] + params.gru_br[k]);
    u[k] = sigmoid(u[k] + params.gru_bz[k]);
    n[k] = std::tanh(n[k] + r[k] * q[k] + params.gru_bn[k]);
    h_next[k] = (1.0 - u[k]) * n[k] + u[k] * h_prev[k];
  }
}

double fc_head(std::span<const double> h, const ModelParams& params) {
  if (h.size() != params.dims.hidden) {
    fail(ErrorKind::ShapeMismatch, "fc_head: hidden state has length " +
                                       std::to_string(h.size()) + ", expected " +
                                       std::to_string(params.dims.hidden));
  }
  return dot(params.fc_w, h) + params.fc_b;
}

void validate_window(const FeatureWindow& window, const TemporalGraphSpec& spec,
                     const ModelParams& params) {
  if (window.steps == 0) {
    fail(ErrorKind::ShapeMismatch, "window has no steps");
  }
  const std::size_t want = spec.node_count() * params.dims.feature_dim;
  if (window.step_dim != want ||
      window.features.size() != window.steps * window.step_dim) {
    fail(ErrorKind::ShapeMismatch,
         "window step dim " + std::to_string(window.step_dim) + " vs expected " +
             std::to_string(want));
  }
}

double model_forward(const FeatureWindow& window, const TemporalGraphSpec& spec,
                     const ModelParams& params) {
  validate_window(window, spec, params);
  const std::size_t h = params.dims.hidden;
  std::vector<double> z(params.dims.gru_input());
  std::vector<double> h_prev(h, 0.0), h_next(h, 0.0);
  for (std::size_t t = 0; t < window.steps; ++t) {
    gcn_forward(window.step(t), spec, params, z);
    gru_step(z, h_prev, params, h_next);
    std::swap(h_prev, h_next);
  }
  const double p_hat = fc_head(h_prev, params);
  if (!std::isfinite(p_hat)) {
    fail(ErrorKind::NonFinite, "model_forward: non-finite prediction");
  }
  return p_hat;
}

std::vector<double> predict_many_serial(std::span<const FeatureWindow> windows,
                                        const TemporalGraphSpec& spec,
                                        const ModelParams& params) {
  std::vector<double> out(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    out[i] = model_forward(windows[i], spec, params);
  }
  return out;
}

std::vector<double> predict_many(std::span<const FeatureWindow> windows,
                                 const TemporalGraphSpec& spec,
                                 const ModelParams& params) {
  for (const FeatureWindow& w : windows) validate_window(w, spec, params);
  std::vector<double> out(windows.size());
  const std::int64_t n = static_cast<std::int64_t>(windows.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          model_forward(windows[static_cast<std::size_t>(i)], spec, params);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace tgnn
