#include "japan/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "japan/adam.hpp"
#include "japan/errors.hpp"

namespace japan {

namespace {

// Coordinate reversals flip the layout between layers; masks are chosen so
// that the set of original coordinates passing through alternates with the
// layer index (even split for even d, ceil/floor halves for odd d).
std::vector<std::uint8_t> layer_mask(std::size_t d, std::size_t layer) {
  std::vector<std::uint8_t> mask(d);
  for (std::size_t i = 0; i < d; ++i) {
    const std::size_t orig = (layer % 2 == 0) ? i : d - 1 - i;
    mask[i] = (orig % 2 == layer % 2) ? 1 : 0;
  }
  return mask;
}

void check_context(const Matrix& x, std::size_t rows, std::size_t c, const char* where) {
  if (c == 0) return;
  if (x.cols() != c || x.rows() != rows) {
    throw DimensionError(std::string(where) + ": context shape mismatch");
  }
}

Matrix broadcast_context(std::span<const double> x, std::size_t rows) {
  Matrix m(rows, x.size());
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy(x.begin(), x.end(), m.row(i));
  }
  return m;
}

void check_vector(std::span<const double> v, std::size_t want, const char* what) {
  if (v.size() != want) throw DimensionError(std::string(what) + ": wrong length");
  for (double e : v) {
    if (!std::isfinite(e)) throw NumericError(std::string(what) + ": non-finite input");
  }
}

}  // namespace

FlowModel::FlowModel(std::size_t y_dim, std::size_t context_dim, std::size_t n_layers,
                     std::size_t hidden)
    : y_dim_(y_dim), context_dim_(context_dim), hidden_(hidden) {
  if (y_dim == 0 || n_layers == 0 || hidden == 0) {
    throw DimensionError("FlowModel: dimensions and layer count must be positive");
  }
  layers_.reserve(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    CouplingLayer layer;
    layer.mask = layer_mask(y_dim, l);
    layer.scale_net = MlpParams(y_dim + context_dim, hidden, y_dim);
    layer.shift_net = MlpParams(y_dim + context_dim, hidden, y_dim);
    layers_.push_back(std::move(layer));
  }
}

void FlowModel::init_params(Rng& rng) {
  for (auto& layer : layers_) {
    for (MlpParams* net : {&layer.scale_net, &layer.shift_net}) {
      net->glorot_init(rng);
      // Hidden biases get the uniform ±1/sqrt(fan_in) treatment so the ReLU
      // breakpoints start spread out instead of stacked at zero; the output
      // layer stays zero so every coupling step begins as the identity.
      // Both choices buy a markedly better fit from the fixed epoch budget.
      const double b1_bound = 1.0 / std::sqrt(static_cast<double>(net->in));
      const double b2_bound = 1.0 / std::sqrt(static_cast<double>(net->hidden));
      for (std::size_t j = 0; j < net->hidden; ++j) {
        net->b1(0, j) = b1_bound * (2.0 * rng.uniform() - 1.0);
        net->b2(0, j) = b2_bound * (2.0 * rng.uniform() - 1.0);
      }
      net->w3.fill(0.0);
    }
  }
}

namespace {

// Net input = y with transformed coordinates zeroed, then the context.
Matrix masked_input(const Matrix& state, const Matrix& x, const std::vector<std::uint8_t>& mask) {
  const std::size_t n = state.rows(), d = state.cols(), c = x.cols();
  Matrix in(n, d + c);
  for (std::size_t i = 0; i < n; ++i) {
    const double* s = state.row(i);
    double* r = in.row(i);
    for (std::size_t j = 0; j < d; ++j) r[j] = mask[j] ? s[j] : 0.0;
    if (c > 0) {
      const double* xr = x.row(i);
      for (std::size_t j = 0; j < c; ++j) r[d + j] = xr[j];
    }
  }
  return in;
}

double clamp_scale(double raw, double s_max) { return s_max * std::tanh(raw / s_max); }

}  // namespace

Matrix FlowModel::forward_batch(const Matrix& y, const Matrix& x,
                                std::vector<double>& log_det) const {
  if (y.cols() != y_dim_) throw DimensionError("flow forward: y has wrong width");
  check_context(x, y.rows(), context_dim_, "flow forward");
  const std::size_t n = y.rows(), d = y_dim_;
  Matrix cur = y;
  log_det.assign(n, 0.0);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const CouplingLayer& layer = layers_[l];
    const Matrix net_in = masked_input(cur, x, layer.mask);
    const Matrix raw_s = mlp_forward(layer.scale_net, net_in);
    const Matrix t = mlp_forward(layer.shift_net, net_in);
    for (std::size_t i = 0; i < n; ++i) {
      double* row = cur.row(i);
      const double* sr = raw_s.row(i);
      const double* tr = t.row(i);
      for (std::size_t j = 0; j < d; ++j) {
        if (layer.mask[j]) continue;
        const double s = clamp_scale(sr[j], s_max_);
        row[j] = row[j] * std::exp(s) + tr[j];
        log_det[i] += s;
      }
    }
    if (l + 1 < layers_.size()) cur.reverse_columns();
  }
  return cur;
}

Matrix FlowModel::inverse_batch(const Matrix& z, const Matrix& x,
                                std::vector<double>& log_det_inv) const {
  if (z.cols() != y_dim_) throw DimensionError("flow inverse: z has wrong width");
  check_context(x, z.rows(), context_dim_, "flow inverse");
  const std::size_t n = z.rows(), d = y_dim_;
  Matrix cur = z;
  log_det_inv.assign(n, 0.0);
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const CouplingLayer& layer = layers_[li];
    const Matrix net_in = masked_input(cur, x, layer.mask);
    const Matrix raw_s = mlp_forward(layer.scale_net, net_in);
    const Matrix t = mlp_forward(layer.shift_net, net_in);
    for (std::size_t i = 0; i < n; ++i) {
      double* row = cur.row(i);
      const double* sr = raw_s.row(i);
      const double* tr = t.row(i);
      for (std::size_t j = 0; j < d; ++j) {
        if (layer.mask[j]) continue;
        const double s = clamp_scale(sr[j], s_max_);
        row[j] = (row[j] - tr[j]) * std::exp(-s);
        log_det_inv[i] -= s;
      }
    }
    if (li > 0) cur.reverse_columns();
  }
  return cur;
}

FlowOutput FlowModel::forward(std::span<const double> y, std::span<const double> x) const {
  check_vector(y, y_dim_, "flow forward: y");
  if (context_dim_ > 0) check_vector(x, context_dim_, "flow forward: x");
  Matrix ym(1, y_dim_);
  std::copy(y.begin(), y.end(), ym.row(0));
  const Matrix xm = context_dim_ > 0 ? broadcast_context(x, 1) : Matrix(1, 0);
  std::vector<double> log_det;
  Matrix z = forward_batch(ym, xm, log_det);
  FlowOutput out;
  out.z.assign(z.row(0), z.row(0) + y_dim_);
  out.log_det = log_det[0];
  return out;
}

std::pair<std::vector<double>, double> FlowModel::inverse(std::span<const double> z,
                                                          std::span<const double> x) const {
  check_vector(z, y_dim_, "flow inverse: z");
  if (context_dim_ > 0) check_vector(x, context_dim_, "flow inverse: x");
  Matrix zm(1, y_dim_);
  std::copy(z.begin(), z.end(), zm.row(0));
  const Matrix xm = context_dim_ > 0 ? broadcast_context(x, 1) : Matrix(1, 0);
  std::vector<double> log_det_inv;
  Matrix y = inverse_batch(zm, xm, log_det_inv);
  return {std::vector<double>(y.row(0), y.row(0) + y_dim_), log_det_inv[0]};
}

double FlowModel::log_likelihood(std::span<const double> y, std::span<const double> x) const {
  FlowOutput out = forward(y, x);
  return log_gaussian_density(out.z) + out.log_det;
}

std::vector<double> FlowModel::log_likelihood_batch(const Matrix& y, const Matrix& x) const {
  std::vector<double> log_det;
  Matrix z = forward_batch(y, x, log_det);
  std::vector<double> ll(y.rows());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    ll[i] = log_gaussian_density(z.row_span(i)) + log_det[i];
  }
  return ll;
}

Matrix FlowModel::sample(std::size_t n, std::span<const double> x, Rng& rng) const {
  Matrix z = rng.gaussian_matrix(n, y_dim_);
  const Matrix xm = context_dim_ > 0 ? broadcast_context(x, n) : Matrix(n, 0);
  std::vector<double> log_det_inv;
  return inverse_batch(z, xm, log_det_inv);
}

// ---------------------------------------------------------------------------
// Training

struct FlowTrainer {
  FlowModel& model;
  // Per-layer scratch kept across the forward/backward of one batch.
  struct LayerCache {
    Matrix input;     // state entering the layer
    Matrix net_in;    // masked input fed to both nets
    Matrix raw_s;     // scale net output before clamping
    MlpCache scale_cache, shift_cache;
  };
  std::vector<LayerCache> caches;

  explicit FlowTrainer(FlowModel& m) : model(m), caches(m.layers_.size()) {}

  std::vector<Matrix*> param_refs() {
    std::vector<Matrix*> refs;
    for (auto& layer : model.layers_) {
      for (MlpParams* net : {&layer.scale_net, &layer.shift_net}) {
        refs.push_back(&net->w1);
        refs.push_back(&net->b1);
        refs.push_back(&net->w2);
        refs.push_back(&net->b2);
        refs.push_back(&net->w3);
        refs.push_back(&net->b3);
      }
    }
    return refs;
  }

  // Mean NLL of the batch and its gradient w.r.t. every net parameter,
  // in param_refs() order.
  double batch_grads(const Matrix& y, const Matrix& x, std::vector<Matrix>& grads) {
    const std::size_t n = y.rows(), d = model.y_dim_;
    const double s_max = model.s_max_;
    const double inv_n = 1.0 / static_cast<double>(n);

    Matrix cur = y;
    std::vector<double> log_det(n, 0.0);
    for (std::size_t l = 0; l < model.layers_.size(); ++l) {
      const CouplingLayer& layer = model.layers_[l];
      LayerCache& cache = caches[l];
      cache.input = cur;
      cache.net_in = masked_input(cur, x, layer.mask);
      cache.raw_s = mlp_forward_cached(layer.scale_net, cache.net_in, cache.scale_cache);
      const Matrix t = mlp_forward_cached(layer.shift_net, cache.net_in, cache.shift_cache);
      for (std::size_t i = 0; i < n; ++i) {
        double* row = cur.row(i);
        const double* sr = cache.raw_s.row(i);
        const double* tr = t.row(i);
        for (std::size_t j = 0; j < d; ++j) {
          if (layer.mask[j]) continue;
          const double s = clamp_scale(sr[j], s_max);
          row[j] = row[j] * std::exp(s) + tr[j];
          log_det[i] += s;
        }
      }
      if (l + 1 < model.layers_.size()) cur.reverse_columns();
    }

    double nll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nll -= log_gaussian_density(cur.row_span(i)) + log_det[i];
    }
    nll *= inv_n;

    // d(mean nll)/dz = z / n
    Matrix g = cur;
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] *= inv_n;

    grads.clear();
    grads.resize(model.layers_.size() * 12);
    for (std::size_t li = model.layers_.size(); li-- > 0;) {
      const CouplingLayer& layer = model.layers_[li];
      LayerCache& cache = caches[li];
      if (li + 1 < model.layers_.size()) g.reverse_columns();

      Matrix ds(n, d), dt(n, d);
      Matrix gy(n, d);
      for (std::size_t i = 0; i < n; ++i) {
        const double* gi = g.row(i);
        const double* yi = cache.input.row(i);
        const double* sr = cache.raw_s.row(i);
        double* dsi = ds.row(i);
        double* dti = dt.row(i);
        double* gyi = gy.row(i);
        for (std::size_t j = 0; j < d; ++j) {
          if (layer.mask[j]) {
            gyi[j] = gi[j];
            continue;
          }
          const double s = clamp_scale(sr[j], s_max);
          const double es = std::exp(s);
          // log-det contributes -s per transformed coordinate to the loss
          const double ds_clamped = gi[j] * yi[j] * es - inv_n;
          const double th = s / s_max;  // tanh(raw/s_max)
          dsi[j] = ds_clamped * (1.0 - th * th);
          dti[j] = gi[j];
          gyi[j] = gi[j] * es;
        }
      }

      Matrix in_grad_s, in_grad_t;
      MlpGrads gs = mlp_backward_cached(layer.scale_net, cache.net_in, cache.scale_cache, ds,
                                        in_grad_s);
      MlpGrads gt = mlp_backward_cached(layer.shift_net, cache.net_in, cache.shift_cache, dt,
                                        in_grad_t);
      // Net inputs only expose pass-through coordinates; gradients at
      // transformed (zeroed) positions and at context columns are dropped.
      for (std::size_t i = 0; i < n; ++i) {
        double* gyi = gy.row(i);
        const double* isr = in_grad_s.row(i);
        const double* itr = in_grad_t.row(i);
        for (std::size_t j = 0; j < d; ++j) {
          if (layer.mask[j]) gyi[j] += isr[j] + itr[j];
        }
      }

      const std::size_t base = li * 12;
      grads[base + 0] = std::move(gs.w1);
      grads[base + 1] = std::move(gs.b1);
      grads[base + 2] = std::move(gs.w2);
      grads[base + 3] = std::move(gs.b2);
      grads[base + 4] = std::move(gs.w3);
      grads[base + 5] = std::move(gs.b3);
      grads[base + 6] = std::move(gt.w1);
      grads[base + 7] = std::move(gt.b1);
      grads[base + 8] = std::move(gt.w2);
      grads[base + 9] = std::move(gt.b2);
      grads[base + 10] = std::move(gt.w3);
      grads[base + 11] = std::move(gt.b3);

      g = std::move(gy);
    }
    return nll;
  }
};

std::vector<Matrix*> flow_params(FlowModel& model) {
  return FlowTrainer(model).param_refs();
}

double flow_nll_grads(FlowModel& model, const Matrix& y, const Matrix& x,
                      std::vector<Matrix>& grads) {
  FlowTrainer trainer(model);
  return trainer.batch_grads(y, x, grads);
}

TrainResult train_nll(const Matrix& train_y, const Matrix& train_x, const TrainConfig& config) {
  if (train_y.rows() == 0) throw TrainingError("train_nll: empty training set");
  if (config.epochs == 0 || config.batch_size == 0 || config.layers == 0 || config.hidden == 0) {
    throw ConfigError("train_nll: epochs, batch size, layers and hidden width must be >= 1");
  }
  const std::size_t n = train_y.rows();
  const std::size_t c = train_x.cols();
  if (c > 0 && train_x.rows() != n) {
    throw DimensionError("train_nll: context row count differs from targets");
  }

  TrainResult result;
  result.model = FlowModel(train_y.cols(), c, config.layers, config.hidden);
  Rng base(config.seed);
  Rng init_rng = base.split(1);
  Rng batch_rng = base.split(2);
  result.model.init_params(init_rng);

  FlowTrainer trainer(result.model);
  std::vector<Matrix*> params = trainer.param_refs();
  AdamState opt = AdamState::init(params, config.learning_rate, config.decay);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Matrix> grads;
  result.epoch_nll.reserve(config.epochs);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    batch_rng.shuffle(order);
    double epoch_nll = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Matrix by = take_rows(train_y, idx);
      const Matrix bx = c > 0 ? take_rows(train_x, idx) : Matrix(idx.size(), 0);
      const double nll = trainer.batch_grads(by, bx, grads);
      if (!std::isfinite(nll)) {
        throw TrainingError("train_nll: loss diverged at epoch " + std::to_string(epoch + 1));
      }
      epoch_nll += nll * static_cast<double>(idx.size());
      adam_update(params, grads, opt);
    }
    opt.end_epoch();
    result.epoch_nll.push_back(epoch_nll / static_cast<double>(n));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Serialization. Floats are stored as hex strings so that load(save(m))
// reproduces every weight bit-exactly.

namespace {

using nlohmann::json;

json dump_floats(const Matrix& m) {
  json arr = json::array();
  char buf[40];
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%a", m.data()[i]);
    arr.push_back(std::string(buf));
  }
  return arr;
}

void load_floats(const json& arr, Matrix& m) {
  if (arr.size() != m.size()) throw ParseError("flow model: weight array has wrong length");
  for (std::size_t i = 0; i < m.size(); ++i) {
    m.data()[i] = std::strtod(arr[i].get_ref<const std::string&>().c_str(), nullptr);
  }
}

json dump_net(const MlpParams& p) {
  return json{{"w1", dump_floats(p.w1)}, {"b1", dump_floats(p.b1)},
              {"w2", dump_floats(p.w2)}, {"b2", dump_floats(p.b2)},
              {"w3", dump_floats(p.w3)}, {"b3", dump_floats(p.b3)}};
}

void load_net(const json& j, MlpParams& p) {
  load_floats(j.at("w1"), p.w1);
  load_floats(j.at("b1"), p.b1);
  load_floats(j.at("w2"), p.w2);
  load_floats(j.at("b2"), p.b2);
  load_floats(j.at("w3"), p.w3);
  load_floats(j.at("b3"), p.b3);
}

}  // namespace

std::string FlowModel::to_json() const {
  json j;
  j["format"] = "japan.flow.v1";
  j["y_dim"] = y_dim_;
  j["context_dim"] = context_dim_;
  j["hidden"] = hidden_;
  j["s_max"] = s_max_;
  j["layers"] = json::array();
  for (const auto& layer : layers_) {
    json jl;
    jl["mask"] = layer.mask;
    jl["scale"] = dump_net(layer.scale_net);
    jl["shift"] = dump_net(layer.shift_net);
    j["layers"].push_back(std::move(jl));
  }
  return j.dump(2);
}

FlowModel FlowModel::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError("flow model: invalid JSON");
  if (j.value("format", "") != std::string("japan.flow.v1")) {
    throw ParseError("flow model: unknown format tag");
  }
  FlowModel m(j.at("y_dim").get<std::size_t>(), j.at("context_dim").get<std::size_t>(),
              j.at("layers").size(), j.at("hidden").get<std::size_t>());
  m.s_max_ = j.at("s_max").get<double>();
  for (std::size_t l = 0; l < m.layers_.size(); ++l) {
    const json& jl = j.at("layers")[l];
    m.layers_[l].mask = jl.at("mask").get<std::vector<std::uint8_t>>();
    if (m.layers_[l].mask.size() != m.y_dim_) throw ParseError("flow model: bad mask length");
    load_net(jl.at("scale"), m.layers_[l].scale_net);
    load_net(jl.at("shift"), m.layers_[l].shift_net);
  }
  return m;
}

void FlowModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("flow model: cannot open " + path + " for writing");
  out << to_json() << '\n';
}

FlowModel FlowModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("flow model: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace japan
