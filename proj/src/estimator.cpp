#include "cohortsbi/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "cohortsbi/errors.hpp"
#include "cohortsbi/math.hpp"
#include "cohortsbi/parallel.hpp"

namespace cohortsbi {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)
constexpr double kVarianceFloor = 1e-12;
constexpr int kGradChunks = 8;
}  // namespace

// ---------------------------------------------------------------------------
// Standardizer

Standardizer Standardizer::fit(const RowMatrix& data) {
  if (data.rows < 1) throw ContractError("Standardizer::fit: empty data");
  const int d = data.cols;
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (int i = 0; i < data.rows; ++i) {
    auto row = data.row(i);
    for (int j = 0; j < d; ++j) mean[j] += row[j];
  }
  for (int j = 0; j < d; ++j) mean[j] /= data.rows;
  for (int i = 0; i < data.rows; ++i) {
    auto row = data.row(i);
    for (int j = 0; j < d; ++j) {
      double c = row[j] - mean[j];
      var[j] += c * c;
    }
  }
  std::vector<double> scale(d);
  for (int j = 0; j < d; ++j)
    scale[j] = std::sqrt(std::max(var[j] / data.rows, kVarianceFloor));
  return from_parts(std::move(mean), std::move(scale));
}

Standardizer Standardizer::identity(int dim) {
  return from_parts(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0));
}

Standardizer Standardizer::from_parts(std::vector<double> shift,
                                      std::vector<double> scale) {
  if (shift.size() != scale.size())
    throw ContractError("Standardizer: shift/scale size mismatch");
  for (double s : scale)
    if (!(s > 0.0)) throw ContractError("Standardizer: scales must be positive");
  Standardizer st;
  st.shift_ = std::move(shift);
  st.scale_ = std::move(scale);
  return st;
}

void Standardizer::transform(std::span<const double> in, std::span<double> out) const {
  if (in.size() != shift_.size() || out.size() != shift_.size())
    throw ContractError("Standardizer::transform: dimension mismatch");
  for (std::size_t j = 0; j < shift_.size(); ++j)
    out[j] = (in[j] - shift_[j]) / scale_[j];
}

void Standardizer::inverse_transform(std::span<const double> in,
                                     std::span<double> out) const {
  if (in.size() != shift_.size() || out.size() != shift_.size())
    throw ContractError("Standardizer::inverse_transform: dimension mismatch");
  for (std::size_t j = 0; j < shift_.size(); ++j)
    out[j] = in[j] * scale_[j] + shift_[j];
}

double Standardizer::log_scale_sum() const {
  double s = 0.0;
  for (double v : scale_) s += std::log(v);
  return s;
}

// ---------------------------------------------------------------------------
// Network

int MixtureDensityNetwork::head_dim() const {
  return config_.n_components * (1 + 2 * theta_dim_);
}

void MixtureDensityNetwork::build_layout() {
  layers_.clear();
  int offset = 0;
  int n_in = input_dim_;
  auto add_layer = [&](int n_out) {
    layers_.push_back({offset, offset + n_in * n_out, n_in, n_out});
    offset += n_in * n_out + n_out;
    n_in = n_out;
  };
  for (int h : config_.hidden) {
    if (h < 1) throw ContractError("MixtureDensityNetwork: hidden width < 1");
    add_layer(h);
  }
  add_layer(head_dim());
  params_.assign(offset, 0.0);
}

MixtureDensityNetwork::MixtureDensityNetwork(int input_dim, int theta_dim,
                                             MdnConfig config, std::uint64_t seed)
    : input_dim_(input_dim), theta_dim_(theta_dim), config_(std::move(config)) {
  if (input_dim_ < 1 || theta_dim_ < 1 || config_.n_components < 1)
    throw ContractError("MixtureDensityNetwork: invalid dimensions");
  build_layout();
  Rng rng(seed);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    const double limit = std::sqrt(6.0 / (layer.n_in + layer.n_out));
    // small output-layer weights start the mixture near a standard normal
    const double scale = (l + 1 == layers_.size()) ? 0.1 : 1.0;
    for (int i = 0; i < layer.n_in * layer.n_out; ++i)
      params_[layer.w_offset + i] = scale * rng.uniform(-limit, limit);
    // biases stay zero
  }
}

MixtureDensityNetwork MixtureDensityNetwork::from_parts(int input_dim, int theta_dim,
                                                        MdnConfig config,
                                                        std::vector<double> params) {
  MixtureDensityNetwork net;
  net.input_dim_ = input_dim;
  net.theta_dim_ = theta_dim;
  net.config_ = std::move(config);
  net.build_layout();
  if (params.size() != net.params_.size())
    throw ContractError("MixtureDensityNetwork::from_parts: parameter count mismatch");
  net.params_ = std::move(params);
  return net;
}

void MixtureDensityNetwork::forward(std::span<const double> x_std,
                                    Workspace& ws) const {
  if (static_cast<int>(x_std.size()) != input_dim_)
    throw ContractError("MixtureDensityNetwork::forward: input dimension mismatch");
  const std::size_t n_hidden = layers_.size() - 1;
  ws.activations.resize(n_hidden);
  const double* in = x_std.data();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    const bool is_head = (l == n_hidden);
    std::vector<double>& out = is_head ? ws.head : ws.activations[l];
    out.resize(layer.n_out);
    const double* w = params_.data() + layer.w_offset;
    const double* b = params_.data() + layer.b_offset;
    for (int i = 0; i < layer.n_out; ++i) {
      double z = b[i];
      const double* wrow = w + static_cast<std::size_t>(i) * layer.n_in;
      for (int j = 0; j < layer.n_in; ++j) z += wrow[j] * in[j];
      out[i] = is_head ? z : std::tanh(z);
    }
    in = out.data();
  }
}

void MixtureDensityNetwork::backward(std::span<const double> x_std,
                                     const Workspace& ws,
                                     std::span<const double> head_grad,
                                     std::span<double> grad) const {
  if (grad.size() != params_.size())
    throw ContractError("MixtureDensityNetwork::backward: grad size mismatch");
  const std::size_t n_hidden = layers_.size() - 1;
  // delta holds d(loss)/d(layer output) walking backwards
  auto& mutable_ws = const_cast<Workspace&>(ws);
  std::vector<double>& delta = mutable_ws.delta_a;
  std::vector<double>& delta_prev = mutable_ws.delta_b;
  delta.assign(head_grad.begin(), head_grad.end());

  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& layer = layers_[l];
    const double* a_prev = l == 0 ? x_std.data() : ws.activations[l - 1].data();
    if (l != n_hidden) {
      const std::vector<double>& a = ws.activations[l];
      for (int i = 0; i < layer.n_out; ++i) delta[i] *= 1.0 - a[i] * a[i];
    }
    double* dw = grad.data() + layer.w_offset;
    double* db = grad.data() + layer.b_offset;
    for (int i = 0; i < layer.n_out; ++i) {
      const double g = delta[i];
      db[i] += g;
      double* dwrow = dw + static_cast<std::size_t>(i) * layer.n_in;
      for (int j = 0; j < layer.n_in; ++j) dwrow[j] += g * a_prev[j];
    }
    if (l > 0) {
      delta_prev.assign(layer.n_in, 0.0);
      const double* w = params_.data() + layer.w_offset;
      for (int i = 0; i < layer.n_out; ++i) {
        const double g = delta[i];
        const double* wrow = w + static_cast<std::size_t>(i) * layer.n_in;
        for (int j = 0; j < layer.n_in; ++j) delta_prev[j] += g * wrow[j];
      }
      std::swap(delta, delta_prev);
    }
  }
}

std::vector<double> MixtureDensityNetwork::head(std::span<const double> x_std) const {
  Workspace ws;
  forward(x_std, ws);
  return ws.head;
}

// ---------------------------------------------------------------------------
// Mixture evaluation

namespace {

// Mixture parameters derived from one head evaluation; reused across the
// atoms that share the same conditioning input.
struct MixtureContext {
  int K = 0, D = 0;
  std::span<const double> head;
  std::vector<double> log_pi, pi;
  std::vector<double> lsc;        // clamped log scales
  std::vector<double> inv_sigma;  // exp(-lsc)
  std::vector<char> clamped;
  std::vector<double> lk;  // per-component joint log density
  double logq = 0.0;

  void prepare(std::span<const double> h, int n_components, int theta_dim) {
    K = n_components;
    D = theta_dim;
    head = h;
    log_pi.resize(K);
    pi.resize(K);
    lsc.resize(static_cast<std::size_t>(K) * D);
    inv_sigma.resize(lsc.size());
    clamped.resize(lsc.size());
    lk.resize(K);
    const double* logits = h.data();
    const double m = *std::max_element(logits, logits + K);
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += std::exp(logits[k] - m);
    const double log_norm = m + std::log(s);
    for (int k = 0; k < K; ++k) {
      log_pi[k] = logits[k] - log_norm;
      pi[k] = std::exp(log_pi[k]);
    }
    const double* ls = h.data() + K + static_cast<std::size_t>(K) * D;
    for (std::size_t i = 0; i < lsc.size(); ++i) {
      const double v = ls[i];
      clamped[i] = (v <= kLogScaleMin || v >= kLogScaleMax) ? 1 : 0;
      lsc[i] = std::clamp(v, kLogScaleMin, kLogScaleMax);
      inv_sigma[i] = std::exp(-lsc[i]);
    }
  }

  const double* means() const { return head.data() + K; }

  double log_prob(std::span<const double> t) {
    const double* mean = means();
    for (int k = 0; k < K; ++k) {
      double acc = log_pi[k];
      const std::size_t base = static_cast<std::size_t>(k) * D;
      for (int d = 0; d < D; ++d) {
        const double z = (t[d] - mean[base + d]) * inv_sigma[base + d];
        acc += -0.5 * kLog2Pi - lsc[base + d] - 0.5 * z * z;
      }
      lk[k] = acc;
    }
    logq = math::log_sum_exp(lk);
    return logq;
  }

  // Must follow a log_prob call with the same `t`.
  void add_grad(std::span<const double> t, double upstream,
                std::span<double> head_grad) {
    const double* mean = means();
    const std::size_t ls_base = static_cast<std::size_t>(K) * D + K;
    for (int k = 0; k < K; ++k) {
      const double r = std::exp(lk[k] - logq);
      head_grad[k] += upstream * (r - pi[k]);
      const std::size_t base = static_cast<std::size_t>(k) * D;
      for (int d = 0; d < D; ++d) {
        const double z = (t[d] - mean[base + d]) * inv_sigma[base + d];
        head_grad[K + base + d] += upstream * r * z * inv_sigma[base + d];
        if (!clamped[base + d])
          head_grad[ls_base + base + d] += upstream * r * (z * z - 1.0);
      }
    }
  }
};

}  // namespace

double mixture_log_prob(std::span<const double> head, int n_components,
                        int theta_dim, std::span<const double> t_std,
                        double upstream, std::span<double> head_grad) {
  MixtureContext ctx;
  ctx.prepare(head, n_components, theta_dim);
  const double logq = ctx.log_prob(t_std);
  if (!head_grad.empty()) ctx.add_grad(t_std, upstream, head_grad);
  return logq;
}

double log_prob(const MixtureDensityNetwork& net, const Standardizer& theta_std,
                const Standardizer& x_std, std::span<const double> theta,
                std::span<const double> x) {
  if (static_cast<int>(theta.size()) != net.theta_dim() ||
      static_cast<int>(x.size()) != net.input_dim())
    throw ContractError("log_prob: dimension mismatch");
  std::vector<double> xs(x.size()), ts(theta.size());
  x_std.transform(x, xs);
  theta_std.transform(theta, ts);
  const std::vector<double> head = net.head(xs);
  const double logq =
      mixture_log_prob(head, net.n_components(), net.theta_dim(), ts);
  // density over raw theta
  return logq - theta_std.log_scale_sum();
}

// ---------------------------------------------------------------------------
// Atomic loss

namespace {

// Loss over explicit batch rows with pre-drawn atoms and cached standardized
// inputs. `atoms` holds batch.size()*M global row indices; entry [i*M] is
// batch[i] itself. Gradient chunks are merged in fixed order, so results do
// not depend on the worker count.
double atomic_loss_core(const MixtureDensityNetwork& net, const RowMatrix& t_rows,
                        const RowMatrix& x_rows, const std::vector<double>& log_prior,
                        std::span<const int> batch, std::span<const int> atoms,
                        int n_atoms, std::vector<double>* grad) {
  const int B = static_cast<int>(batch.size());
  const int M = n_atoms;
  const int n_chunks = std::min(kGradChunks, B);
  const int chunk_len = (B + n_chunks - 1) / n_chunks;

  std::vector<double> chunk_loss(n_chunks, 0.0);
  std::vector<std::vector<double>> chunk_grad;
  if (grad) chunk_grad.assign(n_chunks, std::vector<double>());

  parallel_for(n_chunks, [&](std::size_t c) {
    MixtureDensityNetwork::Workspace ws;
    MixtureContext ctx;
    std::vector<double> s(M), head_grad;
    std::vector<double>* g = nullptr;
    if (grad) {
      chunk_grad[c].assign(net.parameters().size(), 0.0);
      g = &chunk_grad[c];
      head_grad.resize(net.head_dim());
    }
    const int begin = static_cast<int>(c) * chunk_len;
    const int end = std::min(B, begin + chunk_len);
    double loss_sum = 0.0;
    for (int i = begin; i < end; ++i) {
      const int row = batch[i];
      net.forward(x_rows.row(row), ws);
      ctx.prepare(ws.head, net.n_components(), net.theta_dim());
      const int* atom = atoms.data() + static_cast<std::size_t>(i) * M;
      for (int m = 0; m < M; ++m)
        s[m] = ctx.log_prob(t_rows.row(atom[m])) - log_prior[atom[m]];
      const double lse = math::log_sum_exp(s);
      loss_sum += lse - s[0];
      if (grad) {
        std::fill(head_grad.begin(), head_grad.end(), 0.0);
        for (int m = 0; m < M; ++m) {
          const double upstream =
              (std::exp(s[m] - lse) - (m == 0 ? 1.0 : 0.0)) / B;
          ctx.log_prob(t_rows.row(atom[m]));  // refresh cached responsibilities
          ctx.add_grad(t_rows.row(atom[m]), upstream, head_grad);
        }
        net.backward(x_rows.row(row), ws, head_grad, *g);
      }
    }
    chunk_loss[c] = loss_sum;
  });

  double loss = 0.0;
  for (double l : chunk_loss) loss += l;
  loss /= B;
  if (grad) {
    grad->assign(net.parameters().size(), 0.0);
    for (const auto& g : chunk_grad)
      for (std::size_t i = 0; i < g.size(); ++i) (*grad)[i] += g[i];
  }
  return loss;
}

// Uniform draw of M-1 distinct companions from the batch for every element.
void draw_atoms(std::span<const int> batch, int n_atoms, Rng& rng,
                std::vector<int>& atoms) {
  const int B = static_cast<int>(batch.size());
  const int M = n_atoms;
  atoms.resize(static_cast<std::size_t>(B) * M);
  std::vector<int> pool(B);
  for (int i = 0; i < B; ++i) {
    int* group = atoms.data() + static_cast<std::size_t>(i) * M;
    group[0] = batch[i];
    std::iota(pool.begin(), pool.end(), 0);
    std::swap(pool[i], pool[B - 1]);  // exclude self
    for (int m = 0; m + 1 < M; ++m) {
      const int k =
          m + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(B - 1 - m)));
      std::swap(pool[m], pool[k]);
      group[m + 1] = batch[pool[m]];
    }
  }
}

std::vector<double> prior_log_density_rows(const RowMatrix& thetas,
                                           const ParameterPrior& prior) {
  std::vector<double> out(thetas.rows);
  for (int i = 0; i < thetas.rows; ++i) {
    out[i] = prior.log_density(thetas.row(i));
    if (!std::isfinite(out[i]))
      throw ContractError("atomic loss: parameter row " + std::to_string(i) +
                          " lies outside the prior support");
  }
  return out;
}

RowMatrix standardize_rows(const RowMatrix& rows, const Standardizer& st) {
  RowMatrix out(rows.rows, rows.cols);
  for (int i = 0; i < rows.rows; ++i) st.transform(rows.row(i), out.row(i));
  return out;
}

}  // namespace

double atomic_apt_loss(const MixtureDensityNetwork& net,
                       const Standardizer& theta_std, const Standardizer& x_std,
                       const RowMatrix& thetas, const RowMatrix& xs,
                       const ParameterPrior& prior, int n_atoms, Rng& rng,
                       std::vector<double>* grad) {
  if (thetas.rows != xs.rows || thetas.rows == 0)
    throw ContractError("atomic_apt_loss: empty or mismatched batch");
  if (thetas.cols != net.theta_dim() || xs.cols != net.input_dim())
    throw ContractError("atomic_apt_loss: dimension mismatch with network");
  if (n_atoms < 1) throw ContractError("atomic_apt_loss: need at least one atom");
  if (n_atoms > thetas.rows)
    throw ContractError("atomic_apt_loss: more atoms than batch rows");

  const std::vector<double> log_prior = prior_log_density_rows(thetas, prior);
  const RowMatrix t_rows = standardize_rows(thetas, theta_std);
  const RowMatrix x_rows = standardize_rows(xs, x_std);
  std::vector<int> batch(thetas.rows);
  std::iota(batch.begin(), batch.end(), 0);
  std::vector<int> atoms;
  draw_atoms(batch, n_atoms, rng, atoms);
  return atomic_loss_core(net, t_rows, x_rows, log_prior, batch, atoms, n_atoms,
                          grad);
}

// ---------------------------------------------------------------------------
// Training

namespace {

// Contiguous [begin, end) slices; a tail shorter than min_len is merged into
// the previous slice.
std::vector<std::pair<int, int>> batch_ranges(int n, int batch_size, int min_len) {
  std::vector<std::pair<int, int>> ranges;
  int begin = 0;
  while (begin < n) {
    const int end = std::min(n, begin + batch_size);
    ranges.emplace_back(begin, end);
    begin = end;
  }
  if (ranges.size() > 1 &&
      ranges.back().second - ranges.back().first < min_len) {
    ranges[ranges.size() - 2].second = ranges.back().second;
    ranges.pop_back();
  }
  return ranges;
}

void shuffle_indices(std::vector<int>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = rng.uniform_index(i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

TrainingHistory train(MixtureDensityNetwork& net, Standardizer& theta_std,
                      Standardizer& x_std, const RowMatrix& thetas,
                      const RowMatrix& xs, const ParameterPrior& prior,
                      const TrainingOptions& opts, std::uint64_t seed) {
  const int n = thetas.rows;
  if (n == 0) throw ContractError("train: empty dataset");
  if (xs.rows != n) throw ContractError("train: theta/x row mismatch");
  if (thetas.cols != net.theta_dim() || xs.cols != net.input_dim())
    throw ContractError("train: dimension mismatch with network");
  if (opts.atoms < 2 || opts.atoms > opts.batch_size)
    throw ContractError("train: require 2 <= atoms <= batch_size");
  if (n < 2) throw ContractError("train: need at least 2 rows");

  const std::vector<double> log_prior = prior_log_density_rows(thetas, prior);
  theta_std = Standardizer::fit(thetas);
  x_std = Standardizer::fit(xs);
  const RowMatrix t_rows = standardize_rows(thetas, theta_std);
  const RowMatrix x_rows = standardize_rows(xs, x_std);

  Rng rng(seed);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  shuffle_indices(perm, rng);

  const int val_n = std::clamp(
      static_cast<int>(std::lround(opts.validation_fraction * n)), 1, n - 1);
  std::vector<int> val_idx(perm.begin(), perm.begin() + val_n);
  std::vector<int> train_idx(perm.begin() + val_n, perm.end());
  const int train_n = static_cast<int>(train_idx.size());
  const int M = opts.atoms;
  if (train_n < M || val_n < M)
    throw ContractError("train: dataset too small for the atom count");

  // Validation batches and their atoms are fixed once, so epoch-to-epoch
  // validation losses are comparable.
  const auto val_ranges = batch_ranges(val_n, opts.batch_size, M);
  std::vector<std::vector<int>> val_batches(val_ranges.size());
  std::vector<std::vector<int>> val_atoms(val_ranges.size());
  for (std::size_t b = 0; b < val_ranges.size(); ++b) {
    auto [lo, hi] = val_ranges[b];
    val_batches[b].assign(val_idx.begin() + lo, val_idx.begin() + hi);
    draw_atoms(val_batches[b], M, rng, val_atoms[b]);
  }
  auto validation_loss = [&]() {
    double sum = 0.0;
    for (std::size_t b = 0; b < val_batches.size(); ++b)
      sum += atomic_loss_core(net, t_rows, x_rows, log_prior, val_batches[b],
                              val_atoms[b], M, nullptr) *
             static_cast<double>(val_batches[b].size());
    return sum / val_n;
  };

  std::vector<double>& params = net.parameters();
  std::vector<double> adam_m(params.size(), 0.0), adam_v(params.size(), 0.0);
  std::vector<double> grad;
  std::vector<int> atoms;
  int adam_t = 0;

  TrainingHistory history;
  std::vector<double> best_params = params;
  double best_val = std::numeric_limits<double>::infinity();
  int stale_epochs = 0;

  for (int epoch = 1; epoch <= opts.max_epochs; ++epoch) {
    shuffle_indices(train_idx, rng);
    const auto ranges = batch_ranges(train_n, opts.batch_size, M);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < ranges.size(); ++b) {
      auto [lo, hi] = ranges[b];
      std::span<const int> batch(train_idx.data() + lo,
                                 static_cast<std::size_t>(hi - lo));
      draw_atoms(batch, M, rng, atoms);
      const double loss =
          atomic_loss_core(net, t_rows, x_rows, log_prior, batch, atoms, M, &grad);
      if (!std::isfinite(loss))
        throw NumericError("train: non-finite loss at epoch " +
                           std::to_string(epoch) + ", batch " + std::to_string(b));
      epoch_loss += loss * static_cast<double>(batch.size());

      double norm2 = 0.0;
      for (double g : grad) norm2 += g * g;
      const double norm = std::sqrt(norm2);
      const double clip =
          (opts.clip_norm > 0.0 && norm > opts.clip_norm) ? opts.clip_norm / norm
                                                          : 1.0;
      ++adam_t;
      const double corr1 = 1.0 - std::pow(opts.adam_beta1, adam_t);
      const double corr2 = 1.0 - std::pow(opts.adam_beta2, adam_t);
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i] * clip;
        adam_m[i] = opts.adam_beta1 * adam_m[i] + (1.0 - opts.adam_beta1) * g;
        adam_v[i] = opts.adam_beta2 * adam_v[i] + (1.0 - opts.adam_beta2) * g * g;
        params[i] -= opts.learning_rate * (adam_m[i] / corr1) /
                     (std::sqrt(adam_v[i] / corr2) + 1e-8);
      }
    }
    history.train_loss.push_back(epoch_loss / train_n);
    const double vloss = validation_loss();
    if (!std::isfinite(vloss))
      throw NumericError("train: non-finite validation loss at epoch " +
                         std::to_string(epoch));
    history.val_loss.push_back(vloss);

    if (vloss < best_val) {
      best_val = vloss;
      best_params = params;
      history.best_epoch = epoch;
      stale_epochs = 0;
    } else {
      ++stale_epochs;
    }
    history.epochs_run = epoch;
    if (stale_epochs >= opts.patience) break;
  }

  params = best_params;
  history.best_val_loss = best_val;
  return history;
}

// ---------------------------------------------------------------------------
// Posterior sampling

PosteriorDraws sample_posterior(const MixtureDensityNetwork& net,
                                const Standardizer& theta_std,
                                const Standardizer& x_std,
                                std::span<const double> x_o, int n,
                                const ParameterPrior& prior, Rng& rng) {
  if (static_cast<int>(x_o.size()) != net.input_dim())
    throw ContractError("sample_posterior: x_o dimension mismatch");
  if (prior.dim() != net.theta_dim())
    throw ContractError("sample_posterior: prior dimension mismatch");
  if (n < 0) throw ContractError("sample_posterior: negative draw count");

  const int D = net.theta_dim();
  std::vector<double> xs(x_o.size());
  x_std.transform(x_o, xs);
  const std::vector<double> head = net.head(xs);
  MixtureContext ctx;
  ctx.prepare(head, net.n_components(), D);

  PosteriorDraws out;
  out.draws = RowMatrix(0, D);
  out.draws.data.reserve(static_cast<std::size_t>(n) * D);

  std::vector<double> t(D), theta(D);
  std::uint64_t proposed = 0, accepted = 0;
  const double* mean = ctx.means();
  while (static_cast<int>(accepted) < n) {
    ++proposed;
    const double u = rng.uniform();
    int k = ctx.K - 1;
    double acc = 0.0;
    for (int i = 0; i < ctx.K; ++i) {
      acc += ctx.pi[i];
      if (u < acc) {
        k = i;
        break;
      }
    }
    const std::size_t base = static_cast<std::size_t>(k) * D;
    for (int d = 0; d < D; ++d)
      t[d] = mean[base + d] + rng.normal() / ctx.inv_sigma[base + d];
    theta_std.inverse_transform(t, theta);
    if (prior.in_support(theta)) {
      out.draws.push_row(theta);
      ++accepted;
    }
    if (proposed == 100000 && accepted < 10)
      throw LeakageError(
          "sample_posterior: acceptance rate below 1e-4 over a 1e5-proposal "
          "probe; the estimator places almost no mass inside the prior support");
  }
  out.leakage = proposed == 0
                    ? 0.0
                    : static_cast<double>(proposed - accepted) /
                          static_cast<double>(proposed);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string hex_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hex_double(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw FormatError("estimator file: cannot parse number '" + s + "'");
  return v;
}

void write_vector(std::ostream& out, const char* name, std::span<const double> v) {
  out << name << ' ' << v.size();
  for (double x : v) out << ' ' << hex_double(x);
  out << '\n';
}

std::vector<double> read_vector(std::istream& in, const std::string& expected) {
  std::string name;
  std::size_t count = 0;
  if (!(in >> name >> count) || name != expected)
    throw FormatError("estimator file: expected section '" + expected + "'");
  std::vector<double> v(count);
  std::string tok;
  for (std::size_t i = 0; i < count; ++i) {
    if (!(in >> tok)) throw FormatError("estimator file: truncated " + expected);
    v[i] = parse_hex_double(tok);
  }
  return v;
}

}  // namespace

void save_estimator(std::ostream& out, const MixtureDensityNetwork& net,
                    const Standardizer& theta_std, const Standardizer& x_std) {
  out << "cohortsbi-estimator 1\n";
  out << "input_dim " << net.input_dim() << '\n';
  out << "theta_dim " << net.theta_dim() << '\n';
  out << "components " << net.n_components() << '\n';
  out << "hidden " << net.hidden().size();
  for (int h : net.hidden()) out << ' ' << h;
  out << '\n';
  write_vector(out, "theta_shift", theta_std.shift());
  write_vector(out, "theta_scale", theta_std.scale());
  write_vector(out, "x_shift", x_std.shift());
  write_vector(out, "x_scale", x_std.scale());
  write_vector(out, "params", net.parameters());
  out << "end\n";
}

LoadedEstimator load_estimator(std::istream& in) {
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "cohortsbi-estimator" || version != 1)
    throw FormatError("estimator file: bad header");
  auto read_int = [&](const char* name) {
    std::string key;
    long long v = 0;
    if (!(in >> key >> v) || key != name)
      throw FormatError(std::string("estimator file: expected '") + name + "'");
    return static_cast<int>(v);
  };
  const int input_dim = read_int("input_dim");
  const int theta_dim = read_int("theta_dim");
  MdnConfig config;
  config.n_components = read_int("components");
  const int n_hidden = read_int("hidden");
  config.hidden.resize(n_hidden);
  for (int i = 0; i < n_hidden; ++i)
    if (!(in >> config.hidden[i]))
      throw FormatError("estimator file: truncated hidden sizes");

  auto theta_shift = read_vector(in, "theta_shift");
  auto theta_scale = read_vector(in, "theta_scale");
  auto x_shift = read_vector(in, "x_shift");
  auto x_scale = read_vector(in, "x_scale");
  auto params = read_vector(in, "params");
  if (!(in >> tag) || tag != "end")
    throw FormatError("estimator file: missing end marker");

  return LoadedEstimator{
      MixtureDensityNetwork::from_parts(input_dim, theta_dim, std::move(config),
                                        std::move(params)),
      Standardizer::from_parts(std::move(theta_shift), std::move(theta_scale)),
      Standardizer::from_parts(std::move(x_shift), std::move(x_scale))};
}

}  // namespace cohortsbi
