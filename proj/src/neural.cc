#include "jumper/neural.h"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace jumper {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double Elu(double x) { return x > 0.0 ? x : std::expm1(x); }
double EluGrad(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

void OrthogonalFill(Eigen::Map<PolicyParams::RowMajor> w, double gain,
                    Rng& rng) {
  const int rows = static_cast<int>(w.rows());
  const int cols = static_cast<int>(w.cols());
  const bool tall = rows >= cols;
  Matrix g(tall ? rows : cols, tall ? cols : rows);
  for (int i = 0; i < g.rows(); ++i) {
    for (int j = 0; j < g.cols(); ++j) g(i, j) = rng.Normal();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(g.rows(), g.cols());
  const Matrix r = qr.matrixQR();
  for (int j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  if (tall) {
    w = gain * q;
  } else {
    w = gain * q.transpose();
  }
}

Matrix ForwardMlp(const PolicyParams& p, const std::vector<LayerSlot>& layers,
                  const Matrix& x, MlpCache& cache) {
  cache.input = x;
  cache.pre.resize(layers.size());
  cache.post.resize(layers.size() - 1);
  const Matrix* h = &cache.input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Matrix z = p.Weight(layers[i]) * *h;
    z.colwise() += p.Bias(layers[i]);
    cache.pre[i] = std::move(z);
    if (i + 1 < layers.size()) {
      cache.post[i] = cache.pre[i].unaryExpr(&Elu);
      h = &cache.post[i];
    }
  }
  return cache.pre.back();
}

void BackwardMlp(const PolicyParams& p, const std::vector<LayerSlot>& layers,
                 const MlpCache& cache, Matrix delta, std::span<double> grads) {
  for (std::size_t k = layers.size(); k-- > 0;) {
    const LayerSlot& l = layers[k];
    const Matrix& in = k == 0 ? cache.input : cache.post[k - 1];
    Eigen::Map<PolicyParams::RowMajor> gw(grads.data() + l.weight, l.out, l.in);
    Eigen::Map<Vector> gb(grads.data() + l.bias, l.out);
    gw.noalias() += delta * in.transpose();
    gb += delta.rowwise().sum();
    if (k == 0) break;
    Matrix up = p.Weight(l).transpose() * delta;
    delta = up.cwiseProduct(cache.pre[k - 1].unaryExpr(&EluGrad));
  }
}

void CheckObs(const PolicyParams& p, Eigen::Index rows) {
  if (rows != p.obs_dim()) {
    throw std::invalid_argument("observation has " + std::to_string(rows) +
                                " entries, policy expects " +
                                std::to_string(p.obs_dim()));
  }
}

}  // namespace

PolicyParams::PolicyParams(int obs_dim, int act_dim, std::vector<int> hidden)
    : obs_dim_(obs_dim), act_dim_(act_dim), hidden_(std::move(hidden)) {
  if (obs_dim <= 0 || act_dim <= 0) {
    throw std::invalid_argument("policy dimensions must be positive");
  }
  for (const int h : hidden_) {
    if (h <= 0) throw std::invalid_argument("hidden sizes must be positive");
  }
  std::size_t offset = 0;
  actor_ = MakeLayers(act_dim_, offset);
  log_std_ = offset;
  offset += act_dim_;
  critic_ = MakeLayers(1, offset);
  data_.assign(offset, 0.0);
}

std::vector<LayerSlot> PolicyParams::MakeLayers(int out_dim,
                                                std::size_t& offset) const {
  std::vector<LayerSlot> layers;
  int in = obs_dim_;
  std::vector<int> outs = hidden_;
  outs.push_back(out_dim);
  for (const int out : outs) {
    LayerSlot l{in, out, offset, offset + static_cast<std::size_t>(in) * out};
    offset = l.bias + out;
    layers.push_back(l);
    in = out;
  }
  return layers;
}

bool PolicyParams::operator==(const PolicyParams& o) const {
  return obs_dim_ == o.obs_dim_ && act_dim_ == o.act_dim_ &&
         hidden_ == o.hidden_ && data_ == o.data_;
}

bool PolicyParams::AllFinite() const {
  for (const double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void PolicyParams::Quantize() {
  for (double& x : data_) x = static_cast<double>(static_cast<float>(x));
  for (int i = 0; i < act_dim_; ++i) {
    double& s = data_[log_std_ + i];
    s = std::clamp(s, kLogStdMin, kLogStdMax);
  }
}

PolicyParams InitPolicy(int obs_dim, int act_dim, const NetConfig& cfg,
                        std::span<const double> mean_bias, Rng& rng) {
  if (!mean_bias.empty() &&
      mean_bias.size() != static_cast<std::size_t>(act_dim)) {
    throw std::invalid_argument("mean_bias size must equal act_dim");
  }
  PolicyParams p(obs_dim, act_dim, cfg.hidden);
  for (std::size_t i = 0; i < p.actor().size(); ++i) {
    const bool last = i + 1 == p.actor().size();
    OrthogonalFill(p.Weight(p.actor()[i]), last ? cfg.output_gain : 1.0, rng);
  }
  for (std::size_t i = 0; i < mean_bias.size(); ++i) {
    p.Bias(p.actor().back())[static_cast<Eigen::Index>(i)] = mean_bias[i];
  }
  p.LogStd().setConstant(cfg.init_log_std);
  for (const LayerSlot& l : p.critic()) OrthogonalFill(p.Weight(l), 1.0, rng);
  p.Quantize();
  return p;
}

std::uint64_t ParamChecksum(const PolicyParams& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const double x : params.data()) {
    const float f = static_cast<float>(x);
    unsigned char bytes[sizeof(float)];
    std::memcpy(bytes, &f, sizeof(float));
    for (const unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

double LogProb(const GaussianDist& dist, std::span<const double> action) {
  if (action.size() != static_cast<std::size_t>(dist.mean.size())) {
    throw std::invalid_argument("action size does not match distribution");
  }
  double lp = 0.0;
  for (Eigen::Index i = 0; i < dist.mean.size(); ++i) {
    const double z = (action[i] - dist.mean[i]) * std::exp(-dist.log_std[i]);
    lp += -0.5 * z * z - dist.log_std[i] - 0.5 * kLog2Pi;
  }
  return lp;
}

double Entropy(const GaussianDist& dist) {
  return dist.log_std.sum() +
         0.5 * static_cast<double>(dist.log_std.size()) * (1.0 + kLog2Pi);
}

Sample SampleAction(const GaussianDist& dist, Rng& rng) {
  Sample s;
  s.action.resize(dist.mean.size());
  for (Eigen::Index i = 0; i < dist.mean.size(); ++i) {
    s.action[i] = dist.mean[i] + std::exp(dist.log_std[i]) * rng.Normal();
  }
  s.log_prob = LogProb(dist, {s.action.data(),
                              static_cast<std::size_t>(s.action.size())});
  return s;
}

GaussianDist ForwardActor(const PolicyParams& params, const Vector& obs) {
  CheckObs(params, obs.size());
  MlpCache cache;
  Matrix out = ForwardMlp(params, params.actor(), obs, cache);
  return {out.col(0), params.LogStd()};
}

double ForwardCritic(const PolicyParams& params, const Vector& obs) {
  CheckObs(params, obs.size());
  MlpCache cache;
  return ForwardMlp(params, params.critic(), obs, cache)(0, 0);
}

BatchForward ForwardBatch(const PolicyParams& params, const Matrix& obs,
                          bool need_actor, bool need_critic) {
  CheckObs(params, obs.rows());
  BatchForward f;
  if (need_actor) f.mean = ForwardMlp(params, params.actor(), obs, f.actor);
  if (need_critic) {
    f.value = ForwardMlp(params, params.critic(), obs, f.critic).row(0);
  }
  return f;
}

void Backward(const PolicyParams& params, const BatchForward& fwd,
              const Matrix& d_mean, const Vector& d_log_std,
              const Vector& d_value, std::span<double> grads) {
  if (grads.size() != params.size()) {
    throw std::invalid_argument("gradient buffer size mismatch");
  }
  if (d_mean.size() > 0) BackwardMlp(params, params.actor(), fwd.actor, d_mean, grads);
  for (Eigen::Index i = 0; i < d_log_std.size(); ++i) {
    grads[params.log_std_offset() + i] += d_log_std[i];
  }
  if (d_value.size() > 0) {
    BackwardMlp(params, params.critic(), fwd.critic, d_value.transpose(),
                grads);
  }
}

OptState OptState::For(const PolicyParams& params, double lr) {
  OptState o;
  o.m.assign(params.size(), 0.0);
  o.v.assign(params.size(), 0.0);
  o.lr = lr;
  return o;
}

bool AdamStep(PolicyParams& params, std::span<const double> grads,
              OptState& opt, bool quantize) {
  if (grads.size() != params.size() || opt.m.size() != params.size()) {
    throw std::invalid_argument("optimizer state does not match parameters");
  }
  for (const double g : grads) {
    if (!std::isfinite(g)) return false;
  }
  ++opt.step;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  std::vector<double>& w = params.data();
  for (std::size_t i = 0; i < w.size(); ++i) {
    opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * grads[i];
    opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * grads[i] * grads[i];
    w[i] -= opt.lr * (opt.m[i] / c1) / (std::sqrt(opt.v[i] / c2) + opt.eps);
  }
  if (quantize) params.Quantize();
  return true;
}

void WarmStart(PolicyParams& dst, const PolicyParams& src) {
  if (dst.hidden() != src.hidden() || dst.act_dim() != src.act_dim()) {
    throw std::invalid_argument("warm start needs matching hidden layers");
  }
  auto copy = [&](const std::vector<LayerSlot>& d,
                  const std::vector<LayerSlot>& s) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      auto wd = dst.Weight(d[i]);
      auto ws = src.Weight(s[i]);
      const int cols = std::min(d[i].in, s[i].in);
      wd.setZero();
      wd.leftCols(cols) = ws.leftCols(cols);
      dst.Bias(d[i]) = src.Bias(s[i]);
    }
  };
  copy(dst.actor(), src.actor());
  copy(dst.critic(), src.critic());
  dst.LogStd() = src.LogStd();
}

}  // namespace jumper
