#ifndef JUMPER_NEURAL_H_
#define JUMPER_NEURAL_H_

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jumper/hopper.h"
#include "jumper/rng.h"

namespace jumper {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct NetConfig {
  std::vector<int> hidden = {256, 128};
  double init_log_std = -1.0;
  double output_gain = 0.01;
};

inline constexpr double kLogStdMin = -4.0;
inline constexpr double kLogStdMax = 1.0;

// Affine layer view into the flat parameter buffer. Weights are row-major
// out x in.
struct LayerSlot {
  int in = 0;
  int out = 0;
  std::size_t weight = 0;
  std::size_t bias = 0;
};

// Actor mean network, global log_std and critic network in one flat buffer
// laid out as: actor layers, log_std, critic layers.
class PolicyParams {
 public:
  PolicyParams() = default;
  PolicyParams(int obs_dim, int act_dim, std::vector<int> hidden);

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  const std::vector<int>& hidden() const { return hidden_; }
  const std::vector<LayerSlot>& actor() const { return actor_; }
  const std::vector<LayerSlot>& critic() const { return critic_; }
  std::size_t log_std_offset() const { return log_std_; }
  std::size_t size() const { return data_.size(); }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<RowMajor> Weight(const LayerSlot& l) {
    return {data_.data() + l.weight, l.out, l.in};
  }
  Eigen::Map<const RowMajor> Weight(const LayerSlot& l) const {
    return {data_.data() + l.weight, l.out, l.in};
  }
  Eigen::Map<Vector> Bias(const LayerSlot& l) {
    return {data_.data() + l.bias, l.out};
  }
  Eigen::Map<const Vector> Bias(const LayerSlot& l) const {
    return {data_.data() + l.bias, l.out};
  }
  Eigen::Map<Vector> LogStd() { return {data_.data() + log_std_, act_dim_}; }
  Eigen::Map<const Vector> LogStd() const {
    return {data_.data() + log_std_, act_dim_};
  }

  bool AllFinite() const;
  // Rounds every parameter to the nearest float32 and clamps log_std.
  void Quantize();
  bool operator==(const PolicyParams& o) const;

 private:
  std::vector<LayerSlot> MakeLayers(int out_dim, std::size_t& offset) const;

  int obs_dim_ = 0;
  int act_dim_ = 0;
  std::vector<int> hidden_;
  std::vector<LayerSlot> actor_;
  std::vector<LayerSlot> critic_;
  std::size_t log_std_ = 0;
  std::vector<double> data_;
};

// Orthogonal init; the actor output bias starts at mean_bias.
PolicyParams InitPolicy(int obs_dim, int act_dim, const NetConfig& cfg,
                        std::span<const double> mean_bias, Rng& rng);

// 64-bit FNV-1a over the float32 image of the parameters.
std::uint64_t ParamChecksum(const PolicyParams& params);

struct GaussianDist {
  Vector mean;
  Vector log_std;
};

double LogProb(const GaussianDist& dist, std::span<const double> action);
double Entropy(const GaussianDist& dist);

struct Sample {
  Vector action;
  double log_prob = 0.0;
};
Sample SampleAction(const GaussianDist& dist, Rng& rng);

// Single-observation forward passes. Throw std::invalid_argument on a
// dimension mismatch.
GaussianDist ForwardActor(const PolicyParams& params, const Vector& obs);
double ForwardCritic(const PolicyParams& params, const Vector& obs);

// Activations kept for the backward pass; columns are batch entries.
struct MlpCache {
  Matrix input;
  std::vector<Matrix> pre;   // affine outputs per layer
  std::vector<Matrix> post;  // activations per hidden layer
};

struct BatchForward {
  Matrix mean;   // act_dim x B
  Vector value;  // B
  MlpCache actor;
  MlpCache critic;
};

// obs is obs_dim x B.
BatchForward ForwardBatch(const PolicyParams& params, const Matrix& obs,
                          bool need_actor = true, bool need_critic = true);

// Accumulates dL/dparams into grads (same length as params) given the
// upstream gradients of the loss with respect to the actor mean, the
// log_std and the critic value.
void Backward(const PolicyParams& params, const BatchForward& fwd,
              const Matrix& d_mean, const Vector& d_log_std,
              const Vector& d_value, std::span<double> grads);

struct OptState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptState For(const PolicyParams& params, double lr = 3e-4);
};

// Bias-corrected adaptive-moment step. Returns false and leaves everything
// untouched when a gradient is non-finite.
bool AdamStep(PolicyParams& params, std::span<const double> grads,
              OptState& opt, bool quantize = true);

// Copies weights from src into dst where the layer shapes allow it. The
// first actor and critic layers may differ in input width; new input
// columns are zero.
void WarmStart(PolicyParams& dst, const PolicyParams& src);

struct Checkpoint {
  std::uint32_t stage = 0;
  ObsSpec spec;
  PolicyParams params;
  std::optional<OptState> opt;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string SerializeCheckpoint(const Checkpoint& ckpt);
// Throws std::runtime_error on a malformed image.
Checkpoint DeserializeCheckpoint(std::string_view bytes);
void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace jumper

#endif  // JUMPER_NEURAL_H_
