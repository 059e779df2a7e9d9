#pragma once

// Attention-based spatial-temporal graph value network.
//
// Humans are graph nodes, one row per human. The spatial branch embeds each
// (robot, human) pair and runs one single-head GAT layer over the fully
// connected human graph (with self-loops). The temporal branch unrolls a tanh
// RNN over each human's recent robot-centric states and runs a second GAT
// layer over the final hidden states. Both branches add their GAT output back
// onto the GAT input. A social attention pool turns the per-human features
// into one crowd vector, and an MLP maps [robot state, crowd vector] to V.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string_view>
#include <vector>

#include "astg/autodiff.hpp"
#include "astg/checkpoint.hpp"
#include "astg/types.hpp"

namespace astg::net {

enum class Ablation { full, spatial_only, temporal_only };

std::string_view to_string(Ablation mode);
Ablation parse_ablation(std::string_view text);

struct NetworkDims {
  std::size_t spatial_hidden = 64;
  std::size_t spatial_embed = 32;
  std::size_t temporal_embed = 32;
  std::size_t rnn_hidden = 32;
  std::size_t attention_hidden = 64;
  std::size_t value_hidden1 = 128;
  std::size_t value_hidden2 = 64;
  double leaky_slope = 0.2;
  Ablation ablation = Ablation::full;

  bool uses_spatial() const { return ablation != Ablation::temporal_only; }
  bool uses_temporal() const { return ablation != Ablation::spatial_only; }
  /// Width of ST^i and of the crowd feature c.
  std::size_t feature_width() const;
  void validate() const;

  bool operator==(const NetworkDims&) const = default;
};

struct Linear {
  ad::Tensor weight;  // [in x out]
  ad::Tensor bias;    // [1 x out]

  ad::Tensor operator()(const ad::Tensor& x) const { return ad::add(ad::matmul(x, weight), bias); }
};

class AstgParams {
 public:
  /// Xavier-uniform weights, zero biases, drawn from `seed`.
  static AstgParams initialize(const NetworkDims& dims, std::uint64_t seed);
  static AstgParams zeros(const NetworkDims& dims);

  const NetworkDims& dims() const { return dims_; }

  // Spatial branch (absent in temporal_only mode).
  Linear spatial_in, spatial_out;
  ad::Tensor spatial_gat_w, spatial_gat_a;
  // Temporal branch (absent in spatial_only mode).
  Linear temporal_embed;
  ad::Tensor rnn_input, rnn_hidden, rnn_bias;
  ad::Tensor temporal_gat_w, temporal_gat_a;
  // Social attention score f_alpha and value head.
  Linear attention_in, attention_out;
  Linear value_1, value_2, value_3;

  /// Handles sharing storage with this object, in a stable order.
  std::vector<ad::NamedTensor> named() const;
  std::size_t parameter_count() const;

  /// Deep copy with independent storage.
  AstgParams clone() const;
  /// Overwrites values (not gradients) from `other`; dims must match.
  void copy_values_from(const AstgParams& other);
  void zero_grad();
  bool all_finite() const;

  ad::Checkpoint to_checkpoint() const;
  /// Throws LoadError naming the first mismatched dimension.
  static AstgParams from_checkpoint(const ad::Checkpoint& checkpoint, const NetworkDims& expected);
  /// Dims recorded in a checkpoint's metadata.
  static NetworkDims dims_from_checkpoint(const ad::Checkpoint& checkpoint);

 private:
  explicit AstgParams(const NetworkDims& dims) : dims_(dims) {}
  NetworkDims dims_;
};

inline constexpr std::size_t kDefaultHistoryLength = 8;

/// The last K robot-centric frames of every human, oldest first. The newest
/// frame is the current observation.
class HistoryWindow {
 public:
  explicit HistoryWindow(std::size_t capacity = kDefaultHistoryLength);

  /// Appends a frame and drops the oldest beyond capacity. Throws UsageError
  /// if the human count differs from earlier frames.
  void push(std::span<const RobotCentricHumanState> humans);
  HistoryWindow with_frame(std::span<const RobotCentricHumanState> humans) const;

  std::size_t capacity() const { return capacity_; }
  std::size_t length() const { return frames_.size(); }
  std::size_t human_count() const { return frames_.empty() ? 0 : frames_.front().size(); }
  const std::vector<RobotCentricHumanState>& frame(std::size_t t) const { return frames_[t]; }
  /// Frames of one human, oldest first.
  std::vector<RobotCentricHumanState> track(std::size_t human) const;

  /// Copy with humans reordered: result human i is this human perm[i].
  HistoryWindow permuted(std::span<const std::size_t> perm) const;

 private:
  std::size_t capacity_;
  std::deque<std::vector<RobotCentricHumanState>> frames_;
};

struct GatResult {
  ad::Tensor output;     // input + relu(alpha * input W)
  ad::Tensor attention;  // [n x n], row-stochastic
};

/// Single-head GAT over the complete graph with self-loops, plus residual.
GatResult gat_layer(const ad::Tensor& nodes, const ad::Tensor& weight,
                    const ad::Tensor& attention_vector, double leaky_slope);

struct SpatialFeatures {
  ad::Tensor embeddings;  // E
  ad::Tensor features;    // H_spatial = E + E~
  ad::Tensor attention;   // alpha_S
};

struct TemporalFeatures {
  ad::Tensor hidden;      // H, final RNN state per human
  ad::Tensor features;    // H_temporal = H + H~
  ad::Tensor attention;   // alpha_T
};

struct SocialFeatures {
  ad::Tensor combined;  // ST, one row per human
  ad::Tensor scores;    // w, [n x 1]
  ad::Tensor weights;   // softmax(w), [n x 1]
  ad::Tensor crowd;     // c, [1 x width]
};

struct BranchFeatures {
  SpatialFeatures spatial;    // undefined tensors when the branch is off
  TemporalFeatures temporal;
  SocialFeatures social;
  ad::Tensor value;           // [1 x 1]
};

/// Rows [s^r, s^i] for every human, [n x 12].
ad::Tensor pair_inputs(const JointState& state);
ad::Tensor robot_input(const JointState& state);

/// Requires n >= 1.
SpatialFeatures spatial_branch(const JointState& state, const AstgParams& params);
/// Requires at least one frame and n >= 1.
TemporalFeatures temporal_branch(const HistoryWindow& history, const AstgParams& params);
/// Either input may be undefined when its branch is disabled.
SocialFeatures social_attention(const ad::Tensor& spatial, const ad::Tensor& temporal,
                                const AstgParams& params);

/// Full forward pass. With n = 0 both graph branches are skipped and a zero
/// crowd vector is fed to the value head.
BranchFeatures evaluate(const JointState& state, const HistoryWindow& history,
                        const AstgParams& params);

inline ad::Tensor value_tensor(const JointState& state, const HistoryWindow& history,
                               const AstgParams& params) {
  return evaluate(state, history, params).value;
}

double value(const JointState& state, const HistoryWindow& history, const AstgParams& params);

}  // namespace astg::net
