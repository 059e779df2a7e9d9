#include "astg/network.hpp"

#include <cmath>
#include <string>

#include "astg/error.hpp"
#include "astg/rng.hpp"

namespace astg::net {

std::string_view to_string(Ablation mode) {
  switch (mode) {
    case Ablation::full: return "full";
    case Ablation::spatial_only: return "spatial_only";
    case Ablation::temporal_only: return "temporal_only";
  }
  return "?";
}

Ablation parse_ablation(std::string_view text) {
  if (text == "full") return Ablation::full;
  if (text == "spatial_only") return Ablation::spatial_only;
  if (text == "temporal_only") return Ablation::temporal_only;
  throw InvalidConfigError("unknown ablation mode '" + std::string(text) + "'");
}

std::size_t NetworkDims::feature_width() const {
  return (uses_spatial() ? spatial_embed : 0) + (uses_temporal() ? rnn_hidden : 0);
}

void NetworkDims::validate() const {
  for (std::size_t d : {spatial_hidden, spatial_embed, temporal_embed, rnn_hidden,
                        attention_hidden, value_hidden1, value_hidden2}) {
    if (d == 0) throw InvalidConfigError("network: hidden sizes must be positive");
  }
  if (!std::isfinite(leaky_slope) || leaky_slope < 0.0) {
    throw InvalidConfigError("network: leaky slope must be finite and >= 0");
  }
}

// ---------------------------------------------------------------- params

namespace {

constexpr std::size_t kRobotWidth = RobotCentricRobotState::kWidth;
constexpr std::size_t kHumanWidth = RobotCentricHumanState::kWidth;

ad::Tensor xavier(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<double> v(in * out);
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return ad::Tensor::parameter({in, out}, std::move(v));
}

ad::Tensor zero_param(std::size_t in, std::size_t out) {
  return ad::Tensor::parameter({in, out}, std::vector<double>(in * out, 0.0));
}

Linear make_linear(std::size_t in, std::size_t out, Rng* rng) {
  return Linear{rng ? xavier(in, out, *rng) : zero_param(in, out), zero_param(1, out)};
}

// Allocates every tensor for `dims`; weights from `rng` or all zeros.
void allocate(AstgParams& p, const NetworkDims& d, Rng* rng) {
  auto weight = [&](std::size_t in, std::size_t out) {
    return rng ? xavier(in, out, *rng) : zero_param(in, out);
  };
  if (d.uses_spatial()) {
    p.spatial_in = make_linear(kRobotWidth + kHumanWidth, d.spatial_hidden, rng);
    p.spatial_out = make_linear(d.spatial_hidden, d.spatial_embed, rng);
    p.spatial_gat_w = weight(d.spatial_embed, d.spatial_embed);
    p.spatial_gat_a = weight(2 * d.spatial_embed, 1);
  }
  if (d.uses_temporal()) {
    p.temporal_embed = make_linear(kHumanWidth, d.temporal_embed, rng);
    p.rnn_input = weight(d.temporal_embed, d.rnn_hidden);
    p.rnn_hidden = weight(d.rnn_hidden, d.rnn_hidden);
    p.rnn_bias = zero_param(1, d.rnn_hidden);
    p.temporal_gat_w = weight(d.rnn_hidden, d.rnn_hidden);
    p.temporal_gat_a = weight(2 * d.rnn_hidden, 1);
  }
  const std::size_t width = d.feature_width();
  p.attention_in = make_linear(2 * width, d.attention_hidden, rng);
  p.attention_out = make_linear(d.attention_hidden, 1, rng);
  p.value_1 = make_linear(kRobotWidth + width, d.value_hidden1, rng);
  p.value_2 = make_linear(d.value_hidden1, d.value_hidden2, rng);
  p.value_3 = make_linear(d.value_hidden2, 1, rng);
}

}  // namespace

AstgParams AstgParams::initialize(const NetworkDims& dims, std::uint64_t seed) {
  dims.validate();
  AstgParams p(dims);
  Rng rng(derive_seed(seed, "network-init"));
  allocate(p, dims, &rng);
  return p;
}

AstgParams AstgParams::zeros(const NetworkDims& dims) {
  dims.validate();
  AstgParams p(dims);
  allocate(p, dims, nullptr);
  return p;
}

std::vector<ad::NamedTensor> AstgParams::named() const {
  std::vector<ad::NamedTensor> out;
  auto linear = [&](const char* name, const Linear& l) {
    out.push_back({std::string(name) + ".weight", l.weight});
    out.push_back({std::string(name) + ".bias", l.bias});
  };
  if (dims_.uses_spatial()) {
    linear("spatial.mlp1", spatial_in);
    linear("spatial.mlp2", spatial_out);
    out.push_back({"spatial.gat.weight", spatial_gat_w});
    out.push_back({"spatial.gat.attention", spatial_gat_a});
  }
  if (dims_.uses_temporal()) {
    linear("temporal.mlp", temporal_embed);
    out.push_back({"temporal.rnn.input", rnn_input});
    out.push_back({"temporal.rnn.hidden", rnn_hidden});
    out.push_back({"temporal.rnn.bias", rnn_bias});
    out.push_back({"temporal.gat.weight", temporal_gat_w});
    out.push_back({"temporal.gat.attention", temporal_gat_a});
  }
  linear("social.mlp1", attention_in);
  linear("social.mlp2", attention_out);
  linear("value.mlp1", value_1);
  linear("value.mlp2", value_2);
  linear("value.mlp3", value_3);
  return out;
}

std::size_t AstgParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : named()) n += t.tensor.size();
  return n;
}

AstgParams AstgParams::clone() const {
  AstgParams copy = AstgParams::zeros(dims_);
  copy.copy_values_from(*this);
  return copy;
}

void AstgParams::copy_values_from(const AstgParams& other) {
  if (!(other.dims_ == dims_)) throw UsageError("copy_values_from: network dims differ");
  auto dst = named();
  const auto src = other.named();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    auto to = dst[i].tensor.mutable_values();
    const auto from = src[i].tensor.values();
    std::copy(from.begin(), from.end(), to.begin());
  }
}

void AstgParams::zero_grad() {
  for (auto& t : named()) t.tensor.zero_grad();
}

bool AstgParams::all_finite() const {
  for (const auto& t : named()) {
    for (double v : t.tensor.values()) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

namespace {

const std::vector<std::pair<const char*, std::size_t NetworkDims::*>>& size_fields() {
  static const std::vector<std::pair<const char*, std::size_t NetworkDims::*>> fields = {
      {"spatial_hidden", &NetworkDims::spatial_hidden},
      {"spatial_embed", &NetworkDims::spatial_embed},
      {"temporal_embed", &NetworkDims::temporal_embed},
      {"rnn_hidden", &NetworkDims::rnn_hidden},
      {"attention_hidden", &NetworkDims::attention_hidden},
      {"value_hidden1", &NetworkDims::value_hidden1},
      {"value_hidden2", &NetworkDims::value_hidden2},
  };
  return fields;
}

}  // namespace

ad::Checkpoint AstgParams::to_checkpoint() const {
  ad::Checkpoint cp;
  cp.meta["ablation"] = std::string(to_string(dims_.ablation));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", dims_.leaky_slope);
  cp.meta["leaky_slope"] = buf;
  for (const auto& [name, field] : size_fields()) cp.meta[name] = std::to_string(dims_.*field);
  for (const auto& t : named()) cp.tensors.push_back({t.name, t.tensor.clone()});
  return cp;
}

NetworkDims AstgParams::dims_from_checkpoint(const ad::Checkpoint& cp) {
  NetworkDims d;
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = cp.meta.find(key);
    if (it == cp.meta.end()) throw LoadError("checkpoint: missing metadata '" + key + "'");
    return it->second;
  };
  try {
    d.ablation = parse_ablation(get("ablation"));
    d.leaky_slope = std::stod(get("leaky_slope"));
    for (const auto& [name, field] : size_fields()) d.*field = std::stoul(get(name));
  } catch (const InvalidConfigError& e) {
    throw LoadError(std::string("checkpoint: ") + e.what());
  } catch (const std::logic_error&) {
    throw LoadError("checkpoint: malformed network metadata");
  }
  return d;
}

AstgParams AstgParams::from_checkpoint(const ad::Checkpoint& cp, const NetworkDims& expected) {
  const NetworkDims stored = dims_from_checkpoint(cp);
  if (stored.ablation != expected.ablation) {
    throw LoadError("checkpoint architecture mismatch: ablation is '" +
                    std::string(to_string(stored.ablation)) + "', configured '" +
                    std::string(to_string(expected.ablation)) + "'");
  }
  for (const auto& [name, field] : size_fields()) {
    if (stored.*field != expected.*field) {
      throw LoadError("checkpoint architecture mismatch: " + std::string(name) + " is " +
                      std::to_string(stored.*field) + ", configured " +
                      std::to_string(expected.*field));
    }
  }
  if (stored.leaky_slope != expected.leaky_slope) {
    throw LoadError("checkpoint architecture mismatch: leaky_slope differs");
  }
  AstgParams p = AstgParams::zeros(expected);
  for (auto& t : p.named()) {
    const ad::Tensor* src = cp.find(t.name);
    if (src == nullptr) throw LoadError("checkpoint: missing tensor '" + t.name + "'");
    if (src->shape() != t.tensor.shape()) {
      throw LoadError("checkpoint architecture mismatch: tensor '" + t.name + "' has shape " +
                      ad::shape_string(src->shape()) + ", expected " +
                      ad::shape_string(t.tensor.shape()));
    }
    auto dst = t.tensor.mutable_values();
    std::copy(src->values().begin(), src->values().end(), dst.begin());
  }
  return p;
}

// ---------------------------------------------------------------- history

HistoryWindow::HistoryWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw InvalidConfigError("history window capacity must be >= 1");
}

void HistoryWindow::push(std::span<const RobotCentricHumanState> humans) {
  if (!frames_.empty() && humans.size() != frames_.front().size()) {
    throw UsageError("history: frame has " + std::to_string(humans.size()) +
                     " humans, window holds " + std::to_string(frames_.front().size()));
  }
  frames_.emplace_back(humans.begin(), humans.end());
  while (frames_.size() > capacity_) frames_.pop_front();
}

HistoryWindow HistoryWindow::with_frame(std::span<const RobotCentricHumanState> humans) const {
  HistoryWindow copy = *this;
  copy.push(humans);
  return copy;
}

std::vector<RobotCentricHumanState> HistoryWindow::track(std::size_t human) const {
  std::vector<RobotCentricHumanState> out;
  out.reserve(frames_.size());
  for (const auto& f : frames_) out.push_back(f.at(human));
  return out;
}

HistoryWindow HistoryWindow::permuted(std::span<const std::size_t> perm) const {
  HistoryWindow out(capacity_);
  for (const auto& f : frames_) {
    std::vector<RobotCentricHumanState> g;
    g.reserve(perm.size());
    for (std::size_t idx : perm) g.push_back(f.at(idx));
    out.frames_.push_back(std::move(g));
  }
  return out;
}

// ---------------------------------------------------------------- forward

namespace {

ad::Tensor human_rows(std::span<const RobotCentricHumanState> humans) {
  std::vector<double> v;
  v.reserve(humans.size() * kHumanWidth);
  for (const auto& h : humans) {
    const auto a = h.as_array();
    v.insert(v.end(), a.begin(), a.end());
  }
  return ad::Tensor::from({humans.size(), kHumanWidth}, std::move(v));
}

}  // namespace

ad::Tensor robot_input(const JointState& state) {
  const auto r = state.robot.as_array();
  return ad::Tensor::from({1, kRobotWidth}, std::vector<double>(r.begin(), r.end()));
}

ad::Tensor pair_inputs(const JointState& state) {
  const std::size_t n = state.humans.size();
  const auto r = state.robot.as_array();
  std::vector<double> v;
  v.reserve(n * (kRobotWidth + kHumanWidth));
  for (const auto& h : state.humans) {
    v.insert(v.end(), r.begin(), r.end());
    const auto a = h.as_array();
    v.insert(v.end(), a.begin(), a.end());
  }
  return ad::Tensor::from({n, kRobotWidth + kHumanWidth}, std::move(v));
}

GatResult gat_layer(const ad::Tensor& nodes, const ad::Tensor& weight,
                    const ad::Tensor& attention_vector, double leaky_slope) {
  const std::size_t n = nodes.rows();
  const std::size_t d = weight.cols();
  if (attention_vector.rows() != 2 * d || attention_vector.cols() != 1) {
    throw DimensionError("gat: attention vector " + ad::shape_string(attention_vector.shape()) +
                         " does not match projected width " + std::to_string(d));
  }
  const ad::Tensor projected = ad::matmul(nodes, weight);  // W h_j per row
  // a[W h_i || W h_j] = a_src . W h_i + a_dst . W h_j
  const ad::Tensor source = ad::matmul(projected, ad::slice(attention_vector, 0, 0, d));
  const ad::Tensor target = ad::matmul(projected, ad::slice(attention_vector, 0, d, 2 * d));
  const ad::Tensor ones_row = ad::Tensor::filled({1, n}, 1.0);
  const ad::Tensor ones_col = ad::Tensor::filled({n, 1}, 1.0);
  const ad::Tensor logits = ad::add(ad::matmul(source, ones_row),
                                    ad::matmul(ones_col, ad::transpose(target)));
  const ad::Tensor attention = ad::softmax(ad::leaky_relu(logits, leaky_slope), 1);
  const ad::Tensor aggregated = ad::relu(ad::matmul(attention, projected));
  return {ad::add(nodes, aggregated), attention};
}

SpatialFeatures spatial_branch(const JointState& state, const AstgParams& params) {
  if (state.humans.empty()) throw UsageError("spatial_branch: needs at least one human");
  if (!params.dims().uses_spatial()) throw UsageError("spatial_branch: disabled by ablation mode");
  SpatialFeatures out;
  const ad::Tensor hidden = ad::relu(params.spatial_in(pair_inputs(state)));
  out.embeddings = ad::relu(params.spatial_out(hidden));
  GatResult gat = gat_layer(out.embeddings, params.spatial_gat_w, params.spatial_gat_a,
                            params.dims().leaky_slope);
  out.features = std::move(gat.output);
  out.attention = std::move(gat.attention);
  return out;
}

TemporalFeatures temporal_branch(const HistoryWindow& history, const AstgParams& params) {
  if (history.length() == 0) throw UsageError("temporal_branch: empty history");
  if (history.human_count() == 0) throw UsageError("temporal_branch: needs at least one human");
  if (!params.dims().uses_temporal()) throw UsageError("temporal_branch: disabled by ablation mode");
  const std::size_t n = history.human_count();
  ad::Tensor h = ad::Tensor::zeros({n, params.dims().rnn_hidden});
  for (std::size_t t = 0; t < history.length(); ++t) {
    const ad::Tensor g = ad::relu(params.temporal_embed(human_rows(history.frame(t))));
    const ad::Tensor pre = ad::add(ad::add(ad::matmul(g, params.rnn_input),
                                           ad::matmul(h, params.rnn_hidden)),
                                   params.rnn_bias);
    h = ad::tanh(pre);
  }
  TemporalFeatures out;
  out.hidden = h;
  GatResult gat = gat_layer(h, params.temporal_gat_w, params.temporal_gat_a,
                            params.dims().leaky_slope);
  out.features = std::move(gat.output);
  out.attention = std::move(gat.attention);
  return out;
}

SocialFeatures social_attention(const ad::Tensor& spatial, const ad::Tensor& temporal,
                                const AstgParams& params) {
  SocialFeatures out;
  if (spatial.defined() && temporal.defined()) {
    if (spatial.rows() != temporal.rows()) {
      throw DimensionError("social_attention: branch outputs " + ad::shape_string(spatial.shape()) +
                           " and " + ad::shape_string(temporal.shape()) + " disagree on n");
    }
    out.combined = ad::concat({spatial, temporal}, 1);
  } else if (spatial.defined()) {
    out.combined = spatial;
  } else if (temporal.defined()) {
    out.combined = temporal;
  } else {
    throw UsageError("social_attention: no branch features");
  }
  const std::size_t n = out.combined.rows();
  const ad::Tensor mean_feature = ad::mean(out.combined, 0);
  const ad::Tensor repeated = ad::matmul(ad::Tensor::filled({n, 1}, 1.0), mean_feature);
  const ad::Tensor pair = ad::concat({out.combined, repeated}, 1);
  out.scores = params.attention_out(ad::relu(params.attention_in(pair)));
  out.weights = ad::softmax(out.scores, 0);
  out.crowd = ad::matmul(ad::transpose(out.weights), out.combined);
  return out;
}

BranchFeatures evaluate(const JointState& state, const HistoryWindow& history,
                        const AstgParams& params) {
  const NetworkDims& dims = params.dims();
  BranchFeatures out;
  ad::Tensor crowd;
  if (state.humans.empty()) {
    crowd = ad::Tensor::zeros({1, dims.feature_width()});
  } else {
    if (dims.uses_temporal() && history.human_count() != state.humans.size()) {
      throw UsageError("evaluate: history tracks " + std::to_string(history.human_count()) +
                       " humans, state has " + std::to_string(state.humans.size()));
    }
    if (dims.uses_spatial()) out.spatial = spatial_branch(state, params);
    if (dims.uses_temporal()) out.temporal = temporal_branch(history, params);
    out.social = social_attention(out.spatial.features, out.temporal.features, params);
    crowd = out.social.crowd;
  }
  const ad::Tensor head_in = ad::concat({robot_input(state), crowd}, 1);
  const ad::Tensor h1 = ad::relu(params.value_1(head_in));
  const ad::Tensor h2 = ad::relu(params.value_2(h1));
  out.value = params.value_3(h2);
  return out;
}

double value(const JointState& state, const HistoryWindow& history, const AstgParams& params) {
  return evaluate(state, history, params).value.item();
}

}  // namespace astg::net
