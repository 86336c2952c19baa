#include "selfhar/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "selfhar/errors.hpp"

namespace selfhar {

namespace {

enum Stream : std::uint64_t { kCoreStream = 0, kHarStream = 1, kTdStream = 2, kLinearStream = 3 };

double init_stddev(const InitConfig& init, std::size_t fan_in) {
  if (init.scheme == InitScheme::FanIn) return std::sqrt(2.0 / static_cast<double>(fan_in));
  return init.stddev;
}

ConvLayer make_conv(std::size_t filters, std::size_t width, std::size_t channels,
                    const InitConfig& init, Rng& rng) {
  return ConvLayer{
      Tensor::gaussian({filters, width, channels}, init_stddev(init, width * channels), rng),
      Tensor({filters}), false};
}

DenseLayer make_dense(std::size_t out, std::size_t in, const InitConfig& init, Rng& rng) {
  return DenseLayer{Tensor::gaussian({out, in}, init_stddev(init, in), rng), Tensor({out}),
                    false};
}

void validate_arch(const Architecture& arch) {
  for (const ConvSpec& c : arch.conv) {
    if (c.filters == 0 || c.width == 0) throw ConfigError("conv layers need filters and width");
  }
  if (arch.input_channels == 0 || arch.har_hidden == 0 || arch.td_hidden == 0) {
    throw ConfigError("architecture widths must be positive");
  }
  if (!(arch.dropout_rate >= 0.0) || arch.dropout_rate >= 1.0) {
    throw ConfigError("dropout rate must lie in [0, 1)");
  }
}

TpnModel build_core(std::size_t num_classes, std::uint64_t seed, const Architecture& arch,
                    const InitConfig& init) {
  if (num_classes < 2) {
    throw ConfigError("a HAR model needs at least 2 classes, got " + std::to_string(num_classes));
  }
  validate_arch(arch);
  TpnModel model;
  model.arch = arch;
  model.num_classes = num_classes;
  Rng rng = make_rng(seed, kCoreStream);
  std::size_t channels = arch.input_channels;
  for (std::size_t l = 0; l < 3; ++l) {
    model.core[l] = make_conv(arch.conv[l].filters, arch.conv[l].width, channels, init, rng);
    channels = arch.conv[l].filters;
  }
  return model;
}

TdHeads make_td_heads(const Architecture& arch, const InitConfig& init, Rng& rng) {
  TdHeads heads;
  const std::size_t hidden_count = arch.shared_td_hidden ? 1 : kTransformTaskCount;
  for (std::size_t t = 0; t < kTransformTaskCount; ++t) {
    if (t < hidden_count) {
      heads.hidden.push_back(make_dense(arch.td_hidden, arch.feature_length(), init, rng));
    }
    heads.output.push_back(make_dense(1, arch.td_hidden, init, rng));
  }
  return heads;
}

template <typename Fn>
void for_each_layer(TpnModel& m, Fn&& fn) {
  for (std::size_t l = 0; l < 3; ++l) fn("core." + std::to_string(l), m.core[l].kernels, m.core[l].bias, m.core[l].frozen);
  if (m.har) {
    fn(std::string("har.hidden"), m.har->hidden.weights, m.har->hidden.bias, m.har->hidden.frozen);
    fn(std::string("har.output"), m.har->output.weights, m.har->output.bias, m.har->output.frozen);
  }
  if (m.td) {
    for (std::size_t t = 0; t < m.td->hidden.size(); ++t) {
      auto& l = m.td->hidden[t];
      fn("td.hidden." + std::to_string(t), l.weights, l.bias, l.frozen);
    }
    for (std::size_t t = 0; t < m.td->output.size(); ++t) {
      auto& l = m.td->output[t];
      fn("td.output." + std::to_string(t), l.weights, l.bias, l.frozen);
    }
  }
  if (m.linear) {
    fn(std::string("linear"), m.linear->output.weights, m.linear->output.bias, m.linear->output.frozen);
  }
}

void require_window(const TpnModel& model, const Tensor& window) {
  if (window.rank() != 2 || window.dim(1) != model.arch.input_channels) {
    throw DimensionError("model input must be [time x " +
                         std::to_string(model.arch.input_channels) + "], got " +
                         shape_string(window.shape()));
  }
  if (window.dim(0) < model.arch.min_input_length()) {
    throw DimensionError("model input has " + std::to_string(window.dim(0)) +
                         " timesteps, core needs at least " +
                         std::to_string(model.arch.min_input_length()));
  }
}

void core_forward(const TpnModel& model, const Tensor& window, Rng* rng, ForwardTrace& trace) {
  require_window(model, window);
  trace.conv_input[0] = window;
  for (std::size_t l = 0; l < 3; ++l) {
    trace.conv_pre[l] =
        nd::conv1d_forward(trace.conv_input[l], model.core[l].kernels, model.core[l].bias);
    Tensor act = nd::relu(trace.conv_pre[l]);
    if (l < 2) {
      if (rng != nullptr) {
        trace.dropped[l] = nd::dropout(act, model.arch.dropout_rate, *rng, true);
      } else {
        trace.dropped[l] = nd::DropoutResult{std::move(act), {}};
      }
      trace.conv_input[l + 1] = trace.dropped[l].output;
    } else {
      trace.core_activation = std::move(act);
    }
  }
  trace.pooled = nd::global_max_pool(trace.core_activation);
}

const Tensor& features_of(const ForwardTrace& trace) { return trace.pooled.values; }

void har_forward(const HarHead& head, const Tensor& features, ForwardTrace& trace) {
  trace.har_hidden_pre = nd::dense_forward(features, head.hidden.weights, head.hidden.bias);
  trace.har_hidden_post = nd::relu(trace.har_hidden_pre);
  trace.har_probs = nd::softmax(
      nd::dense_forward(trace.har_hidden_post, head.output.weights, head.output.bias));
}

void td_forward(const TdHeads& heads, const Tensor& features, ForwardTrace& trace) {
  trace.td_hidden_pre.resize(heads.hidden.size());
  trace.td_hidden_post.resize(heads.hidden.size());
  for (std::size_t h = 0; h < heads.hidden.size(); ++h) {
    trace.td_hidden_pre[h] =
        nd::dense_forward(features, heads.hidden[h].weights, heads.hidden[h].bias);
    trace.td_hidden_post[h] = nd::relu(trace.td_hidden_pre[h]);
  }
  for (std::size_t t = 0; t < kTransformTaskCount; ++t) {
    const Tensor& hidden = trace.td_hidden_post[heads.hidden.size() == 1 ? 0 : t];
    const Tensor logit =
        nd::dense_forward(hidden, heads.output[t].weights, heads.output[t].bias);
    trace.td_logits[t] = logit[0];
    trace.td_probs[t] = nd::sigmoid(logit[0]);
  }
}

bool uses_har(Objective o) { return o == Objective::Har || o == Objective::Multitask; }
bool uses_td(Objective o) { return o == Objective::Transform || o == Objective::Multitask; }

void require_head(bool present, const char* name) {
  if (!present) throw ConfigError(std::string("model has no ") + name + " head attached");
}

void require_target(const TpnModel& model, const Tensor* target) {
  if (target != nullptr && target->shape() != std::vector<std::size_t>{model.num_classes}) {
    throw DimensionError("activity target length " + shape_string(target->shape()) +
                         " != class count " + std::to_string(model.num_classes));
  }
}

// Streams bytes in little-endian order; the format fixes endianness so files
// move between hosts.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void raw(const char* s, std::size_t n) { bytes_.insert(bytes_.end(), s, s + n); }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  template <typename T>
  void put(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& bytes, std::size_t end) : bytes_(bytes), end_(end) {}
  std::uint8_t u8() { need(1); return bytes_[pos_++]; }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  bool done() const { return pos_ == end_; }

 private:
  void need(std::size_t n) {
    if (pos_ + n > end_) throw FormatError("weight file truncated");
  }
  template <typename T>
  T get() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

constexpr char kMagic[8] = {'S', 'E', 'L', 'F', 'H', 'A', 'R', 'W'};

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_tensor(ByteWriter& w, const Tensor& t) {
  w.u32(static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) w.u64(d);
  for (double v : t.values()) w.f64(v);
}

Tensor read_tensor(ByteReader& r, const Tensor& expected, const std::string& name) {
  const std::uint32_t rank = r.u32();
  std::vector<std::size_t> shape(rank);
  for (auto& d : shape) d = r.u64();
  if (shape != expected.shape()) {
    throw FormatError("tensor " + name + " has shape " + shape_string(shape) +
                      ", architecture expects " + shape_string(expected.shape()));
  }
  Tensor t(shape);
  for (double& v : t.values()) v = r.f64();
  return t;
}

}  // namespace

std::size_t Architecture::min_input_length() const {
  return conv[0].width + conv[1].width + conv[2].width - 2;
}

std::size_t TpnModel::parameter_count() const {
  std::size_t total = 0;
  for_each_layer(const_cast<TpnModel&>(*this),
                 [&](const std::string&, Tensor& w, Tensor& b, bool&) { total += w.size() + b.size(); });
  return total;
}

TpnModel build_har_model(std::size_t num_classes, std::uint64_t seed, const Architecture& arch,
                         const InitConfig& init) {
  TpnModel model = build_core(num_classes, seed, arch, init);
  attach_har_head(model, seed, init);
  return model;
}

TpnModel build_multitask_model(std::size_t num_classes, std::uint64_t seed,
                               const Architecture& arch, const InitConfig& init,
                               bool with_har_head) {
  TpnModel model = build_core(num_classes, seed, arch, init);
  if (with_har_head) attach_har_head(model, seed, init);
  Rng rng = make_rng(seed, kTdStream);
  model.td = make_td_heads(arch, init, rng);
  return model;
}

void attach_har_head(TpnModel& model, std::uint64_t seed, const InitConfig& init) {
  Rng rng = make_rng(seed, kHarStream);
  HarHead head;
  head.hidden = make_dense(model.arch.har_hidden, model.arch.feature_length(), init, rng);
  head.output = make_dense(model.num_classes, model.arch.har_hidden, init, rng);
  model.har = std::move(head);
}

void attach_linear_head(TpnModel& model, std::uint64_t seed) {
  Rng rng = make_rng(seed, kLinearStream);
  model.linear = LinearHead{make_dense(model.num_classes, model.arch.feature_length(),
                                       InitConfig{InitScheme::Gaussian, 0.01}, rng)};
}

void detach_td_heads(TpnModel& model) { model.td.reset(); }
void detach_har_head(TpnModel& model) { model.har.reset(); }

void transfer_core(const TpnModel& from, TpnModel& to) {
  if (!(from.arch.conv[0].filters == to.arch.conv[0].filters &&
        from.arch.conv[1].filters == to.arch.conv[1].filters &&
        from.arch.conv[2].filters == to.arch.conv[2].filters &&
        from.arch.conv[0].width == to.arch.conv[0].width &&
        from.arch.conv[1].width == to.arch.conv[1].width &&
        from.arch.conv[2].width == to.arch.conv[2].width &&
        from.arch.input_channels == to.arch.input_channels)) {
    throw DimensionError("transfer_core: core architectures differ");
  }
  to.core = from.core;
}

void freeze_for_finetune(TpnModel& model) {
  for_each_layer(model, [](const std::string&, Tensor&, Tensor&, bool& frozen) { frozen = false; });
  model.core[0].frozen = true;
  model.core[1].frozen = true;
}

void freeze_core_full(TpnModel& model) {
  for_each_layer(model, [](const std::string&, Tensor&, Tensor&, bool& frozen) { frozen = true; });
  if (model.linear) model.linear->output.frozen = false;
}

TpnModel zeros_like(const TpnModel& model) {
  TpnModel z = model;
  zero_out(z);
  return z;
}

void zero_out(TpnModel& model) {
  for_each_layer(model, [](const std::string&, Tensor& w, Tensor& b, bool&) {
    w.fill(0.0);
    b.fill(0.0);
  });
}

std::vector<nd::ParamRef> parameter_refs(TpnModel& model, TpnModel& grads) {
  std::vector<nd::ParamRef> refs;
  for_each_layer(model, [&](const std::string& name, Tensor& w, Tensor& b, bool& frozen) {
    refs.push_back({name + ".weights", &w, nullptr, frozen, true});
    refs.push_back({name + ".bias", &b, nullptr, frozen, false});
  });
  std::size_t i = 0;
  for_each_layer(grads, [&](const std::string&, Tensor& w, Tensor& b, bool&) {
    if (i + 2 > refs.size()) throw DimensionError("gradient buffer has extra layers");
    refs[i++].grad = &w;
    refs[i++].grad = &b;
  });
  if (i != refs.size()) throw DimensionError("gradient buffer structure differs from model");
  for (const auto& r : refs) {
    if (!r.value->same_shape(*r.grad)) {
      throw DimensionError("gradient buffer shape mismatch for " + r.name);
    }
  }
  return refs;
}

std::vector<nd::ParamRef> parameter_refs(TpnModel& model) {
  std::vector<nd::ParamRef> refs;
  for_each_layer(model, [&](const std::string& name, Tensor& w, Tensor& b, bool& frozen) {
    refs.push_back({name + ".weights", &w, nullptr, frozen, true});
    refs.push_back({name + ".bias", &b, nullptr, frozen, false});
  });
  return refs;
}

TaskLosses forward_loss(const TpnModel& model, const Example& example, Objective objective,
                        Rng* dropout_rng, ForwardTrace& trace) {
  if (example.window == nullptr) throw DataError("example has no window");
  core_forward(model, *example.window, dropout_rng, trace);
  const Tensor& features = features_of(trace);
  TaskLosses losses;
  if (uses_har(objective)) {
    require_head(model.har.has_value(), "activity");
    har_forward(*model.har, features, trace);
    require_target(model, example.har_target);
    if (example.har_target != nullptr) {
      losses.har = nd::categorical_cross_entropy(trace.har_probs, *example.har_target);
    }
  }
  if (objective == Objective::Linear) {
    require_head(model.linear.has_value(), "linear");
    trace.linear_probs = nd::softmax(
        nd::dense_forward(features, model.linear->output.weights, model.linear->output.bias));
    require_target(model, example.har_target);
    if (example.har_target != nullptr) {
      losses.har = nd::categorical_cross_entropy(trace.linear_probs, *example.har_target);
    }
  }
  if (uses_td(objective)) {
    require_head(model.td.has_value(), "transformation");
    td_forward(*model.td, features, trace);
    if (example.td_labels != nullptr) {
      for (std::size_t t = 0; t < kTransformTaskCount; ++t) {
        losses.transform +=
            nd::binary_cross_entropy_logit(trace.td_logits[t], (*example.td_labels)[t]);
      }
    }
  }
  return losses;
}

void backward(const TpnModel& model, const ForwardTrace& trace, const Example& example,
              Objective objective, TpnModel& grads) {
  const std::size_t feature_len = model.arch.feature_length();
  Tensor d_features({feature_len});
  const Tensor& features = features_of(trace);

  if (uses_har(objective) && example.har_target != nullptr) {
    const HarHead& head = *model.har;
    HarHead& g = *grads.har;
    const Tensor d_logits = nd::softmax_cross_entropy_grad(trace.har_probs, *example.har_target);
    Tensor d_hidden({model.arch.har_hidden});
    nd::dense_backward_accumulate(trace.har_hidden_post, head.output.weights, d_logits,
                                  g.output.weights, g.output.bias, &d_hidden);
    const Tensor d_pre = nd::relu_backward(trace.har_hidden_pre, d_hidden);
    nd::dense_backward_accumulate(features, head.hidden.weights, d_pre, g.hidden.weights,
                                  g.hidden.bias, &d_features);
  }
  if (objective == Objective::Linear && example.har_target != nullptr) {
    const Tensor d_logits =
        nd::softmax_cross_entropy_grad(trace.linear_probs, *example.har_target);
    nd::dense_backward_accumulate(features, model.linear->output.weights, d_logits,
                                  grads.linear->output.weights, grads.linear->output.bias,
                                  &d_features);
  }
  if (uses_td(objective) && example.td_labels != nullptr) {
    const TdHeads& heads = *model.td;
    TdHeads& g = *grads.td;
    std::vector<Tensor> d_hidden(heads.hidden.size(), Tensor({model.arch.td_hidden}));
    for (std::size_t t = 0; t < kTransformTaskCount; ++t) {
      const std::size_t h = heads.hidden.size() == 1 ? 0 : t;
      const double d = nd::logit_clamped(trace.td_logits[t]) ? 0.0 : trace.td_probs[t] - (*example.td_labels)[t];
      const Tensor d_logit({1}, {d});
      nd::dense_backward_accumulate(trace.td_hidden_post[h], heads.output[t].weights, d_logit,
                                    g.output[t].weights, g.output[t].bias, &d_hidden[h]);
    }
    for (std::size_t h = 0; h < heads.hidden.size(); ++h) {
      const Tensor d_pre = nd::relu_backward(trace.td_hidden_pre[h], d_hidden[h]);
      nd::dense_backward_accumulate(features, heads.hidden[h].weights, d_pre,
                                    g.hidden[h].weights, g.hidden[h].bias, &d_features);
    }
  }

  std::size_t lowest_trainable = 3;
  for (std::size_t l = 0; l < 3; ++l) {
    if (!model.core[l].frozen) {
      lowest_trainable = l;
      break;
    }
  }
  if (lowest_trainable == 3) return;

  Tensor d_act =
      nd::global_max_pool_backward(trace.pooled, trace.core_activation.dim(0), d_features);
  Tensor d_pre = nd::relu_backward(trace.conv_pre[2], d_act);
  for (std::size_t l = 3; l-- > lowest_trainable;) {
    const bool need_input = l > lowest_trainable;
    Tensor d_input;
    if (need_input) d_input = Tensor(trace.conv_input[l].shape());
    const bool trainable = !model.core[l].frozen;
    nd::conv1d_backward_accumulate(trace.conv_input[l], model.core[l].kernels, d_pre,
                                   trainable ? &grads.core[l].kernels : nullptr,
                                   trainable ? &grads.core[l].bias : nullptr,
                                   need_input ? &d_input : nullptr);
    if (!need_input) break;
    d_pre = nd::relu_backward(trace.conv_pre[l - 1],
                              nd::dropout_backward(trace.dropped[l - 1], d_input));
  }
}

std::uint64_t regime_signature(const ForwardTrace& trace) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  auto mix_mask = [&](const Tensor& t) {
    for (double v : t.values()) mix(v > 0.0 ? 1 : 0);
  };
  for (const Tensor& t : trace.conv_pre) mix_mask(t);
  for (std::size_t a : trace.pooled.argmax) mix(a);
  if (!trace.har_hidden_pre.empty()) mix_mask(trace.har_hidden_pre);
  for (const Tensor& t : trace.td_hidden_pre) mix_mask(t);
  for (double z : trace.td_logits) mix(nd::logit_clamped(z) ? 1 : 0);
  return h;
}

TaskLosses batch_gradients(const TpnModel& model, std::span<const Example> batch,
                           Objective objective, Rng* dropout_rng, TpnModel& grads) {
  if (batch.empty()) throw DataError("empty minibatch");
  zero_out(grads);
  TaskLosses sum;
  ForwardTrace trace;
  for (const Example& ex : batch) {
    const TaskLosses l = forward_loss(model, ex, objective, dropout_rng, trace);
    sum.har += l.har;
    sum.transform += l.transform;
    backward(model, trace, ex, objective, grads);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for_each_layer(grads, [inv](const std::string&, Tensor& w, Tensor& b, bool&) {
    for (double& v : w.values()) v *= inv;
    for (double& v : b.values()) v *= inv;
  });
  sum.har *= inv;
  sum.transform *= inv;
  return sum;
}

Tensor core_features(const TpnModel& model, const Tensor& window) {
  ForwardTrace trace;
  core_forward(model, window, nullptr, trace);
  return trace.pooled.values;
}

Tensor predict_activity(const TpnModel& model, const Tensor& window) {
  require_head(model.har.has_value(), "activity");
  ForwardTrace trace;
  core_forward(model, window, nullptr, trace);
  har_forward(*model.har, trace.pooled.values, trace);
  return trace.har_probs;
}

Tensor predict_linear(const TpnModel& model, const Tensor& window) {
  require_head(model.linear.has_value(), "linear");
  const Tensor features = core_features(model, window);
  return nd::softmax(
      nd::dense_forward(features, model.linear->output.weights, model.linear->output.bias));
}

std::array<double, kTransformTaskCount> predict_transforms(const TpnModel& model,
                                                           const Tensor& window) {
  require_head(model.td.has_value(), "transformation");
  ForwardTrace trace;
  core_forward(model, window, nullptr, trace);
  td_forward(*model.td, trace.pooled.values, trace);
  return trace.td_probs;
}

void save_weights(const TpnModel& model, const std::filesystem::path& path) {
  ByteWriter w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(kWeightFormatVersion);
  const Architecture& a = model.arch;
  for (const ConvSpec& c : a.conv) {
    w.u64(c.filters);
    w.u64(c.width);
  }
  w.u64(a.input_channels);
  w.u64(a.har_hidden);
  w.u64(a.td_hidden);
  w.f64(a.dropout_rate);
  w.u8(a.shared_td_hidden ? 1 : 0);
  w.u64(model.num_classes);
  w.u8(model.har ? 1 : 0);
  w.u8(model.td ? 1 : 0);
  w.u8(model.linear ? 1 : 0);
  for_each_layer(const_cast<TpnModel&>(model),
                 [&](const std::string&, Tensor& weights, Tensor& bias, bool& frozen) {
                   w.u8(frozen ? 1 : 0);
                   write_tensor(w, weights);
                   write_tensor(w, bias);
                 });
  const auto& bytes = w.bytes();
  ByteWriter trailer;
  trailer.u64(fnv1a(bytes.data(), bytes.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.write(reinterpret_cast<const char*>(trailer.bytes().data()), 8);
  if (!out) throw Error("failed writing " + path.string());
}

TpnModel load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof(kMagic) + 8) throw FormatError("weight file truncated");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a weight file (bad magic bytes)");
  }
  const std::size_t payload = bytes.size() - 8;
  ByteReader r(bytes, bytes.size());
  for (std::size_t i = 0; i < sizeof(kMagic); ++i) r.u8();
  const std::uint32_t version = r.u32();
  if (version != kWeightFormatVersion) {
    throw FormatError("weight format version " + std::to_string(version) +
                      " unsupported (expected " + std::to_string(kWeightFormatVersion) + ")");
  }
  std::uint64_t stored = 0;
  for (std::size_t i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(bytes[payload + i]) << (8 * i);
  if (stored != fnv1a(bytes.data(), payload)) throw FormatError("weight file checksum mismatch");

  ByteReader body(bytes, payload);
  for (std::size_t i = 0; i < sizeof(kMagic) + 4; ++i) body.u8();
  Architecture a;
  for (ConvSpec& c : a.conv) {
    c.filters = body.u64();
    c.width = body.u64();
  }
  a.input_channels = body.u64();
  a.har_hidden = body.u64();
  a.td_hidden = body.u64();
  a.dropout_rate = body.f64();
  a.shared_td_hidden = body.u8() != 0;
  const std::size_t num_classes = body.u64();
  const bool has_har = body.u8() != 0, has_td = body.u8() != 0, has_linear = body.u8() != 0;

  TpnModel model = build_multitask_model(num_classes, 0, a, {}, has_har);
  if (!has_td) detach_td_heads(model);
  if (has_linear) attach_linear_head(model, 0);
  for_each_layer(model, [&](const std::string& name, Tensor& weights, Tensor& bias, bool& frozen) {
    frozen = body.u8() != 0;
    weights = read_tensor(body, weights, name + ".weights");
    bias = read_tensor(body, bias, name + ".bias");
  });
  if (!body.done()) throw FormatError("trailing bytes in weight file");
  return model;
}

nlohmann::json architecture_json(const Architecture& arch) {
  nlohmann::json conv = nlohmann::json::array();
  for (const ConvSpec& c : arch.conv) conv.push_back({{"filters", c.filters}, {"width", c.width}});
  return {{"conv", conv},
          {"input_channels", arch.input_channels},
          {"har_hidden", arch.har_hidden},
          {"td_hidden", arch.td_hidden},
          {"dropout_rate", arch.dropout_rate},
          {"shared_td_hidden", arch.shared_td_hidden}};
}

Architecture architecture_from_json(const nlohmann::json& j) {
  Architecture a;
  if (j.contains("conv")) {
    const auto& conv = j.at("conv");
    if (!conv.is_array() || conv.size() != 3) throw ConfigError("architecture.conv needs 3 layers");
    for (std::size_t l = 0; l < 3; ++l) {
      a.conv[l].filters = conv[l].at("filters").get<std::size_t>();
      a.conv[l].width = conv[l].at("width").get<std::size_t>();
    }
  }
  a.input_channels = j.value("input_channels", a.input_channels);
  a.har_hidden = j.value("har_hidden", a.har_hidden);
  a.td_hidden = j.value("td_hidden", a.td_hidden);
  a.dropout_rate = j.value("dropout_rate", a.dropout_rate);
  a.shared_td_hidden = j.value("shared_td_hidden", a.shared_td_hidden);
  return a;
}

}  // namespace selfhar
