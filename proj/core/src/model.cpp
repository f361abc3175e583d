#include "recnn/model.hpp"

#include <algorithm>
#include <numeric>

#include "recnn/error.hpp"
#include "recnn/ops.hpp"

namespace recnn {

void ModelConfig::validate() const {
  if (bands == 0) throw ValidationError("model: bands must be >= 1");
  if (patch == 0 || patch % 2 == 0) throw ValidationError("model: patch size must be odd");
  if (hidden == 0 || fc_hidden == 0) throw ValidationError("model: layer sizes must be >= 1");
  if (mode == TaskMode::multiclass && classes < 2) {
    throw ValidationError("model: multiclass mode needs at least 2 classes");
  }
  if (conv_channels.size() != conv_dilations.size()) {
    throw ValidationError("model: conv_channels and conv_dilations differ in length");
  }
  std::size_t side = patch;
  for (std::size_t i = 0; i < conv_channels.size(); ++i) {
    if (conv_channels[i] == 0 || conv_dilations[i] == 0) {
      throw ValidationError("model: conv channels and dilations must be >= 1");
    }
    const std::size_t shrink = 2 * kernel_radius * conv_dilations[i];
    if (side <= shrink) {
      throw ValidationError("model: conv layer " + std::to_string(i) + " needs input side > " +
                            std::to_string(shrink) + ", has " + std::to_string(side));
    }
    side -= shrink;
  }
  if (side != 1) {
    throw ValidationError("model: conv stack maps a " + std::to_string(patch) + "x" +
                          std::to_string(patch) + " patch to " + std::to_string(side) + "x" +
                          std::to_string(side) + ", expected 1x1");
  }
}

std::size_t ModelConfig::feature_size() const {
  return conv_channels.empty() ? bands : conv_channels.back();
}

namespace {

std::vector<DilatedConv2D> make_branch(const ModelConfig& cfg, Rng& rng) {
  std::vector<DilatedConv2D> layers;
  std::size_t in = cfg.bands;
  for (std::size_t i = 0; i < cfg.conv_channels.size(); ++i) {
    layers.push_back(DilatedConv2D::glorot(rng, in, cfg.conv_channels[i], cfg.kernel_radius,
                                           cfg.conv_dilations[i]));
    in = cfg.conv_channels[i];
  }
  return layers;
}

}  // namespace

ReCNNModel ReCNNModel::create(const ModelConfig& config, Rng& init) {
  config.validate();
  ReCNNModel m;
  m.config_ = config;
  m.branch_t1_ = make_branch(config, init);
  if (!config.share_branches) m.branch_t2_ = make_branch(config, init);
  m.cell_ = make_cell(config.cell, init, config.feature_size(), config.hidden, config.biases,
                      config.rnn_activation);
  m.fc1_ = Dense::glorot(init, config.hidden, config.fc_hidden);
  m.fc2_ = Dense::glorot(init, config.fc_hidden, config.output_width());
  return m;
}

ReCNNModel ReCNNModel::rnn_only(ModelConfig config, Rng& init) {
  config.patch = 1;
  config.conv_channels.clear();
  config.conv_dilations.clear();
  return create(config, init);
}

const std::vector<DilatedConv2D>& ReCNNModel::branch(std::size_t slot) const {
  return (slot == 0 || config_.share_branches) ? branch_t1_ : branch_t2_;
}

std::vector<NamedTensor> ReCNNModel::parameters() {
  std::vector<NamedTensor> out;
  auto add_branch = [&](std::vector<DilatedConv2D>& layers, const std::string& prefix) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      out.push_back({prefix + std::to_string(i) + ".kernel", &layers[i].kernel});
      out.push_back({prefix + std::to_string(i) + ".bias", &layers[i].bias});
    }
  };
  add_branch(branch_t1_, config_.share_branches ? "conv." : "conv_t1.");
  if (!config_.share_branches) add_branch(branch_t2_, "conv_t2.");
  for (auto& p : recnn::parameters(cell_)) out.push_back({"cell." + p.name, p.tensor});
  out.push_back({"fc1.weight", &fc1_.weight});
  out.push_back({"fc1.bias", &fc1_.bias});
  out.push_back({"fc2.weight", &fc2_.weight});
  out.push_back({"fc2.bias", &fc2_.bias});
  return out;
}

std::size_t ReCNNModel::param_count() const {
  auto copy = *this;
  std::size_t n = 0;
  for (const auto& p : copy.parameters()) n += p.tensor->size();
  return n;
}

Var ReCNNModel::branch_features(Binding& bind, const Var& patches, std::size_t slot) const {
  const Shape& s = patches.shape();
  if (s.size() != 4 || s[1] != config_.bands || s[2] != config_.patch || s[3] != config_.patch) {
    throw DimensionError("model expects patches [N, " + std::to_string(config_.bands) + ", " +
                         std::to_string(config_.patch) + ", " + std::to_string(config_.patch) +
                         "], got " + to_string(s));
  }
  Var x = patches;
  for (const auto& layer : branch(slot)) x = relu(layer.forward(bind, x));
  const std::size_t n = s[0];
  return transpose(reshape(x, {n, config_.feature_size()}));
}

Var ReCNNModel::forward(Binding& bind, const Var& x_t1, const Var& x_t2) const {
  const Var f1 = branch_features(bind, x_t1, 0);
  const Var f2 = branch_features(bind, x_t2, 1);
  if (f1.shape() != f2.shape()) {
    throw DimensionError("T1 and T2 batches differ: " + to_string(x_t1.shape()) + " vs " +
                         to_string(x_t2.shape()));
  }
  const Var features[] = {f1, f2};
  const Var h = run_sequence(bind, cell_, features);
  const Var z = fc1_.forward(bind, h, Activation::relu);
  return fc2_.forward(bind, z,
                      config_.mode == TaskMode::binary ? Activation::sigmoid : Activation::softmax);
}

void ReCNNModel::check_patch(const Tensor& patch) const {
  const Shape expected{config_.bands, config_.patch, config_.patch};
  if (patch.shape() != expected) {
    throw DimensionError("patch shape " + to_string(patch.shape()) + " does not match model " +
                         to_string(expected));
  }
}

Tensor stack_patches(std::span<const Tensor* const> patches) {
  if (patches.empty()) throw ValidationError("empty patch batch");
  const Shape& s = patches.front()->shape();
  if (s.size() != 3) throw DimensionError("patch must be [bands, P, P], got " + to_string(s));
  Shape shape{patches.size(), s[0], s[1], s[2]};
  std::vector<double> data;
  data.reserve(element_count(shape));
  for (const Tensor* p : patches) {
    if (p->shape() != s) {
      throw DimensionError("patch batch mixes shapes " + to_string(s) + " and " +
                           to_string(p->shape()));
    }
    for (double v : p->data()) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("patch value " + std::to_string(v) + " outside [0, 1]");
      }
    }
    data.insert(data.end(), p->data().begin(), p->data().end());
  }
  return Tensor(std::move(shape), std::move(data));
}

std::vector<Prediction> decode_predictions(const Tensor& scores, TaskMode mode) {
  const std::size_t rows = scores.dim(0), cols = scores.dim(1);
  std::vector<Prediction> out(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    auto& p = out[j];
    p.scores.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) p.scores[i] = scores[i * cols + j];
    if (mode == TaskMode::binary) {
      p.label = p.scores[0] > 0.5 ? 1 : 0;
    } else {
      p.label = static_cast<std::size_t>(
          std::max_element(p.scores.begin(), p.scores.end()) - p.scores.begin());
    }
  }
  return out;
}

Prediction ReCNNModel::forward(const Tensor& x_t1, const Tensor& x_t2) const {
  check_patch(x_t1);
  check_patch(x_t2);
  const Tensor* a[] = {&x_t1};
  const Tensor* b[] = {&x_t2};
  Tape tape;
  Binding bind(tape, false);
  const Var out =
      forward(bind, tape.constant(stack_patches(a)), tape.constant(stack_patches(b)));
  return decode_predictions(out.value(), config_.mode).front();
}

std::vector<Prediction> ReCNNModel::predict(std::span<const PatchPair> pairs) const {
  std::vector<Prediction> out;
  out.reserve(pairs.size());
  constexpr std::size_t kBlock = 256;
  for (std::size_t start = 0; start < pairs.size(); start += kBlock) {
    const std::size_t stop = std::min(pairs.size(), start + kBlock);
    std::vector<const Tensor*> a, b;
    for (std::size_t i = start; i < stop; ++i) {
      check_patch(pairs[i].x_t1);
      check_patch(pairs[i].x_t2);
      a.push_back(&pairs[i].x_t1);
      b.push_back(&pairs[i].x_t2);
    }
    Tape tape;
    Binding bind(tape, false);
    const Var scores =
        forward(bind, tape.constant(stack_patches(a)), tape.constant(stack_patches(b)));
    auto decoded = decode_predictions(scores.value(), config_.mode);
    out.insert(out.end(), decoded.begin(), decoded.end());
  }
  return out;
}

double train_step(ReCNNModel& model, std::span<const PatchPair* const> batch, Nadam& optimizer,
                  std::size_t* correct) {
  if (batch.empty()) throw ValidationError("train_step: empty batch");
  std::vector<const Tensor*> a, b;
  std::vector<std::size_t> labels;
  for (const PatchPair* p : batch) {
    a.push_back(&p->x_t1);
    b.push_back(&p->x_t2);
    labels.push_back(p->label);
  }
  const TaskMode mode = model.config().mode;
  if (mode == TaskMode::binary) {
    for (auto y : labels)
      if (y > 1) throw ValidationError("binary label out of range: " + std::to_string(y));
  }

  auto params = model.parameters();
  Tape tape;
  Binding bind(tape);
  const Var scores =
      model.forward(bind, tape.constant(stack_patches(a)), tape.constant(stack_patches(b)));
  const Var objective = loss(scores, labels, mode);
  tape.backward(objective);

  if (correct) {
    const auto preds = decode_predictions(scores.value(), mode);
    *correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) *correct += preds[i].label == labels[i];
  }

  std::vector<Tensor*> tensors;
  std::vector<Tensor> grads;
  for (const auto& p : params) {
    tensors.push_back(p.tensor);
    grads.push_back(bind.gradient(*p.tensor));
  }
  optimizer.step(tensors, grads);
  return objective.value().item();
}

double train_step(ReCNNModel& model, std::span<const PatchPair> batch, Nadam& optimizer) {
  std::vector<const PatchPair*> ptrs;
  for (const auto& p : batch) ptrs.push_back(&p);
  return train_step(model, std::span<const PatchPair* const>(ptrs), optimizer);
}

std::vector<EpochStats> train(ReCNNModel& model, std::span<const PatchPair> data,
                              const TrainOptions& options, Rng& shuffle) {
  if (options.batch_size == 0) throw ValidationError("batch size must be >= 1");
  std::vector<EpochStats> history;
  if (options.epochs == 0) return history;
  if (data.empty()) throw ValidationError("no training samples");
  Nadam optimizer(options.optimizer);
  std::vector<const PatchPair*> order;
  for (const auto& p : data) order.push_back(&p);
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      std::span<const PatchPair* const> batch(order.data() + start, stop - start);
      std::size_t correct = 0;
      loss_sum += train_step(model, batch, optimizer, &correct) * static_cast<double>(batch.size());
      hits += correct;
    }
    const double n = static_cast<double>(order.size());
    history.push_back({epoch, loss_sum / n, static_cast<double>(hits) / n});
  }
  return history;
}

Raster predict_map(const ReCNNModel& model, const Raster& t1_in, const Raster& t2_in,
                   std::size_t block) {
  if (!t1_in.same_geometry(t2_in)) {
    throw ValidationError("T1 and T2 rasters differ in size or band count");
  }
  const ModelConfig& cfg = model.config();
  if (t1_in.bands != cfg.bands) {
    throw ValidationError("rasters have " + std::to_string(t1_in.bands) +
                          " bands but the model was trained on " + std::to_string(cfg.bands));
  }
  if (block == 0) block = 1;
  const Raster t1 = cfg.normalize_inputs ? normalize(t1_in) : t1_in;
  const Raster t2 = cfg.normalize_inputs ? normalize(t2_in) : t2_in;
  Raster out(t1.width, t1.height, 1, 0.0, DType::u8);
  const std::size_t n = t1.pixels();
  for (std::size_t start = 0; start < n; start += block) {
    const std::size_t stop = std::min(n, start + block);
    std::vector<Tensor> pa, pb;
    for (std::size_t i = start; i < stop; ++i) {
      pa.push_back(extract_patch(t1, i / t1.width, i % t1.width, cfg.patch));
      pb.push_back(extract_patch(t2, i / t1.width, i % t1.width, cfg.patch));
    }
    std::vector<const Tensor*> a, b;
    for (std::size_t k = 0; k < pa.size(); ++k) {
      a.push_back(&pa[k]);
      b.push_back(&pb[k]);
    }
    Tape tape;
    Binding bind(tape, false);
    const Var scores =
        model.forward(bind, tape.constant(stack_patches(a)), tape.constant(stack_patches(b)));
    const auto preds = decode_predictions(scores.value(), cfg.mode);
    for (std::size_t k = 0; k < preds.size(); ++k) {
      out.data[start + k] = static_cast<double>(preds[k].label);
    }
  }
  return out;
}

}  // namespace recnn
