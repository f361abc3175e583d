#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "recnn/layers.hpp"
#include "recnn/optim.hpp"
#include "recnn/raster.hpp"
#include "recnn/recurrent.hpp"
#include "recnn/samples.hpp"

namespace recnn {

struct ModelConfig {
  CellType cell = CellType::lstm;
  TaskMode mode = TaskMode::binary;
  std::size_t bands = 6;
  /// Odd patch side P; the conv stack must reduce P x P to 1 x 1.
  std::size_t patch = 5;
  std::vector<std::size_t> conv_channels{32, 64};
  std::vector<std::size_t> conv_dilations{1, 1};
  std::size_t kernel_radius = 1;
  std::size_t hidden = 128;
  std::size_t fc_hidden = 64;
  /// Class count; the binary head always has a single sigmoid output.
  std::size_t classes = 2;
  bool share_branches = true;
  bool biases = true;
  Activation rnn_activation = Activation::tanh;
  /// Per-band min-max normalization applied to whole rasters before
  /// patches are cut (training and full-map prediction).
  bool normalize_inputs = false;

  void validate() const;
  std::size_t feature_size() const;
  std::size_t output_width() const { return mode == TaskMode::binary ? 1 : classes; }
};

/// Binary: scores = {p(changed)}, label = p > 0.5. Multiclass: softmax
/// vector, label = argmax.
struct Prediction {
  std::size_t label = 0;
  std::vector<double> scores;
};

/// Two convolutional branches (T1, T2), a recurrent cell over the two
/// branch features, and a two-layer fully connected head.
class ReCNNModel {
 public:
  static ReCNNModel create(const ModelConfig& config, Rng& init);

  /// Spectral-temporal ablation: 1 x 1 patches, no convolution, the raw
  /// spectra feed the recurrent cell directly.
  static ReCNNModel rnn_only(ModelConfig config, Rng& init);

  const ModelConfig& config() const { return config_; }
  const RecurrentCell& cell() const { return cell_; }
  const std::vector<DilatedConv2D>& branch(std::size_t slot) const;

  /// Every trainable tensor in a fixed order (also the file order).
  std::vector<NamedTensor> parameters();
  std::size_t param_count() const;

  /// Features [F, N] of a patch batch [N, bands, P, P] through the branch
  /// for temporal slot 0 (T1) or 1 (T2).
  Var branch_features(Binding& bind, const Var& patches, std::size_t slot) const;
  /// Head output [output_width, N]: sigmoid (binary) or column softmax.
  Var forward(Binding& bind, const Var& x_t1, const Var& x_t2) const;

  Prediction forward(const Tensor& x_t1, const Tensor& x_t2) const;
  std::vector<Prediction> predict(std::span<const PatchPair> pairs) const;

 private:
  ReCNNModel() = default;
  void check_patch(const Tensor& patch) const;

  ModelConfig config_;
  std::vector<DilatedConv2D> branch_t1_;
  std::vector<DilatedConv2D> branch_t2_;  // empty when branches are shared
  RecurrentCell cell_;
  Dense fc1_;
  Dense fc2_;
};

/// Stacks [bands, P, P] patches into [N, bands, P, P]; rejects values
/// outside [0, 1].
Tensor stack_patches(std::span<const Tensor* const> patches);

std::vector<Prediction> decode_predictions(const Tensor& scores, TaskMode mode);

/// Mean cross-entropy of `batch` before the update; applies one optimizer
/// step to every parameter.
double train_step(ReCNNModel& model, std::span<const PatchPair> batch, Nadam& optimizer);
double train_step(ReCNNModel& model, std::span<const PatchPair* const> batch, Nadam& optimizer,
                  std::size_t* correct = nullptr);

struct TrainOptions {
  NadamConfig optimizer;
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
};

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double train_accuracy = 0.0;
};

/// Shuffles `data` each epoch with `shuffle` and trains; returns one entry
/// per epoch. Loss and accuracy are the pre-update values of each batch.
std::vector<EpochStats> train(ReCNNModel& model, std::span<const PatchPair> data,
                              const TrainOptions& options, Rng& shuffle);

/// Label for every pixel from mirror-padded patches centered on it.
/// Output is a single-band u8 raster of the inputs' size. Results do not
/// depend on `block` (the number of pixels evaluated per batch).
Raster predict_map(const ReCNNModel& model, const Raster& t1, const Raster& t2,
                   std::size_t block = 256);

void save_model(const ReCNNModel& model, const std::filesystem::path& path);
ReCNNModel load_model(const std::filesystem::path& path);
std::vector<unsigned char> serialize_model(const ReCNNModel& model);
ReCNNModel deserialize_model(std::span<const unsigned char> bytes);

std::string model_metadata(const ModelConfig& config);
ModelConfig parse_model_metadata(const std::string& text);

}  // namespace recnn
