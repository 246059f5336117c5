#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nrsr/image.hpp"
#include "nrsr/lfcr.hpp"
#include "nrsr/vdsr.hpp"

namespace nrsr {

using Shift = std::pair<int, int>;  // (dy, dx)

/// Standard shift sets by augmentation factor: 1, 4, 8 or 16.
std::vector<Shift> shift_set_for_factor(int factor);

struct TrainConfig {
  int patch_size = 48;
  int patch_stride = 40;
  std::vector<Shift> shift_set = shift_set_for_factor(16);
  bool flips_rotations = true;
  int epochs = 100;
  /// Phase-2 epochs; negative means "same as epochs", 0 skips phase 2.
  int vdsr_epochs = -1;
  double initial_lr = 1e-4;
  int lr_decay_every = 10;
  double lr_decay_factor = 10.0;
  double lr_floor = 1e-8;
  int batch_size = 64;
  /// Largest chunk pushed through the graph at once. Gradients of the chunks
  /// of one batch are accumulated, so this only bounds memory.
  int micro_batch = 16;
  std::uint64_t seed = 1;

  int phase2_epochs() const { return vdsr_epochs < 0 ? epochs : vdsr_epochs; }

  /// Throws std::invalid_argument on inconsistent values.
  void validate() const;
  /// Sets one field from its textual form; unknown keys are rejected.
  void set(const std::string& key, const std::string& value);
};

/// Flat "key = value" text, '#' starts a comment. Missing keys keep their
/// defaults.
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::filesystem::path& path);
std::string format_train_config(const TrainConfig& config);

struct PatchProvenance {
  int image = 0;
  int y = 0;
  int x = 0;
  Shift shift{0, 0};
};

/// Reference patches on the 0..255 scale, one provenance entry per patch.
/// Dihedral augmentation is applied lazily: sample i is transform
/// (i % transforms) of patch (i / transforms).
struct PatchSet {
  int patch_size = 0;
  int transforms = 1;
  std::vector<Image> patches;
  std::vector<PatchProvenance> provenance;

  std::size_t sample_count() const { return patches.size() * static_cast<std::size_t>(transforms); }
  Image sample(std::size_t i) const;
};

using WarningSink = std::function<void(const std::string&)>;
void warn_to_stderr(const std::string& message);

/// Patches at offsets 0, stride, 2*stride, ... in row-major image order.
/// Images smaller than a patch are skipped with a warning.
PatchSet extract_patches(const std::vector<Image>& images, const TrainConfig& config,
                         const WarningSink& warn = warn_to_stderr);

/// Transform t of the dihedral group: t % 4 quarter turns counter-clockwise,
/// then a horizontal mirror when t >= 4.
Image dihedral(const Image& patch, int t);
std::array<Image, 8> augment_flip_rotate(const Image& patch);

/// Crops starting at each shift. All crops share the size
/// floor((H - max dy) / 8) * 8 by floor((W - max dx) / 8) * 8 so every shift
/// yields the same patch grid.
std::vector<Image> augment_shift(const Image& image, const std::vector<Shift>& shifts);

/// Shift augmentation followed by patch extraction; flips and rotations are
/// recorded in `transforms`.
PatchSet build_training_set(const std::vector<Image>& images, const TrainConfig& config,
                            const WarningSink& warn = warn_to_stderr);

/// initial_lr / decay^floor((epoch - 1) / decay_every), clamped at lr_floor.
double lr_schedule(int epoch, const TrainConfig& config);
/// Phase 2 starts ten times lower.
double lr_schedule_phase2(int epoch, const TrainConfig& config);

struct StepRecord {
  int epoch = 0;
  std::int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;  // MSE on the 0..1 scale
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
  std::int64_t steps = 0;
};

struct TrainHooks {
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const EpochRecord&)> on_epoch_end;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  std::vector<StepRecord> steps;
};

/// One Adam step on the LFCR loss MSE(f_hat, f) for a batch of references.
double lfcr_train_step(LfcrNet<float>& net, Adam<float>& adam, const Tensor<float>& batch, double lr,
                       int micro_batch);
/// One Adam step on MSE(f_hat + r, f) over VDSR parameters; `estimates` are
/// the frozen LFCR outputs for `targets`.
double vdsr_train_step(VdsrNet<float>& net, Adam<float>& adam, const Tensor<float>& estimates,
                       const Tensor<float>& targets, double lr, int micro_batch);

/// Phase 1. Epochs start_epoch..config.epochs; samples are shuffled per
/// epoch from (seed, epoch). Throws NumericalError on a non-finite loss.
TrainResult train_lfcr(LfcrNet<float>& net, Adam<float>& adam, const PatchSet& patches, const TrainConfig& config,
                       const TrainHooks& hooks = {}, int start_epoch = 1);

/// Phase 2 with the LFCR frozen: its outputs are recomputed per batch from
/// constant inputs and no optimizer ever sees its parameters.
TrainResult train_vdsr(const LfcrNet<float>& lfcr, VdsrNet<float>& vdsr, Adam<float>& adam, const PatchSet& patches,
                       const TrainConfig& config, const TrainHooks& hooks = {}, int start_epoch = 1);

/// Stacks samples [first, first + count) of a permutation into a batch.
Tensor<float> gather_batch(const PatchSet& patches, const std::vector<std::size_t>& order, std::size_t first,
                           std::size_t count);

}  // namespace nrsr
