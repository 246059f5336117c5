#include "nrsr/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

namespace nrsr {

std::vector<Shift> shift_set_for_factor(int factor) {
  std::vector<int> ys;
  std::vector<int> xs;
  switch (factor) {
    case 1: ys = {0}; xs = {0}; break;
    case 4: ys = {0, 4}; xs = {0, 4}; break;
    case 8: ys = {0, 2, 4, 6}; xs = {0, 4}; break;
    case 16: ys = {0, 2, 4, 6}; xs = {0, 2, 4, 6}; break;
    default: throw std::invalid_argument("shift augmentation factor must be 1, 4, 8 or 16");
  }
  std::vector<Shift> out;
  for (int dy : ys) {
    for (int dx : xs) out.emplace_back(dy, dx);
  }
  return out;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("train config: " + what); };
  if (patch_size < 8 || patch_size % 8 != 0) fail("patch_size must be a positive multiple of 8");
  if (patch_stride < 8 || patch_stride % 8 != 0) fail("patch_stride must be a positive multiple of 8");
  if (shift_set.empty()) fail("shift_set is empty");
  for (const auto& [dy, dx] : shift_set) {
    if (dy < 0 || dx < 0 || dy % 2 != 0 || dx % 2 != 0) fail("shifts must be even and non-negative");
  }
  if (epochs < 0) fail("epochs must be >= 0");
  if (!(initial_lr > 0.0) || !(lr_floor >= 0.0)) fail("learning rates must be positive");
  if (lr_decay_every < 1 || !(lr_decay_factor >= 1.0)) fail("bad learning-rate decay");
  if (batch_size < 1 || micro_batch < 1) fail("batch sizes must be >= 1");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename Num>
Num parse_number(const std::string& key, const std::string& value) {
  Num out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("train config: bad value for " + key + ": " + value);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "on" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "off" || value == "0" || value == "no") return false;
  throw std::invalid_argument("train config: bad value for " + key + ": " + value);
}

// "0:0 0:4 4:0" (separators: whitespace, ',' or ';').
std::vector<Shift> parse_shifts(const std::string& value) {
  std::string text = value;
  std::replace(text.begin(), text.end(), ',', ' ');
  std::replace(text.begin(), text.end(), ';', ' ');
  std::istringstream in(text);
  std::vector<Shift> out;
  std::string item;
  while (in >> item) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("train config: shift must be dy:dx, got " + item);
    out.emplace_back(parse_number<int>("shift_set", item.substr(0, colon)),
                     parse_number<int>("shift_set", item.substr(colon + 1)));
  }
  return out;
}

}  // namespace

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "patch_size") patch_size = parse_number<int>(key, value);
  else if (key == "patch_stride") patch_stride = parse_number<int>(key, value);
  else if (key == "shift_set") shift_set = parse_shifts(value);
  else if (key == "shift_da") shift_set = shift_set_for_factor(parse_number<int>(key, value));
  else if (key == "flips_rotations") flips_rotations = parse_bool(key, value);
  else if (key == "epochs") epochs = parse_number<int>(key, value);
  else if (key == "vdsr_epochs") vdsr_epochs = parse_number<int>(key, value);
  else if (key == "initial_lr") initial_lr = parse_number<double>(key, value);
  else if (key == "lr_decay_every") lr_decay_every = parse_number<int>(key, value);
  else if (key == "lr_decay_factor") lr_decay_factor = parse_number<double>(key, value);
  else if (key == "lr_floor") lr_floor = parse_number<double>(key, value);
  else if (key == "batch_size") batch_size = parse_number<int>(key, value);
  else if (key == "micro_batch") micro_batch = parse_number<int>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else throw std::invalid_argument("train config: unknown key " + key);
}

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig config;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("train config line " + std::to_string(lineno) + ": expected key = value");
    }
    config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  config.validate();
  return config;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_train_config(text.str());
}

std::string format_train_config(const TrainConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "patch_size = " << c.patch_size << "\n"
      << "patch_stride = " << c.patch_stride << "\n"
      << "shift_set =";
  for (const auto& [dy, dx] : c.shift_set) out << " " << dy << ":" << dx;
  out << "\n"
      << "flips_rotations = " << (c.flips_rotations ? "true" : "false") << "\n"
      << "epochs = " << c.epochs << "\n"
      << "vdsr_epochs = " << c.vdsr_epochs << "\n"
      << "initial_lr = " << c.initial_lr << "\n"
      << "lr_decay_every = " << c.lr_decay_every << "\n"
      << "lr_decay_factor = " << c.lr_decay_factor << "\n"
      << "lr_floor = " << c.lr_floor << "\n"
      << "batch_size = " << c.batch_size << "\n"
      << "micro_batch = " << c.micro_batch << "\n"
      << "seed = " << c.seed << "\n";
  return out.str();
}

void warn_to_stderr(const std::string& message) { std::cerr << "warning: " << message << "\n"; }

Image PatchSet::sample(std::size_t i) const {
  const std::size_t t = static_cast<std::size_t>(transforms);
  return dihedral(patches.at(i / t), static_cast<int>(i % t));
}

namespace {

void append_patches(PatchSet& set, const Image& image, int image_id, Shift shift, const TrainConfig& config) {
  const int p = config.patch_size;
  for (int y = 0; y + p <= image.height; y += config.patch_stride) {
    for (int x = 0; x + p <= image.width; x += config.patch_stride) {
      set.patches.push_back(crop(image, y, x, p, p));
      set.provenance.push_back({image_id, y, x, shift});
    }
  }
}

}  // namespace

PatchSet extract_patches(const std::vector<Image>& images, const TrainConfig& config, const WarningSink& warn) {
  config.validate();
  PatchSet set;
  set.patch_size = config.patch_size;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& img = images[i];
    if (img.height < config.patch_size || img.width < config.patch_size) {
      if (warn) {
        warn("image " + std::to_string(i) + " (" + std::to_string(img.width) + "x" + std::to_string(img.height) +
             ") is smaller than one patch, skipped");
      }
      continue;
    }
    append_patches(set, img, static_cast<int>(i), {0, 0}, config);
  }
  return set;
}

Image dihedral(const Image& patch, int t) {
  if (t < 0 || t > 7) throw std::invalid_argument("dihedral: transform index must be 0..7");
  if (t != 0 && patch.height != patch.width) throw ShapeError("dihedral: patch must be square");
  const int n = patch.height;
  Image out = patch;
  for (int r = 0; r < t % 4; ++r) {
    Image turned(n, n);
    // Counter-clockwise quarter turn.
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) turned.at(n - 1 - x, y) = out.at(y, x);
    }
    out = std::move(turned);
  }
  if (t >= 4) {
    for (int y = 0; y < n; ++y) std::reverse(out.pixels.begin() + y * n, out.pixels.begin() + (y + 1) * n);
  }
  return out;
}

std::array<Image, 8> augment_flip_rotate(const Image& patch) {
  if (patch.height != patch.width) throw ShapeError("augment_flip_rotate: patch must be square");
  std::array<Image, 8> out;
  for (int t = 0; t < 8; ++t) out[t] = dihedral(patch, t);
  return out;
}

std::vector<Image> augment_shift(const Image& image, const std::vector<Shift>& shifts) {
  if (shifts.empty()) throw std::invalid_argument("augment_shift: empty shift set");
  int max_dy = 0;
  int max_dx = 0;
  for (const auto& [dy, dx] : shifts) {
    if (dy < 0 || dx < 0 || dy % 2 != 0 || dx % 2 != 0) {
      throw std::invalid_argument("augment_shift: shifts must be even and non-negative");
    }
    if (dy >= image.height || dx >= image.width) throw std::invalid_argument("augment_shift: shift exceeds image");
    max_dy = std::max(max_dy, dy);
    max_dx = std::max(max_dx, dx);
  }
  const int h = (image.height - max_dy) / 8 * 8;
  const int w = (image.width - max_dx) / 8 * 8;
  if (h < 8 || w < 8) throw std::invalid_argument("augment_shift: image too small for the shift set");
  std::vector<Image> out;
  out.reserve(shifts.size());
  for (const auto& [dy, dx] : shifts) out.push_back(crop(image, dy, dx, h, w));
  return out;
}

PatchSet build_training_set(const std::vector<Image>& images, const TrainConfig& config, const WarningSink& warn) {
  config.validate();
  PatchSet set;
  set.patch_size = config.patch_size;
  set.transforms = config.flips_rotations ? 8 : 1;
  int max_dy = 0;
  int max_dx = 0;
  for (const auto& [dy, dx] : config.shift_set) {
    max_dy = std::max(max_dy, dy);
    max_dx = std::max(max_dx, dx);
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& img = images[i];
    if ((img.height - max_dy) / 8 * 8 < config.patch_size || (img.width - max_dx) / 8 * 8 < config.patch_size) {
      if (warn) {
        warn("image " + std::to_string(i) + " (" + std::to_string(img.width) + "x" + std::to_string(img.height) +
             ") is too small for one shifted patch, skipped");
      }
      continue;
    }
    const auto crops = augment_shift(img, config.shift_set);
    for (std::size_t s = 0; s < crops.size(); ++s) {
      append_patches(set, crops[s], static_cast<int>(i), config.shift_set[s], config);
    }
  }
  return set;
}

double lr_schedule(int epoch, const TrainConfig& config) {
  if (epoch < 1) throw std::invalid_argument("lr_schedule: epochs count from 1");
  const double decays = std::floor(static_cast<double>(epoch - 1) / config.lr_decay_every);
  return std::max(config.initial_lr * std::pow(config.lr_decay_factor, -decays), config.lr_floor);
}

double lr_schedule_phase2(int epoch, const TrainConfig& config) {
  TrainConfig phase2 = config;
  phase2.initial_lr = config.initial_lr / 10.0;
  return lr_schedule(epoch, phase2);
}

Tensor<float> gather_batch(const PatchSet& patches, const std::vector<std::size_t>& order, std::size_t first,
                           std::size_t count) {
  const int p = patches.patch_size;
  Tensor<float> batch(Shape{static_cast<int>(count), 1, p, p});
  for (std::size_t i = 0; i < count; ++i) {
    const Image img = patches.sample(order[first + i]);
    std::copy(img.pixels.begin(), img.pixels.end(), batch.plane(static_cast<int>(i), 0));
  }
  return batch;
}

namespace {

constexpr float kInvScale = static_cast<float>(1.0 / kPixelScale);

Tensor<float> slice_batch(const Tensor<float>& batch, int first, int count) {
  const Shape s = batch.shape();
  Tensor<float> out(Shape{count, s.c, s.h, s.w});
  const std::size_t per = static_cast<std::size_t>(s.c) * s.plane();
  std::copy_n(batch.data() + first * per, count * per, out.data());
  return out;
}

Tensor<float> normalized(const Tensor<float>& t) {
  Tensor<float> out = t;
  for (auto& v : out.values()) v *= kInvScale;
  return out;
}

// Accumulates gradients of the batch-mean MSE chunk by chunk, then steps.
template <typename Forward>
double accumulate_and_step(const ParameterList<float>& params, Adam<float>& adam, int batch_n, int micro_batch,
                           double lr, Forward&& forward_loss) {
  zero_grad(params);
  double loss = 0.0;
  for (int first = 0; first < batch_n; first += micro_batch) {
    const int count = std::min(micro_batch, batch_n - first);
    Var<float> chunk_loss = forward_loss(first, count);
    const double value = chunk_loss->value[0];
    if (!std::isfinite(value)) throw NumericalError("training loss is not finite");
    const float weight = static_cast<float>(count) / static_cast<float>(batch_n);
    loss += value * count / batch_n;
    backward(scale(chunk_loss, weight));
  }
  adam.step(params, lr);
  return loss;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch, int phase) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(phase)};
  std::mt19937_64 rng(seq);
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

template <typename StepFn>
TrainResult run_epochs(const PatchSet& patches, const TrainConfig& config, int phase, int start_epoch,
                       int last_epoch, double (*schedule)(int, const TrainConfig&), Adam<float>& adam,
                       const TrainHooks& hooks, StepFn&& step) {
  config.validate();
  if (patches.sample_count() == 0) throw std::invalid_argument("training: no patches");
  TrainResult result;
  const std::size_t n = patches.sample_count();
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  for (int epoch = start_epoch; epoch <= last_epoch; ++epoch) {
    const double lr = schedule(epoch, config);
    const auto order = epoch_order(n, config.seed, epoch, phase);
    double sum = 0.0;
    std::int64_t steps = 0;
    for (std::size_t first = 0; first < n; first += bs) {
      const std::size_t count = std::min(bs, n - first);
      const Tensor<float> batch = gather_batch(patches, order, first, count);
      const double loss = step(batch, lr);
      sum += loss * static_cast<double>(count);
      ++steps;
      StepRecord rec{epoch, adam.steps(), lr, loss};
      result.steps.push_back(rec);
      if (hooks.on_step) hooks.on_step(rec);
    }
    EpochRecord rec{epoch, lr, sum / static_cast<double>(n), steps};
    result.epochs.push_back(rec);
    if (hooks.on_epoch_end) hooks.on_epoch_end(rec);
  }
  return result;
}

}  // namespace

double lfcr_train_step(LfcrNet<float>& net, Adam<float>& adam, const Tensor<float>& batch, double lr,
                       int micro_batch) {
  const auto params = net.parameters();
  return accumulate_and_step(params, adam, batch.shape().n, micro_batch, lr, [&](int first, int count) {
    const Tensor<float> refs = slice_batch(batch, first, count);
    Var<float> out = scale(net.forward(constant(refs)), kInvScale);
    return mse_loss(out, constant(normalized(refs)));
  });
}

double vdsr_train_step(VdsrNet<float>& net, Adam<float>& adam, const Tensor<float>& estimates,
                       const Tensor<float>& targets, double lr, int micro_batch) {
  require_same_shape(estimates.shape(), targets.shape(), "vdsr_train_step");
  const auto params = net.parameters();
  return accumulate_and_step(params, adam, targets.shape().n, micro_batch, lr, [&](int first, int count) {
    Var<float> out = scale(net.forward(constant(slice_batch(estimates, first, count))).result, kInvScale);
    return mse_loss(out, constant(normalized(slice_batch(targets, first, count))));
  });
}

TrainResult train_lfcr(LfcrNet<float>& net, Adam<float>& adam, const PatchSet& patches, const TrainConfig& config,
                       const TrainHooks& hooks, int start_epoch) {
  return run_epochs(patches, config, 1, start_epoch, config.epochs, &lr_schedule, adam, hooks,
                    [&](const Tensor<float>& batch, double lr) {
                      return lfcr_train_step(net, adam, batch, lr, config.micro_batch);
                    });
}

TrainResult train_vdsr(const LfcrNet<float>& lfcr, VdsrNet<float>& vdsr, Adam<float>& adam, const PatchSet& patches,
                       const TrainConfig& config, const TrainHooks& hooks, int start_epoch) {
  return run_epochs(patches, config, 2, start_epoch, config.phase2_epochs(), &lr_schedule_phase2, adam, hooks,
                    [&](const Tensor<float>& batch, double lr) {
                      const Tensor<float> estimates = lfcr.reconstruct(batch);
                      return vdsr_train_step(vdsr, adam, estimates, batch, lr, config.micro_batch);
                    });
}

}  // namespace nrsr
