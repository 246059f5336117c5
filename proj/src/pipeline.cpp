#include "nrsr/pipeline.hpp"

#include <stdexcept>
#include <string>

namespace nrsr {

Stage parse_stage(std::string_view text) {
  if (text == "lfcr") return Stage::lfcr;
  if (text == "full" || text == "lfcr+vdsr") return Stage::full;
  throw std::invalid_argument("unknown stage '" + std::string(text) + "' (expected lfcr or full)");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Pipeline Pipeline::create(const Sensor& sensor, std::uint64_t seed) {
  return Pipeline(LfcrNet<float>::build(sensor, derive_seed(seed, 1)), VdsrNet<float>::build(derive_seed(seed, 2)));
}

Image Pipeline::reconstruct(const Image& reference, Stage stage) const {
  require_even_dims(reference, "reconstruct");
  if (stage == Stage::full && !has_vdsr_) {
    throw std::invalid_argument("model has no trained VDSR stage; use the lfcr stage");
  }
  const Image padded = reflect_pad_to_multiple(reference, 2 * kTargetSize);
  Tensor<float> out = lfcr_.reconstruct(to_tensor<float>(padded));
  if (stage == Stage::full) out = vdsr_.enhance(out);
  return crop(image_from_tensor(out), 0, 0, reference.height, reference.width);
}

Image Pipeline::reconstruct(const MeasurementGrid& grid, Stage stage) const {
  if (grid.sensor != sensor().kind()) {
    throw CompatibilityError("measurements come from a " + std::string(to_string(grid.sensor)) +
                             " sensor, model expects " + std::string(to_string(sensor().kind())));
  }
  if (!grid.mask_reference.empty() && sensor().mask() && grid.mask_reference != sensor().mask_reference()) {
    throw CompatibilityError("measurement mask " + grid.mask_reference + " does not match model mask " +
                             sensor().mask_reference());
  }
  return reconstruct(lift_measurements(grid, sensor()), stage);
}

void store_sensor(Checkpoint& checkpoint, const Sensor& sensor) {
  checkpoint.metadata["sensor"] = std::string(to_string(sensor.kind()));
  if (sensor.mask()) {
    checkpoint.metadata["mask.kind"] = std::string(to_string(sensor.mask()->kind()));
    checkpoint.metadata["mask.digits"] = sensor.mask()->digits();
    checkpoint.metadata["mask.reference"] = sensor.mask()->reference();
  }
}

Sensor stored_sensor(const Checkpoint& checkpoint) {
  const std::string kind = checkpoint.meta("sensor");
  if (kind.empty()) throw FormatError("checkpoint: no sensor metadata");
  const SensorKind sk = parse_sensor_kind(kind);
  if (sk == SensorKind::low_resolution) return Sensor::low_resolution();
  const std::string digits = checkpoint.meta("mask.digits");
  if (digits.size() != SamplingMask::kCells * SamplingMask::kCells) throw FormatError("checkpoint: bad mask metadata");
  SamplingMask::Pattern pattern{};
  for (int i = 0; i < SamplingMask::kCells * SamplingMask::kCells; ++i) {
    pattern[i / SamplingMask::kCells][i % SamplingMask::kCells] = static_cast<std::uint8_t>(digits[i] - '0');
  }
  std::optional<std::uint64_t> seed;
  const std::string ref = checkpoint.meta("mask.reference");
  if (ref.rfind("seed:", 0) == 0) seed = std::stoull(ref.substr(5));
  return Sensor::make(sk, SamplingMask(parse_mask_kind(checkpoint.meta("mask.kind")), pattern, seed));
}

void check_compatible(const Checkpoint& checkpoint, const Sensor& sensor) {
  const Sensor stored = stored_sensor(checkpoint);
  if (stored.kind() != sensor.kind()) {
    throw CompatibilityError("checkpoint was trained for a " + std::string(to_string(stored.kind())) +
                             " sensor, not " + std::string(to_string(sensor.kind())));
  }
  if (stored.mask() && sensor.mask() && !(*stored.mask() == *sensor.mask())) {
    throw CompatibilityError("checkpoint mask " + stored.mask()->reference() + " differs from requested mask " +
                             sensor.mask()->reference());
  }
}

Checkpoint Pipeline::to_checkpoint() const {
  Checkpoint ck;
  store_sensor(ck, sensor());
  ck.metadata["stages"] = has_vdsr_ ? "lfcr+vdsr" : "lfcr";
  store_parameters(ck, lfcr_.parameters());
  if (has_vdsr_) store_parameters(ck, vdsr_.parameters());
  return ck;
}

Pipeline Pipeline::from_checkpoint(const Checkpoint& checkpoint, const std::optional<Sensor>& expected,
                                   std::uint64_t seed) {
  if (expected) check_compatible(checkpoint, *expected);
  const Sensor sensor = stored_sensor(checkpoint);
  Pipeline p = create(sensor, seed);
  // The vectorizing kernel follows from the sensor; a stored copy must agree.
  auto lfcr_params = p.lfcr_.parameters();
  for (const auto& param : lfcr_params) {
    if (param.trainable) continue;
    if (const TensorRecord* r = checkpoint.find(param.name)) {
      const auto& v = param.var->value;
      if (!(r->shape == v.shape()) || !std::equal(r->values.begin(), r->values.end(), v.data())) {
        throw CompatibilityError("checkpoint vectorizing kernel does not match its sensor metadata");
      }
    }
  }
  std::erase_if(lfcr_params, [](const Parameter<float>& q) { return !q.trainable; });
  restore_parameters(checkpoint, lfcr_params);
  p.has_vdsr_ = checkpoint.find("vdsr/conv01/weight") != nullptr;
  if (p.has_vdsr_) restore_parameters(checkpoint, p.vdsr_.parameters());
  return p;
}

}  // namespace nrsr
