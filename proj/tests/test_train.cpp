#include <cstring>
#include <set>

#include "doctest.h"
#include "nrsr/metrics.hpp"
#include "nrsr/train.hpp"
#include "synthetic.hpp"

using namespace nrsr;

namespace {

void ignore(const std::string&) {}

TrainConfig small_config() {
  TrainConfig c;
  c.patch_size = 16;
  c.patch_stride = 16;
  c.shift_set = {{0, 0}};
  c.flips_rotations = false;
  c.epochs = 2;
  c.batch_size = 4;
  c.micro_batch = 2;
  c.seed = 3;
  return c;
}

std::uint64_t checksum(const ParameterList<float>& params) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& p : params) {
    for (float v : p.var->value.values()) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      h = (h ^ bits) * 1099511628211ull;
    }
  }
  return h;
}

Sensor qs(std::uint64_t seed) { return Sensor::quarter(generate_mask(MaskKind::quarter, seed)); }

}  // namespace

TEST_CASE("config defaults, parsing and validation") {
  const TrainConfig d;
  CHECK(d.patch_size == 48);
  CHECK(d.patch_stride == 40);
  CHECK(d.shift_set.size() == 16);
  CHECK(d.flips_rotations);
  CHECK(d.epochs == 100);
  CHECK(d.initial_lr == 1e-4);
  CHECK(d.lr_floor == 1e-8);
  CHECK(d.batch_size == 64);

  const TrainConfig round = parse_train_config(format_train_config(small_config()));
  CHECK(format_train_config(round) == format_train_config(small_config()));
  CHECK(round.shift_set == small_config().shift_set);

  const TrainConfig p = parse_train_config("# comment\nepochs = 7\nshift_set = 0:0 2:4\n\nflips_rotations = false\n");
  CHECK(p.epochs == 7);
  CHECK(p.shift_set == std::vector<Shift>{{0, 0}, {2, 4}});
  CHECK_FALSE(p.flips_rotations);

  CHECK_THROWS(parse_train_config("no_such_key = 1\n"));
  TrainConfig bad;
  bad.patch_size = 44;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = TrainConfig{};
  bad.patch_stride = 36;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = TrainConfig{};
  bad.shift_set = {{1, 0}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("shift sets by factor") {
  CHECK(shift_set_for_factor(1).size() == 1);
  CHECK(shift_set_for_factor(4).size() == 4);
  CHECK(shift_set_for_factor(8).size() == 8);
  const auto full = shift_set_for_factor(16);
  CHECK(full.size() == 16);
  std::set<Shift> unique(full.begin(), full.end());
  CHECK(unique.size() == 16);
  for (const auto& [dy, dx] : full) {
    CHECK(dy % 2 == 0);
    CHECK(dx % 2 == 0);
    CHECK(dy <= 6);
    CHECK(dx <= 6);
  }
  CHECK_THROWS(shift_set_for_factor(3));
}

TEST_CASE("extract_patches offsets") {
  TrainConfig c;
  const PatchSet one = extract_patches({Image(96, 96)}, c, ignore);
  CHECK(one.patches.size() == 4);
  std::set<std::pair<int, int>> offsets;
  for (const auto& p : one.provenance) offsets.insert({p.y, p.x});
  CHECK(offsets == std::set<std::pair<int, int>>{{0, 0}, {0, 40}, {40, 0}, {40, 40}});
  CHECK(extract_patches({Image(48, 48)}, c, ignore).patches.size() == 1);

  const PatchSet many = extract_patches({Image(200, 136), Image(100, 180)}, c, ignore);
  for (const auto& p : many.provenance) {
    CHECK(p.y % 8 == 0);
    CHECK(p.x % 8 == 0);
  }
  for (const auto& p : many.patches) {
    CHECK(p.height == 48);
    CHECK(p.width == 48);
  }

  int warnings = 0;
  const PatchSet skipped = extract_patches({Image(40, 100), Image(48, 48)}, c, [&](const std::string&) { ++warnings; });
  CHECK(skipped.patches.size() == 1);
  CHECK(warnings == 1);
  CHECK(skipped.provenance[0].image == 1);
}

TEST_CASE("dihedral augmentation") {
  const Image flat(8, 8, 42.0f);
  for (const auto& p : augment_flip_rotate(flat)) CHECK(p == flat);

  const Image f = test::synthetic_image(8, 8, 1);
  const auto set = augment_flip_rotate(f);
  CHECK(set.size() == 8);
  CHECK(set[0] == f);
  for (int a = 0; a < 8; ++a)
    for (int b = a + 1; b < 8; ++b) CHECK_FALSE(set[a] == set[b]);

  // Applying the set to each member reproduces the set.
  for (int t = 0; t < 8; ++t) {
    const auto again = augment_flip_rotate(set[t]);
    for (const auto& g : again) {
      bool found = false;
      for (const auto& h : set) found = found || g == h;
      CHECK(found);
    }
  }
  // One quarter turn counter-clockwise moves the top-right corner to the top-left.
  CHECK(dihedral(f, 1).at(0, 0) == f.at(0, 7));
  CHECK(dihedral(f, 4).at(0, 0) == f.at(0, 7));
}

TEST_CASE("augment_shift crops") {
  const Image f = test::synthetic_image(64, 56, 2);
  const auto id = augment_shift(f, {{0, 0}});
  REQUIRE(id.size() == 1);
  CHECK(id[0] == f);

  const auto all = augment_shift(f, shift_set_for_factor(16));
  CHECK(all.size() == 16);
  for (const auto& c : all) {
    CHECK(c.height == 56);
    CHECK(c.width == 48);
  }
  const Shift s5 = shift_set_for_factor(16)[5];
  CHECK(all[5].at(0, 0) == f.at(s5.first, s5.second));

  const Sensor sensor = qs(4);
  std::set<std::vector<float>> sampled;
  for (const auto& c : all) sampled.insert(measure(c, sensor).values.pixels);
  CHECK(sampled.size() == 16);
  std::set<std::vector<float>> flat;
  for (const auto& c : augment_shift(Image(64, 56, 99.0f), shift_set_for_factor(16)))
    flat.insert(measure(c, sensor).values.pixels);
  CHECK(flat.size() == 1);

  CHECK_THROWS(augment_shift(f, {{1, 0}}));
  CHECK_THROWS(augment_shift(f, {{64, 0}}));
  CHECK_THROWS(augment_shift(f, {{-2, 0}}));
}

TEST_CASE("training sample count is patches x transforms x shifts") {
  std::vector<Image> images;
  for (int i = 0; i < 3; ++i) images.push_back(test::synthetic_image(104, 96, i));
  TrainConfig c;
  for (int factor : {1, 4, 8, 16}) {
    c.shift_set = shift_set_for_factor(factor);
    const PatchSet ps = build_training_set(images, c, ignore);
    CHECK(ps.transforms == 8);
    // 96x88 after the common crop: offsets {0,40} x {0,40}.
    CHECK(ps.sample_count() == static_cast<std::size_t>(3 * 4 * 8 * factor));
    for (const auto& p : ps.provenance) {
      CHECK(p.y % 8 == 0);
      CHECK(p.x % 8 == 0);
    }
  }
  c.flips_rotations = false;
  c.shift_set = shift_set_for_factor(1);
  CHECK(build_training_set(images, c, ignore).sample_count() == 12);
}

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  CHECK(lr_schedule(1, c) == doctest::Approx(1e-4));
  CHECK(lr_schedule(10, c) == doctest::Approx(1e-4));
  CHECK(lr_schedule(11, c) == doctest::Approx(1e-5));
  CHECK(lr_schedule(41, c) == doctest::Approx(1e-8));
  CHECK(lr_schedule(100, c) == 1e-8);
  CHECK(lr_schedule_phase2(1, c) == doctest::Approx(1e-5));
  for (int e = 1; e < 100; ++e) CHECK(lr_schedule(e + 1, c) <= lr_schedule(e, c));
}

TEST_CASE("LFCR training is reproducible bit for bit") {
  set_thread_count(1);
  std::vector<Image> images;
  for (int i = 0; i < 2; ++i) images.push_back(test::synthetic_image(32, 32, 10 + i));
  const TrainConfig c = small_config();
  const PatchSet ps = extract_patches(images, c, ignore);
  auto run = [&] {
    auto net = LfcrNet<float>::build(qs(2), 7);
    Adam<float> adam;
    return train_lfcr(net, adam, ps, c);
  };
  const TrainResult a = run();
  const TrainResult b = run();
  REQUIRE(a.steps.size() == 4);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].loss == b.steps[i].loss);
    CHECK(std::isfinite(a.steps[i].loss));
    CHECK(a.steps[i].step == static_cast<std::int64_t>(i + 1));
  }
  CHECK(a.epochs.size() == 2);
  set_thread_count(0);
}

TEST_CASE("micro-batch chunking does not change the step") {
  std::vector<Image> images;
  for (int i = 0; i < 4; ++i) images.push_back(test::synthetic_image(16, 16, 20 + i));
  const Tensor<float> batch = to_tensor<float>(std::span<const Image>(images));
  auto net_a = LfcrNet<float>::build(qs(3), 5);
  auto net_b = LfcrNet<float>::build(qs(3), 5);
  Adam<float> adam_a;
  Adam<float> adam_b;
  const double la = lfcr_train_step(net_a, adam_a, batch, 1e-3, 4);
  const double lb = lfcr_train_step(net_b, adam_b, batch, 1e-3, 1);
  CHECK(la == doctest::Approx(lb).epsilon(1e-6));
  const auto pa = net_a.parameters();
  const auto pb = net_b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i)
    for (std::size_t k = 0; k < pa[i].var->value.size(); ++k)
      CHECK(pa[i].var->value[k] == doctest::Approx(pb[i].var->value[k]).epsilon(1e-5));
}

TEST_CASE("constant patches are learned quickly") {
  set_thread_count(1);
  std::vector<Image> images(4, Image(16, 16, 180.0f));
  TrainConfig c = small_config();
  c.epochs = 200;
  c.lr_decay_every = 1000;
  c.initial_lr = 1e-3;
  const PatchSet ps = extract_patches(images, c, ignore);
  auto net = LfcrNet<float>::build(qs(5), 2);
  Adam<float> adam;
  const TrainResult r = train_lfcr(net, adam, ps, c);
  REQUIRE(r.steps.size() == 200);
  for (const auto& s : r.steps) CHECK(std::isfinite(s.loss));
  CHECK(r.steps.back().loss < 1e-3 * r.steps.front().loss);
  set_thread_count(0);
}

TEST_CASE("phase 2 leaves the LFCR untouched") {
  set_thread_count(1);
  std::vector<Image> images;
  for (int i = 0; i < 2; ++i) images.push_back(test::synthetic_image(16, 32, 30 + i));
  TrainConfig c = small_config();
  c.epochs = 1;
  const PatchSet ps = extract_patches(images, c, ignore);
  auto lfcr = LfcrNet<float>::build(qs(6), 1);
  auto vdsr = VdsrNet<float>::build(2, 20, 8);
  const auto probe = to_tensor<float>(test::synthetic_image(16, 16, 40));
  const auto before = lfcr.reconstruct(probe);
  const std::uint64_t sum = checksum(lfcr.parameters());
  const std::uint64_t vsum = checksum(vdsr.parameters());
  Adam<float> adam;
  const TrainResult r = train_vdsr(lfcr, vdsr, adam, ps, c);
  CHECK(r.steps.size() == 1);
  CHECK(r.steps[0].lr == doctest::Approx(1e-5));
  CHECK(checksum(lfcr.parameters()) == sum);
  CHECK(checksum(vdsr.parameters()) != vsum);
  const auto after = lfcr.reconstruct(probe);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
  for (const auto& p : lfcr.parameters()) CHECK_FALSE(p.var->grad.allocated());
  set_thread_count(0);
}

TEST_CASE("a diverging step raises NumericalError") {
  std::vector<Image> images{test::synthetic_image(16, 16, 50)};
  const Tensor<float> batch = to_tensor<float>(std::span<const Image>(images));
  auto net = LfcrNet<float>::build(qs(7), 3);
  net.deconv().bias->value.fill(std::numeric_limits<float>::infinity());
  Adam<float> adam;
  CHECK_THROWS_AS(lfcr_train_step(net, adam, batch, 1e-4, 1), NumericalError);
}
