#include <cstdio>
#include <fstream>
#include <iostream>

#include "cli.hpp"
#include "nrsr/evaluate.hpp"

namespace nrsr::cli {

namespace fs = std::filesystem;

fs::path last_checkpoint_path(const fs::path& out) { return out / "last.nrsr"; }

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw UsageError("cannot write " + path.string());
  f << text;
  if (!f) throw UsageError("failed writing " + path.string());
}

namespace {

std::string epoch_file(const char* phase, int epoch) {
  char name[32];
  std::snprintf(name, sizeof(name), "%s_e%03d.nrsr", phase, epoch);
  return name;
}

// Appends "epoch,step,lr,loss" rows; the header is written once per file.
class LossLog {
 public:
  LossLog(const fs::path& path, bool append) {
    const bool fresh = !append || !fs::exists(path);
    out_.open(path, fresh ? std::ios::trunc : std::ios::app);
    if (!out_) throw UsageError("cannot write " + path.string());
    if (fresh) out_ << "epoch,step,lr,loss\n";
  }
  void write(const StepRecord& r) {
    char line[128];
    std::snprintf(line, sizeof(line), "%d,%lld,%.9g,%.9e\n", r.epoch, static_cast<long long>(r.step), r.lr, r.loss);
    out_ << line;
  }
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

Checkpoint training_checkpoint(const Pipeline& pipeline, const TrainConfig& config, int phase, int epoch) {
  Checkpoint ck = pipeline.to_checkpoint();
  ck.metadata["train.phase"] = std::to_string(phase);
  ck.metadata["train.epoch"] = std::to_string(epoch);
  ck.metadata["train.config"] = format_train_config(config);
  return ck;
}

}  // namespace

TrainOutcome run_training(const TrainRequest& req) {
  fs::create_directories(req.out / "checkpoints");
  const fs::path last = last_checkpoint_path(req.out);

  TrainConfig config = req.config;
  std::optional<Checkpoint> resumed;
  if (req.resume && fs::exists(last)) {
    resumed = load_checkpoint(last);
    config = parse_train_config(resumed->meta("train.config"));
  } else if (req.resume && !req.quiet) {
    std::cout << "no checkpoint in " << req.out.string() << ", starting fresh\n";
  }
  for (const auto& [key, value] : req.overrides) config.set(key, value);
  config.validate();

  std::optional<Pipeline> pipeline;
  int phase = 1;
  int done_epochs = 0;
  if (resumed) {
    pipeline = Pipeline::from_checkpoint(*resumed, req.sensor, derive_seed(config.seed, 0));
    phase = std::stoi(resumed->meta("train.phase", "1"));
    done_epochs = std::stoi(resumed->meta("train.epoch", "0"));
  } else {
    if (!req.sensor) throw UsageError("train: --sensor is required");
    pipeline = Pipeline::create(*req.sensor, derive_seed(config.seed, 0));
  }
  write_text_file(req.out / "config.txt", format_train_config(config));

  const auto dataset = load_dataset(req.data);
  if (dataset.empty()) throw UsageError("train: no readable images in " + req.data.string());
  const PatchSet patches = build_training_set(dataset_images(dataset), config);
  if (patches.patches.empty()) throw UsageError("train: images are too small for one patch");
  const std::size_t shifts = config.shift_set.size();
  if (!req.quiet) {
    std::cout << "samples: " << patches.sample_count() << " (" << patches.patches.size() / shifts
              << " patches x " << patches.transforms << " transforms x " << shifts << " shifts)\n";
  }

  std::string last_good = resumed ? last.string() : "none";
  auto save_epoch = [&](const char* name, int phase_id, const EpochRecord& rec, const Adam<float>& adam) {
    Checkpoint ck = training_checkpoint(*pipeline, config, phase_id, rec.epoch);
    save_checkpoint(ck, req.out / "checkpoints" / epoch_file(name, rec.epoch));
    store_optimizer(ck, adam);
    save_checkpoint(ck, last);
    last_good = last.string();
    if (!req.quiet) {
      std::printf("%s epoch %d lr %.3g loss %.6e steps %lld\n", name, rec.epoch, rec.lr, rec.mean_loss,
                  static_cast<long long>(adam.steps()));
      std::fflush(stdout);
    }
  };

  try {
    if (phase == 1) {
      Adam<float> adam;
      if (resumed && has_optimizer_state(*resumed)) restore_optimizer(*resumed, adam);
      LossLog log(req.out / "lfcr_log.csv", resumed.has_value());
      TrainHooks hooks;
      hooks.on_step = [&](const StepRecord& r) { log.write(r); };
      hooks.on_epoch_end = [&](const EpochRecord& r) {
        log.flush();
        save_epoch("lfcr", 1, r, adam);
      };
      train_lfcr(pipeline->lfcr(), adam, patches, config, hooks, done_epochs + 1);
      done_epochs = 0;
    }
    if (config.phase2_epochs() > 0) {
      pipeline->set_has_vdsr(true);
      Adam<float> adam;
      const bool continuing = resumed && phase == 2;
      if (continuing && has_optimizer_state(*resumed)) restore_optimizer(*resumed, adam);
      LossLog log(req.out / "vdsr_log.csv", continuing);
      TrainHooks hooks;
      hooks.on_step = [&](const StepRecord& r) { log.write(r); };
      hooks.on_epoch_end = [&](const EpochRecord& r) {
        log.flush();
        save_epoch("vdsr", 2, r, adam);
      };
      train_vdsr(pipeline->lfcr(), pipeline->vdsr(), adam, patches, config, hooks, done_epochs + 1);
    }
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + "; last good checkpoint: " + last_good);
  }

  TrainOutcome outcome;
  outcome.model = req.out / "model.nrsr";
  outcome.samples = patches.sample_count();
  Checkpoint model = pipeline->to_checkpoint();
  model.metadata["train.config"] = format_train_config(config);
  save_checkpoint(model, outcome.model);
  if (!req.quiet) std::cout << "wrote " << outcome.model.string() << "\n";
  return outcome;
}

}  // namespace nrsr::cli
