// nrsr: sensor simulation, training and evaluation of the locally fully
// connected reconstruction network for non-regular sampling sensors.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "cli.hpp"
#include "nrsr/evaluate.hpp"
#include "nrsr/gradcheck.hpp"

namespace fs = std::filesystem;
using namespace nrsr;
using namespace nrsr::cli;

namespace nrsr::cli {

Sensor resolve_sensor(const std::string& kind, const std::string& mask_file, std::uint64_t seed) {
  SensorKind sk;
  try {
    sk = parse_sensor_kind(kind);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (sk == SensorKind::low_resolution) return Sensor::low_resolution();
  const MaskKind mk = sk == SensorKind::quarter ? MaskKind::quarter : MaskKind::three_quarter;
  if (mask_file.empty()) return Sensor::make(sk, generate_mask(mk, seed));
  SamplingMask mask = read_mask_file(mask_file);
  if (mask.kind() != mk) {
    throw UsageError("mask file " + mask_file + " holds a " + std::string(to_string(mask.kind())) +
                     " mask, sensor needs " + std::string(to_string(mk)));
  }
  return Sensor::make(sk, std::move(mask));
}

MaskHistogram quadrant_histogram(const SamplingMask& mask) {
  MaskHistogram h;
  for (const auto& row : mask.pattern()) {
    for (auto q : row) ++h.counts[q];
  }
  return h;
}

}  // namespace nrsr::cli

namespace {

const std::map<std::string, std::string> kSensorNames{{"quarter", "quarter"},
                                                      {"qs", "quarter"},
                                                      {"three-quarter", "three-quarter"},
                                                      {"tqs", "three-quarter"},
                                                      {"low-resolution", "low-resolution"},
                                                      {"lr", "low-resolution"}};

const std::map<std::string, std::string> kMaskKindNames{
    {"quarter", "quarter"}, {"qs", "quarter"}, {"three-quarter", "three-quarter"}, {"tqs", "three-quarter"}};

bool is_measurement_file(const fs::path& p) { return p.extension() == ".raw"; }

// --- mask ------------------------------------------------------------------

struct MaskArgs {
  std::string kind;
  std::string out;
};

int cmd_mask(const MaskArgs& a, const GlobalOptions& g) {
  const SamplingMask mask = generate_mask(parse_mask_kind(a.kind), g.seed);
  const std::string text = format_mask(mask);
  if (a.out.empty()) {
    std::cout << text;
  } else {
    try {
      write_mask_file(mask, a.out);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }
  const auto h = quadrant_histogram(mask);
  std::fprintf(a.out.empty() ? stderr : stdout, "quadrants: top-left %d, top-right %d, bottom-left %d, bottom-right %d\n",
               h.counts[0], h.counts[1], h.counts[2], h.counts[3]);
  return kExitOk;
}

// --- sample ----------------------------------------------------------------

struct SampleArgs {
  std::string sensor;
  std::string mask;
  std::string in;
  std::string out;
  std::string preview;
};

int cmd_sample(const SampleArgs& a, const GlobalOptions& g) {
  const Sensor sensor = resolve_sensor(a.sensor, a.mask, g.seed);
  const Image reference = read_grayscale(a.in);
  require_even_dims(reference, "sample");
  const MeasurementGrid grid = measure(reference, sensor);
  write_measurements(grid, a.out);
  if (!a.preview.empty()) write_pgm(upsample_nearest(grid.values, 2), a.preview);
  std::cout << "sampled " << reference.width << "x" << reference.height << " with " << to_string(sensor.kind())
            << " sensor -> " << grid.values.width << "x" << grid.values.height << " measurements\n";
  return kExitOk;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string sensor;
  std::string mask;
  std::string data;
  std::string config;
  std::string out;
  int epochs = -1;
  int vdsr_epochs = -2;
  int shift_da = 0;
  int batch_size = 0;
  bool resume = false;
};

int cmd_train(const TrainArgs& a, const GlobalOptions& g) {
  TrainRequest req;
  if (!a.sensor.empty()) req.sensor = resolve_sensor(a.sensor, a.mask, g.seed);
  if (!req.sensor && !a.resume) throw UsageError("train: --sensor is required");
  req.data = a.data;
  req.out = a.out;
  req.resume = a.resume;
  if (!a.config.empty()) req.config = load_train_config(a.config);
  req.overrides.emplace_back("seed", std::to_string(g.seed));
  if (a.epochs >= 0) req.overrides.emplace_back("epochs", std::to_string(a.epochs));
  if (a.vdsr_epochs >= -1) req.overrides.emplace_back("vdsr_epochs", std::to_string(a.vdsr_epochs));
  if (a.shift_da > 0) req.overrides.emplace_back("shift_da", std::to_string(a.shift_da));
  if (a.batch_size > 0) req.overrides.emplace_back("batch_size", std::to_string(a.batch_size));
  run_training(req);
  return kExitOk;
}

// --- reconstruct -----------------------------------------------------------

struct ReconstructArgs {
  std::string sensor;
  std::string mask;
  std::string checkpoint;
  std::string in;
  std::string out;
  std::string stage = "full";
};

Pipeline load_model(const std::string& path, const std::string& sensor, const std::string& mask,
                    std::uint64_t seed) {
  const Checkpoint ck = load_checkpoint(path);
  std::optional<Sensor> expected;
  if (!sensor.empty()) {
    expected = resolve_sensor(sensor, mask, seed);
    // Without an explicit mask file only the sensor kind is checked.
    if (mask.empty() && expected->kind() != SensorKind::low_resolution) {
      expected = Sensor::make(expected->kind(), stored_sensor(ck).mask());
    }
  } else if (!mask.empty()) {
    throw UsageError("--mask needs --sensor");
  }
  return Pipeline::from_checkpoint(ck, expected);
}

int cmd_reconstruct(const ReconstructArgs& a, const GlobalOptions& g) {
  const Stage stage = parse_stage(a.stage);
  const Pipeline model = load_model(a.checkpoint, a.sensor, a.mask, g.seed);
  auto run_one = [&](const fs::path& in, const fs::path& out) {
    const Image result =
        is_measurement_file(in) ? model.reconstruct(read_measurements(in), stage) : model.reconstruct(read_grayscale(in), stage);
    write_pgm(result, out);
    std::cout << in.string() << " -> " << out.string() << "\n";
  };
  if (fs::is_directory(a.in)) {
    fs::create_directories(a.out);
    std::vector<fs::path> inputs;
    for (const auto& e : fs::directory_iterator(a.in)) {
      const auto ext = e.path().extension();
      if (e.is_regular_file() && (ext == ".pgm" || ext == ".ppm" || ext == ".raw")) inputs.push_back(e.path());
    }
    std::sort(inputs.begin(), inputs.end());
    for (const auto& in : inputs) run_one(in, fs::path(a.out) / (in.stem().string() + ".pgm"));
  } else {
    run_one(a.in, a.out);
  }
  return kExitOk;
}

// --- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string dataset;
  std::vector<std::string> methods{"bicubic"};
  std::string sensor;
  std::string mask;
  std::string checkpoint;
  std::string out;
};

std::optional<Pipeline> try_load(const std::string& checkpoint, const std::string& sensor, const std::string& mask,
                                 std::uint64_t seed) {
  if (checkpoint.empty() || !fs::exists(checkpoint)) return std::nullopt;
  return load_model(checkpoint, sensor, mask, seed);
}

int cmd_evaluate(const EvaluateArgs& a, const GlobalOptions& g) {
  const auto model = try_load(a.checkpoint, a.sensor, a.mask, g.seed);
  std::optional<Sensor> sensor;
  if (model) sensor = model->sensor();
  else if (!a.sensor.empty()) sensor = resolve_sensor(a.sensor, a.mask, g.seed);
  else throw UsageError("evaluate: --sensor is required without a checkpoint");

  const auto dataset = load_dataset(a.dataset);
  const std::string dataset_name = fs::path(a.dataset).filename().string();
  std::vector<EvalReport> reports;
  for (const auto& method : a.methods) {
    EvalReport r;
    if (method == "bicubic") {
      r = evaluate(method, *sensor, dataset, bicubic_reconstructor(*sensor));
    } else if (method == "reference") {
      r = evaluate(method, *sensor, dataset, [](const Image& ref) { return ref; });
    } else if (method == "lfcr" || method == "lfcr+vdsr") {
      const Stage stage = method == "lfcr" ? Stage::lfcr : Stage::full;
      if (!model || (stage == Stage::full && !model->has_vdsr())) {
        r = absent_report(method, *sensor);
      } else {
        r = evaluate(method, *sensor, dataset, pipeline_reconstructor(*model, stage));
      }
    } else {
      throw UsageError("evaluate: unknown method " + method);
    }
    r.dataset = dataset_name;
    reports.push_back(std::move(r));
  }
  std::cout << report_table(reports);
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_text_file(fs::path(a.out) / "report.csv", report_csv(reports));
    write_text_file(fs::path(a.out) / "summary.csv", report_summary_csv(reports));
    write_text_file(fs::path(a.out) / "summary.json", report_summary_json(reports));
  }
  return kExitOk;
}

// --- gradcheck -------------------------------------------------------------

struct GradcheckArgs {
  std::vector<std::string> cases;
  int seeds = 1;
  double tolerance = 1e-4;
};

int cmd_gradcheck(const GradcheckArgs& a, const GlobalOptions& g) {
  const auto cases = a.cases.empty() ? gradcheck_case_names() : a.cases;
  bool ok = true;
  for (const auto& name : cases) {
    double worst = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
    for (int s = 0; s < a.seeds; ++s) {
      const GradCheckResult r = run_gradcheck_case(name, g.seed + static_cast<std::uint64_t>(s));
      worst = std::max(worst, r.max_rel_error);
      checked += r.checked;
      skipped += r.skipped_kinks;
    }
    const bool pass = worst <= a.tolerance;
    ok = ok && pass;
    std::printf("%-9s max_rel_error %.3e  checked %6zu  kinks skipped %4zu  %s\n", name.c_str(), worst, checked,
                skipped, pass ? "PASS" : "FAIL");
  }
  return ok ? kExitOk : kExitNumerical;
}

// --- curves ----------------------------------------------------------------

struct CurvesArgs {
  std::string dataset;
  std::vector<int> factors{1, 4, 8, 16};
  std::string sensor = "quarter";
  std::string mask;
  std::string checkpoints;
  std::string train_data;
  std::string config;
  int epochs = -1;
  std::string stage = "lfcr";
  std::string out;
};

int cmd_curves(const CurvesArgs& a, const GlobalOptions& g) {
  const Stage stage = parse_stage(a.stage);
  const Sensor sensor = resolve_sensor(a.sensor, a.mask, g.seed);
  const auto dataset = load_dataset(a.dataset);
  if (dataset.empty()) throw UsageError("curves: no readable images in " + a.dataset);
  const fs::path dir = a.checkpoints.empty() ? fs::path("curves") : fs::path(a.checkpoints);

  struct Row {
    int factor;
    std::optional<double> psnr;
  };
  std::vector<Row> rows;
  for (int factor : a.factors) {
    shift_set_for_factor(factor);  // validates
    const fs::path ck = dir / ("model_da" + std::to_string(factor) + ".nrsr");
    if (!fs::exists(ck) && !a.train_data.empty()) {
      TrainRequest req;
      req.sensor = sensor;
      req.data = a.train_data;
      req.out = dir / ("da" + std::to_string(factor));
      if (!a.config.empty()) req.config = load_train_config(a.config);
      req.overrides = {{"seed", std::to_string(g.seed)}, {"shift_da", std::to_string(factor)}};
      if (a.epochs >= 0) req.overrides.emplace_back("epochs", std::to_string(a.epochs));
      if (stage == Stage::lfcr) req.overrides.emplace_back("vdsr_epochs", "0");
      req.quiet = true;
      const TrainOutcome t = run_training(req);
      fs::copy_file(t.model, ck, fs::copy_options::overwrite_existing);
      std::cerr << "trained shift factor " << factor << " on " << t.samples << " samples\n";
    }
    Row row{factor, std::nullopt};
    if (fs::exists(ck)) {
      const Pipeline model = Pipeline::from_checkpoint(load_checkpoint(ck), sensor);
      if (stage == Stage::lfcr || model.has_vdsr()) {
        row.psnr = evaluate("lfcr", sensor, dataset, pipeline_reconstructor(model, stage)).mean_psnr;
      }
    }
    rows.push_back(row);
  }

  std::optional<double> baseline;
  for (const auto& r : rows) {
    if (r.factor == 1) baseline = r.psnr;
  }
  std::ostringstream csv;
  csv << "factor,psnr_db,gain_db,status\n";
  for (const auto& r : rows) {
    csv << r.factor << ",";
    if (!r.psnr) {
      csv << ",,absent\n";
      continue;
    }
    csv << format_psnr(*r.psnr) << ",";
    if (baseline) {
      char gain[32];
      std::snprintf(gain, sizeof(gain), "%.4f", *r.psnr - *baseline);
      csv << gain;
    }
    csv << ",ok\n";
  }
  if (a.out.empty()) std::cout << csv.str();
  else write_text_file(a.out, csv.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nrsr: reconstruction for non-regular sampling image sensors", "nrsr"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Print help for all subcommands");

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Seed for every random choice (masks, init, shuffling)")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads; 1 is bit-exact (default: NRSR_THREADS or 1)")
      ->check(CLI::NonNegativeNumber);

  MaskArgs mask_args;
  auto* mask = app.add_subcommand("mask", "Generate a sampling mask file");
  mask->add_option("--kind", mask_args.kind, "quarter | three-quarter")
      ->required()
      ->transform(CLI::IsMember(kMaskKindNames));
  mask->add_option("--out", mask_args.out, "Output mask file (default: stdout)");

  SampleArgs sample_args;
  auto* sample = app.add_subcommand("sample", "Simulate a sensor readout of a reference image");
  sample->add_option("--sensor", sample_args.sensor, "quarter | three-quarter | low-resolution")
      ->required()
      ->transform(CLI::IsMember(kSensorNames));
  sample->add_option("--mask", sample_args.mask, "Mask file (default: generated from --seed)");
  sample->add_option("--in", sample_args.in, "Reference image (PGM or PPM)")->required();
  sample->add_option("--out", sample_args.out, "Measurement file (.raw, JSON sidecar alongside)")->required();
  sample->add_option("--preview", sample_args.preview, "Also write measurements upsampled 2x as PGM");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train LFCR, then VDSR with LFCR frozen");
  train->add_option("--sensor", train_args.sensor, "quarter | three-quarter | low-resolution")
      ->transform(CLI::IsMember(kSensorNames));
  train->add_option("--mask", train_args.mask, "Mask file (default: generated from --seed)");
  train->add_option("--data", train_args.data, "Directory of training images")->required();
  train->add_option("--config", train_args.config, "key = value training config");
  train->add_option("--out", train_args.out, "Output directory for logs and checkpoints")->required();
  train->add_option("--epochs", train_args.epochs, "Override phase-1 epochs")->check(CLI::NonNegativeNumber);
  train->add_option("--vdsr-epochs", train_args.vdsr_epochs, "Override phase-2 epochs (0 skips VDSR)")
      ->check(CLI::Range(-1, 1000000));
  train->add_option("--shift-da", train_args.shift_da, "Shift augmentation factor: 1, 4, 8 or 16")
      ->check(CLI::IsMember({1, 4, 8, 16}));
  train->add_option("--batch-size", train_args.batch_size, "Override batch size")->check(CLI::PositiveNumber);
  train->add_flag("--resume", train_args.resume, "Continue from <out>/last.nrsr");

  ReconstructArgs rec_args;
  auto* rec = app.add_subcommand("reconstruct", "Reconstruct images with a trained model");
  rec->add_option("--sensor", rec_args.sensor, "Expected sensor; checked against the checkpoint")
      ->transform(CLI::IsMember(kSensorNames));
  rec->add_option("--mask", rec_args.mask, "Expected mask file; checked against the checkpoint");
  rec->add_option("--checkpoint", rec_args.checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  rec->add_option("--in", rec_args.in, "Reference image, measurement .raw, or a directory of them")
      ->required()
      ->check(CLI::ExistingPath);
  rec->add_option("--out", rec_args.out, "Output PGM (or directory when --in is one)")->required();
  rec->add_option("--stage", rec_args.stage, "lfcr | full")->capture_default_str()->check(
      CLI::IsMember({"lfcr", "full"}));

  EvaluateArgs eval_args;
  auto* eval = app.add_subcommand("evaluate", "Score methods on a dataset (PSNR, SSIM)");
  eval->add_option("--dataset", eval_args.dataset, "Directory of reference images")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval->add_option("--methods", eval_args.methods, "bicubic, lfcr, lfcr+vdsr, reference")
      ->delimiter(',')
      ->capture_default_str()
      ->check(CLI::IsMember({"bicubic", "lfcr", "lfcr+vdsr", "reference"}));
  eval->add_option("--sensor", eval_args.sensor, "Sensor (default: from the checkpoint)")
      ->transform(CLI::IsMember(kSensorNames));
  eval->add_option("--mask", eval_args.mask, "Mask file");
  eval->add_option("--checkpoint", eval_args.checkpoint, "Model checkpoint for lfcr methods");
  eval->add_option("--out", eval_args.out, "Directory for report.csv, summary.csv, summary.json");

  GradcheckArgs gc_args;
  auto* gc = app.add_subcommand("gradcheck", "Check analytic gradients against central differences");
  gc->add_option("--case", gc_args.cases, "Cases to run (default: all)")
      ->delimiter(',')
      ->check(CLI::IsMember(gradcheck_case_names()));
  gc->add_option("--seeds", gc_args.seeds, "Seeds per case, starting at --seed")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gc->add_option("--tolerance", gc_args.tolerance, "Maximum relative error")->capture_default_str();

  CurvesArgs curves_args;
  auto* curves = app.add_subcommand("curves", "PSNR gain versus shift augmentation factor");
  curves->add_option("--dataset", curves_args.dataset, "Evaluation images")->required()->check(CLI::ExistingDirectory);
  curves->add_option("--shift-da-list", curves_args.factors, "Factors to compare")
      ->delimiter(',')
      ->capture_default_str()
      ->check(CLI::IsMember({1, 4, 8, 16}));
  curves->add_option("--sensor", curves_args.sensor, "quarter | three-quarter | low-resolution")
      ->capture_default_str()
      ->transform(CLI::IsMember(kSensorNames));
  curves->add_option("--mask", curves_args.mask, "Mask file (default: generated from --seed)");
  curves->add_option("--checkpoints", curves_args.checkpoints, "Directory with model_da<F>.nrsr (default: curves)");
  curves->add_option("--train-data", curves_args.train_data, "Train missing checkpoints on these images");
  curves->add_option("--config", curves_args.config, "Training config for --train-data");
  curves->add_option("--epochs", curves_args.epochs, "Override training epochs")->check(CLI::NonNegativeNumber);
  curves->add_option("--stage", curves_args.stage, "lfcr | full")->capture_default_str()->check(
      CLI::IsMember({"lfcr", "full"}));
  curves->add_option("--out", curves_args.out, "Output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  set_thread_count(g.threads);
  try {
    if (*mask) return cmd_mask(mask_args, g);
    if (*sample) return cmd_sample(sample_args, g);
    if (*train) return cmd_train(train_args, g);
    if (*rec) return cmd_reconstruct(rec_args, g);
    if (*eval) return cmd_evaluate(eval_args, g);
    if (*gc) return cmd_gradcheck(gc_args, g);
    if (*curves) return cmd_curves(curves_args, g);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
