#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "nrsr/metrics.hpp"
#include "nrsr/pipeline.hpp"
#include "nrsr/train.hpp"

namespace nrsr {

struct DatasetImage {
  std::string name;
  Image image;
};

/// All .pgm/.ppm/.pnm files of a directory in name order, converted to
/// grayscale. Unreadable files are reported through `warn` and skipped.
std::vector<DatasetImage> load_dataset(const std::filesystem::path& dir, const WarningSink& warn = warn_to_stderr);
std::vector<Image> dataset_images(const std::vector<DatasetImage>& dataset);

/// Maps a reference image (dimensions multiples of 16) to its reconstruction.
using Reconstructor = std::function<Image(const Image&)>;

Reconstructor bicubic_reconstructor(const Sensor& sensor);
Reconstructor pipeline_reconstructor(const Pipeline& pipeline, Stage stage);

struct EvalRow {
  std::string image;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct EvalReport {
  std::string method;
  std::string sensor;
  std::string dataset;
  /// Set when the method could not run (for example a missing checkpoint).
  bool absent = false;
  std::vector<EvalRow> rows;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double runtime_seconds = 0.0;
};

/// Mirror-pads every image to a multiple of 16, reconstructs, crops back and
/// scores against the reference. Rows keep dataset order.
EvalReport evaluate(const std::string& method, const Sensor& sensor, const std::vector<DatasetImage>& dataset,
                    const Reconstructor& reconstruct);
EvalReport absent_report(const std::string& method, const Sensor& sensor);

/// "inf" for infinite PSNR, fixed precision otherwise.
std::string format_psnr(double db);

/// CSV with columns image,method,sensor,psnr_db,ssim. Runtime is left out so
/// repeated evaluations give byte-identical files.
std::string report_csv(const std::vector<EvalReport>& reports);
/// One row per method: method,sensor,dataset,images,psnr_db,ssim,status.
std::string report_summary_csv(const std::vector<EvalReport>& reports);
std::string report_table(const std::vector<EvalReport>& reports);
/// Dataset means and runtimes per method.
std::string report_summary_json(const std::vector<EvalReport>& reports);

}  // namespace nrsr
