#include "nrsr/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace nrsr {

std::vector<DatasetImage> load_dataset(const std::filesystem::path& dir, const WarningSink& warn) {
  if (!std::filesystem::is_directory(dir)) throw std::invalid_argument("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<DatasetImage> out;
  for (const auto& f : files) {
    try {
      out.push_back({f.filename().string(), read_grayscale(f)});
    } catch (const std::exception& e) {
      if (warn) warn("skipping " + f.string() + ": " + e.what());
    }
  }
  return out;
}

std::vector<Image> dataset_images(const std::vector<DatasetImage>& dataset) {
  std::vector<Image> out;
  out.reserve(dataset.size());
  for (const auto& d : dataset) out.push_back(d.image);
  return out;
}

Reconstructor bicubic_reconstructor(const Sensor& sensor) {
  return [sensor](const Image& reference) { return bicubic_upscale(measure(reference, sensor)); };
}

Reconstructor pipeline_reconstructor(const Pipeline& pipeline, Stage stage) {
  return [&pipeline, stage](const Image& reference) { return pipeline.reconstruct(reference, stage); };
}

EvalReport evaluate(const std::string& method, const Sensor& sensor, const std::vector<DatasetImage>& dataset,
                    const Reconstructor& reconstruct) {
  EvalReport report;
  report.method = method;
  report.sensor = std::string(to_string(sensor.kind()));
  const auto start = std::chrono::steady_clock::now();
  double psnr_sum = 0.0;
  double ssim_sum = 0.0;
  for (const auto& item : dataset) {
    const Image& ref = item.image;
    const Image padded = reflect_pad_to_multiple(ref, 2 * kTargetSize);
    const Image rec = crop(reconstruct(padded), 0, 0, ref.height, ref.width);
    EvalRow row{item.name, psnr(rec, ref), ssim(rec, ref)};
    psnr_sum += row.psnr_db;
    ssim_sum += row.ssim;
    report.rows.push_back(row);
  }
  if (!report.rows.empty()) {
    report.mean_psnr = psnr_sum / static_cast<double>(report.rows.size());
    report.mean_ssim = ssim_sum / static_cast<double>(report.rows.size());
  }
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

EvalReport absent_report(const std::string& method, const Sensor& sensor) {
  EvalReport report;
  report.method = method;
  report.sensor = std::string(to_string(sensor.kind()));
  report.absent = true;
  return report;
}

std::string format_psnr(double db) {
  if (std::isinf(db)) return db > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", db);
  return buf;
}

namespace {

std::string format_ssim(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string report_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << "image,method,sensor,psnr_db,ssim\n";
  for (const auto& r : reports) {
    for (const auto& row : r.rows) {
      out << row.image << "," << r.method << "," << r.sensor << "," << format_psnr(row.psnr_db) << ","
          << format_ssim(row.ssim) << "\n";
    }
  }
  return out.str();
}

std::string report_summary_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << "method,sensor,dataset,images,psnr_db,ssim,status\n";
  for (const auto& r : reports) {
    out << r.method << "," << r.sensor << "," << r.dataset << "," << r.rows.size() << ",";
    if (r.absent) {
      out << ",,absent\n";
    } else {
      out << format_psnr(r.mean_psnr) << "," << format_ssim(r.mean_ssim) << ",ok\n";
    }
  }
  return out.str();
}

std::string report_table(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %-14s %7s %12s %9s %10s\n", "method", "sensor", "images", "psnr [dB]",
                "ssim", "time [s]");
  out << line;
  for (const auto& r : reports) {
    if (r.absent) {
      std::snprintf(line, sizeof(line), "%-16s %-14s %7s %12s %9s %10s\n", r.method.c_str(), r.sensor.c_str(), "-",
                    "absent", "-", "-");
      out << line;
      continue;
    }
    std::snprintf(line, sizeof(line), "%-16s %-14s %7zu %12s %9s %10.2f\n", r.method.c_str(), r.sensor.c_str(),
                  r.rows.size(), format_psnr(r.mean_psnr).c_str(), format_ssim(r.mean_ssim).c_str(),
                  r.runtime_seconds);
    out << line;
  }
  return out.str();
}

std::string report_summary_json(const std::vector<EvalReport>& reports) {
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& r : reports) {
    if (r.absent) {
      methods.push_back({{"method", r.method}, {"sensor", r.sensor}, {"status", "absent"}});
      continue;
    }
    nlohmann::json psnr_value =
        std::isfinite(r.mean_psnr) ? nlohmann::json(r.mean_psnr) : nlohmann::json(format_psnr(r.mean_psnr));
    methods.push_back({{"method", r.method},
                       {"sensor", r.sensor},
                       {"dataset", r.dataset},
                       {"status", "ok"},
                       {"images", r.rows.size()},
                       {"mean_psnr_db", psnr_value},
                       {"mean_ssim", r.mean_ssim},
                       {"runtime_seconds", r.runtime_seconds}});
  }
  return nlohmann::json{{"methods", methods}}.dump(2) + "\n";
}

}  // namespace nrsr
