#include "asucnn/metrics_csv.hpp"

#include <cstdio>
#include <fstream>

#include "asucnn/errors.hpp"

namespace asucnn {

std::string format_metrics_row(const EpochMetrics& row) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g", row.epoch, row.lr,
                row.train_loss, row.train_acc, row.val_loss, row.val_acc, row.wall_seconds);
  return buf;
}

std::string format_epoch_line(const EpochMetrics& row) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "epoch=%zu lr=%.6g train_loss=%.6g train_acc=%.6g val_loss=%.6g val_acc=%.6g",
                row.epoch, row.lr, row.train_loss, row.train_acc, row.val_loss, row.val_acc);
  return buf;
}

void write_metrics_header(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write metrics file " + path.string());
  out << kMetricsHeader << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

void append_metrics(const std::filesystem::path& path, const EpochMetrics& row) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot append to metrics file " + path.string());
  if (fresh) out << kMetricsHeader << '\n';
  out << format_metrics_row(row) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace asucnn
