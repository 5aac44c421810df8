#pragma once

#include <filesystem>
#include <string>

#include "asucnn/trainer.hpp"

namespace asucnn {

inline constexpr const char* kMetricsHeader = "epoch,lr,train_loss,train_acc,val_loss,val_acc,seconds";

// Values printed with 6 significant digits; no field ever needs quoting.
std::string format_metrics_row(const EpochMetrics& row);

// Truncates `path` and writes just the header line.
void write_metrics_header(const std::filesystem::path& path);

// Appends one row, writing the header first if the file is missing or empty.
void append_metrics(const std::filesystem::path& path, const EpochMetrics& row);

// `epoch=K lr=... train_loss=... train_acc=... val_loss=... val_acc=...`
std::string format_epoch_line(const EpochMetrics& row);

}  // namespace asucnn
