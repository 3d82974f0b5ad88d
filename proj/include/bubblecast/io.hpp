#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bubblecast/marma.hpp"
#include "bubblecast/mdn.hpp"
#include "bubblecast/recalibration.hpp"
#include "bubblecast/skew_t.hpp"

namespace bubblecast::io {

/// Headerless single-column CSV, one value per line, %.17g formatting.
void write_series_csv(const std::string& path, const std::vector<double>& values);
std::vector<double> read_series_csv(const std::string& path);

/// FNV-1a 64-bit hash of a file's bytes, as fixed-width hex. Used for the
/// manifest integrity checks.
std::string file_checksum(const std::string& path);
std::string string_checksum(const std::string& content);

std::string format_double(double v);

// JSON representations (versioned where persisted standalone)
std::string marma_spec_to_json(const marma::MarmaSpec& spec);
marma::MarmaSpec marma_spec_from_json(const std::string& text);

std::string mixture_to_json(const skewt::MixtureParams& params);
skewt::MixtureParams mixture_from_json(const std::string& text);

void save_model(const mdn::MdnModel& model, const std::string& path);
mdn::MdnModel load_model(const std::string& path);

void save_recalibration(const recal::RecalibrationModel& model,
                        const std::string& path);
recal::RecalibrationModel load_recalibration(const std::string& path);

void write_training_log(const std::string& path,
                        const std::vector<mdn::TrainLogEntry>& log);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace bubblecast::io
