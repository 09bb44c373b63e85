#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "schedsynth/domain.hpp"
#include "schedsynth/metrics.hpp"
#include "schedsynth/sequence_model.hpp"

namespace schedsynth {

using Json = nlohmann::ordered_json;

// Model configuration as nested JSON ({"encoder": {...}, "features": {...},
// "training": {...}}). Reading accepts partial objects over the defaults and
// rejects unknown keys.
Json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const Json& j, ModelConfig base = {});

Json to_json(const StateAlphabet& alphabet);
StateAlphabet alphabet_from_json(const Json& j);

Json to_json(const MetricsReport& report);
Json to_json(const TrainReport& report);
Json to_json(const SplitPlan& plan);

// Pretty-printed with a trailing newline; parent directories are created.
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

// Delimited text with a header row; every column has the same length.
// Values print with 17 significant digits.
struct Column {
    std::string name;
    std::vector<double> values;
};
void write_columns(const std::filesystem::path& path, const std::vector<Column>& columns);

std::string format_double(double v);

}  // namespace schedsynth
