#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "schedsynth/generator.hpp"
#include "schedsynth/imputer.hpp"
#include "schedsynth/markov.hpp"

namespace schedsynth {

// Binary container: 8-byte magic, 8-byte little-endian header length, a JSON
// header (kind, format version, config, alphabets, seeds, and one entry per
// block with name, shape and CRC-32), then the blocks as little-endian f64.
inline constexpr int kCheckpointFormatVersion = 1;

enum class CheckpointKind { generator, imputer, markov };

std::string to_string(CheckpointKind kind);

void save_checkpoint(std::ostream& out, const GeneratorModel& model);
void save_checkpoint(std::ostream& out, const ImputerModel& model);
void save_checkpoint(std::ostream& out, const MarkovModel& model);
void save_checkpoint(const std::filesystem::path& path, const GeneratorModel& model);
void save_checkpoint(const std::filesystem::path& path, const ImputerModel& model);
void save_checkpoint(const std::filesystem::path& path, const MarkovModel& model);

GeneratorModel load_generator(std::istream& in);
ImputerModel load_imputer(std::istream& in);
MarkovModel load_markov(std::istream& in);
GeneratorModel load_generator(const std::filesystem::path& path);
ImputerModel load_imputer(const std::filesystem::path& path);
MarkovModel load_markov(const std::filesystem::path& path);

CheckpointKind checkpoint_kind(const std::filesystem::path& path);

}  // namespace schedsynth
