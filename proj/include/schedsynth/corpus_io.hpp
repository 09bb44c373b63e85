#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "schedsynth/domain.hpp"

namespace schedsynth {

// Delimited-text corpus file:
//
//   #format schedsynth-corpus 1
//   #kind week|day
//   #resolution_minutes 10
//   #alphabet_name mobility
//   #alphabet_kind mobility
//   #alphabet 0=at home;1=driving car;...
//   person_id,age_class,occupation_class[,weekday],code,code,...
//   #end <row count>
//
// Week rows carry 1008 codes, day rows a weekday and 144 codes. Rows of one
// diary person are consecutive. The #end footer detects truncation.
inline constexpr int kCorpusFormatVersion = 1;

enum class CorpusKind { week, day };

void write_corpus(std::ostream& out, const WeekCorpus& corpus);
void write_corpus(std::ostream& out, const DiaryCorpus& corpus);
void write_corpus(const std::filesystem::path& path, const WeekCorpus& corpus);
void write_corpus(const std::filesystem::path& path, const DiaryCorpus& corpus);

// `source` names the input in error messages. When `expected` is given, the
// file's alphabet must equal it.
WeekCorpus read_week_corpus(std::istream& in, const std::string& source = "<stream>",
                            const std::optional<StateAlphabet>& expected = std::nullopt);
DiaryCorpus read_diary_corpus(std::istream& in, const std::string& source = "<stream>",
                              const std::optional<StateAlphabet>& expected = std::nullopt);
WeekCorpus read_week_corpus(const std::filesystem::path& path,
                            const std::optional<StateAlphabet>& expected = std::nullopt);
DiaryCorpus read_diary_corpus(const std::filesystem::path& path,
                              const std::optional<StateAlphabet>& expected = std::nullopt);

CorpusKind corpus_kind(const std::filesystem::path& path);

}  // namespace schedsynth
