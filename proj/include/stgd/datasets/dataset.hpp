#pragma once

#include "stgd/core/graph.hpp"
#include "stgd/datasets/generators.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace stgd::data {

inline constexpr int kDatasetFormatVersion = 1;

enum class DatasetKind { Waxman, Rgg };

std::string to_string(DatasetKind kind);
DatasetKind parse_kind(const std::string& name);

struct SplitCounts {
  std::size_t train = 0;
  std::size_t test = 0;
};

using GeneratorParams = std::variant<WaxmanParams, RggParams>;

/// Default counts: Waxman 2500/500, RGG 2500/1000.
SplitCounts default_counts(DatasetKind kind);

/// Seed of sequence `index` in `split` ("train" or "test").
std::uint64_t sequence_seed(std::uint64_t master_seed, const std::string& split, std::size_t index);

/// One sequence: factors drawn from the ranges, then the generator, both from
/// the sequence's derived seed.
SpatiotemporalGraph generate_sequence(const GeneratorParams& params, std::uint64_t seed);

/// Writes manifest.json, train.jsonl and test.jsonl into `dir` (created if
/// needed). Returns the manifest. Throws IoError when `dir` is unwritable.
nlohmann::json build_dataset(const std::filesystem::path& dir, const GeneratorParams& params,
                             SplitCounts counts, std::uint64_t master_seed);

struct Dataset {
  nlohmann::json manifest;
  std::vector<SpatiotemporalGraph> sequences;
};

/// Loads one split ("train" or "test"), validating every sequence against the
/// manifest. Errors name the offending file line (1-based).
Dataset load_dataset(const std::filesystem::path& dir, const std::string& split);

/// Shape a manifest promises for every sequence.
struct DatasetShape {
  std::size_t nodes = 0;
  std::size_t coord_dim = 0;
  std::size_t feature_dim = 2;
  std::size_t length = 0;
};
DatasetShape manifest_shape(const nlohmann::json& manifest);

/// Writes sequences as JSON lines.
void write_sequences(const std::filesystem::path& file, const std::vector<SpatiotemporalGraph>& seqs);

}  // namespace stgd::data
