#include "stgd/datasets/dataset.hpp"

#include "stgd/core/errors.hpp"
#include "stgd/core/io.hpp"

#include <fstream>

namespace stgd::data {

namespace fs = std::filesystem;

std::string to_string(DatasetKind kind) { return kind == DatasetKind::Waxman ? "waxman" : "rgg"; }

DatasetKind parse_kind(const std::string& name) {
  if (name == "waxman") return DatasetKind::Waxman;
  if (name == "rgg") return DatasetKind::Rgg;
  throw ConfigError("unknown dataset kind '" + name + "' (expected waxman or rgg)");
}

SplitCounts default_counts(DatasetKind kind) {
  return kind == DatasetKind::Waxman ? SplitCounts{2500, 500} : SplitCounts{2500, 1000};
}

std::uint64_t sequence_seed(std::uint64_t master_seed, const std::string& split, std::size_t index) {
  const std::uint64_t tag = split == "train" ? 1 : 2;
  return mix_seed(mix_seed(master_seed, tag), index);
}

SpatiotemporalGraph generate_sequence(const GeneratorParams& params, std::uint64_t seed) {
  return std::visit(
      [seed](const auto& p) {
        std::mt19937_64 factor_rng(mix_seed(seed, 0xFAC7));
        const FactorRecord f = sample_factors(p, factor_rng);
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, WaxmanParams>) {
          return generate_waxman_sequence(p, f, seed);
        } else {
          return generate_rgg_sequence(p, f, seed);
        }
      },
      params);
}

void write_sequences(const fs::path& file, const std::vector<SpatiotemporalGraph>& seqs) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  for (const auto& g : seqs) out << serialize_graph(g) << '\n';
  if (!out) throw IoError("write failed for " + file.string());
}

nlohmann::json build_dataset(const fs::path& dir, const GeneratorParams& params, SplitCounts counts,
                             std::uint64_t master_seed) {
  if (counts.train == 0 || counts.test == 0) throw ConfigError("split counts must be positive");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create dataset directory " + dir.string());

  const bool waxman = std::holds_alternative<WaxmanParams>(params);
  nlohmann::json manifest;
  manifest["format_version"] = kDatasetFormatVersion;
  manifest["kind"] = waxman ? "waxman" : "rgg";
  manifest["params"] = std::visit([](const auto& p) { return to_json(p); }, params);
  manifest["counts"] = {{"train", counts.train}, {"test", counts.test}};
  manifest["master_seed"] = master_seed;
  manifest["seed_derivation"] = "splitmix64(splitmix64(master_seed, split_tag), index)";

  for (const auto& [split, count] :
       {std::pair<std::string, std::size_t>{"train", counts.train}, {"test", counts.test}}) {
    std::vector<std::uint64_t> seeds(count);
    std::vector<SpatiotemporalGraph> seqs;
    seqs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      seeds[i] = sequence_seed(master_seed, split, i);
      seqs.push_back(generate_sequence(params, seeds[i]));
    }
    write_sequences(dir / (split + ".jsonl"), seqs);
    manifest["seeds"][split] = seeds;
  }
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
  return manifest;
}

DatasetShape manifest_shape(const nlohmann::json& manifest) {
  const auto& p = manifest.at("params");
  DatasetShape s;
  s.nodes = p.at("n_nodes").get<std::size_t>();
  s.coord_dim = p.at("coord_dim").get<std::size_t>();
  s.length = p.at("seq_len").get<std::size_t>();
  s.feature_dim = p.value("feature_dim", std::size_t{2});
  return s;
}

Dataset load_dataset(const fs::path& dir, const std::string& split) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream min(manifest_path);
  if (!min) throw IoError("dataset manifest not found: " + manifest_path.string());
  Dataset ds;
  try {
    ds.manifest = nlohmann::json::parse(min);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed manifest " + manifest_path.string() + ": " + e.what(), e.byte);
  }
  if (ds.manifest.value("format_version", 0) != kDatasetFormatVersion) {
    throw DataError("unsupported dataset format version in " + manifest_path.string());
  }
  const auto shape = manifest_shape(ds.manifest);
  const auto expected_count = ds.manifest.at("counts").at(split).get<std::size_t>();

  const fs::path file = dir / (split + ".jsonl");
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("dataset split not found: " + file.string());
  const ShapeSpec spec{shape.nodes, shape.coord_dim, shape.feature_dim, shape.length};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto g = deserialize_graph(line, spec);
      if (auto report = validate_graph(g); !report) throw DataError(report.message);
      ds.sequences.push_back(std::move(g));
    } catch (const std::exception& e) {
      throw DataError(file.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (ds.sequences.size() != expected_count) {
    throw DataError(file.string() + ": count mismatch: manifest declares " +
                    std::to_string(expected_count) + " sequences, file holds " +
                    std::to_string(ds.sequences.size()));
  }
  return ds;
}

}  // namespace stgd::data
