// stgdgen: dataset generation, training, evaluation and latent traversal.

#include "stgd/core/errors.hpp"
#include "stgd/core/io.hpp"
#include "stgd/datasets/dataset.hpp"
#include "stgd/evaluation/generation.hpp"
#include "stgd/evaluation/pipeline.hpp"
#include "stgd/evaluation/plots.hpp"
#include "stgd/trainer/trainer.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace stgd;

namespace {

enum Exit { kOk = 0, kOther = 1, kUsage = 2, kConfig = 3, kIo = 4, kData = 5, kVersion = 6, kNumerical = 7 };

struct Common {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 0;
};

struct GenOptions {
  std::string kind = "waxman";
  std::size_t train = 0, test = 0;
  int nodes = 25, steps = 8;
  double beta = 0.4, alpha = 0.1, theta = 12.0;
};

struct TrainOptions {
  std::string data, resume, variant = "indep";
  int max_epochs = 300, K = 5, J = 5, batch_size = 8, keep_checkpoints = 3;
  double alpha = 0.5, gamma = 0.5, lr = 1e-3, epsilon = 1e-5;
  double coord_sigma = 1.0, feature_sigma = 1.0, input_scale = 0.1;
  int fs_dim = 100, fg_dim = 100, fsg_dim = 200, z_dim = 200;
  int node_channels = 20, edge_channels = 8;
  bool quiet = false;
};

struct EvalOptions {
  std::string checkpoint, data, split = "test";
  int num_gen = 0, bins = 20;
};

struct TraverseOptions {
  std::string checkpoint, data, split = "test", group = "f_s";
  int index = 0, dim = 0;
  std::vector<double> values;
};

/// Turns a flat JSON object into `--key value` arguments (arrays become repeated values).
std::vector<std::string> config_args(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config file not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed config " + path.string() + ": " + e.what(), e.byte);
  }
  if (!j.is_object()) throw ConfigError("config " + path.string() + " must be a JSON object");
  auto text = [](const nlohmann::json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  };
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    if (key == "command" || key == "config" || value.is_null()) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back("--" + key);
      continue;
    }
    args.push_back("--" + key);
    if (value.is_array()) {
      for (const auto& v : value) args.push_back(text(v));
    } else {
      args.push_back(text(value));
    }
  }
  return args;
}

/// Resolved values of every option of `cmd`, typed where they parse as numbers.
nlohmann::json resolved_config(const CLI::App& cmd) {
  nlohmann::json j;
  j["command"] = cmd.get_name();
  for (const CLI::Option* opt : cmd.get_options()) {
    const std::string name = opt->get_lnames().empty() ? "" : opt->get_lnames().front();
    if (name.empty() || name == "help" || name == "config") continue;
    if (opt->get_items_expected_max() == 0) {
      j[name] = opt->count() > 0;
      continue;
    }
    std::vector<std::string> raw = opt->count() > 0 ? opt->results() : std::vector<std::string>{};
    if (raw.empty() && !opt->get_default_str().empty()) raw = {opt->get_default_str()};
    auto typed = [](const std::string& s) -> nlohmann::json {
      if (s.empty()) return s;
      char* end = nullptr;
      const double d = std::strtod(s.c_str(), &end);
      if (end && *end == '\0') {
        if (s.find_first_of(".eE") == std::string::npos) {
          return s[0] == '-' ? nlohmann::json(std::stoll(s)) : nlohmann::json(std::stoull(s));
        }
        return d;
      }
      return s;
    };
    if (opt->get_items_expected_max() > 1) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& s : raw) arr.push_back(typed(s));
      j[name] = arr;
    } else {
      j[name] = raw.empty() ? nlohmann::json(nullptr) : typed(raw.back());
    }
  }
  return j;
}

void write_resolved(const CLI::App& cmd, const fs::path& out) {
  fs::create_directories(out);
  eval::write_text_file(out / "resolved_config.json", resolved_config(cmd).dump(2) + "\n");
}

std::vector<SpatiotemporalGraph> load_split(const std::string& dir, const std::string& split) {
  if (dir.empty()) throw ConfigError("--data is required");
  if (!fs::exists(dir)) throw IoError("dataset path does not exist: " + dir);
  return data::load_dataset(dir, split).sequences;
}

int cmd_gen_data(const Common& c, const GenOptions& o, const CLI::App& cmd) {
  const auto kind = data::parse_kind(o.kind);
  data::SplitCounts counts = data::default_counts(kind);
  if (o.train > 0) counts.train = o.train;
  if (o.test > 0) counts.test = o.test;
  data::GeneratorParams params;
  if (kind == data::DatasetKind::Waxman) {
    data::WaxmanParams p;
    p.n_nodes = o.nodes;
    p.seq_len = o.steps;
    p.beta = o.beta;
    p.alpha = o.alpha;
    params = p;
  } else {
    data::RggParams p;
    p.n_nodes = o.nodes;
    p.seq_len = o.steps;
    p.theta = o.theta;
    params = p;
  }
  const auto manifest = data::build_dataset(c.out, params, counts, c.seed);
  write_resolved(cmd, c.out);
  std::cout << "dataset " << manifest["kind"].get<std::string>() << " written to " << c.out
            << ": train=" << counts.train << " test=" << counts.test << " seed=" << c.seed << "\n";
  return kOk;
}

int cmd_train(const Common& c, const TrainOptions& o, const CLI::App& cmd) {
  const auto train_set = load_split(o.data, "train");
  model::ModelConfig mc;
  const auto& first = train_set.front();
  mc.nodes = static_cast<Eigen::Index>(first.num_nodes());
  mc.coord_dim = static_cast<Eigen::Index>(first.coord_dim());
  mc.feature_dim = static_cast<Eigen::Index>(first.feature_dim());
  mc.fs_dim = o.fs_dim;
  mc.fg_dim = o.fg_dim;
  mc.fsg_dim = o.fsg_dim;
  mc.z_dim = o.z_dim;
  mc.node_channels = o.node_channels;
  mc.edge_channels = o.edge_channels;
  mc.coord_sigma = o.coord_sigma;
  mc.feature_sigma = o.feature_sigma;
  mc.input_feature_scale = o.input_scale;
  mc.init_seed = data::mix_seed(c.seed, 0x1417);
  mc.variant = model::parse_variant(o.variant);
  mc = model::ModelConfig::from_json(mc.to_json());

  trainer::TrainerConfig tc;
  tc.epsilon = o.epsilon;
  tc.alpha = o.alpha;
  tc.gamma = o.gamma;
  tc.K = o.K;
  tc.J = o.J;
  tc.learning_rate = o.lr;
  tc.batch_size = o.batch_size;
  tc.max_epochs = o.max_epochs;
  tc.keep_checkpoints = o.keep_checkpoints;
  tc.variant = mc.variant;
  tc.seed = c.seed;
  tc.validate();

  write_resolved(cmd, c.out);
  std::optional<fs::path> resume;
  if (!o.resume.empty()) {
    if (!fs::exists(o.resume)) throw IoError("checkpoint not found: " + o.resume);
    resume = o.resume;
  }
  auto progress = [&](const trainer::LogRow& row) {
    if (o.quiet) return;
    std::fprintf(stderr, "epoch %4d  %-4s  I_t=%.3f I_sg=%.3f  total=%.4g  kl_t=%.4g kl_sg=%.4g\n",
                 row.epoch, trainer::to_string(row.stage).c_str(), row.I_t, row.I_sg,
                 row.loss.total, row.loss.kl_t, row.loss.kl_sg);
  };
  const auto result = trainer::train(mc, tc, train_set, c.out, resume, progress);
  std::cout << "training finished at epoch " << result.state.epoch << " (stage "
            << trainer::to_string(result.state.stage) << ")\n";
  if (result.state.max_epochs_reached) {
    std::cerr << "warning: max_epochs reached before the stopping criterion\n";
  }
  std::cout << "checkpoint " << result.final_checkpoint.string() << "\nlog "
            << result.log.string() << "\n";
  return kOk;
}

trainer::Checkpoint load_model(const std::string& path) {
  if (path.empty()) throw ConfigError("--checkpoint is required");
  if (!fs::exists(path)) throw IoError("checkpoint not found: " + path);
  return trainer::load_checkpoint(path);
}

int cmd_evaluate(const Common& c, const EvalOptions& o, const CLI::App& cmd) {
  const auto ck = load_model(o.checkpoint);
  const auto test = load_split(o.data, o.split);
  eval::EvaluationOptions opts;
  opts.num_generated = o.num_gen;
  opts.bins = o.bins;
  opts.seed = c.seed;
  const auto result = eval::evaluate_model(*ck.model, test, opts);
  write_resolved(cmd, c.out);
  const fs::path out(c.out);
  eval::write_text_file(out / "metrics.json", result.report.to_json().dump(2) + "\n");
  eval::write_text_file(out / "metrics.txt", result.report.to_table());
  fs::create_directories(out / "plots");
  for (const auto& [property, h] : result.histograms) {
    const std::string name = eval::to_string(property);
    eval::write_text_file(out / "plots" / ("property_" + name + ".svg"),
                          eval::histogram_svg(name + ": reference vs generated", h));
  }
  std::cout << result.report.to_table();
  for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << "\n";
  return kOk;
}

int cmd_traverse(const Common& c, const TraverseOptions& o, const CLI::App& cmd) {
  const auto ck = load_model(o.checkpoint);
  const auto seqs = load_split(o.data, o.split);
  if (o.index < 0 || o.index >= static_cast<int>(seqs.size())) {
    throw ConfigError("--index " + std::to_string(o.index) + " is outside the " + o.split +
                      " split of " + std::to_string(seqs.size()) + " sequences");
  }
  const auto group = eval::parse_group(o.group);
  const auto values = o.values.empty() ? eval::default_traversal_values() : o.values;
  const auto graphs = eval::latent_traversal(*ck.model, seqs[o.index], group, o.dim, values);
  write_resolved(cmd, c.out);
  const fs::path out(c.out);
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    char stem[64];
    std::snprintf(stem, sizeof stem, "traversal_%02zu", k);
    char title[128];
    std::snprintf(title, sizeof title, "%s[%d] = %g", o.group.c_str(), o.dim, values[k]);
    eval::write_text_file(out / (std::string(stem) + ".json"), serialize_graph(graphs[k]) + "\n");
    eval::write_text_file(out / (std::string(stem) + ".svg"), eval::sequence_svg(title, graphs[k]));
  }
  std::cout << graphs.size() << " traversal sequences written to " << c.out << "\n";
  return kOk;
}

int fail(const char* category, const std::string& message, int code) {
  std::cerr << "error: " << category << ": " << message << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disentangled spatiotemporal graph generation"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Common common;
  GenOptions gen;
  TrainOptions tr;
  EvalOptions ev;
  TraverseOptions tv;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", common.config, "JSON file whose keys mirror the flags");
    cmd->add_option("--out", common.out, "Output directory");
    cmd->add_option("--seed", common.seed, "Global seed (env STGDGEN_SEED overrides the config file)");
  };

  auto* g = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  add_common(g);
  g->add_option("--kind", gen.kind, "waxman or rgg");
  g->add_option("--train", gen.train, "Training sequences (0 = default for the kind)");
  g->add_option("--test", gen.test, "Test sequences (0 = default for the kind)");
  g->add_option("--nodes", gen.nodes, "Nodes per graph");
  g->add_option("--steps", gen.steps, "Sequence length");
  g->add_option("--beta", gen.beta, "Waxman beta");
  g->add_option("--alpha", gen.alpha, "Waxman alpha");
  g->add_option("--theta", gen.theta, "RGG distance threshold");

  auto* t = app.add_subcommand("train", "Train a model with the thresholding schedule");
  add_common(t);
  t->add_option("--data", tr.data, "Dataset directory");
  t->add_option("--resume", tr.resume, "Checkpoint to resume from");
  t->add_option("--variant", tr.variant, "indep, dep or pooled");
  t->add_option("--max-epochs", tr.max_epochs, "Epoch cap");
  t->add_option("--alpha", tr.alpha, "I_sg increment");
  t->add_option("--gamma", tr.gamma, "I_t increment");
  t->add_option("--K", tr.K, "Epochs per I_sg block");
  t->add_option("--J", tr.J, "Epochs per I_t block");
  t->add_option("--epsilon", tr.epsilon, "Initial thresholds");
  t->add_option("--lr", tr.lr, "Learning rate");
  t->add_option("--batch-size", tr.batch_size, "Sequences per batch");
  t->add_option("--keep-checkpoints", tr.keep_checkpoints, "Periodic checkpoints kept on disk");
  t->add_option("--coord-sigma", tr.coord_sigma, "Coordinate likelihood standard deviation");
  t->add_option("--feature-sigma", tr.feature_sigma, "Node-feature likelihood standard deviation");
  t->add_option("--input-scale", tr.input_scale, "Encoder node-feature input scale");
  t->add_option("--fs-dim", tr.fs_dim, "f_s width");
  t->add_option("--fg-dim", tr.fg_dim, "f_g width");
  t->add_option("--fsg-dim", tr.fsg_dim, "f_sg width");
  t->add_option("--z-dim", tr.z_dim, "z_t width");
  t->add_option("--node-channels", tr.node_channels, "Decoder per-node channels");
  t->add_option("--edge-channels", tr.edge_channels, "Decoder edge-grid channels");
  t->add_flag("--quiet", tr.quiet, "No per-epoch progress");

  auto* e = app.add_subcommand("evaluate", "Compute the metric report and property plots");
  add_common(e);
  e->add_option("--checkpoint", ev.checkpoint, "Trained checkpoint");
  e->add_option("--data", ev.data, "Dataset directory");
  e->add_option("--split", ev.split, "Split to evaluate on");
  e->add_option("--num-gen", ev.num_gen, "Prior samples (0 = size of the split)");
  e->add_option("--bins", ev.bins, "Histogram bins");

  auto* v = app.add_subcommand("traverse", "Sweep one latent coordinate and decode");
  add_common(v);
  v->add_option("--checkpoint", tv.checkpoint, "Trained checkpoint");
  v->add_option("--data", tv.data, "Dataset directory");
  v->add_option("--split", tv.split, "Split holding the base sequence");
  v->add_option("--index", tv.index, "Base sequence index");
  v->add_option("--group", tv.group, "f_s, f_g, f_sg or z");
  v->add_option("--dim", tv.dim, "Coordinate within the group");
  v->add_option("--values", tv.values, "Traversal values (default 11 points from -5 to 5)")
      ->expected(1, CLI::detail::expected_max_vector_size);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    // A config file supplies defaults; explicit flags after it win.
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] == "--config") {
        auto extra = config_args(args[i + 1]);
        args.insert(args.begin() + 1, extra.begin(), extra.end());
        break;
      }
    }
    std::vector<std::string> cli_order(args.rbegin(), args.rend());
    try {
      app.parse(std::move(cli_order));
    } catch (const CLI::ParseError& err) {
      if (err.get_exit_code() == 0) return app.exit(err);
      return fail("usage", err.what(), kUsage);
    }
    // Precedence: command-line flag, then STGDGEN_SEED, then config file.
    if (const char* env = std::getenv("STGDGEN_SEED")) {
      std::vector<std::string> explicit_args(argv + 1, argv + argc);
      bool on_command_line = false;
      for (const auto& a : explicit_args) {
        on_command_line = on_command_line || a == "--seed" || a.rfind("--seed=", 0) == 0;
      }
      if (!on_command_line) {
        try {
          common.seed = std::stoull(env);
        } catch (const std::exception&) {
          throw ConfigError(std::string("STGDGEN_SEED is not an unsigned integer: ") + env);
        }
        for (CLI::App* sub : app.get_subcommands()) {
          CLI::Option* opt = sub->get_option("--seed");
          opt->clear();
          opt->add_result(std::to_string(common.seed));
        }
      }
    }

    if (g->parsed()) return cmd_gen_data(common, gen, *g);
    if (t->parsed()) return cmd_train(common, tr, *t);
    if (e->parsed()) return cmd_evaluate(common, ev, *e);
    if (v->parsed()) return cmd_traverse(common, tv, *v);
    return fail("usage", "no command given", kUsage);
  } catch (const ConfigError& err) {
    return fail("config", err.what(), kConfig);
  } catch (const IoError& err) {
    return fail("io", err.what(), kIo);
  } catch (const VersionError& err) {
    return fail("version", err.what(), kVersion);
  } catch (const ParseError& err) {
    return fail("parse", err.what(), kData);
  } catch (const ShapeError& err) {
    return fail("shape", err.what(), kData);
  } catch (const DataError& err) {
    return fail("data", err.what(), kData);
  } catch (const UndefinedInputError& err) {
    return fail("input", err.what(), kData);
  } catch (const NumericalError& err) {
    return fail("numerical", err.what(), kNumerical);
  } catch (const std::exception& err) {
    return fail("internal", err.what(), kOther);
  }
}
