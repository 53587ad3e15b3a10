#include "stgd/trainer/trainer.hpp"

#include "stgd/core/errors.hpp"
#include "stgd/datasets/generators.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <deque>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

namespace stgd::trainer {

std::string to_string(Stage s) {
  switch (s) {
    case Stage::SgGrowth: return "sg";
    case Stage::TGrowth: return "t";
    case Stage::Done: return "done";
  }
  return "sg";
}

Stage parse_stage(const std::string& name) {
  if (name == "sg") return Stage::SgGrowth;
  if (name == "t") return Stage::TGrowth;
  if (name == "done") return Stage::Done;
  throw DataError("unknown trainer stage '" + name + "'");
}

void TrainerConfig::validate() const {
  if (!(epsilon > 0) || !(alpha > 0) || !(gamma > 0)) {
    throw ConfigError("trainer: epsilon, alpha and gamma must be positive");
  }
  if (K < 1 || J < 1) throw ConfigError("trainer: K and J must be at least 1");
  if (!(learning_rate > 0)) throw ConfigError("trainer: learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("trainer: batch_size must be at least 1");
  if (max_epochs < 1) throw ConfigError("trainer: max_epochs must be at least 1");
  if (keep_checkpoints < 1) throw ConfigError("trainer: keep_checkpoints must be at least 1");
}

nlohmann::json TrainerConfig::to_json() const {
  return {{"epsilon", epsilon},
          {"alpha", alpha},
          {"gamma", gamma},
          {"K", K},
          {"J", J},
          {"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"max_epochs", max_epochs},
          {"keep_checkpoints", keep_checkpoints},
          {"variant", model::to_string(variant)},
          {"seed", seed},
          {"betas", {betas.b1, betas.b2, betas.b3, betas.b4}}};
}

TrainerConfig TrainerConfig::from_json(const nlohmann::json& j) {
  TrainerConfig c;
  try {
    c.epsilon = j.value("epsilon", c.epsilon);
    c.alpha = j.value("alpha", c.alpha);
    c.gamma = j.value("gamma", c.gamma);
    c.K = j.value("K", c.K);
    c.J = j.value("J", c.J);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.keep_checkpoints = j.value("keep_checkpoints", c.keep_checkpoints);
    c.variant = model::parse_variant(j.value("variant", model::to_string(c.variant)));
    c.seed = j.value("seed", c.seed);
    if (j.contains("betas")) {
      const auto b = j.at("betas").get<std::vector<double>>();
      if (b.size() != 4) throw ConfigError("trainer: betas must have four entries");
      c.betas = {b[0], b[1], b[2], b[3]};
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("trainer config: ") + e.what());
  }
  c.validate();
  return c;
}

Thresholds TrainerState::thresholds(const objective::Betas& betas) const {
  Thresholds th;
  th.I_t = I_t;
  th.I_sg = I_sg;
  th.betas = betas;
  return th;
}

TrainerState initial_state(const TrainerConfig& config) {
  TrainerState s;
  s.I_t = config.epsilon;
  s.I_sg = config.epsilon;
  return s;
}

TrainerState begin_schedule(const TrainerState& state, const TrainerConfig& config) {
  TrainerState s = state;
  s.I_sg += config.alpha;
  return s;
}

TrainerState thresholding_step(const TrainerState& state, double avg_r2, double avg_r3,
                               const TrainerConfig& config) {
  TrainerState s = state;
  s.block_epoch = 0;
  s.block_r2 = 0;
  s.block_r3 = 0;
  if (s.stage == Stage::SgGrowth) {
    if (avg_r3 >= 0) {
      s.I_sg += config.alpha;
      return s;
    }
    s.stage = Stage::TGrowth;
  }
  if (s.stage == Stage::TGrowth) {
    if (avg_r2 < 0) {
      s.stage = Stage::Done;
    } else {
      s.I_t += config.gamma;
    }
  }
  return s;
}

std::string csv_header() {
  return "epoch,stage,I_t,I_sg,recon_graph,recon_spatial,kl_t,kl_s,kl_g,kl_sg,r1,r2,r3,total";
}

std::string csv_row(const LogRow& row) {
  const LossBreakdown& l = row.loss;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                row.epoch, to_string(row.stage).c_str(), row.I_t, row.I_sg, l.recon_graph,
                l.recon_spatial, l.kl_t, l.kl_s, l.kl_g, l.kl_sg, l.r1, l.r2, l.r3, l.total);
  return buf;
}

TrainerState run_schedule(TrainerState state, const TrainerConfig& config, EpochRunner& runner,
                          const TrainHooks& hooks) {
  config.validate();
  state.max_epochs_reached = false;
  while (state.stage != Stage::Done) {
    if (state.epoch >= config.max_epochs) {
      state.max_epochs_reached = true;
      break;
    }
    const Thresholds th = state.thresholds(config.betas);
    const LossBreakdown loss = runner.run_epoch(state.epoch, th);
    if (hooks.on_epoch) hooks.on_epoch({state.epoch, state.stage, state.I_t, state.I_sg, loss});
    ++state.epoch;
    ++state.block_epoch;
    state.block_r2 += loss.r2;
    state.block_r3 += loss.r3;
    const int block = state.stage == Stage::SgGrowth ? config.K : config.J;
    if (state.block_epoch == block) {
      state = thresholding_step(state, state.block_r2 / block, state.block_r3 / block, config);
      if (state.stage != Stage::Done && hooks.on_checkpoint) hooks.on_checkpoint(state, false);
    }
  }
  if (hooks.on_checkpoint) hooks.on_checkpoint(state, true);
  return state;
}

// ---- epoch runner ---------------------------------------------------------------

namespace {

std::vector<const SpatiotemporalGraph*> gather(const std::vector<SpatiotemporalGraph>& data,
                                               const std::vector<std::size_t>& order,
                                               std::size_t begin, std::size_t end) {
  std::vector<const SpatiotemporalGraph*> out;
  for (std::size_t i = begin; i < end; ++i) out.push_back(&data[order[i]]);
  return out;
}

bool finite(const LossBreakdown& l) {
  return std::isfinite(l.total) && std::isfinite(l.recon_graph) && std::isfinite(l.recon_spatial) &&
         std::isfinite(l.kl_t) && std::isfinite(l.kl_s) && std::isfinite(l.kl_g) &&
         std::isfinite(l.kl_sg);
}

}  // namespace

ModelEpochRunner::ModelEpochRunner(model::StgdVae& model, nn::Adam& optimizer,
                                   const std::vector<SpatiotemporalGraph>& data,
                                   const TrainerConfig& config)
    : model_(model), optimizer_(optimizer), data_(data), config_(config) {
  if (data.empty()) throw DataError("training data is empty");
}

LossBreakdown ModelEpochRunner::run_epoch(int epoch, const Thresholds& thresholds) {
  const std::uint64_t epoch_seed = data::mix_seed(config_.seed, static_cast<std::uint64_t>(epoch));
  std::vector<std::size_t> order(data_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(epoch_seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(shuffle_rng)]);
  }

  LossBreakdown sum;
  const auto bs = static_cast<std::size_t>(config_.batch_size);
  std::uint64_t batch_index = 0;
  for (std::size_t begin = 0; begin < order.size(); begin += bs, ++batch_index) {
    const std::size_t end = std::min(order.size(), begin + bs);
    const auto seqs = gather(data_, order, begin, end);
    const model::Batch batch = model::Batch::build(seqs);
    std::mt19937_64 noise_rng(data::mix_seed(epoch_seed, batch_index));
    const model::NoiseDraw noise =
        model::NoiseDraw::sample(model_.config(), batch.sequences, batch.steps, noise_rng);

    model_.parameters().zero_grad();
    nn::Tape tape;
    auto obj = objective::build_objective(model_.forward(tape, batch, noise), batch,
                                          model_.config(), thresholds);
    if (!finite(obj.values)) {
      if (on_numerical_failure) on_numerical_failure();
      throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index));
    }
    tape.backward(obj.loss);
    optimizer_.step(model_.parameters());
    LossBreakdown weighted = obj.values;
    weighted *= static_cast<double>(seqs.size());
    sum += weighted;
  }
  sum *= 1.0 / static_cast<double>(data_.size());
  return sum;
}

LossBreakdown ModelEpochRunner::evaluate(const Thresholds& thresholds) const {
  return evaluate_loss(model_, data_, thresholds, config_.batch_size);
}

LossBreakdown evaluate_loss(const model::StgdVae& model, const std::vector<SpatiotemporalGraph>& data,
                            const Thresholds& thresholds, int batch_size,
                            std::optional<std::uint64_t> noise_seed) {
  if (data.empty()) throw DataError("evaluation data is empty");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  LossBreakdown sum;
  const auto bs = static_cast<std::size_t>(std::max(1, batch_size));
  std::uint64_t batch_index = 0;
  for (std::size_t begin = 0; begin < data.size(); begin += bs, ++batch_index) {
    const auto seqs = gather(data, order, begin, std::min(data.size(), begin + bs));
    const model::Batch batch = model::Batch::build(seqs);
    model::NoiseDraw noise = model::NoiseDraw::zeros(model.config(), batch.sequences, batch.steps);
    if (noise_seed) {
      std::mt19937_64 rng(data::mix_seed(*noise_seed, batch_index));
      noise = model::NoiseDraw::sample(model.config(), batch.sequences, batch.steps, rng);
    }
    nn::Tape tape;
    auto obj = objective::build_objective(model.forward(tape, batch, noise), batch, model.config(),
                                          thresholds);
    LossBreakdown weighted = obj.values;
    weighted *= static_cast<double>(seqs.size());
    sum += weighted;
  }
  sum *= 1.0 / static_cast<double>(data.size());
  return sum;
}

// ---- checkpoints ------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'T', 'G', 'D', 'C', 'K', 'P', 'T'};

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("checkpoint truncated");
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint64_t>(in);
  if (n > (std::uint64_t{1} << 30)) throw DataError("checkpoint string length is corrupted");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw DataError("checkpoint truncated");
  return s;
}

std::string config_json(const model::ModelConfig& m, const TrainerConfig& t) {
  return nlohmann::json{{"model", m.to_json()}, {"trainer", t.to_json()}}.dump();
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void save_checkpoint(const std::filesystem::path& path, const model::StgdVae& model,
                     const TrainerConfig& trainer_config, const TrainerState& state,
                     const nn::Adam& optimizer) {
  std::ostringstream payload(std::ios::binary);
  const std::string cfg = config_json(model.config(), trainer_config);
  put<std::uint64_t>(payload, fnv1a(cfg));
  put_string(payload, cfg);
  put<double>(payload, state.I_t);
  put<double>(payload, state.I_sg);
  put<std::int32_t>(payload, static_cast<std::int32_t>(state.stage));
  put<std::int32_t>(payload, state.epoch);
  put<std::int32_t>(payload, state.block_epoch);
  put<double>(payload, state.block_r2);
  put<double>(payload, state.block_r3);
  put<std::uint8_t>(payload, state.max_epochs_reached ? 1 : 0);
  const auto& params = model.parameters().items();
  put<std::uint64_t>(payload, params.size());
  for (const auto& p : params) {
    put_string(payload, p->name);
    nn::write_matrix(payload, p->value);
  }
  optimizer.write(payload);
  const std::string body = payload.str();

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, body.size());
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    put<std::uint64_t>(out, fnv1a(body));
    if (!out) throw IoError("cannot write checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic)] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError(path.string() + " is not a checkpoint file");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint format version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto size = get<std::uint64_t>(in);
  if (size > (std::uint64_t{1} << 36)) throw DataError("checkpoint length is corrupted");
  std::string body(size, '\0');
  in.read(body.data(), static_cast<std::streamsize>(size));
  if (!in) throw DataError("checkpoint truncated");
  if (get<std::uint64_t>(in) != fnv1a(body)) throw DataError("checkpoint checksum mismatch");

  std::istringstream p(body, std::ios::binary);
  const auto hash = get<std::uint64_t>(p);
  const std::string cfg = get_string(p);
  if (hash != fnv1a(cfg)) throw DataError("checkpoint config hash mismatch");
  Checkpoint ck;
  try {
    const auto j = nlohmann::json::parse(cfg);
    ck.model_config = model::ModelConfig::from_json(j.at("model"));
    ck.trainer_config = TrainerConfig::from_json(j.at("trainer"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint config is unreadable: ") + e.what());
  }
  ck.state.I_t = get<double>(p);
  ck.state.I_sg = get<double>(p);
  const auto stage = get<std::int32_t>(p);
  if (stage < 0 || stage > 2) throw DataError("checkpoint stage is corrupted");
  ck.state.stage = static_cast<Stage>(stage);
  ck.state.epoch = get<std::int32_t>(p);
  ck.state.block_epoch = get<std::int32_t>(p);
  ck.state.block_r2 = get<double>(p);
  ck.state.block_r3 = get<double>(p);
  ck.state.max_epochs_reached = get<std::uint8_t>(p) != 0;

  ck.model = std::make_unique<model::StgdVae>(ck.model_config);
  auto& params = ck.model->parameters().items();
  if (get<std::uint64_t>(p) != params.size()) {
    throw DataError("checkpoint parameter count does not match the model");
  }
  for (auto& param : params) {
    if (get_string(p) != param->name) throw DataError("checkpoint parameter order mismatch");
    Matrix m = nn::read_matrix(p);
    if (m.rows() != param->value.rows() || m.cols() != param->value.cols()) {
      throw DataError("checkpoint parameter " + param->name + " has the wrong shape");
    }
    param->value = std::move(m);
  }
  ck.optimizer = nn::Adam(nn::AdamConfig{ck.trainer_config.learning_rate});
  ck.optimizer.read(p, ck.model->parameters());
  return ck;
}

// ---- full run ---------------------------------------------------------------------

TrainResult train(const model::ModelConfig& model_config, const TrainerConfig& config,
                  const std::vector<SpatiotemporalGraph>& data,
                  const std::filesystem::path& out_dir,
                  const std::optional<std::filesystem::path>& resume,
                  const std::function<void(const LogRow&)>& progress) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "checkpoints", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "checkpoints").string() + ": " + ec.message());

  std::unique_ptr<model::StgdVae> model;
  nn::Adam optimizer;
  TrainerConfig tc = config;
  TrainerState state;
  if (resume) {
    Checkpoint ck = load_checkpoint(*resume);
    model = std::move(ck.model);
    optimizer = ck.optimizer;
    tc = ck.trainer_config;
    tc.max_epochs = config.max_epochs;
    tc.keep_checkpoints = config.keep_checkpoints;
    state = ck.state;
  } else {
    model::ModelConfig mc = model_config;
    mc.variant = config.variant;
    model = std::make_unique<model::StgdVae>(mc);
    optimizer = nn::Adam(nn::AdamConfig{config.learning_rate});
    state = begin_schedule(initial_state(config), config);
  }

  const auto log_path = out_dir / "training_log.csv";
  std::vector<std::string> kept;
  if (resume) {
    std::ifstream old(log_path);
    std::string line;
    while (std::getline(old, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("epoch", 0) == 0) continue;
      if (std::stoi(line.substr(0, line.find(','))) < state.epoch) kept.push_back(line);
    }
  }
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw IoError("cannot write " + log_path.string());
  log << csv_header() << '\n';
  for (const auto& line : kept) log << line << '\n';
  log.flush();

  auto checkpoint_path = [&](const TrainerState& s, bool final) {
    if (final) return out_dir / "final.ckpt";
    char name[64];
    std::snprintf(name, sizeof(name), "epoch-%06d-%s.ckpt", s.epoch, to_string(s.stage).c_str());
    return out_dir / "checkpoints" / name;
  };
  std::deque<std::filesystem::path> periodic;
  auto save_periodic = [&](const TrainerState& s) {
    periodic.push_back(checkpoint_path(s, false));
    save_checkpoint(periodic.back(), *model, tc, s, optimizer);
    while (periodic.size() > static_cast<std::size_t>(tc.keep_checkpoints)) {
      std::filesystem::remove(periodic.front(), ec);
      periodic.pop_front();
    }
  };
  if (!resume) save_periodic(state);

  ModelEpochRunner runner(*model, optimizer, data, tc);
  runner.on_numerical_failure = [&] {
    save_checkpoint(out_dir / "diagnostic.ckpt", *model, tc, state, optimizer);
  };
  TrainHooks hooks;
  hooks.on_epoch = [&](const LogRow& row) {
    log << csv_row(row) << '\n';
    log.flush();
    if (progress) progress(row);
  };
  hooks.on_checkpoint = [&](const TrainerState& s, bool final) {
    state = s;
    if (final) {
      save_checkpoint(checkpoint_path(s, true), *model, tc, s, optimizer);
    } else {
      save_periodic(s);
    }
  };
  state = run_schedule(state, tc, runner, hooks);
  if (state.max_epochs_reached) {
    log << "# warning: max_epochs=" << tc.max_epochs
        << " reached before the R2 < 0 stopping criterion (stage " << to_string(state.stage)
        << ")\n";
  }
  return {state, out_dir / "final.ckpt", log_path};
}

}  // namespace stgd::trainer
