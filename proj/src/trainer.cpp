#include "tackle/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "tackle/error.hpp"
#include "tackle/rng.hpp"

namespace tackle {

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 1 || patience >= max_epochs) throw ConfigError("patience must be in [1, max_epochs)");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1) || !(epsilon > 0))
    throw ConfigError("invalid optimizer constants");
}

bool EarlyStopping::update(double metric) {
  ++epoch_;
  if (epoch_ == 1 || metric > best_) {
    best_ = metric;
    best_epoch_ = epoch_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

template <typename Real>
Adam<Real>::Adam(const ModelConfig& config, const TrainConfig& cfg)
    : cfg_(cfg), m_(ModelParameters<Real>::zeros(config)), v_(ModelParameters<Real>::zeros(config)) {}

template <typename Real>
void Adam<Real>::step(ModelParameters<Real>& params, const ModelParameters<Real>& grads, double grad_scale) {
  ++t_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, t_), c2 = 1.0 - std::pow(b2, t_);
  const double lr = cfg_.learning_rate, eps = cfg_.epsilon;

  std::vector<std::vector<Real>*> ps, ms, vs;
  std::vector<const std::vector<Real>*> gs;
  params.visit([&](std::string_view, std::vector<Real>& t, int, int) { ps.push_back(&t); });
  m_.visit([&](std::string_view, std::vector<Real>& t, int, int) { ms.push_back(&t); });
  v_.visit([&](std::string_view, std::vector<Real>& t, int, int) { vs.push_back(&t); });
  grads.visit([&](std::string_view, const std::vector<Real>& t, int, int) { gs.push_back(&t); });
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto& p = *ps[i];
    auto& m = *ms[i];
    auto& v = *vs[i];
    const auto& g = *gs[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j] * grad_scale;
      m[j] = static_cast<Real>(b1 * m[j] + (1 - b1) * gj);
      v[j] = static_cast<Real>(b2 * v[j] + (1 - b2) * gj * gj);
      const double mhat = m[j] / c1, vhat = v[j] / c2;
      p[j] = static_cast<Real>(p[j] - lr * mhat / (std::sqrt(vhat) + eps));
    }
  }
}

template <typename Real>
double accumulate_batch(const ModelParameters<Real>& params, std::span<const Example* const> batch,
                        const FocalLossConfig& loss, ModelParameters<Real>& grads) {
  ForwardCache<Real> cache;
  std::vector<Real> input;
  double total = 0;
  for (const Example* ex : batch) {
    std::span<const Real> in;
    if constexpr (std::is_same_v<Real, float>) {
      in = ex->input;
    } else {
      input.assign(ex->input.begin(), ex->input.end());
      in = input;
    }
    const auto out = forward<Real>(in, params, cache);
    std::vector<double> probs(out.probs.begin(), out.probs.end());
    const auto fl = focal_loss(probs, ex->label, loss);
    total += fl.loss;
    std::vector<Real> dlogits(fl.dlogits.begin(), fl.dlogits.end());
    backward<Real>(params, cache, dlogits, grads);
  }
  return total;
}

std::vector<double> predict_risky(const ModelParameters<float>& params, std::span<const Example> examples) {
  ForwardCache<float> cache;
  std::vector<double> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(forward<float>(ex.input, params, cache).probs[1]);
  return out;
}

double mean_loss(const ModelParameters<float>& params, std::span<const Example> examples,
                 const FocalLossConfig& loss_cfg) {
  if (examples.empty()) return 0;
  ForwardCache<float> cache;
  double total = 0;
  for (const auto& ex : examples) {
    const auto out = forward<float>(ex.input, params, cache);
    std::vector<double> probs(out.probs.begin(), out.probs.end());
    total += focal_loss(probs, ex.label, loss_cfg).loss;
  }
  return total / examples.size();
}

namespace {

double macro_f1_at_half(const ModelParameters<float>& params, std::span<const Example> validation) {
  if (validation.empty()) return 0;
  const auto p = predict_risky(params, validation);
  std::vector<ScoredSample> scores;
  for (std::size_t i = 0; i < p.size(); ++i)
    scores.push_back({p[i], validation[i].label == 1 ? BinaryLabel::kRisky : BinaryLabel::kSafe});
  return compute_metrics(counts_at(scores, 0.5)).macro_f1;
}

}  // namespace

TrainResult train_fold(std::span<const Example> train, std::span<const Example> validation, const ModelConfig& model,
                       const TrainConfig& cfg, const FocalLossConfig& loss_cfg) {
  model.validate();
  cfg.validate();
  loss_cfg.validate();
  if (train.empty()) throw ConfigError("empty training set");

  auto params = init_parameters<float>(model, derive_seed(cfg.seed, {0x1417}));
  auto grads = ModelParameters<float>::zeros(model);
  Adam<float> adam(model, cfg);
  Rng shuffle_rng(derive_seed(cfg.seed, {0x5f0f}));
  EarlyStopping stopper(cfg.patience);

  TrainResult result;
  try {
    result.initial_loss = mean_loss(params, train, loss_cfg);
  } catch (const NumericError& e) {
    throw DivergenceError(0, 0, std::string(e.what()) + " before the first update");
  }
  result.best = params;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const Example*> batch;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0;
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i)
        batch.push_back(&train[order[i]]);
      grads.set_zero();
      double loss;
      try {
        loss = accumulate_batch<float>(params, batch, loss_cfg, grads);
      } catch (const NumericError& e) {
        throw DivergenceError(epoch, batch_index, std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                                                      ", batch " + std::to_string(batch_index));
      }
      if (!std::isfinite(loss))
        throw DivergenceError(epoch, batch_index,
                              "non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index));
      epoch_loss += loss;
      adam.step(params, grads, 1.0 / batch.size());
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = epoch_loss / train.size();
    log.val_macro_f1 = macro_f1_at_half(params, validation);
    log.improved = stopper.update(log.val_macro_f1);
    if (log.improved) {
      result.best = params;
      result.best_epoch = epoch;
    }
    result.log.push_back(log);
    result.epochs_run = epoch;
    if (stopper.should_stop()) break;
  }
  return result;
}

ClipCache ClipCache::load(const DatasetManifest& manifest) {
  ClipCache cache;
  for (const auto& e : manifest.entries) cache.insert(e.source_id, read_clip(e.path));
  return cache;
}

const Clip& ClipCache::at(const std::string& source_id) const {
  const auto it = clips_.find(source_id);
  if (it == clips_.end()) throw ManifestError("clip not loaded: " + source_id);
  return it->second;
}

std::uint64_t trial_seed(std::uint64_t seed, const RunId& run, int fold) {
  return derive_seed(seed, {fnv1a(run.str()), static_cast<std::uint64_t>(fold)});
}

TrialOutcome run_trial(const DatasetManifest& manifest, const ClipCache& clips, const FoldAssignment& folds,
                       const RunPlan& plan, int fold, const GridConfig& cfg, ModelParameters<float>* best) {
  TrialOutcome out;
  out.run_id = plan.run_id.str();
  out.fold = fold;

  const TrainingSet set = balance_training(fold, folds, manifest, plan, cfg.augment);
  const TrainingSet sets[] = {set};
  const auto leak = check_leakage(folds, sets);
  if (!leak.pass) throw InvariantError("leakage check failed for " + out.run_id + " fold " + std::to_string(fold) +
                                       ": " + leak.violations.front());

  std::vector<Example> train, validation;
  for (const auto& item : training_items(set, manifest)) {
    const Clip clip = materialize_item(item, clips.at(item.parent), cfg.augment);
    train.push_back({prepare_input<float>(clip, cfg.model), item.label == BinaryLabel::kRisky ? 1 : 0});
  }
  std::vector<BinaryLabel> truth;
  for (const auto& id : folds.folds[fold]) {
    const auto label = manifest.find(id).label.binary();
    validation.push_back({prepare_input<float>(clips.at(id), cfg.model), label == BinaryLabel::kRisky ? 1 : 0});
    truth.push_back(label);
  }
  out.training_size = train.size();
  out.validation_size = validation.size();
  out.synthesized = set.synthesized.size();

  TrainConfig tc = cfg.train;
  tc.seed = trial_seed(cfg.train.seed, plan.run_id, fold);
  auto result = train_fold(train, validation, cfg.model, tc, cfg.loss);
  out.best_epoch = result.best_epoch;
  out.epochs_run = result.epochs_run;
  out.log = result.log;

  const auto probs = predict_risky(result.best, validation);
  for (std::size_t i = 0; i < probs.size(); ++i) out.validation_scores.push_back({probs[i], truth[i]});
  const auto choice = select_threshold(out.validation_scores);
  FoldReport report;
  report.run_id = out.run_id;
  report.fold = fold;
  report.threshold = choice.threshold;
  report.counts = choice.counts;
  report.metrics = compute_metrics(choice.counts);
  out.report = report;
  if (best) *best = std::move(result.best);
  return out;
}

std::vector<TrialOutcome> run_grid(const DatasetManifest& manifest, const ClipCache& clips,
                                   const FoldAssignment& folds, std::span<const RunPlan> runs,
                                   const GridConfig& cfg) {
  struct Trial {
    const RunPlan* plan;
    int fold;
  };
  std::vector<const RunPlan*> ordered;
  for (const auto& p : runs) ordered.push_back(&p);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const RunPlan* a, const RunPlan* b) { return a->run_id.ordinal() < b->run_id.ordinal(); });
  std::vector<Trial> trials;
  for (const auto* p : ordered)
    for (int f = 0; f < folds.fold_count; ++f) trials.push_back({p, f});

  std::vector<TrialOutcome> outcomes(trials.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < trials.size(); i = next++) {
      const auto& t = trials[i];
      try {
        outcomes[i] = run_trial(manifest, clips, folds, *t.plan, t.fold, cfg);
      } catch (const std::exception& e) {
        TrialOutcome failed;
        failed.run_id = t.plan->run_id.str();
        failed.fold = t.fold;
        failed.error = e.what();
        const auto* te = dynamic_cast<const Error*>(&e);
        failed.error_code = te ? te->code() : ExitCode::kInternal;
        outcomes[i] = std::move(failed);
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(trials.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return outcomes;
}

nlohmann::ordered_json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"beta1", c.beta1},           {"beta2", c.beta2},
          {"epsilon", c.epsilon},             {"batch_size", c.batch_size}, {"max_epochs", c.max_epochs},
          {"patience", c.patience},           {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  try {
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("beta1")) c.beta1 = j.at("beta1").get<double>();
    if (j.contains("beta2")) c.beta2 = j.at("beta2").get<double>();
    if (j.contains("epsilon")) c.epsilon = j.at("epsilon").get<double>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
    if (j.contains("max_epochs")) c.max_epochs = j.at("max_epochs").get<int>();
    if (j.contains("patience")) c.patience = j.at("patience").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::ordered_json to_json(const FocalLossConfig& c) {
  return {{"gamma", c.gamma}, {"alpha_risky", c.alpha_risky}};
}

FocalLossConfig loss_config_from_json(const nlohmann::json& j, FocalLossConfig c) {
  try {
    if (j.contains("gamma")) c.gamma = j.at("gamma").get<double>();
    if (j.contains("alpha_risky")) c.alpha_risky = j.at("alpha_risky").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("loss config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::ordered_json to_json(const AugmentParams& p) {
  return {{"noise_sigma", p.noise_sigma},
          {"increase_factor", p.increase_factor},
          {"decrease_factor", p.decrease_factor},
          {"rotation_degrees", p.rotation_degrees},
          {"seed", p.seed}};
}

AugmentParams augment_params_from_json(const nlohmann::json& j, AugmentParams p) {
  try {
    if (j.contains("noise_sigma")) p.noise_sigma = j.at("noise_sigma").get<double>();
    if (j.contains("increase_factor")) p.increase_factor = j.at("increase_factor").get<double>();
    if (j.contains("decrease_factor")) p.decrease_factor = j.at("decrease_factor").get<double>();
    if (j.contains("rotation_degrees")) p.rotation_degrees = j.at("rotation_degrees").get<double>();
    if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("augment config: ") + e.what());
  }
  p.validate();
  return p;
}

nlohmann::ordered_json to_json(const TrialOutcome& t, bool include_scores) {
  nlohmann::ordered_json j;
  j["run_id"] = t.run_id;
  j["fold"] = t.fold;
  if (t.error) {
    j["error"] = *t.error;
    return j;
  }
  j["training_size"] = t.training_size;
  j["validation_size"] = t.validation_size;
  j["synthesized"] = t.synthesized;
  j["best_epoch"] = t.best_epoch;
  j["epochs_run"] = t.epochs_run;
  if (t.report) {
    j["threshold"] = t.report->threshold;
    j["counts"] = to_json(t.report->counts);
    j["metrics"] = to_json(t.report->metrics);
  }
  auto log = nlohmann::ordered_json::array();
  for (const auto& e : t.log)
    log.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_macro_f1", e.val_macro_f1},
                   {"improved", e.improved}});
  j["epochs"] = std::move(log);
  if (include_scores) {
    auto s = nlohmann::ordered_json::array();
    for (const auto& v : t.validation_scores)
      s.push_back({{"risky_probability", v.risky_probability}, {"truth", to_string(v.truth)}});
    j["validation_scores"] = std::move(s);
  }
  return j;
}

template class Adam<float>;
template class Adam<double>;
template double accumulate_batch<float>(const ModelParameters<float>&, std::span<const Example* const>,
                                        const FocalLossConfig&, ModelParameters<float>&);
template double accumulate_batch<double>(const ModelParameters<double>&, std::span<const Example* const>,
                                         const FocalLossConfig&, ModelParameters<double>&);

}  // namespace tackle
