#include "experiments/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "agent/controllers.hpp"
#include "common/error.hpp"
#include "experiments/artifacts.hpp"
#include "koopman/serialize.hpp"

namespace kcbf::experiments {
namespace {

std::mt19937_64 Stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t extra = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(extra),
                    static_cast<std::uint32_t>(extra >> 32)};
  return std::mt19937_64(seq);
}

Vec UniformAction(const Box& box, std::mt19937_64& rng) {
  Vec u(box.dim());
  for (Eigen::Index i = 0; i < box.dim(); ++i) {
    u(i) = std::uniform_real_distribution<double>(box.lower(i), box.upper(i))(rng);
  }
  return u;
}

void RestartEpisode(envs::Env& env, std::mt19937_64& rng) {
  env.Reset(rng);
  std::uniform_int_distribution<long> start(0, env.spec().horizon - 1);
  env.ResetTo(env.state(), start(rng));
}

}  // namespace

std::uint64_t EvalSeed(std::uint64_t seed, long step) {
  return Stream(seed, 5, static_cast<std::uint64_t>(step))();
}

std::vector<koopman::Transition> CollectTransitions(envs::Env& env, int count,
                                                    std::uint64_t seed) {
  KCBF_REQUIRE(count >= 1, ErrorCode::kInvalidArgument, "transition count must be positive");
  std::mt19937_64 rng(seed);
  std::vector<koopman::Transition> data;
  data.reserve(static_cast<size_t>(count));
  RestartEpisode(env, rng);
  while (static_cast<int>(data.size()) < count) {
    koopman::Transition t;
    t.y = env.ModelingState();
    t.u = UniformAction(env.spec().action_box, rng);
    const envs::StepOutcome out = env.Step(t.u);
    t.y_plus = env.ModelingState();
    data.push_back(std::move(t));
    if (out.done() || out.cost > 0) RestartEpisode(env, rng);
  }
  return data;
}

DataSplit SplitCalibration(const std::vector<koopman::Transition>& data,
                           int calibration_size, std::uint64_t seed) {
  KCBF_REQUIRE(calibration_size >= 1 && static_cast<size_t>(calibration_size) < data.size(),
               ErrorCode::kInvalidArgument, "calibration split leaves no fit data");
  std::vector<size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  DataSplit s;
  s.calibration_indices.assign(perm.begin(), perm.begin() + calibration_size);
  s.fit_indices.assign(perm.begin() + calibration_size, perm.end());
  std::sort(s.calibration_indices.begin(), s.calibration_indices.end());
  std::sort(s.fit_indices.begin(), s.fit_indices.end());
  std::vector<size_t> both;
  std::set_intersection(s.fit_indices.begin(), s.fit_indices.end(),
                        s.calibration_indices.begin(), s.calibration_indices.end(),
                        std::back_inserter(both));
  KCBF_REQUIRE(both.empty(), ErrorCode::kInternal,
               "transition " + (both.empty() ? std::string() : std::to_string(both[0])) +
                   " is in both the fit and calibration sets");
  for (size_t i : s.fit_indices) s.fit.push_back(data[i]);
  for (size_t i : s.calibration_indices) s.calibration.push_back(data[i]);
  return s;
}

int RateCoordinate(const std::string& env_name, int coordinate) {
  if (env_name.rfind("cartpole", 0) == 0 && (coordinate == 0 || coordinate == 1)) {
    return coordinate + 2;
  }
  if (env_name.rfind("quadrotor", 0) == 0 && coordinate >= 0 && coordinate <= 2) {
    return coordinate + 3;
  }
  return -1;
}

std::vector<barrier::LiftedBarrier> BuildBarriers(const envs::Env& env,
                                                  const RunConfig& config, int lifted_dim) {
  const auto& constraints = env.spec().constraints;
  KCBF_REQUIRE(config.eta.size() == 1 || config.eta.size() == constraints.size(),
               ErrorCode::kInvalidArgument, "need one eta per barrier or a single eta");
  const int state_dim = env.model_state_dim();
  std::vector<barrier::LiftedBarrier> out;
  for (size_t j = 0; j < constraints.size(); ++j) {
    const auto& con = constraints[j];
    const double eta = config.EtaFor(j);
    const int pos = env.ModelIndex(con.coordinate);
    const int rate = RateCoordinate(env.spec().name, con.coordinate);
    if (config.barrier_kind == "composite" && rate >= 0) {
      auto b = barrier::CompositeBarrier(pos, env.ModelIndex(rate), con.bound,
                                         config.composite_alpha, config.composite_beta,
                                         state_dim, lifted_dim, eta, con.label + "_composite");
      if (con.direction == barrier::BoundDirection::kUpper) {
        // α(bound − p) − β ṗ
        b.c = -b.c;
        b.d = -b.d;
      }
      out.push_back(std::move(b));
    } else {
      out.push_back(barrier::BoundBarrier(pos, con.bound, con.direction, state_dim, lifted_dim,
                                          eta, con.label));
    }
  }
  return out;
}

SafetyModel BuildSafetyModel(const RunConfig& config) {
  config.Validate();
  auto env = envs::MakeEnv(config.env);
  const auto data = CollectTransitions(*env, config.num_transitions, config.data_seed);
  const DataSplit split =
      SplitCalibration(data, config.EffectiveCalibrationSize(), config.data_seed + 1);

  koopman::Dictionary dict(env->model_state_dim());
  if (config.dictionary_size > 0) {
    std::vector<Vec> ys;
    ys.reserve(split.fit.size());
    for (const auto& t : split.fit) ys.push_back(t.y);
    dict = koopman::FitCenters(ys, config.dictionary_size, config.data_seed + 2);
  }
  SafetyModel s;
  s.model = koopman::FitModel(dict, split.fit, config.ridge_lambda, config.fit_horizon);
  s.num_fit = static_cast<int>(split.fit.size());
  s.barriers = BuildBarriers(*env, config, s.model.lifted_dim());
  s.calibration = barrier::CalibrateRho(s.model, s.barriers, split.calibration,
                                        config.quantile_level, config.quantile_mode);
  s.calibration.ApplyTo(s.barriers);
  return s;
}

filter::FilterOptions MakeFilterOptions(const RunConfig& config) {
  filter::FilterOptions o;
  o.slack_weight = config.slack_weight;
  o.mode = config.slack_mode;
  return o;
}

std::unique_ptr<agent::ActionFilter> MakeActionFilter(const RunConfig& config,
                                                      const SafetyModel& safety,
                                                      const Box& box) {
  if (!config.use_filter) return std::make_unique<agent::IdentityFilter>(box);
  return std::make_unique<agent::KcbfFilter>(safety.model, safety.barriers, box,
                                             MakeFilterOptions(config));
}

namespace {

EpisodeLog RunEpisodeImpl(envs::Env& env, const koopman::KoopmanModel& model,
                          const agent::ActionFilter& filter, const Policy& policy,
                          std::mt19937_64& rng, filter::FilterTraceWriter* trace,
                          std::vector<koopman::Transition>* transitions) {
  env.Reset(rng);
  EpisodeLog log;
  log.initial_h = env.ConstraintValues(env.state());
  while (true) {
    const long step = env.step_count();
    const Vec y = env.ModelingState();
    const Vec u_nom = policy(env.Observation(), env.state(), step);
    const auto rows = filter.Rows(model.Lift(y));
    const filter::FilterResult res = filter.Apply(rows, u_nom);
    const envs::StepOutcome out = env.Step(res.u_safe);
    StepLog s;
    s.step = step;
    s.reward = out.reward;
    s.h = out.h;
    s.xi = res.xi;
    s.intervention_norm = res.intervention_norm;
    s.intervened = res.intervened;
    s.violated = out.cost > 0;
    s.regimes = filter::ClassifyRegime(rows, filter.box());
    log.steps.push_back(std::move(s));
    if (trace) trace->Write(step, res);
    if (transitions) transitions->push_back({y, res.u_safe, env.ModelingState()});
    if (out.done()) {
      log.terminal = out.terminal;
      break;
    }
  }
  return log;
}

}  // namespace

EpisodeLog RunEpisode(envs::Env& env, const koopman::KoopmanModel& model,
                      const agent::ActionFilter& filter, const Policy& policy,
                      std::mt19937_64& rng, filter::FilterTraceWriter* trace) {
  return RunEpisodeImpl(env, model, filter, policy, rng, trace, nullptr);
}

std::vector<EpisodeDiagnostics> Evaluate(envs::Env& env, const koopman::KoopmanModel& model,
                                         const agent::ActionFilter& filter,
                                         const Policy& policy, int episodes,
                                         std::uint64_t seed, filter::FilterTraceWriter* trace,
                                         std::vector<koopman::Transition>* transitions) {
  std::mt19937_64 rng(seed);
  std::vector<EpisodeDiagnostics> out;
  for (int e = 0; e < episodes; ++e) {
    out.push_back(ComputeDiagnostics(RunEpisodeImpl(env, model, filter, policy, rng,
                                                    e == 0 ? trace : nullptr, transitions)));
  }
  return out;
}

SeedResult RunSeed(const RunConfig& config, const SafetyModel& safety, std::uint64_t seed,
                   std::ostream* trace_out) {
  auto env = envs::MakeEnv(config.env);
  auto eval_env = envs::MakeEnv(config.env);
  const Box& box = env->spec().action_box;
  const auto filter = MakeActionFilter(config, safety, box);

  SeedResult result;
  result.seed = seed;

  std::unique_ptr<agent::NominalController> fixed;
  if (config.nominal == "lqr") fixed = agent::MakeLqr(*eval_env);
  if (config.nominal == "pd") fixed = agent::MakePd(*eval_env);
  if (!fixed) {
    result.agent = std::make_unique<agent::Sac>(env->observation_dim(), box, config.agent,
                                                Stream(seed, 2)());
  }
  Policy eval_policy = [&](const Vec& obs, const Vec& x, long step) -> Vec {
    if (fixed) return fixed->Act(x, step);
    return result.agent->Act(obs, true);
  };

  auto evaluate = [&](long step, const char* phase, int episodes,
                      filter::FilterTraceWriter* trace,
                      std::vector<koopman::Transition>* transitions) {
    const auto diags = Evaluate(*eval_env, safety.model, *filter, eval_policy, episodes,
                                EvalSeed(seed, step), trace,
                                transitions);
    MetricsRow row;
    row.seed = seed;
    row.step = step;
    row.phase = phase;
    row.eval = Summarize(diags);
    result.metrics.push_back(row);
    return row.eval;
  };

  if (!fixed && config.budget > 0) {
    agent::ReplayBuffer buffer(config.agent.buffer_capacity);
    std::mt19937_64 env_rng = Stream(seed, 1), sample_rng = Stream(seed, 3),
                    explore_rng = Stream(seed, 4);
    env->Reset(env_rng);
    EpisodeLog episode;
    episode.initial_h = env->ConstraintValues(env->state());
    for (long t = 0; t < config.budget; ++t) {
      agent::ReplayRecord rec;
      rec.obs = env->Observation();
      rec.z = safety.model.Lift(env->ModelingState());
      rec.u_nom = t < config.random_steps ? UniformAction(box, explore_rng)
                                          : result.agent->Act(rec.obs, false);
      const auto rows = filter->Rows(rec.z);
      const filter::FilterResult res = filter->Apply(rows, rec.u_nom);
      rec.u_safe = res.u_safe;
      const long step = env->step_count();
      const envs::StepOutcome out = env->Step(rec.u_safe);
      rec.reward = out.reward;
      rec.next_obs = env->Observation();
      rec.next_z = safety.model.Lift(env->ModelingState());
      rec.terminal = out.terminal;
      buffer.Insert(std::move(rec), out.applied_action);

      StepLog s;
      s.step = step;
      s.reward = out.reward;
      s.h = out.h;
      s.xi = res.xi;
      s.intervened = res.intervened;
      s.intervention_norm = res.intervention_norm;
      s.violated = out.cost > 0;
      episode.steps.push_back(std::move(s));

      if (t + 1 >= config.update_after &&
          buffer.size() >= static_cast<size_t>(config.agent.batch_size)) {
        for (int k = 0; k < config.updates_per_step; ++k) {
          result.agent->Update(
              buffer.Sample(static_cast<size_t>(config.agent.batch_size), sample_rng), *filter);
        }
      }
      if (out.done()) {
        episode.terminal = out.terminal;
        TrainEpisodeRow row;
        row.seed = seed;
        row.episode = static_cast<long>(result.train_episodes.size());
        row.end_step = t + 1;
        row.diag = ComputeDiagnostics(episode);
        result.train_episodes.push_back(row);
        env->Reset(env_rng);
        episode = EpisodeLog{};
        episode.initial_h = env->ConstraintValues(env->state());
      }
      if ((t + 1) % config.eval_every == 0 && t + 1 < config.budget) {
        evaluate(t + 1, "train", config.eval_episodes, nullptr, nullptr);
      }
    }
    result.updates = result.agent->updates();
  }

  std::unique_ptr<filter::FilterTraceWriter> writer;
  if (trace_out) {
    std::vector<std::string> labels;
    if (config.use_filter) {
      for (const auto& b : safety.barriers) labels.push_back(b.label);
    }
    *trace_out << "# kcbf-trace v" << kCsvVersion << " config_hash=" << config.Hash() << '\n';
    writer = std::make_unique<filter::FilterTraceWriter>(*trace_out, labels);
  }
  std::vector<koopman::Transition> deployed;
  result.final_eval = evaluate(config.budget, "final", config.final_eval_episodes,
                               writer.get(), &deployed);
  barrier::CalibrationReport monitor = safety.calibration;
  for (size_t j = 0; j < safety.barriers.size(); ++j) {
    monitor.barriers[j].monitor = barrier::CoverageMonitor(safety.barriers[j].rho);
    for (const auto& t : deployed) monitor.MonitorCoverage(j, safety.model, safety.barriers[j], t);
    result.coverage_exceedance.push_back(monitor.barriers[j].monitor.exceedance_rate());
  }
  return result;
}

namespace {

void RunPipelineInto(const RunConfig& config, RunResult& run) {
  namespace fs = std::filesystem;
  WriteJsonFile((fs::path(run.directory) / "config.json").string(), config.ToJson());

  run.safety = BuildSafetyModel(config);
  koopman::SaveModel(run.safety.model, (fs::path(run.directory) / "model.json").string());
  WriteJsonFile((fs::path(run.directory) / "calibration.json").string(),
                barrier::CalibrationToJson(run.safety.calibration));
  if (config.budget == 0) return;

  std::vector<MetricsRow> all_rows;
  for (size_t i = 0; i < config.seeds.size(); ++i) {
    const std::uint64_t seed = config.seeds[i];
    const fs::path seed_dir = fs::path(run.directory) / ("seed-" + std::to_string(seed));
    fs::create_directories(seed_dir);
    std::ofstream trace;
    if (config.write_trace && i == 0) {
      trace.open(fs::path(run.directory) / "trace.csv");
      KCBF_REQUIRE(trace.good(), ErrorCode::kIo, "cannot write trace.csv");
    }
    SeedResult r = RunSeed(config, run.safety, seed, trace.is_open() ? &trace : nullptr);
    WriteEpisodesCsv((seed_dir / "episodes.csv").string(), config.Hash(), r.train_episodes);
    if (r.agent) {
      Json ckpt = r.agent->ToJson();
      ckpt["config_hash"] = config.Hash();
      WriteJsonFile((seed_dir / "checkpoint.json").string(), ckpt);
    }
    all_rows.insert(all_rows.end(), r.metrics.begin(), r.metrics.end());
    run.seeds.push_back(std::move(r));
  }
  WriteMetricsCsv((fs::path(run.directory) / "metrics.csv").string(), config.Hash(), all_rows);
  run.summary = MakeSummary(config, run.safety, run.seeds);
  WriteJsonFile((fs::path(run.directory) / "summary.json").string(), run.summary);
}

}  // namespace

RunResult RunPipeline(const RunConfig& config, const std::string& out_root) {
  namespace fs = std::filesystem;
  config.Validate();
  RunResult run;
  run.run_id = config.RunId();
  run.directory = (fs::path(out_root) / run.run_id).string();
  fs::create_directories(run.directory);
  fs::remove(fs::path(run.directory) / "failure.json");
  try {
    RunPipelineInto(config, run);
  } catch (const Error& e) {
    WriteJsonFile((fs::path(run.directory) / "failure.json").string(),
                  {{"code", ToString(e.code())}, {"message", e.what()}});
    throw;
  }
  return run;
}

}  // namespace kcbf::experiments
