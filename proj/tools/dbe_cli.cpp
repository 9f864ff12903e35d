// dbe: distributional policy evaluation on finite MDPs.
//
// Subcommands: validate, check-existence, evaluate, values, policy-iter,
// mc, tails, affine-check. Exit codes are a stable contract:
//   0 ok, 1 invariant violation, 2 parse error, 3 no fixed point,
//   4 not converged, 5 undefined mean, 6 tail-index incompatibility.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dbe/dbe.hpp"

namespace {

using dbe::json;

constexpr int kExitOk = 0;
constexpr int kExitInvariant = 1;
constexpr int kExitParse = 2;
constexpr int kExitNoFixedPoint = 3;
constexpr int kExitNotConverged = 4;
constexpr int kExitUndefinedMean = 5;
constexpr int kExitTailIncompatible = 6;

struct RunConfig {
  std::string mdp_path;
  std::string policy_path;
  std::string view = "state";
  int grid_size = 1024;
  double tol = 1e-6;
  int max_iter = 1000;
  int samples = 100000;
  int horizon = 0;  // 0 = auto
  std::uint64_t seed = 0;
  bool has_seed = false;
  double alpha = 1.0;
  int reward_atoms = 64;
  int workers = 1;
  std::string output_path;
  std::string output_format = "json";
};

json config_json(const RunConfig& cfg) {
  json j{{"mdp", cfg.mdp_path},
         {"policy", cfg.policy_path},
         {"view", cfg.view},
         {"grid_size", cfg.grid_size},
         {"tol", cfg.tol},
         {"max_iter", cfg.max_iter},
         {"samples", cfg.samples},
         {"horizon", cfg.horizon},
         {"alpha", cfg.alpha},
         {"reward_atoms", cfg.reward_atoms},
         {"workers", cfg.workers},
         {"output", cfg.output_path},
         {"format", cfg.output_format}};
  if (cfg.has_seed) j["seed"] = cfg.seed;
  return j;
}

struct LoadedModel {
  dbe::MDPSpec mdp;
  dbe::PolicySpec policy;
  dbe::MarkovRewardSystem mrs;
};

LoadedModel load_model(const RunConfig& cfg) {
  LoadedModel m;
  m.mdp = dbe::load_mdp(cfg.mdp_path);
  m.policy = dbe::load_policy(cfg.policy_path);
  m.mrs = cfg.view == "state-action" ? dbe::from_state_action_view(m.mdp, m.policy)
                                     : dbe::from_state_view(m.mdp, m.policy);
  return m;
}

void emit(const RunConfig& cfg, const json& report) {
  const std::string text = report.dump(2) + "\n";
  if (cfg.output_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.output_path);
  if (!out) throw std::runtime_error("cannot write " + cfg.output_path);
  out << text;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int default_horizon_or(const dbe::MarkovRewardSystem& mrs, int requested) {
  return requested > 0 ? requested : dbe::default_horizon(mrs);
}

json violations_json(const std::vector<dbe::Violation>& vs) {
  json arr = json::array();
  for (const dbe::Violation& v : vs) arr.push_back({{"code", v.code}, {"detail", v.detail}});
  return arr;
}

// --- commands --------------------------------------------------------------

int cmd_validate(const RunConfig& cfg) {
  const dbe::MDPSpec mdp = dbe::load_mdp(cfg.mdp_path);
  const dbe::PolicySpec policy = dbe::load_policy(cfg.policy_path);
  std::vector<dbe::Violation> violations = dbe::validate(mdp, policy);
  if (violations.empty()) {
    for (const auto view : {&dbe::from_state_view, &dbe::from_state_action_view}) {
      const auto more = dbe::validate(view(mdp, policy));
      violations.insert(violations.end(), more.begin(), more.end());
    }
  }
  json report{{"command", "validate"},
              {"config", config_json(cfg)},
              {"ok", violations.empty()},
              {"violations", violations_json(violations)}};
  emit(cfg, report);
  return violations.empty() ? kExitOk : kExitInvariant;
}

int cmd_check_existence(const RunConfig& cfg) {
  const LoadedModel m = load_model(cfg);
  const dbe::ChainClassification chain = dbe::classify(m.mrs.p);
  const dbe::ExistenceReport rep = dbe::existence_check(m.mrs);
  json states = json::array();
  bool inessential_heavy = false;
  for (int i = 0; i < m.mrs.d(); ++i) {
    states.push_back({{"state", m.mrs.labels[i]},
                      {"essential", static_cast<bool>(chain.essential[i])},
                      {"log_moment_finite", static_cast<bool>(rep.per_state_log_moment[i])}});
    inessential_heavy |= !chain.essential[i] && !rep.per_state_log_moment[i];
  }
  json offending = json::array();
  for (int i : rep.offending_states) offending.push_back(m.mrs.labels[i]);
  json report{{"command", "check-existence"},
              {"config", config_json(cfg)},
              {"exists", rep.exists},
              {"offending_states", offending},
              {"states", states}};
  if (rep.exists && inessential_heavy)
    report["warning"] =
        "infinite log-moment reward on an inessential state; exempt from the existence "
        "criterion but excursions through it are heavy";
  emit(cfg, report);
  return rep.exists ? kExitOk : kExitNoFixedPoint;
}

int cmd_evaluate(const RunConfig& cfg) {
  const LoadedModel m = load_model(cfg);
  const dbe::Grid grid = dbe::suggest_grid(
      m.mrs, cfg.grid_size,
      cfg.has_seed ? std::optional<std::uint64_t>(cfg.seed) : std::nullopt);
  dbe::SolveOptions opts;
  opts.tol = cfg.tol;
  opts.max_iter = cfg.max_iter;
  opts.reward_atom_count = cfg.reward_atoms;
  opts.workers = cfg.workers;
  const auto [eta, rep] = dbe::solve_fixed_point(m.mrs, grid, opts);
  const std::vector<double> residuals = dbe::cdf_residual(m.mrs, eta, cfg.reward_atoms);

  json per_state = json::array();
  for (int i = 0; i < m.mrs.d(); ++i) {
    per_state.push_back({{"state", m.mrs.labels[i]},
                         {"mean", dbe::mean(eta[i])},
                         {"residual", residuals[i]}});
  }
  json report{{"command", "evaluate"},
              {"config", config_json(cfg)},
              {"grid", {{"x_min", grid.x_min}, {"x_max", grid.x_max}, {"n", grid.n}}},
              {"converged", rep.converged},
              {"iterations", rep.iterations},
              {"gap_history", rep.gap_history},
              {"clamped_mass", rep.clamped_mass},
              {"final_residual", rep.final_residual},
              {"states", per_state}};

  if (!cfg.output_path.empty()) {
    write_file(cfg.output_path + ".report.json", report.dump(2) + "\n");
    for (int i = 0; i < m.mrs.d(); ++i) {
      std::ostringstream os;
      dbe::write_csv(os, eta[i]);
      write_file(cfg.output_path + ".state" + std::to_string(i) + ".csv", os.str());
    }
  } else {
    std::cout << report.dump(2) << "\n";
  }
  return rep.converged ? kExitOk : kExitNotConverged;
}

int cmd_values(const RunConfig& cfg) {
  const dbe::MDPSpec mdp = dbe::load_mdp(cfg.mdp_path);
  const dbe::PolicySpec policy = dbe::load_policy(cfg.policy_path);
  const dbe::ValueFunction v = dbe::solve_v(mdp, policy);
  const dbe::QFunction q = dbe::solve_q(mdp, policy);

  if (cfg.output_format == "csv") {
    std::ostringstream os;
    os << "state,action,v,q\n";
    os.precision(17);
    for (std::size_t s = 0; s < mdp.states.size(); ++s)
      for (std::size_t a = 0; a < mdp.actions.size(); ++a)
        os << mdp.states[s] << ',' << mdp.actions[a] << ',' << v.v[s] << ',' << q.q[s][a] << '\n';
    if (cfg.output_path.empty())
      std::cout << os.str();
    else
      write_file(cfg.output_path, os.str());
    return kExitOk;
  }

  json vt = json::object(), qt = json::object();
  for (std::size_t s = 0; s < mdp.states.size(); ++s) {
    vt[mdp.states[s]] = v.v[s];
    for (std::size_t a = 0; a < mdp.actions.size(); ++a)
      qt[mdp.states[s] + "|" + mdp.actions[a]] = q.q[s][a];
  }
  emit(cfg, json{{"command", "values"}, {"config", config_json(cfg)}, {"v", vt}, {"q", qt}});
  return kExitOk;
}

int cmd_policy_iter(const RunConfig& cfg) {
  const dbe::MDPSpec mdp = dbe::load_mdp(cfg.mdp_path);
  const dbe::PolicySpec init = dbe::load_policy(cfg.policy_path);
  const dbe::PolicyIterationResult res = dbe::policy_iteration(mdp, init);

  if (cfg.output_format == "csv") {
    std::ostringstream os;
    os << "state,action,v\n";
    os.precision(17);
    for (std::size_t s = 0; s < mdp.states.size(); ++s)
      os << mdp.states[s] << ',' << res.policy.probs.at(mdp.states[s]).begin()->first << ','
         << res.values.v[s] << '\n';
    if (cfg.output_path.empty())
      std::cout << os.str();
    else
      write_file(cfg.output_path, os.str());
    return kExitOk;
  }

  json rounds = json::array();
  for (const auto& trace : res.value_trace) rounds.push_back(trace);
  json values = json::object();
  for (std::size_t s = 0; s < mdp.states.size(); ++s) values[mdp.states[s]] = res.values.v[s];
  emit(cfg, json{{"command", "policy-iter"},
                 {"config", config_json(cfg)},
                 {"iterations", res.iterations},
                 {"policy", dbe::to_json(res.policy)},
                 {"values", values},
                 {"value_rounds", rounds}});
  return kExitOk;
}

json estimates_json(const dbe::MarkovRewardSystem& mrs, const dbe::EmpiricalReturnVector& vec) {
  json states = json::array();
  for (int i = 0; i < mrs.d(); ++i) {
    const auto& s = vec[i].samples;
    json entry{{"state", mrs.labels[i]},
               {"n", s.size()},
               {"mean", dbe::mean(vec[i])},
               {"min", s.front()},
               {"max", s.back()},
               {"q50", dbe::quantile(vec[i], 0.5)},
               {"q99", dbe::quantile(vec[i], 0.99)}};
    try {
      entry["hill_alpha"] = dbe::hill_estimator(s, dbe::default_hill_k(static_cast<int>(s.size())));
    } catch (const dbe::InsufficientTailSamplesError&) {
      entry["hill_alpha"] = nullptr;
    }
    std::vector<double> probes;
    for (double u : {0.99, 0.999, 0.9999}) probes.push_back(dbe::quantile(vec[i], u));
    json ratios = json::array();
    for (const dbe::TailProbe& p : dbe::tail_ratio(s, probes))
      ratios.push_back({{"x", p.x}, {"upper", p.upper}, {"lower", p.lower}});
    entry["tail_ratios"] = ratios;
    states.push_back(entry);
  }
  return states;
}

int cmd_mc(const RunConfig& cfg) {
  const LoadedModel m = load_model(cfg);
  const int horizon = default_horizon_or(m.mrs, cfg.horizon);
  const dbe::EmpiricalReturnVector vec =
      dbe::empirical_return_vector(m.mrs, horizon, cfg.samples, cfg.seed, cfg.workers);
  json report{{"command", "mc"},
              {"config", config_json(cfg)},
              {"horizon", horizon},
              {"states", estimates_json(m.mrs, vec)}};
  if (!cfg.output_path.empty()) {
    write_file(cfg.output_path + ".summary.json", report.dump(2) + "\n");
    for (int i = 0; i < m.mrs.d(); ++i) {
      std::ostringstream os;
      dbe::write_csv(os, vec[i]);
      write_file(cfg.output_path + ".state" + std::to_string(i) + ".csv", os.str());
    }
  } else {
    std::cout << report.dump(2) << "\n";
  }
  return kExitOk;
}

int cmd_tails(const RunConfig& cfg) {
  const LoadedModel m = load_model(cfg);
  const dbe::TailReport rep = dbe::predict_tails(m.mrs, cfg.alpha);
  const int horizon = cfg.horizon > 0 ? cfg.horizon : 60;
  const dbe::EmpiricalReturnVector vec =
      dbe::empirical_return_vector(m.mrs, horizon, cfg.samples, cfg.seed, cfg.workers);

  json states = json::array();
  for (int i = 0; i < m.mrs.d(); ++i) {
    const auto& s = vec[i].samples;
    json entry{{"state", m.mrs.labels[i]},
               {"predicted_right", rep.per_state[i].right_const},
               {"predicted_left", rep.per_state[i].left_const}};
    try {
      entry["hill_alpha"] = dbe::hill_estimator(s, dbe::default_hill_k(static_cast<int>(s.size())));
    } catch (const dbe::InsufficientTailSamplesError&) {
      entry["hill_alpha"] = nullptr;
    }
    json ratios = json::array();
    for (double u : {0.99, 0.999, 0.9999}) {
      const double x = dbe::quantile(vec[i], u);
      if (!(x > 0.0)) continue;
      const auto probes = dbe::tail_ratio(s, std::vector<double>{x});
      const double xa = std::pow(x, cfg.alpha);
      ratios.push_back({{"quantile", u},
                        {"x", x},
                        {"empirical_right", xa * probes[0].upper},
                        {"empirical_left", xa * probes[0].lower}});
    }
    entry["scaled_tail_ratios"] = ratios;
    states.push_back(entry);
  }

  json weights = json::array();
  for (const auto& row : rep.weights.w) weights.push_back(row);
  emit(cfg, json{{"command", "tails"},
                 {"config", config_json(cfg)},
                 {"alpha", rep.alpha},
                 {"horizon", horizon},
                 {"weights", weights},
                 {"states", states}});
  return kExitOk;
}

int cmd_affine_check(const RunConfig& cfg) {
  const LoadedModel m = load_model(cfg);
  const int horizon = default_horizon_or(m.mrs, cfg.horizon);
  const std::vector<double> ks = dbe::marginal_check(m.mrs, dbe::Coupling::independence,
                                                     cfg.samples, horizon, cfg.seed, cfg.workers);

  // Row-structure invariant of the matrix product for n <= 50.
  bool row_structure_ok = true;
  {
    dbe::RngStream rng(cfg.seed, {dbe::stream_domain::affine, 0xabcdef});
    std::vector<int> column(m.mrs.d());
    for (int i = 0; i < m.mrs.d(); ++i) column[i] = i;
    for (int n = 1; n <= 50; ++n) {
      const dbe::AffinePairSample pair = dbe::sample_pair(m.mrs, dbe::Coupling::independence, rng);
      for (int& c : column) c = pair.next[c];
      for (int c : column) row_structure_ok &= c >= 0 && c < m.mrs.d();
    }
  }

  const int lyapunov_steps = 10000;
  dbe::RngStream lyap_rng(cfg.seed, {dbe::stream_domain::affine, 0x4c59});
  const double lyap =
      dbe::lyapunov_estimate(m.mrs, dbe::Coupling::independence, lyapunov_steps, lyap_rng);

  json per_state = json::array();
  for (int i = 0; i < m.mrs.d(); ++i)
    per_state.push_back({{"state", m.mrs.labels[i]}, {"marginal_ks", ks[i]}});
  emit(cfg, json{{"command", "affine-check"},
                 {"config", config_json(cfg)},
                 {"horizon", horizon},
                 {"states", per_state},
                 {"row_structure_ok", row_structure_ok},
                 {"lyapunov",
                  {{"estimate", lyap},
                   {"log_gamma", std::log(m.mrs.gamma)},
                   {"steps", lyapunov_steps}}}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributional policy evaluation on finite MDPs"};
  app.require_subcommand(1);

  RunConfig cfg;
  int (*run)(const RunConfig&) = nullptr;

  const auto add_model_options = [&cfg](CLI::App* cmd) {
    cmd->add_option("--mdp", cfg.mdp_path, "MDP JSON file")->required();
    cmd->add_option("--policy", cfg.policy_path, "policy JSON file")->required();
    cmd->add_option("--view", cfg.view, "reduction view")
        ->check(CLI::IsMember({"state", "state-action"}));
    cmd->add_option("--output", cfg.output_path, "output file (or prefix for CSV dumps)");
    cmd->add_option("--format", cfg.output_format, "report format")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--workers", cfg.workers, "worker threads")->check(CLI::PositiveNumber);
  };
  const auto add_seed = [&cfg](CLI::App* cmd, bool required) {
    CLI::Option* opt = cmd->add_option("--seed", cfg.seed, "master RNG seed");
    if (required) opt->required();
    opt->each([&cfg](const std::string&) { cfg.has_seed = true; });
  };

  CLI::App* validate = app.add_subcommand("validate", "check MDP/policy invariants");
  add_model_options(validate);
  validate->callback([&] { run = &cmd_validate; });

  CLI::App* existence = app.add_subcommand("check-existence", "fixed-point existence verdict");
  add_model_options(existence);
  existence->callback([&] { run = &cmd_check_existence; });

  CLI::App* evaluate = app.add_subcommand("evaluate", "solve the distributional fixed point");
  add_model_options(evaluate);
  evaluate->add_option("--grid-size", cfg.grid_size, "grid points")->check(CLI::Range(2, 1 << 22));
  evaluate->add_option("--tol", cfg.tol, "stopping tolerance")->check(CLI::PositiveNumber);
  evaluate->add_option("--max-iter", cfg.max_iter, "iteration budget")->check(CLI::PositiveNumber);
  evaluate->add_option("--reward-atoms", cfg.reward_atoms, "reward discretization order")
      ->check(CLI::PositiveNumber);
  add_seed(evaluate, false);  // needed only when the grid range requires sampling
  evaluate->callback([&] { run = &cmd_evaluate; });

  CLI::App* values = app.add_subcommand("values", "ordinary state and state-action values");
  add_model_options(values);
  values->callback([&] { run = &cmd_values; });

  CLI::App* policy_iter = app.add_subcommand("policy-iter", "policy iteration to optimality");
  add_model_options(policy_iter);
  policy_iter->callback([&] { run = &cmd_policy_iter; });

  CLI::App* mc = app.add_subcommand("mc", "Monte Carlo return distributions");
  add_model_options(mc);
  mc->add_option("--samples", cfg.samples, "samples per state")->check(CLI::PositiveNumber);
  mc->add_option("--horizon", cfg.horizon, "truncation horizon (0 = auto)");
  add_seed(mc, true);
  mc->callback([&] { run = &cmd_mc; });

  CLI::App* tails = app.add_subcommand("tails", "closed-form tail constants vs Monte Carlo");
  add_model_options(tails);
  tails->add_option("--alpha", cfg.alpha, "tail index")->required()->check(CLI::PositiveNumber);
  tails->add_option("--samples", cfg.samples, "samples per state")->check(CLI::PositiveNumber);
  tails->add_option("--horizon", cfg.horizon, "truncation horizon (0 = heavy-tail default 60)");
  add_seed(tails, true);
  tails->callback([&] { run = &cmd_tails; });

  CLI::App* affine = app.add_subcommand("affine-check", "affine-equation marginal equivalence");
  add_model_options(affine);
  affine->add_option("--samples", cfg.samples, "series draws")->check(CLI::PositiveNumber);
  affine->add_option("--horizon", cfg.horizon, "series truncation (0 = auto)");
  add_seed(affine, true);
  affine->callback([&] { run = &cmd_affine_check; });

  CLI11_PARSE(app, argc, argv);

  try {
    return run(cfg);
  } catch (const dbe::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const dbe::NoFixedPointError& e) {
    std::cerr << "no fixed point: " << e.what() << "\n";
    return kExitNoFixedPoint;
  } catch (const dbe::UndefinedMeanError& e) {
    std::cerr << "undefined mean: " << e.what()
              << " (the distributional fixed point may still exist; see check-existence)\n";
    return kExitUndefinedMean;
  } catch (const dbe::IncompatibleTailIndexError& e) {
    std::cerr << "tail-index incompatibility: " << e.what() << "\n";
    return kExitTailIncompatible;
  } catch (const dbe::NoHeavyStateError& e) {
    std::cerr << "tail-index incompatibility: " << e.what() << "\n";
    return kExitTailIncompatible;
  } catch (const dbe::PolicyIncompleteError& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvariant;
  }
}
