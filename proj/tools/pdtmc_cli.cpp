// Command-line front end: validate, symbolic, check, sweep, monitor, simulate.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pdtmc/engine/numeric.hpp"
#include "pdtmc/engine/sweep.hpp"
#include "pdtmc/engine/symbolic.hpp"
#include "pdtmc/lang/model_parser.hpp"
#include "pdtmc/lang/property.hpp"
#include "pdtmc/learner/belief.hpp"
#include "pdtmc/monitor/monitor.hpp"
#include "pdtmc/sim/simulator.hpp"

using namespace pdtmc;
using nlohmann::json;

namespace {

constexpr int kUsage = 2;
constexpr int kViolation = 3;
constexpr int kNumeric = 4;

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string read_file(const std::string& path) {
  if (path == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// `--out -` means stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw UsageError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::pair<std::string, std::string> split_once(const std::string& text, char sep, const char* flag) {
  const auto pos = text.find(sep);
  if (pos == std::string::npos || pos == 0)
    throw UsageError(std::string(flag) + " expects NAME" + sep + "VALUE, got '" + text + "'");
  return {text.substr(0, pos), text.substr(pos + 1)};
}

BigRational rational_arg(const std::string& text, const std::string& what) {
  auto v = parse_rational(text);
  if (!v) throw UsageError("'" + text + "' is not a number (" + what + ")");
  return *v;
}

double double_arg(const std::string& text, const std::string& what) { return to_double(rational_arg(text, what)); }

/// Flags shared by the model-reading commands.
struct ModelArgs {
  std::string model;
  std::vector<std::string> consts;
  std::vector<std::string> params;

  void add(CLI::App* cmd, bool with_params) {
    cmd->add_option("model", model, "Model file (.pm)")->required();
    cmd->add_option("--const", consts, "Fix a constant: NAME=VALUE (repeatable, or comma separated)")
        ->delimiter(',');
    if (with_params)
      cmd->add_option("--param", params, "Free parameter with range: NAME=LO:HI (repeatable, or comma separated)")
          ->delimiter(',');
  }
};

struct LoadedModel {
  std::string text;
  GuardedModel model;
  Pdtmc chain;
  std::vector<std::string> param_order;  // names in --param order
};

LoadedModel load(const ModelArgs& a) {
  LoadedModel out;
  out.text = read_file(a.model);
  out.model = lang::parse_model(out.text);
  for (const auto& d : out.model.lint()) std::cerr << a.model << ": warning: " << d.message << "\n";
  Bindings bindings;
  for (const auto& c : a.consts) {
    auto [name, value] = split_once(c, '=', "--const");
    bindings[name] = rational_arg(value, name);
  }
  if (!a.params.empty()) {
    std::set<std::string> free;
    for (const auto& spec : a.params) {
      auto [name, range] = split_once(spec, '=', "--param");
      auto [lo, hi] = split_once(range, ':', "--param");
      const ConstantDecl* c = out.model.find_constant(name);
      if (!c || c->value || c->type != ConstType::Double)
        throw UsageError("--param " + name + ": not an open double constant of the model");
      if (bindings.count(name)) throw UsageError("'" + name + "' given both as --param and --const");
      ParamBounds b{rational_arg(lo, name), rational_arg(hi, name)};
      if (b.low > b.high) throw UsageError("--param " + name + ": empty range");
      out.model.parameter_bounds[name] = b;
      free.insert(name);
      out.param_order.push_back(name);
    }
    // As in the reference tool: with explicit parameters, every other open
    // constant must be fixed.
    for (const auto& c : out.model.constants)
      if (!c.value && !bindings.count(c.name) && !free.count(c.name))
        throw UsageError("constant '" + c.name + "' is neither fixed (--const) nor a parameter (--param)");
  }
  for (const auto& c : out.model.constants)
    if (!c.value && c.type != ConstType::Double && !bindings.count(c.name))
      throw UsageError("constant '" + c.name + "' must be fixed with --const");
  out.chain = unfold(out.model, bindings);
  return out;
}

json bindings_json(const Bindings& b) {
  json j = json::object();
  for (const auto& [k, v] : b) j[k] = to_string(v);
  return j;
}

json envelope(const lang::PropertyLine& line, const SymbolicResult& r) {
  std::vector<std::string> free;
  for (auto id : r.free_params) free.push_back(r.params.name(id));
  return {{"query", to_string(*r.query)},
          {"source", line.text},
          {"expression", r.expression()},
          {"numerator", format_polynomial(r.expr.numerator(), r.params)},
          {"denominator", format_polynomial(r.expr.denominator(), r.params)},
          {"freeParams", free},
          {"fixed", bindings_json(r.fixed)},
          {"stats", {{"statesEliminated", r.stats.states_eliminated}, {"maxTerms", r.stats.max_terms}}}};
}

ParamValuation valuation_from(const Pdtmc& p, const std::map<std::string, double>& values, const char* flag) {
  ParamValuation v;
  for (const auto& name : p.params.names()) {
    auto it = values.find(name);
    if (it == values.end()) throw UsageError("parameter '" + name + "' needs a value (" + flag + ")");
    v[*p.params.find(name)] = rational_from_double(it->second);
  }
  for (const auto& [name, value] : values)
    if (!p.params.find(name)) throw UsageError("'" + name + "' is not a free parameter of the model");
  return v;
}

std::map<std::string, double> named_values(const std::vector<std::string>& items, const char* flag) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    auto [name, value] = split_once(item, '=', flag);
    out[name] = double_arg(value, name);
  }
  return out;
}

DecisionPolicy policy_from(const std::string& name) {
  if (name == "default") return {};
  if (name == "escalation-only") return DecisionPolicy::escalation_only();
  throw UsageError("unknown policy '" + name + "' (default, escalation-only)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pdtmc: parametric Markov chain verification, runtime monitoring and simulation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  // validate
  ModelArgs va;
  std::string v_out = "-";
  auto* validate = app.add_subcommand("validate", "Parse and unfold a model; report diagnostics");
  va.add(validate, false);
  validate->add_option("--out", v_out, "Summary destination (- for stdout)");

  // symbolic
  ModelArgs sa;
  std::string s_props, s_out = "-", s_order = "min-fill";
  bool s_expr_only = false;
  std::size_t s_cap = EliminationOptions{}.term_cap;
  auto* symbolic = app.add_subcommand("symbolic", "Closed-form reachability expressions by state elimination");
  sa.add(symbolic, true);
  symbolic->add_option("properties", s_props, "Property file (.pctl)")->required();
  symbolic->add_option("--out", s_out, "Destination (- for stdout)");
  symbolic->add_flag("--expr-only", s_expr_only, "Write only the expression, one line per property");
  symbolic->add_option("--order", s_order, "Elimination order: min-fill, ascending, descending");
  symbolic->add_option("--term-cap", s_cap, "Abort when intermediate expressions exceed this many terms");

  // check
  ModelArgs ca;
  std::string c_props, c_out = "-", c_method = "linear";
  auto* check = app.add_subcommand("check", "Numeric model checking at a fully fixed valuation");
  ca.add(check, false);
  check->add_option("properties", c_props, "Property file (.pctl)")->required();
  check->add_option("--out", c_out, "Destination (- for stdout)");
  check->add_option("--method", c_method, "linear or iteration");

  // sweep
  ModelArgs wa;
  std::string w_out = "-", w_target, w_quantity = "reach", w_scalar;
  std::size_t w_resolution = 101;
  unsigned w_threads = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid evaluation over two parameters as CSV");
  wa.add(sweep_cmd, true);
  sweep_cmd->add_option("--target", w_target, "Target predicate, e.g. \"s=7\"");
  sweep_cmd->add_option("--quantity", w_quantity, "reach, proxyCost (C_S2, s=2) or proxyReward (R_S7, s=7)");
  sweep_cmd->add_option("--scalar", w_scalar, "Scalar constant name or number (overrides the quantity default)");
  sweep_cmd->add_option("--resolution", w_resolution, "Grid points per axis");
  sweep_cmd->add_option("--threads", w_threads, "Worker threads");
  sweep_cmd->add_option("--out", w_out, "Destination (- for stdout)");

  // monitor
  ModelArgs ma;
  std::string m_out = "-", m_events, m_policy = "default", m_cache_in, m_cache_out;
  std::vector<std::string> m_priors;
  double m_c0 = 10.0, m_alpha = 1.05, m_max_c2 = 3.0;
  std::optional<double> m_h4;
  std::optional<std::uint64_t> m_h5_steps;
  auto* monitor = app.add_subcommand("monitor", "Runtime monitor over an observation stream");
  ma.add(monitor, false);
  monitor->add_option("--prior", m_priors, "Prior for a free parameter: NAME=VALUE")->delimiter(',');
  monitor->add_option("--events", m_events, "JSON-lines events (- for stdin); omit for a one-shot evaluation");
  monitor->add_option("--c0", m_c0, "Prior strength");
  monitor->add_option("--alpha", m_alpha, "Ageing factor (>= 1)");
  monitor->add_option("--max-c2", m_max_c2, "H3 limit on C_S2 * P[F s=2]");
  monitor->add_option("--h4-lower", m_h4, "Enable an H4 lower bound on R_S7 * P[F s=7]");
  monitor->add_option("--h5-steps", m_h5_steps, "Step bound for H5 (default MAX_TIME_TRAJECTORY)");
  monitor->add_option("--policy", m_policy, "Decision policy: default or escalation-only");
  monitor->add_option("--cache", m_cache_in, "Load precomputed expressions from this file");
  monitor->add_option("--export-cache", m_cache_out, "Write the precomputed expressions to this file");
  monitor->add_option("--out", m_out, "Report stream destination (- for stdout)");

  // simulate
  ModelArgs ia;
  std::string i_out = "-", i_summary, i_policy = "default";
  std::vector<std::string> i_truth, i_priors, i_interventions;
  std::uint64_t i_episodes = 1000, i_seed = 1, i_max_steps = 10000;
  double i_decay = 0.5, i_c0 = 10.0, i_alpha = 1.05;
  bool i_closed = false;
  auto* simulate = app.add_subcommand("simulate", "Seeded simulation of dressing episodes");
  ia.add(simulate, false);
  simulate->add_option("--truth", i_truth, "Ground-truth value of a free parameter: NAME=VALUE")->delimiter(',');
  simulate->add_option("--episodes", i_episodes, "Number of episodes");
  simulate->add_option("--seed", i_seed, "Seed");
  simulate->add_option("--decay", i_decay, "Completion reward decay rate");
  simulate->add_option("--max-steps", i_max_steps, "Truncate episodes after this many steps");
  simulate->add_flag("--closed-loop", i_closed, "Learn, monitor and adapt between episodes");
  simulate->add_option("--prior", i_priors, "Closed loop: prior NAME=VALUE (default: ground truth)")->delimiter(',');
  simulate->add_option("--c0", i_c0, "Closed loop: prior strength");
  simulate->add_option("--alpha", i_alpha, "Closed loop: ageing factor");
  simulate->add_option("--policy", i_policy, "Closed loop: default or escalation-only");
  simulate->add_option("--intervene", i_interventions, "Closed loop: ACTION:NAME=FACTOR, e.g. CompliantMode:P2=1.5");
  simulate->add_option("--summary", i_summary, "Per-episode summary CSV");
  simulate->add_option("--out", i_out, "JSON-lines trace destination (- for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*validate) {
      auto m = load(va);
      Output out(v_out);
      json j{{"states", m.chain.state_count()},
             {"transitions", m.chain.transitions.size()},
             {"parameters", m.chain.params.names()},
             {"fixed", bindings_json(m.chain.fixed)}};
      out.stream() << j.dump() << "\n";
      return 0;
    }

    if (*symbolic) {
      auto m = load(sa);
      const auto props = lang::parse_property_file(read_file(s_props));
      EliminationOptions opts;
      opts.term_cap = s_cap;
      if (s_order == "min-fill") opts.order = EliminationOrder::MinFill;
      else if (s_order == "ascending") opts.order = EliminationOrder::Ascending;
      else if (s_order == "descending") opts.order = EliminationOrder::Descending;
      else throw UsageError("unknown elimination order '" + s_order + "'");
      Output out(s_out);
      for (const auto& line : props) {
        if (line.query.is_bounded()) {
          std::cerr << s_props << ":" << line.line << ": skipped: step-bounded queries are checked numerically\n";
          continue;
        }
        const auto r = symbolic_reach(m.chain, line.query, opts);
        if (s_expr_only) out.stream() << r.expression() << "\n";
        else out.stream() << envelope(line, r).dump() << "\n";
      }
      return 0;
    }

    if (*check) {
      auto m = load(ca);
      if (m.chain.params.size() != 0)
        throw UsageError("check needs every parameter fixed; open: " + [&] {
          std::string s;
          for (const auto& n : m.chain.params.names()) s += (s.empty() ? "" : ", ") + n;
          return s;
        }());
      const auto props = lang::parse_property_file(read_file(c_props));
      NumericOptions opts;
      if (c_method == "linear") opts.method = NumericOptions::Method::LinearSolve;
      else if (c_method == "iteration") opts.method = NumericOptions::Method::ValueIteration;
      else throw UsageError("unknown method '" + c_method + "'");
      const auto ic = InstantiatedChain::at(m.chain, {});
      Output out(c_out);
      bool violated = false;
      for (const auto& line : props) {
        const auto target = states_satisfying(m.chain, line.query.target);
        const double value = line.query.is_bounded() ? bounded_reach(ic, target, *line.query.step_bound)
                                                      : numeric_reach(ic, target, opts);
        json j{{"query", to_string(line.query)}, {"value", value}};
        if (line.query.kind != PctlQuery::Kind::Query) {
          const bool ok = line.query.satisfied_by(value);
          j["satisfied"] = ok;
          violated = violated || !ok;
        }
        out.stream() << j.dump() << "\n";
      }
      return violated ? kViolation : 0;
    }

    if (*sweep_cmd) {
      if (wa.params.size() != 2) throw UsageError("sweep needs exactly two --param ranges (x first, then y)");
      auto m = load(wa);
      std::string target = w_target;
      std::string scalar_name;
      if (w_quantity == "proxyCost") {
        if (target.empty()) target = "s=2";
        scalar_name = "C_S2";
      } else if (w_quantity == "proxyReward") {
        if (target.empty()) target = "s=7";
        scalar_name = "R_S7";
      } else if (w_quantity != "reach") {
        throw UsageError("unknown quantity '" + w_quantity + "'");
      }
      if (target.empty()) throw UsageError("--target is required for --quantity reach");
      if (!w_scalar.empty()) scalar_name = w_scalar;
      double scalar = 1.0;
      if (!scalar_name.empty()) {
        if (auto v = parse_rational(scalar_name)) {
          scalar = to_double(*v);
        } else if (auto it = m.chain.fixed.find(scalar_name); it != m.chain.fixed.end()) {
          scalar = to_double(it->second);
        } else {
          throw UsageError("scalar '" + scalar_name + "' must be fixed with --const");
        }
      }
      SweepSpec spec;
      spec.resolution = w_resolution;
      spec.scalar = scalar;
      auto axis = [&](std::size_t i) {
        const auto& b = m.model.parameter_bounds.at(m.param_order[i]);
        return SweepAxis{m.param_order[i], to_double(b.low), to_double(b.high)};
      };
      spec.x = axis(0);
      spec.y = axis(1);
      const auto grid = sweep(m.chain, states_satisfying(m.chain, lang::parse_expression(target)), spec, w_threads);
      if (grid.invalid_cells)
        std::cerr << "warning: " << grid.invalid_cells
                  << " grid cells give some transition a value outside [0, 1]; their values are formal\n";
      Output out(w_out);
      write_csv(out.stream(), grid);
      return 0;
    }

    if (*monitor) {
      auto m = load(ma);
      RequirementOptions ropts;
      ropts.max_c2 = rational_from_double(m_max_c2);
      if (m_h4) ropts.h4_lower_bound = rational_from_double(*m_h4);
      ropts.h5_steps = m_h5_steps;
      const auto specs = dressing_requirements(m.chain, ropts);
      const std::string fp = fingerprint(m.text, m.chain.fixed, specs);
      MonitorCache cache = m_cache_in.empty() ? precompute(m.chain, specs, m.text)
                                              : load_cache(json::parse(read_file(m_cache_in)), m.chain, fp);
      if (!m_cache_out.empty()) {
        Output co(m_cache_out);
        co.stream() << to_json(cache).dump(1) << "\n";
      }
      const auto policy = policy_from(m_policy);
      const auto priors = named_values(m_priors, "--prior");
      BeliefSet beliefs;
      for (const auto& [name, value] : priors) {
        if (!m.chain.params.find(name)) throw UsageError("'" + name + "' is not a free parameter of the model");
        beliefs[name] = BeliefState::make(name, value, m_c0, m_alpha);
      }
      Output out(m_out);
      auto emit = [&](double time) {
        const auto est = estimate_all(beliefs, m.chain);
        for (const auto& w : est.warnings) std::cerr << "warning: " << w << "\n";
        MonitorOptions mo;
        mo.timestamp = time;
        const auto report = evaluate(cache, est.valuation, mo);
        const auto decision = decide(report, policy);
        json j = to_json(report);
        j["decision"] = to_json(decision);
        out.stream() << j.dump() << "\n";
        return exit_code(report);
      };
      if (m_events.empty()) return emit(0.0);
      std::istringstream events(read_file(m_events));
      std::string line;
      int rc = 0;
      std::size_t number = 0;
      while (std::getline(events, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json e;
        try {
          e = json::parse(line);
        } catch (const json::exception& err) {
          throw UsageError("event line " + std::to_string(number) + ": " + err.what());
        }
        const double t = e.at("time").get<double>();
        std::vector<Observation> obs;
        if (e.contains("transition")) {
          const auto tr = e.at("transition");
          // Branches whose probability is a bound constant carry nothing to learn.
          for (auto& o : observations_for_step(tr.at(0).get<std::int64_t>(), tr.at(1).get<std::int64_t>(), t))
            if (m.chain.params.find(o.param)) obs.push_back(std::move(o));
        } else {
          obs.push_back({e.at("param").get<std::string>(), e.at("outcome").get<int>(), t});
        }
        for (const auto& o : obs) {
          auto it = beliefs.find(o.param);
          if (it == beliefs.end()) throw MissingBelief("no belief for '" + o.param + "'; give it a --prior");
          it->second = observe(it->second, o);
        }
        rc = emit(t);
      }
      return rc;
    }

    if (*simulate) {
      auto m = load(ia);
      const auto truth_values = named_values(i_truth, "--truth");
      SimConfig cfg;
      cfg.ground_truth = valuation_from(m.chain, truth_values, "--truth");
      cfg.episodes = i_episodes;
      cfg.seed = i_seed;
      cfg.decay_rate = i_decay;
      cfg.max_steps_per_episode = i_max_steps;
      cfg.rewards = RewardScheme::from(m.chain);
      for (const auto& item : i_interventions) {
        auto [action, rest] = split_once(item, ':', "--intervene");
        auto [name, factor] = split_once(rest, '=', "--intervene");
        Action a;
        if (action == "Continue") a = Action::Continue;
        else if (action == "CompliantMode") a = Action::CompliantMode;
        else if (action == "Abort") a = Action::Abort;
        else throw UsageError("unknown action '" + action + "'");
        cfg.interventions[a][name] = double_arg(factor, name);
      }
      Output out(i_out);
      std::unique_ptr<Output> summary;
      if (!i_summary.empty()) {
        summary = std::make_unique<Output>(i_summary);
        summary->stream() << "episode,outcome,reward,cost,decisions\n";
      }
      out.stream() << json{{"meta", {{"rng", kRngName}, {"seed", cfg.seed}, {"episodes", cfg.episodes},
                                     {"closedLoop", i_closed}}}}.dump()
                   << "\n";
      auto write = [&](const EpisodeTrace& t, const Decision* d) {
        json j = to_json(m.chain, t);
        if (d) j["decision"] = to_json(*d);
        out.stream() << j.dump() << "\n";
        if (summary) {
          std::string fired;
          if (d)
            for (const auto& id : d->triggered_by) fired += (fired.empty() ? "" : ";") + id;
          summary->stream() << t.episode << ',' << to_string(t.outcome) << ',' << format_g12(t.reward) << ','
                            << format_g12(t.cost) << ',' << (d ? to_string(d->action) : std::string()) << (fired.empty() ? "" : ":" + fired)
                            << '\n';
        }
      };
      if (!i_closed) {
        for (const auto& t : run_batch(m.chain, cfg)) write(t, nullptr);
        return 0;
      }
      auto priors = named_values(i_priors, "--prior");
      BeliefSet beliefs;
      for (const auto& name : m.chain.params.names()) {
        const double p0 = priors.count(name) ? priors[name] : truth_values.at(name);
        beliefs[name] = BeliefState::make(name, p0, i_c0, i_alpha);
      }
      const auto specs = dressing_requirements(m.chain);
      const auto cache = precompute(m.chain, specs, m.text);
      const auto steps = run_closed_loop(m.chain, cfg, beliefs, cache, policy_from(i_policy));
      for (const auto& s : steps) {
        for (const auto& w : s.warnings) std::cerr << "episode " << s.trace.episode << ": warning: " << w << "\n";
        write(s.trace, &s.decision);
      }
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const SyntaxError& e) {
    std::cerr << "error: line " << e.span().line << ", column " << e.span().column << ": " << e.message() << "\n";
    return kUsage;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const StaleCache& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const MissingBelief& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NonConvergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const InvalidValuation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const EliminationBlowup& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const PoleAtPoint& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return 0;
}
