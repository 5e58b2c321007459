// Command-line front end: validation, uniformisation, greedy analysis,
// greed bounds, certified evaluation, simulation, and scheduler synthesis
// as batch commands with text or JSON output.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ctmdp/greedy.hpp"
#include "ctmdp/model.hpp"
#include "ctmdp/poisson.hpp"
#include "ctmdp/reachability.hpp"
#include "ctmdp/scheduler.hpp"
#include "ctmdp/simulate.hpp"
#include "ctmdp/synthesis.hpp"
#include "ctmdp/uniformise.hpp"

namespace {

using nlohmann::json;

struct Options {
  std::string model_path;
  std::string scheduler_path;
  std::string time = "0";
  double epsilon = 1e-9;
  std::uint64_t preamble = 0;
  bool preamble_set = false;
  std::uint64_t bounded_steps = 0;
  std::uint64_t samples = 100000;
  std::uint64_t seed = 0;
  double confidence = 0.99;
  std::string method = "dp";
  std::string format = "text";
  bool exact_steps = false;
  bool prune = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ctmdp::DomainError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

json interval_json(const ctmdp::ValueInterval& v) {
  return {{"lo", v.lo}, {"hi", v.hi}, {"slack", v.slack}};
}

void print_interval(const Options& opt, const std::string& name,
                    const ctmdp::ValueInterval& v) {
  if (opt.format == "json") {
    std::cout << json{{name, interval_json(v)}}.dump(2) << "\n";
  } else {
    std::cout << name << " = [" << fmt(v.lo) << ", " << fmt(v.hi) << "]\n";
  }
}

ctmdp::CtmdpModel load_model(const Options& opt) {
  return ctmdp::parse_model(read_file(opt.model_path));
}

ctmdp::Scheduler load_scheduler(const Options& opt, const ctmdp::CtmdpModel& model) {
  if (opt.scheduler_path.empty())
    throw ctmdp::DomainError("this command requires --scheduler");
  return ctmdp::parse_scheduler(model, read_file(opt.scheduler_path));
}

// Drops unobservable copies unreachable from the initial distribution.
ctmdp::CtmdpModel pruned_uniformisation(const ctmdp::UniformisationResult& u) {
  const auto& m = u.uniform_model;
  std::vector<char> reachable(m.locations.size(), 0);
  std::vector<int> queue;
  for (const auto& [l, p] : m.initial)
    if (p > 0 && !reachable[l]) {
      reachable[l] = 1;
      queue.push_back(l);
    }
  while (!queue.empty()) {
    const int at = queue.back();
    queue.pop_back();
    for (const auto& tr : m.transitions)
      if (tr.from == at && tr.rate > 0 && !reachable[tr.to]) {
        reachable[tr.to] = 1;
        queue.push_back(tr.to);
      }
  }
  std::vector<int> remap(m.locations.size(), -1);
  ctmdp::CtmdpModel out;
  out.name = m.name;
  out.actions = m.actions;
  for (std::size_t l = 0; l < m.locations.size(); ++l) {
    if (!u.observable(static_cast<int>(l)) && !reachable[l]) continue;
    remap[l] = static_cast<int>(out.locations.size());
    out.locations.push_back(m.locations[l]);
  }
  for (const auto& tr : m.transitions)
    if (remap[tr.from] >= 0 && remap[tr.to] >= 0) {
      ctmdp::Transition copy = tr;
      copy.from = remap[tr.from];
      copy.to = remap[tr.to];
      out.transitions.push_back(copy);
    }
  for (const auto& [l, p] : m.initial)
    if (remap[l] >= 0) out.initial.emplace_back(remap[l], p);
  return out;
}

int run_command(const std::string& command, const Options& opt) {
  using namespace ctmdp;
  const Rational t = parse_rational(opt.time);
  if (t < 0) throw DomainError("--time must be nonnegative");
  const double td = to_double(t);

  if (command == "validate") {
    const CtmdpModel model = parse_model_document(read_file(opt.model_path));
    const auto violations = validate(model);
    if (opt.format == "json") {
      std::cout << json{{"valid", violations.empty()}, {"violations", violations}}.dump(2)
                << "\n";
    } else if (violations.empty()) {
      std::cout << "valid\n";
    } else {
      for (const auto& v : violations) std::cout << "violation: " << v << "\n";
    }
    return violations.empty() ? 0 : 1;
  }

  const CtmdpModel model = load_model(opt);

  if (command == "uniformise") {
    const UniformisationResult u = uniformise(model);
    const CtmdpModel out = opt.prune ? pruned_uniformisation(u) : u.uniform_model;
    if (opt.format == "json") {
      std::cout << json{{"rate", format_rational(u.rate)},
                        {"model", json::parse(serialize_model(out))}}
                       .dump(2)
                << "\n";
    } else {
      std::cout << "rate = " << format_rational(u.rate) << "\n"
                << serialize_model(out) << "\n";
    }
    return 0;
  }

  if (command == "greedy") {
    // Analysis runs on the uniformisation and is projected back to the
    // observable locations; greedy actions and the discriminator of a
    // non-uniform model are those of its uniformisation.
    const UniformisationResult u = uniformise(model);
    const GreedyAnalysis ga = greedy_analysis(u.uniform_model);
    if (opt.format == "json") {
      json actions = json::object();
      for (std::size_t l = 0; l < model.locations.size(); ++l)
        if (!model.locations[l].goal)
          actions[model.locations[l].id] = model.actions[ga.standard_greedy[l]];
      std::cout << json{{"mu", ga.discriminator
                                   ? json(format_rational(*ga.discriminator))
                                   : json(nullptr)},
                        {"greedy", actions},
                        {"depth", ga.depth}}
                       .dump(2)
                << "\n";
    } else {
      std::cout << "mu = "
                << (ga.discriminator ? format_rational(*ga.discriminator) : "absent")
                << "\n";
      std::cout << "greedy:";
      bool first = true;
      for (std::size_t l = 0; l < model.locations.size(); ++l) {
        if (model.locations[l].goal) continue;
        std::cout << (first ? " " : ", ") << model.locations[l].id << " -> "
                  << model.actions[ga.standard_greedy[l]];
        first = false;
      }
      std::cout << "\n";
    }
    return 0;
  }

  if (command == "bound") {
    const UniformisationResult u = uniformise(model);
    const GreedyAnalysis ga = greedy_analysis(u.uniform_model);
    const GreedBound b = greed_bound(u.rate, ga.discriminator, t);
    if (opt.format == "json")
      std::cout << json{{"coarse", b.coarse}, {"refined", b.refined}}.dump(2) << "\n";
    else
      std::cout << "coarse = " << b.coarse << ", refined = " << b.refined << "\n";
    return 0;
  }

  if (command == "evaluate") {
    const Scheduler s = load_scheduler(opt, model);
    const ValueInterval v =
        is_uniform(model)
            ? evaluate_uniform(model, s, td, opt.epsilon, opt.exact_steps)
            : evaluate_general(model, s, td, opt.epsilon, opt.exact_steps);
    print_interval(opt, "value", v);
    return 0;
  }

  if (command == "step-bounded") {
    const Scheduler s = load_scheduler(opt, model);
    const ValueInterval v = step_bounded(model, s, td, opt.bounded_steps,
                                         opt.epsilon, opt.exact_steps);
    print_interval(opt, "value", v);
    return 0;
  }

  if (command == "simulate") {
    const Scheduler s = load_scheduler(opt, model);
    const Estimate e =
        estimate(model, s, td, opt.samples, opt.seed, opt.confidence);
    if (opt.format == "json")
      std::cout << json{{"mean", e.mean},
                        {"half_width", e.half_width},
                        {"confidence", e.confidence},
                        {"samples", e.samples},
                        {"seed", e.seed}}
                       .dump(2)
                << "\n";
    else
      std::cout << "mean = " << fmt(e.mean) << " +/- " << fmt(e.half_width)
                << " (confidence " << fmt(e.confidence) << ", samples "
                << e.samples << ")\n";
    return 0;
  }

  if (command == "synthesize") {
    SynthesisResult r;
    if (opt.method == "dp") {
      r = synth_uniform_dp(model, t, opt.epsilon, opt.exact_steps);
    } else if (opt.method == "enumerate") {
      std::size_t preamble = opt.preamble;
      if (!opt.preamble_set) {
        const UniformisationResult u = uniformise(model);
        const GreedyAnalysis ga = greedy_analysis(u.uniform_model);
        preamble = greed_bound(u.rate, ga.discriminator, t).refined;
      }
      r = synth_enumerate(model, t, opt.epsilon, preamble, opt.exact_steps);
    } else {
      throw CLI::ValidationError("--method must be dp or enumerate");
    }
    if (opt.format == "json")
      std::cout << json{{"value", interval_json(r.value)},
                        {"method", opt.method},
                        {"preamble_depth", r.preamble_depth},
                        {"greed_bound",
                         {{"coarse", r.greed_bound_used.coarse},
                          {"refined", r.greed_bound_used.refined}}},
                        {"scheduler", json::parse(serialize_scheduler(model, r.scheduler))},
                        {"ties", r.ties.size()}}
                       .dump(2)
                << "\n";
    else
      std::cout << "value = [" << fmt(r.value.lo) << ", " << fmt(r.value.hi)
                << "]\npreamble depth = " << r.preamble_depth << "\n"
                << serialize_scheduler(model, r.scheduler) << "\n";
    return 0;
  }

  if (command == "determinise") {
    const Scheduler s = load_scheduler(opt, model);
    const Scheduler d = determinise(model, s, t, opt.epsilon, opt.exact_steps);
    std::cout << serialize_scheduler(model, d) << "\n";
    return 0;
  }

  if (command == "saddle") {
    const SaddleReport r =
        check_saddle(model, t, opt.preamble, opt.epsilon, opt.exact_steps);
    if (opt.format == "json")
      std::cout << json{{"sup_inf", interval_json(r.sup_inf)},
                        {"inf_sup", interval_json(r.inf_sup)}}
                       .dump(2)
                << "\n";
    else
      std::cout << "sup_inf = [" << fmt(r.sup_inf.lo) << ", " << fmt(r.sup_inf.hi)
                << "]\ninf_sup = [" << fmt(r.inf_sup.lo) << ", "
                << fmt(r.inf_sup.hi) << "]\n";
    return 0;
  }

  throw CLI::ValidationError("unknown command '" + command + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal time-abstract schedulers and time-bounded reachability "
               "for CTMDPs and continuous-time Markov games"};
  app.require_subcommand(1);

  Options opt;
  std::vector<CLI::App*> subs;
  for (const char* name :
       {"validate", "uniformise", "greedy", "bound", "evaluate", "step-bounded",
        "simulate", "synthesize", "saddle", "determinise"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("model", opt.model_path, "model document (.ctmdp)")->required();
    sub->add_option("--scheduler", opt.scheduler_path, "scheduler document (.sched)");
    sub->add_option("--time", opt.time, "time bound (rational, e.g. 1/2)");
    sub->add_option("--epsilon", opt.epsilon, "target interval width");
    sub->add_option("--preamble", opt.preamble, "preamble depth")
        ->each([&](const std::string&) { opt.preamble_set = true; });
    sub->add_option("--steps", opt.bounded_steps, "step bound k");
    sub->add_option("--samples", opt.samples, "simulation sample count");
    sub->add_option("--seed", opt.seed, "simulation seed");
    sub->add_option("--confidence", opt.confidence, "confidence level in (0,1)");
    sub->add_option("--method", opt.method, "synthesis method: dp | enumerate");
    sub->add_option("--format", opt.format, "output format: text | json")
        ->check(CLI::IsMember({"text", "json"}));
    sub->add_flag("--exact-steps", opt.exact_steps,
                  "exact-rational step recursions");
    sub->add_flag("--prune", opt.prune, "drop unreachable unobservable copies");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (opt.epsilon <= 0) throw ctmdp::DomainError("--epsilon must be positive");
    if (opt.confidence <= 0 || opt.confidence >= 1)
      throw ctmdp::DomainError("--confidence must lie in (0,1)");
    return run_command(app.get_subcommands().front()->get_name(), opt);
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ctmdp::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ctmdp::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
