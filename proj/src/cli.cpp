#include "momsens/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "momsens/cme.hpp"
#include "momsens/csv.hpp"
#include "momsens/global_sens.hpp"
#include "momsens/local_sens.hpp"
#include "momsens/model.hpp"
#include "momsens/moments.hpp"

#ifndef MOMSENS_VERSION
#define MOMSENS_VERSION "0.0.0"
#endif

namespace momsens::cli {

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const char* command_name(Command c) {
  switch (c) {
    case Command::simulate: return "simulate";
    case Command::oracle: return "oracle";
    case Command::local: return "local";
    case Command::sobol: return "sobol";
  }
  return "?";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("file not found: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string join_bound(const std::vector<std::int64_t>& bound) {
  std::string s;
  for (auto b : bound) s += (s.empty() ? "" : ",") + std::to_string(b);
  return s;
}

// Writes through a file when a path is given, otherwise to `fallback`.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
      stream_ = &fallback;
    } else {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot open output file: " + path);
      stream_ = &file_;
    }
  }
  std::ostream& stream() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw std::runtime_error("failed writing output");
  }

 private:
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

std::string sweep_path(const RunConfig& c) {
  if (!c.sweep_out.empty()) return c.sweep_out;
  if (c.out.empty()) return {};
  const std::string ext = ".csv";
  if (c.out.size() > ext.size() && c.out.compare(c.out.size() - ext.size(), ext.size(), ext) == 0)
    return c.out.substr(0, c.out.size() - ext.size()) + ".sweep.csv";
  return c.out + ".sweep.csv";
}

csv::Metadata base_metadata(const RunConfig& c, const std::string& model_text) {
  csv::Metadata m{
      {"tool", "momsens " + version()},
      {"command", command_name(c.command)},
      {"model", c.model_path},
      {"model_fnv1a64", csv::fnv1a64(model_text)},
      {"t_end", csv::number(c.t_end)},
      {"points", std::to_string(c.points)},
      {"rel_tol", csv::number(c.rel_tol)},
      {"abs_tol", csv::number(c.abs_tol)},
      {"diagonal_covariance", c.diagonal_covariance ? "true" : "false"},
  };
  switch (c.command) {
    case Command::simulate: break;
    case Command::oracle: m.emplace_back("bound", c.bound.empty() ? "default" : join_bound(c.bound)); break;
    case Command::local:
      m.emplace_back("perturb", csv::number(c.perturb));
      m.emplace_back("fd_step", csv::number(c.fd_step));
      break;
    case Command::sobol:
      m.emplace_back("n", std::to_string(c.n));
      m.emplace_back("seed", std::to_string(c.seed));
      m.emplace_back("estimator", c.estimator);
      break;
  }
  return m;
}

void run_command(const RunConfig& c, std::ostream& out) {
  const std::string text = read_file(c.model_path);
  const auto network = parse_model(text);
  const auto system = build_moment_system(network, c.diagonal_covariance);
  const auto point = ParameterPoint::nominal(network);
  const auto grid = uniform_grid(c.t_end, c.points);
  const IntegratorOptions integrator{c.rel_tol, c.abs_tol};
  const auto outputs = system.outputs();
  auto meta = base_metadata(c, text);

  switch (c.command) {
    case Command::simulate: {
      const auto traj = simulate_moments(system, point, grid, integrator);
      meta.emplace_back("negative_variance", traj.negative_variance ? "true" : "false");
      if (traj.negative_variance) meta.emplace_back("first_negative_variance_t", csv::number(traj.first_negative_variance_time));
      meta.emplace_back("steps_accepted", std::to_string(traj.stats.accepted));
      meta.emplace_back("steps_rejected", std::to_string(traj.stats.rejected));
      Sink sink(c.out, out);
      csv::write_metadata(sink.stream(), meta);
      csv::write_moments(sink.stream(), traj, outputs);
      sink.finish();
      break;
    }
    case Command::oracle: {
      const auto bound = c.bound.empty() ? default_bound(network)
                         : c.bound.size() == 1 ? std::vector<std::int64_t>(network.species_count(), c.bound[0])
                                               : c.bound;
      if (bound.size() != network.species_count())
        throw InputError("--bound needs one value or one value per species");
      const auto closure = simulate_moments(system, point, grid, integrator);
      const auto oracle = oracle_moments(network, point, grid, bound);
      double worst = 0.0;
      for (double r : oracle.residual_mass) worst = std::max(worst, r);
      meta.emplace_back("bound_used", join_bound(bound));
      meta.emplace_back("states", std::to_string(oracle.states));
      meta.emplace_back("truncated_transitions", std::to_string(oracle.truncated_transitions));
      meta.emplace_back("max_residual_mass", csv::number(worst));
      meta.emplace_back("closure_negative_variance", closure.negative_variance ? "true" : "false");
      Sink sink(c.out, out);
      csv::write_metadata(sink.stream(), meta);
      csv::write_oracle(sink.stream(), oracle.moments, closure, outputs);
      sink.finish();
      break;
    }
    case Command::local: {
      const auto sweep = perturbation_sweep(system, point, c.perturb, grid, integrator, c.threads);
      FdOptions fd;
      fd.h_rel = c.fd_step;
      fd.integrator = {c.rel_tol / 100.0, c.abs_tol / 100.0};
      fd.threads = c.threads;
      const auto raw = fd_sensitivity(system, point, grid, fd);
      const auto report = normalize_default(raw, point);
      std::vector<std::string> params;
      for (const auto& p : network.parameters()) params.push_back(p.name);

      meta.emplace_back("fd_rel_tol", csv::number(fd.integrator.rel_tol));
      meta.emplace_back("fd_abs_tol", csv::number(fd.integrator.abs_tol));
      meta.emplace_back("omega_theta", "nominal");
      meta.emplace_back("omega_y", "1");
      const auto sweep_file = sweep_path(c);
      meta.emplace_back("sweep_file", sweep_file.empty() ? "none" : sweep_file);
      if (!sweep_file.empty()) {
        Sink sink(sweep_file, out);
        auto sweep_meta = meta;
        sweep_meta.emplace_back("content", "perturbation sweep");
        csv::write_metadata(sink.stream(), sweep_meta);
        csv::write_sweep(sink.stream(), sweep, outputs, params);
        sink.finish();
      }
      Sink sink(c.out, out);
      meta.emplace_back("content", "relative sensitivity functions");
      csv::write_metadata(sink.stream(), meta);
      csv::write_local(sink.stream(), report);
      sink.finish();
      break;
    }
    case Command::sobol: {
      const auto estimator = parse_estimator(c.estimator);
      const auto box = ParameterBox::from_network(network);
      const auto design = sample_design(box, c.n, c.seed);
      EvaluationOptions eval;
      eval.integrator = integrator;
      eval.threads = c.threads;
      const auto y = evaluate_design(design, system, grid, eval);
      const auto report = sobol_indices(y, estimator);
      meta.emplace_back("evaluations", std::to_string(design.matrices() * design.samples()));
      meta.emplace_back("failed_evaluations", std::to_string(y.failed_count()));
      Sink sink(c.out, out);
      csv::write_metadata(sink.stream(), meta);
      csv::write_sobol(sink.stream(), report);
      sink.finish();
      break;
    }
  }
}

}  // namespace

std::string version() { return MOMSENS_VERSION; }

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    run_command(config, out);
    return kOk;
  } catch (const InputError& e) {
    err << "error: input: " << e.what() << '\n';
    return kInputError;
  } catch (const ModelError& e) {
    err << "error: model: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: runtime: " << e.what() << '\n';
    return kRuntimeError;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Moment-closure simulation and sensitivity analysis for mass-action networks", "momsens"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  RunConfig config;
  std::string bound_text;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("model", config.model_path, "Model file")->required();
    sub->add_option("--t-end", config.t_end, "Final time in seconds")->check(CLI::PositiveNumber);
    sub->add_option("--points", config.points, "Number of output times on [0, t-end]")->check(CLI::Range(2, 1000000));
    sub->add_option("--rel-tol", config.rel_tol, "Relative integration tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--abs-tol", config.abs_tol, "Absolute integration tolerance")->check(CLI::PositiveNumber);
    sub->add_flag("--diagonal-covariance", config.diagonal_covariance, "Pin cross-covariances to zero");
    sub->add_option("--out", config.out, "Output CSV path (default: standard output)");
  };

  auto* simulate = app.add_subcommand("simulate", "Integrate the moment equations");
  add_common(simulate);

  auto* oracle = app.add_subcommand("oracle", "Exact moments from the truncated master equation");
  add_common(oracle);
  oracle->add_option("--bound", bound_text, "Per-species truncation bound: one value or a comma list");

  auto* local = app.add_subcommand("local", "Perturbation sweep and finite-difference sensitivities");
  add_common(local);
  local->add_option("--perturb", config.perturb, "Relative perturbation of the sweep");
  local->add_option("--fd-step", config.fd_step, "Relative finite-difference step")->check(CLI::PositiveNumber);
  local->add_option("--sweep-out", config.sweep_out, "Sweep CSV path (default: derived from --out)");

  auto* sobol = app.add_subcommand("sobol", "Sobol' indices from a pick-and-freeze design");
  add_common(sobol);
  sobol->add_option("--n", config.n, "Monte Carlo sample count")->check(CLI::Range(std::size_t{2}, std::size_t{100000000}));
  sobol->add_option("--seed", config.seed, "Random seed");
  sobol->add_option("--estimator", config.estimator, "martinez or jansen")
      ->check(CLI::IsMember({"martinez", "jansen"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "error: usage: " << e.what() << '\n';
    return kUsageError;
  }

  if (simulate->parsed()) config.command = Command::simulate;
  if (oracle->parsed()) config.command = Command::oracle;
  if (local->parsed()) config.command = Command::local;
  if (sobol->parsed()) config.command = Command::sobol;

  if (!bound_text.empty()) {
    std::stringstream ss(bound_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        const long long v = std::stoll(item, &used);
        if (used != item.size() || v < 0) throw std::invalid_argument(item);
        config.bound.push_back(v);
      } catch (const std::exception&) {
        std::cerr << "error: usage: bad --bound value '" << item << "'\n";
        return kUsageError;
      }
    }
  }

  if (const char* env = std::getenv("MOMSENS_THREADS"); env && *env) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(env, &used);
      if (used != std::string(env).size() || v < 1) throw std::invalid_argument(env);
      config.threads = v;
    } catch (const std::exception&) {
      std::cerr << "error: usage: MOMSENS_THREADS must be a positive integer\n";
      return kUsageError;
    }
  }

  return run(config, std::cout, std::cerr);
}

}  // namespace momsens::cli
