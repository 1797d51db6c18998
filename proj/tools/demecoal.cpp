// Command-line driver for the structured-coalescent experiments.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "demecoal/consistency.hpp"
#include "demecoal/exact.hpp"
#include "demecoal/experiment.hpp"
#include "demecoal/sampling.hpp"

namespace fs = std::filesystem;
using namespace demecoal;

namespace {

struct Globals {
  std::string config_path;
  std::uint64_t seed = 0;
  long replicates = 0;
  std::string out;
  int jobs = 1;
};

ExperimentConfig load_config(const Globals& g) {
  ExperimentConfig c;
  if (!g.config_path.empty()) {
    std::ifstream in(g.config_path);
    if (!in) throw std::runtime_error("cannot read config " + g.config_path);
    c = experiment_from_json(nlohmann::json::parse(in));
  }
  if (g.seed != 0) c.seed = g.seed;
  if (g.replicates > 0) c.replicates = g.replicates;
  if (!g.out.empty()) c.output = g.out;
  return c;
}

/// Writes `text` to out/name, or to stdout when no output directory was given.
void emit(const Globals& g, const std::string& name, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(g.out);
  std::ofstream f(fs::path(g.out) / name, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + (fs::path(g.out) / name).string());
  f << text;
  std::cerr << "wrote " << (fs::path(g.out) / name).string() << "\n";
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

void report(bool ok, const std::string& what) {
  std::cerr << (ok ? "PASS " : "FAIL ") << what << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured coalescent with mass extinctions: simulation and exact oracles"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "experiment JSON file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "root seed (overrides the config)");
  app.add_option("--replicates", g.replicates, "replicate count (overrides the config)");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);

  auto* simulate = app.add_subcommand("simulate", "simulate a process and tabulate states on the time grid");
  std::string trace;
  simulate->add_option("--trace", trace, "also write the path of replicate 0 to this CSV file");

  auto* consistency = app.add_subcommand("verify-consistency", "check the consistency equations");
  int k_max = 5;
  consistency->add_option("--k-max", k_max, "largest sample size checked")->check(CLI::Range(1, 6));

  auto* sampling = app.add_subcommand("sampling-dist", "allele-configuration law of the fast phase");
  int sampling_n = 4;
  sampling->add_option("-n", sampling_n, "sample size")->check(CLI::Range(1, 30));

  auto* sweep = app.add_subcommand("k-sweep", "pairwise and multiple merger rates over K");
  std::vector<int> ks{1, 2, 5, 20, 50};
  sweep->add_option("--K", ks, "numbers of source demes");

  auto* converge = app.add_subcommand("converge-d", "finite-D against limit TV over a ladder of D");
  std::vector<long> ds{30, 100, 300, 1000};
  converge->add_option("--D", ds, "deme counts");

  auto* oracle = app.add_subcommand("oracle", "exact transient law by uniformization");
  double oracle_t = -1.0;
  oracle->add_option("-t", oracle_t, "time (defaults to every grid time)");

  CLI11_PARSE(app, argc, argv);

  try {
    auto config = load_config(g);
    bool ok = true;

    if (*simulate) {
      if (g.out.empty()) g.out = config.output;
      config.output = g.out;
      const auto csv = run_experiment(config, g.jobs);
      std::cerr << "wrote " << csv << "\n";
      if (!trace.empty()) {
        const Simulator sim(config);
        Rng rng(replicate_seed(config.seed, 0));
        StopRule stop;
        stop.horizon = config.times.back();
        std::ofstream f(trace, std::ios::binary);
        f << to_csv(sim.run(initial_state(config), stop, rng));
      }
    } else if (*consistency) {
      const auto g_res = check_lambda_g_consistency(config.model.params, k_max);
      const auto f_res = check_fast_consistency(config.model.params, k_max);
      std::ostringstream out;
      constexpr double kTolerance = 1e-8;
      const auto pass = [](double v) { return v < kTolerance ? "pass" : "fail"; };
      out << "check,k_max,max_violation,result,checked,worst_case\n"
          << "lambda_g," << k_max << "," << num(g_res.max_violation) << "," << pass(g_res.max_violation) << ","
          << g_res.checked << ",\"" << g_res.worst_case << "\"\n"
          << "fast," << k_max << "," << num(f_res.max_violation) << "," << pass(f_res.max_violation) << ","
          << f_res.checked << ",\"" << f_res.worst_case << "\"\n";
      emit(g, "consistency.csv", out.str());
      report(g_res.max_violation < kTolerance, "collision-rate consistency");
      report(f_res.max_violation < kTolerance, "fast-rate consistency");
      ok = g_res.max_violation < kTolerance && f_res.max_violation < kTolerance;
    } else if (*sampling) {
      const auto& p = config.model.params;
      SamplingRecursion rec(p.reproduction_law, p.migration_rate, p.deme_rate_scale);
      std::ostringstream out;
      out << "config,probability,multiplicity\n";
      double total = 0.0;
      for (const auto& c : allele_configs(sampling_n)) {
        const double prob = rec.labeled_probability(c);
        total += prob * static_cast<double>(c.multiplicity());
        out << to_string(c) << "," << num(prob) << "," << c.multiplicity() << "\n";
      }
      emit(g, "sampling.csv", out.str());
      const bool normalized = std::abs(total - 1.0) < 1e-10;
      report(normalized, "configuration probabilities sum to one");
      ok = normalized;
      if (sampling_n <= kMaxExactSize) {
        const auto exact = absorption_distribution_exact(
            StructuredPartition::single_deme_singletons(sampling_n), p);
        double worst = 0.0;
        for (std::size_t i = 0; i < exact.support.size(); ++i) {
          auto sizes = block_size_profile(unstructured(exact.support[i]));
          const double rec_p = rec.labeled_probability(AlleleConfig::from_counts(sizes));
          worst = std::max(worst, std::abs(rec_p - exact.probabilities[i]));
        }
        report(worst < 1e-10, "recursion matches the absorption solver (max diff " + num(worst) + ")");
        ok = ok && worst < 1e-10;
      }
    } else if (*sweep) {
      const auto rows = k_sweep(config, ks, g.jobs);
      std::ostringstream out;
      out << "K,pair_rate_times_K,se,exact_two_lineage_rate_times_K,multiple_frequency,multiple_se,events\n";
      for (const auto& r : rows) {
        out << r.K << "," << num(r.pair_rate_times_k) << "," << num(r.pair_rate_se) << ","
            << num(r.exact_pair_rate_times_k) << "," << num(r.multiple_frequency) << ","
            << num(r.multiple_se) << "," << r.events << "\n";
      }
      emit(g, "k_sweep.csv", out.str());
      if (!rows.empty()) {
        const auto& p = config.model.params;
        const double limit = p.extinction_rate * moment(p.extinction_law, 2, 0);
        const auto& last = rows.back();
        const bool near = std::abs(last.pair_rate_times_k - limit) <= 0.1 * limit + 3 * last.pair_rate_se;
        report(near, "pair rate x K at K=" + std::to_string(last.K) + " near " + num(limit));
        ok = near;
        for (std::size_t i = 1; i < rows.size(); ++i) {
          if (rows[i].multiple_frequency > rows[i - 1].multiple_frequency) {
            std::cerr << "note: multiple-merger frequency rose between K=" << rows[i - 1].K
                      << " and K=" << rows[i].K << "\n";
          }
        }
      }
    } else if (*converge) {
      const auto rows = converge_d(config, ds, g.jobs);
      std::ostringstream out;
      out << "D,tv,se\n";
      for (const auto& r : rows) out << r.demes << "," << num(r.tv.estimate) << "," << num(r.tv.standard_error) << "\n";
      emit(g, "converge_d.csv", out.str());
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& a = rows[i - 1].tv;
        const auto& b = rows[i].tv;
        const bool mono = b.estimate <= a.estimate + 2.0 * std::hypot(a.standard_error, b.standard_error);
        report(mono, "TV non-increasing from " + a.label + " to " + b.label);
        ok = ok && mono;
      }
      if (!rows.empty()) {
        const bool small = rows.back().tv.estimate < 0.05;
        report(small, "TV below 0.05 at " + rows.back().tv.label);
        ok = ok && small;
      }
    } else if (*oracle) {
      const auto start = initial_state(config);
      std::vector<double> times = oracle_t >= 0.0 ? std::vector<double>{oracle_t} : config.times;
      std::ostringstream out;
      out << "time,partition,probability\n";
      for (double t : times) {
        const auto d = transient_distribution_exact(config.model, start, t);
        for (std::size_t i = 0; i < d.support.size(); ++i) {
          out << num(t) << "," << to_string(d.support[i]) << "," << num(d.probabilities[i]) << "\n";
        }
        const bool mass = std::abs(d.total() - 1.0) <= d.truncation_bound + 1e-10;
        report(mass, "probabilities sum to one at t=" + num(t));
        ok = ok && mass;
      }
      emit(g, "oracle.csv", out.str());
    }
    return ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
