// Command-line front end: online martingale runs, change detection, batch
// tests, and the exact small-N probability oracles.

#include "conformal/batch.hpp"
#include "conformal/betting.hpp"
#include "conformal/changedetect.hpp"
#include "conformal/core.hpp"
#include "conformal/datasets.hpp"
#include "conformal/nonconformity.hpp"
#include "conformal/pvalues.hpp"
#include "conformal/upperprob.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>

namespace {

using json = nlohmann::json;
using namespace conformal;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t default_seed() {
  if (const char* env = std::getenv("CONFORMAL_SEED"))
    return std::stoull(env);
  return 0;
}

// --- stream assembly -------------------------------------------------------

struct StreamOptions {
  std::string input;
  std::string format = "usps";  // usps | absenteeism | absenteeism6 | synth-bernoulli
  std::uint64_t length = 1000;  // synthetic only
  std::int64_t change_at = -1;  // synthetic only; -1 = no change
  double pre_p = 0.5;
  double post_p = 0.9;
  std::int64_t permute_seed = -1;

  void add_flags(CLI::App& cmd) {
    cmd.add_option("--input", input, "input file (usps / absenteeism formats)");
    cmd.add_option("--format", format,
                   "usps | absenteeism | absenteeism6 | synth-bernoulli");
    cmd.add_option("--length", length, "synthetic stream length");
    cmd.add_option("--change-at", change_at, "synthetic change point T (0 = never IID)");
    cmd.add_option("--pre", pre_p, "synthetic pre-change Bernoulli parameter");
    cmd.add_option("--post", post_p, "synthetic post-change Bernoulli parameter");
    cmd.add_option("--permute-seed", permute_seed,
                   "shuffle the stream with this seed before the run");
  }

  std::vector<Observation> load(std::uint64_t seed) const {
    std::vector<Observation> stream;
    if (format == "usps") {
      if (input.empty()) throw ConfigError("--input is required for --format usps");
      stream = load_usps(input);
    } else if (format == "absenteeism" || format == "absenteeism6") {
      if (input.empty()) throw ConfigError("--input is required for --format " + format);
      stream = load_absenteeism(input, format == "absenteeism6");
    } else if (format == "synth-bernoulli") {
      StreamSpec spec;
      spec.pre = bernoulli_generator(pre_p);
      spec.post = bernoulli_generator(post_p);
      if (change_at >= 0) spec.change_point = static_cast<std::size_t>(change_at);
      spec.length = length;
      stream = synth_stream(spec, seed * 2 + 1);
    } else {
      throw ConfigError("--format: unknown format '" + format + "'");
    }
    if (permute_seed >= 0)
      stream = permute(std::move(stream), static_cast<std::uint64_t>(permute_seed));
    return stream;
  }
};

std::unique_ptr<StreamScorer> make_scorer(const std::string& ncm,
                                          const std::string& distance) {
  if (distance != "euclidean")
    throw ConfigError("--distance: only 'euclidean' is supported");
  if (ncm == "knn-ratio")
    return std::make_unique<IncrementalKnnScorer>(IncrementalKnnScorer::Kind::ratio);
  if (ncm == "knn-diff")
    return std::make_unique<IncrementalKnnScorer>(IncrementalKnnScorer::Kind::diff);
  if (ncm == "identity") return std::make_unique<IdentityScorer>();
  if (ncm == "median")
    return std::make_unique<RescoringScorer>([](const std::vector<Observation>& bag) {
      if (bag.size() < 2) return ScoreVector(bag.size(), 1.0);
      std::vector<double> zs;
      for (const auto& z : bag) zs.push_back(z.features(0));
      return median_ncm(zs);
    });
  throw ConfigError("--ncm: unknown nonconformity measure '" + ncm + "'");
}

std::unique_ptr<BettingStrategy> make_strategy(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
  try {
    if (name == "power") return std::make_unique<PowerStrategy>(std::stod(args));
    if (name == "mixture")
      return std::make_unique<MixtureStrategy>(args.empty() ? 100 : std::stoi(args));
    if (name == "histogram") {
      const auto comma = args.find(',');
      if (comma == std::string::npos)
        throw ConfigError("--strategy histogram needs B,C");
      return std::make_unique<HistogramStrategy>(std::stoi(args.substr(0, comma)),
                                                 std::stod(args.substr(comma + 1)));
    }
  } catch (const std::invalid_argument&) {
    throw ConfigError("--strategy: cannot parse arguments in '" + spec + "'");
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("--strategy: ") + e.what());
  }
  throw ConfigError("--strategy: unknown strategy '" + spec + "'");
}

json capital_json(double log10_S) {
  const double raw = std::pow(10.0, log10_S);
  if (std::isinf(raw)) return "inf";
  return raw;
}

// --- one online run --------------------------------------------------------

struct RunResult {
  std::vector<StepRecord> trajectory;
  std::vector<double> ratios;
  std::vector<std::size_t> alarms;
  std::vector<double> statistics;
};

RunResult run_stream(const std::vector<Observation>& stream, const std::string& ncm,
                     const std::string& distance, const std::string& strategy_spec,
                     std::uint64_t seed, Detector* detector) {
  RunResult result;
  ConformalTransducer transducer(make_scorer(ncm, distance), seed);
  auto strategy = make_strategy(strategy_spec);
  for (const auto& z : stream) {
    const double p = transducer.step(z);
    const double ratio = strategy->step(p);
    result.trajectory.push_back(
        {strategy->state().step, p, strategy->state().log10_capital()});
    result.ratios.push_back(ratio);
    if (detector) {
      const bool alarm = detector->step(ratio);
      result.statistics.push_back(detector->statistic());
      if (alarm) result.alarms.push_back(detector->steps());
    }
  }
  return result;
}

void write_records(const RunResult& run, const std::string& jsonl_path,
                   const std::string& csv_path, bool with_detector) {
  if (!jsonl_path.empty()) {
    std::ofstream out(jsonl_path);
    if (!out) throw ConfigError("--out: cannot open " + jsonl_path);
    for (std::size_t i = 0; i < run.trajectory.size(); ++i) {
      const auto& rec = run.trajectory[i];
      json j{{"n", rec.n}, {"p", rec.p}, {"S", capital_json(rec.log10_capital)},
             {"log10_S", rec.log10_capital}};
      if (with_detector) {
        j["R_or_W"] = run.statistics[i];
        j["alarm"] = std::binary_search(run.alarms.begin(), run.alarms.end(), rec.n);
      }
      out << j.dump() << "\n";
    }
  }
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw ConfigError("--csv: cannot open " + csv_path);
    out << "n,log10_S\n";
    for (const auto& rec : run.trajectory)
      out << rec.n << "," << rec.log10_capital << "\n";
  }
}

// --- subcommands ------------------------------------------------------------

int cmd_martingale(const StreamOptions& stream_opts, const std::string& ncm,
                   const std::string& distance, const std::string& strategy,
                   std::uint64_t seed, int monte_carlo, const std::string& out,
                   const std::string& csv) {
  if (monte_carlo > 1) {
    std::vector<std::future<double>> futures;
    for (int k = 0; k < monte_carlo; ++k)
      futures.push_back(std::async(std::launch::async, [&, k] {
        const auto stream = stream_opts.load(seed + k);
        const auto run = run_stream(stream, ncm, distance, strategy, seed + k, nullptr);
        return run.trajectory.empty() ? 0.0 : run.trajectory.back().log10_capital;
      }));
    json finals = json::array();
    for (auto& f : futures) finals.push_back(f.get());
    std::cout << json{{"runs", monte_carlo}, {"final_log10_S", finals}}.dump() << "\n";
    return 0;
  }

  const auto stream = stream_opts.load(seed);
  if (stream.empty()) {
    std::cerr << "error: --input produced an empty stream\n";
    return kExitData;
  }
  const auto run = run_stream(stream, ncm, distance, strategy, seed, nullptr);
  write_records(run, out, csv, false);
  const double log10_S = run.trajectory.back().log10_capital;
  json summary{{"n", run.trajectory.size()},
               {"final_S", capital_json(log10_S)},
               {"final_log10_S", log10_S}};
  const double S = std::pow(10.0, log10_S);
  summary["jeffreys"] = S > 0.0 && std::isfinite(S)
                            ? to_string(jeffreys_category(S))
                            : (S == 0.0 ? "supports_null" : "decisive");
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_detect(const StreamOptions& stream_opts, const std::string& ncm,
               const std::string& distance, const std::string& strategy,
               std::uint64_t seed, const std::string& procedure, double threshold,
               const std::string& out, const std::string& csv) {
  DetectorProcedure proc;
  if (procedure == "cusum")
    proc = DetectorProcedure::cusum;
  else if (procedure == "sr")
    proc = DetectorProcedure::sr;
  else
    throw ConfigError("--procedure must be cusum or sr");
  if (!(threshold > 1.0)) throw ConfigError("--threshold must exceed 1");

  const auto stream = stream_opts.load(seed);
  if (stream.empty()) {
    std::cerr << "error: input produced an empty stream\n";
    return kExitData;
  }
  Detector detector(proc, threshold);
  const auto run = run_stream(stream, ncm, distance, strategy, seed, &detector);
  write_records(run, out, csv, true);
  json summary{{"n", run.trajectory.size()},
               {"procedure", procedure},
               {"threshold", threshold},
               {"alarms", run.alarms},
               {"alarm_frequency", alarm_frequency(run.alarms, run.trajectory.size())}};
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_batch(const StreamOptions& stream_opts, const std::string& ncm,
              const std::string& test, const std::string& sided) {
  if (test != "bartels") throw ConfigError("--test: unknown test '" + test + "'");
  Sidedness sidedness;
  if (sided == "two")
    sidedness = Sidedness::two_sided;
  else if (sided == "left")
    sidedness = Sidedness::left_sided;
  else if (sided == "right")
    sidedness = Sidedness::right_sided;
  else
    throw ConfigError("--sided must be two, left, or right");

  const auto stream = stream_opts.load(default_seed());
  if (stream.empty()) {
    std::cerr << "error: input produced an empty stream\n";
    return kExitData;
  }
  ScoreVector scores;
  if (ncm == "knn-ratio")
    scores = knn_ratio_score(stream);
  else if (ncm == "knn-diff")
    scores = knn_diff_score(stream);
  else if (ncm == "identity")
    for (const auto& z : stream) scores.push_back(z.features(0));
  else
    throw ConfigError("--ncm: unknown nonconformity measure '" + ncm + "'");

  const auto result = bartels_rvn(scores, sidedness);
  std::cout << json{{"n", result.n},
                    {"statistic", result.statistic},
                    {"standardized", result.standardized},
                    {"p_value", result.p_value},
                    {"sided", sided}}
                   .dump()
            << "\n";
  return 0;
}

EventSet load_event(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("--event: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("--event: invalid JSON: ") + e.what());
  }
  if (!j.contains("N") || !j.contains("members"))
    throw ParseError("--event: JSON must have fields N and members");
  return EventSet::from_bitstrings(j["N"].get<int>(),
                                   j["members"].get<std::vector<std::string>>());
}

int cmd_oracle(const std::string& op, int N, int trials, std::uint64_t seed,
               const std::string& event_path) {
  if (op == "uiid" || op == "uep" || op == "ucp") {
    if (event_path.empty()) throw ConfigError("--event is required for " + op);
    const auto E = load_event(event_path);
    if (op == "uiid")
      std::cout << json{{"N", E.horizon()}, {"uiid", uiid_prob(E)}}.dump() << "\n";
    else if (op == "uep")
      std::cout << json{{"N", E.horizon()}, {"uep", uep_prob(E)}}.dump() << "\n";
    else {
      const auto bracket = ucp_bracket(E);
      std::cout << json{{"N", E.horizon()},
                        {"lower", bracket.lower},
                        {"upper", bracket.upper}}
                       .dump()
                << "\n";
    }
    return 0;
  }
  if (op == "prop1") {
    if (N < 1 || N > 16) throw ConfigError("--N must be in 1..16 for prop1");
    SeededRandomness rng(seed);
    const auto report = verify_prop1(N, trials, rng);
    std::cout << json{{"N", N},
                      {"events_checked", report.events_checked},
                      {"uiid_le_uep", report.first_inequality_ok},
                      {"uep_le_1.5_sqrtN_uiid", report.second_inequality_ok},
                      {"sharper_constant_holds", report.sharper_constant_ok},
                      {"max_ratio", report.max_ratio}}
                     .dump()
              << "\n";
    return report.first_inequality_ok && report.second_inequality_ok ? 0 : 1;
  }
  if (op == "prop2") {
    if (N < 1 || N > 16) throw ConfigError("--N must be in 1..16 for prop2");
    SeededRandomness rng(seed);
    bool initial_ok = true, axiom_ok = true, final_ok = true, bracket_ok = true;
    for (std::uint32_t w = 0; w < (1u << N); ++w) {
      std::vector<int> target(N);
      for (int j = 0; j < N; ++j) target[j] = (w >> j) & 1;
      RecklessMartingale mart(target);
      if (std::abs(mart.initial_capital() -
                   1.0 / binomial(N, EventSet::popcount(w))) > 1e-15)
        initial_ok = false;
      for (int n = 1; n <= N; ++n)
        if (std::abs(mart.bet_integral(n) - 1.0) > 1e-12) axiom_ok = false;
      std::vector<double> thetas(N);
      for (int t = 0; t < trials; ++t) {
        for (auto& th : thetas) th = rng.uniform();
        if (std::abs(mart.run(target, thetas) - 1.0) > 1e-9) final_ok = false;
      }
    }
    for (int t = 0; t < trials; ++t) {
      std::vector<std::uint32_t> members;
      const double q = rng.uniform();
      for (std::uint32_t w = 0; w < (1u << N); ++w)
        if (rng.uniform() < q) members.push_back(w);
      if (members.empty()) continue;
      const EventSet E(N, std::move(members));
      const auto bracket = ucp_bracket(E);
      if (bracket.lower > bracket.upper + 1e-12) bracket_ok = false;
      if (!E.contains_all_zero() && bracket.upper > N * uep_prob(E) + 1e-12)
        bracket_ok = false;
    }
    std::cout << json{{"N", N},
                      {"initial_capital_ok", initial_ok},
                      {"betting_axiom_ok", axiom_ok},
                      {"final_capital_ok", final_ok},
                      {"ucp_bracket_ok", bracket_ok}}
                     .dump()
              << "\n";
    return initial_ok && axiom_ok && final_ok && bracket_ok ? 0 : 1;
  }
  if (op == "stirling") {
    const auto report = stirling_checks(N);
    std::cout << json{{"N_max", report.N_max},
                      {"direct_max", report.direct_max},
                      {"factorial_bracket_ok", report.factorial_bracket_ok},
                      {"binomial_bound_ok", report.binomial_bound_ok}}
                     .dump()
              << "\n";
    return report.factorial_bracket_ok && report.binomial_bound_ok ? 0 : 1;
  }
  throw ConfigError("--op: unknown oracle operation '" + op + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online testing of randomness and exchangeability with conformal martingales"};
  app.require_subcommand(1);

  // martingale
  auto* mart = app.add_subcommand("martingale", "run a conformal martingale over a stream");
  StreamOptions mart_stream;
  mart_stream.add_flags(*mart);
  std::string mart_ncm = "knn-ratio", mart_distance = "euclidean",
              mart_strategy = "histogram:10,10", mart_out, mart_csv;
  std::uint64_t mart_seed = default_seed();
  int mart_mc = 1;
  mart->add_option("--ncm", mart_ncm, "knn-ratio | knn-diff | identity | median");
  mart->add_option("--distance", mart_distance, "euclidean");
  mart->add_option("--strategy", mart_strategy, "power:k | mixture:m | histogram:B,C");
  mart->add_option("--seed", mart_seed, "tie-break randomness seed");
  mart->add_option("--monte-carlo", mart_mc, "fan out this many seeded runs");
  mart->add_option("--out", mart_out, "JSONL output path (one record per step)");
  mart->add_option("--csv", mart_csv, "CSV output path (n,log10_S)");

  // detect
  auto* det = app.add_subcommand("detect", "CUSUM / Shiryaev-Roberts change detection");
  StreamOptions det_stream;
  det_stream.add_flags(*det);
  std::string det_ncm = "knn-ratio", det_distance = "euclidean",
              det_strategy = "histogram:10,10", det_out, det_csv,
              det_procedure = "sr";
  std::uint64_t det_seed = default_seed();
  double det_threshold = 0.0;
  det->add_option("--ncm", det_ncm, "knn-ratio | knn-diff | identity | median");
  det->add_option("--distance", det_distance, "euclidean");
  det->add_option("--strategy", det_strategy, "power:k | mixture:m | histogram:B,C");
  det->add_option("--seed", det_seed, "tie-break randomness seed");
  det->add_option("--procedure", det_procedure, "cusum | sr");
  det->add_option("--threshold", det_threshold, "alarm threshold c > 1")->required();
  det->add_option("--out", det_out, "JSONL output path");
  det->add_option("--csv", det_csv, "CSV output path");

  // batch
  auto* bat = app.add_subcommand("batch", "batch randomness test on nonconformity scores");
  StreamOptions bat_stream;
  bat_stream.add_flags(*bat);
  std::string bat_ncm = "knn-ratio", bat_test = "bartels", bat_sided = "two";
  bat->add_option("--ncm", bat_ncm, "knn-ratio | knn-diff | identity");
  bat->add_option("--test", bat_test, "bartels");
  bat->add_option("--sided", bat_sided, "two | left | right");

  // oracle
  auto* ora = app.add_subcommand("oracle", "exact small-N upper-probability oracles");
  std::string ora_op, ora_event;
  int ora_N = 8, ora_trials = 1000;
  std::uint64_t ora_seed = default_seed();
  ora->add_option("--op", ora_op, "uiid | uep | ucp | prop1 | prop2 | stirling")->required();
  ora->add_option("--N", ora_N, "horizon (prop1/prop2) or max n (stirling)");
  ora->add_option("--trials", ora_trials, "random events / theta draws per check");
  ora->add_option("--seed", ora_seed, "random event seed");
  ora->add_option("--event", ora_event, "EventSet JSON file {\"N\":int,\"members\":[bitstrings]}");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*mart)
      return cmd_martingale(mart_stream, mart_ncm, mart_distance, mart_strategy,
                            mart_seed, mart_mc, mart_out, mart_csv);
    if (*det)
      return cmd_detect(det_stream, det_ncm, det_distance, det_strategy, det_seed,
                        det_procedure, det_threshold, det_out, det_csv);
    if (*bat) return cmd_batch(bat_stream, bat_ncm, bat_test, bat_sided);
    if (*ora) return cmd_oracle(ora_op, ora_N, ora_trials, ora_seed, ora_event);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitConfig;
}
