#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include <tlnmem/cstln.hpp>
#include <tlnmem/data_io.hpp>
#include <tlnmem/dynamics.hpp>
#include <tlnmem/memory.hpp>
#include <tlnmem/numerics.hpp>
#include <tlnmem/roa.hpp>

#include "svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tlnmem::cli {

namespace {

std::string round_trip(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::stod(buf) == v) break;
  }
  return buf;
}

std::string now_stamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Output directory plus the sidecar log.  Result files must be identical
// across reruns, so wall-clock output goes only through log().
struct RunDirs {
  fs::path out;
  std::ofstream logf;

  void log(const std::string& line) {
    logf << "[" << now_stamp() << "] " << line << "\n";
    logf.flush();
  }
};

RunDirs open_run(const RunConfig& cfg, const std::string& command) {
  RunDirs io;
  io.out = cfg.get_str("out", "runs/" + command);
  fs::create_directories(io.out);
  io.logf.open(io.out / "run.log", std::ios::app);
  io.log(command + " started");
  return io;
}

void finish_run(RunDirs& io, const RunConfig& cfg, const json& results) {
  cfg.write((io.out / "effective.cfg").string());
  std::ofstream out(io.out / "results.json", std::ios::binary | std::ios::trunc);
  out << results.dump(2) << "\n";
  io.log("results written");
}

json base_results(const std::string& command) {
  return json{{"schema_version", 1}, {"command", command}};
}

CstlnParams params_from(const RunConfig& cfg) {
  CstlnParams p;
  p.n = cfg.get_int("network.n", 7);
  p.epsilon = cfg.get_double("network.epsilon", 0.9);
  p.delta = cfg.get_double("network.delta", 2.0);
  p.c = cfg.get_double("network.c", 1.0);
  return p;
}

SessionConfig session_from(const RunConfig& cfg) {
  SessionConfig s;
  s.trigger.m_gain = cfg.get_double("trigger.m_gain", s.trigger.m_gain);
  s.trigger.s_th = cfg.get_double("trigger.s_th", s.trigger.s_th);
  s.trigger.tau_q = cfg.get_double("trigger.tau_q", s.trigger.tau_q);
  s.trigger.tau_r = cfg.get_double("trigger.tau_r", s.trigger.tau_r);
  s.trigger.tau_d = cfg.get_double("trigger.tau_d", s.trigger.tau_d);
  s.trigger.beta_gate = cfg.get_double("trigger.beta_gate", s.trigger.beta_gate);
  s.trigger.H = cfg.get_double("trigger.H", s.trigger.H);
  s.control.c_inh = cfg.get_double("control.c_inh", s.control.c_inh);
  s.control.r_gain = cfg.get_double("control.r_gain", s.control.r_gain);
  s.control.kappa = cfg.get_double("control.kappa", s.control.kappa);
  s.control.tau_ou = cfg.get_double("control.tau_ou", s.control.tau_ou);
  s.control.kernel_decay = cfg.get_double("control.kernel_decay", s.control.kernel_decay);
  s.aux.h_on = cfg.get_double("aux.h_on", s.aux.h_on);
  s.aux.alpha_d = cfg.get_double("aux.alpha_d", s.aux.alpha_d);
  s.aux.beta_d = cfg.get_double("aux.beta_d", s.aux.beta_d);
  s.aux.tau_d = cfg.get_double("aux.tau_d", s.aux.tau_d);
  s.aux.tau_a = cfg.get_double("aux.tau_a", s.aux.tau_a);
  s.aux.tau_p = cfg.get_double("aux.tau_p", s.aux.tau_p);
  s.aux.tau_k = cfg.get_double("aux.tau_k", s.aux.tau_k);
  s.integ.dt = cfg.get_double("integrator.dt", s.integ.dt);
  s.integ.t_max = cfg.get_double("integrator.t_max", s.integ.t_max);
  s.integ.settle_tol = cfg.get_double("integrator.settle_tol", s.integ.settle_tol);
  s.integ.settle_window = cfg.get_int("integrator.settle_window", s.integ.settle_window);
  s.integ.rng_seed = cfg.get_u64("seed", 0);
  s.r_infer = cfg.get_double("session.r_infer", s.r_infer);
  s.settle_t_max = cfg.get_double("session.settle_t_max", s.settle_t_max);
  s.g_off_threshold = cfg.get_double("session.g_off_threshold", s.g_off_threshold);
  s.retry_max = cfg.get_int("session.retry_max", s.retry_max);
  return s;
}

struct NamedPatterns {
  std::vector<Eigen::VectorXd> patterns;
  std::vector<std::string> ids;
};

std::string sanitize(const std::string& id) {
  std::string out = id;
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return out;
}

NamedPatterns name_patterns(const PatternSet& set) {
  NamedPatterns np;
  np.patterns = set.patterns;
  std::map<int, int> seen;
  for (int k = 0; k < set.count(); ++k) {
    if (!set.labels.empty()) {
      int label = set.labels[k];
      int copy = seen[label]++;
      std::string id = "digit-" + std::to_string(label);
      if (copy > 0) id += "-" + std::to_string(copy + 1);
      np.ids.push_back(id);
    } else {
      np.ids.push_back("p" + std::to_string(k + 1));
    }
  }
  return np;
}

// Sources: `idx` reads the configured IDX files, `synthetic` draws spaced
// unit vectors, `blob` generates the digit-like fixture corpus and writes
// the IDX files alongside the results so the run stays a function of bytes
// on disk.
NamedPatterns load_dataset(const RunConfig& cfg, const fs::path& out) {
  std::string source = cfg.get_str("data.source", "synthetic");
  std::uint64_t seed = cfg.get_u64("seed", 0);
  PatternSet set;
  if (source == "idx") {
    std::string images = cfg.get_str("data.images", "");
    if (images.empty()) throw UsageError("data.source = idx requires data.images");
    set = load_idx(images, cfg.get_str("data.labels", ""));
  } else if (source == "blob") {
    int count = cfg.get_int("data.count", 6);
    auto images = blob_digit_images(count, seed);
    std::vector<std::uint8_t> labels;
    for (int k = 0; k < count; ++k) labels.push_back(std::uint8_t(k));
    fs::path ipath = out / "blob_images.idx";
    fs::path lpath = out / "blob_labels.idx";
    write_idx_images(ipath.string(), images, 28, 28);
    write_idx_labels(lpath.string(), labels);
    set = load_idx(ipath.string(), lpath.string());
  } else if (source == "synthetic") {
    set = synthetic_patterns(cfg.get_int("data.count", 6), cfg.get_int("data.dim", 784),
                             seed);
  } else {
    throw UsageError("unknown data.source `" + source + "` (idx, synthetic, or blob)");
  }
  return name_patterns(set);
}

json support_json(const SupportSet& s) {
  json arr = json::array();
  for (int i : s.indices) arr.push_back(i);
  return arr;
}

std::string model_path_from(const RunConfig& cfg, const RunDirs& io) {
  std::string path = cfg.get_str("model", "");
  if (path.empty()) path = (io.out / "model.tlnm").string();
  return path;
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

// Registry pattern whose attractor support matches, if any.
std::string retrieved_id(const MemoryModel& model, const SupportSet& support) {
  for (const auto& entry : model.registry)
    if (entry.support == support) return entry.pattern_id;
  return "";
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c) {
  std::uint64_t h = seed;
  for (std::uint64_t v : {a, b, c}) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

}  // namespace

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double pos = q * (values.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  double frac = pos - lo;
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

int cmd_learn(const RunConfig& cfg) {
  RunDirs io = open_run(cfg, "learn");
  CstlnParams params = params_from(cfg);
  SessionConfig session = session_from(cfg);
  Network net = build_network(params);
  NamedPatterns data = load_dataset(cfg, io.out);

  json results = base_results("learn");
  results["network"] = {{"n", params.n},
                        {"epsilon", params.epsilon},
                        {"delta", params.delta},
                        {"c", params.c}};
  results["patterns"] = json::array();

  int d = data.patterns.empty() ? cfg.get_int("data.dim", 784)
                                : static_cast<int>(data.patterns[0].size());
  MemoryModel model = make_model(d, params.n);

  int code = 0;
  for (std::size_t k = 0; k < data.patterns.size(); ++k) {
    const std::string& id = data.ids[k];
    json entry = {{"id", id}};
    try {
      Trajectory traj;
      LearnReport rep = learn_pattern(model, net, {data.patterns[k], id}, session, &traj);
      std::string csv = "trajectory_" + sanitize(id) + ".csv";
      write_trajectory_csv((io.out / csv).string(), traj);
      entry["bound"] = rep.bound;
      entry["already_known"] = rep.already_known;
      entry["attempts"] = rep.attempts;
      entry["support"] = support_json(rep.support);
      entry["trajectory"] = csv;
      io.log("learned " + id + " onto support " + rep.support.to_string());
    } catch (const CapacityError& e) {
      entry["error"] = {{"type", "capacity"}, {"message", e.what()}};
      code = 2;
    } catch (const TransitionError& e) {
      entry["error"] = {{"type", "transition"}, {"message", e.what()}};
      code = 2;
    } catch (const DivergenceError& e) {
      entry["error"] = {{"type", "divergence"}, {"message", e.what()}};
      code = 3;
    }
    results["patterns"].push_back(entry);
    if (code != 0) {
      results["error"] = entry["error"];
      io.log("stopping after failure on " + id);
      break;
    }
  }

  save_model((io.out / "model.tlnm").string(), model, params);
  results["model"] = "model.tlnm";
  results["stored"] = model.registry.size();
  finish_run(io, cfg, results);
  return code;
}

int cmd_infer(const RunConfig& cfg) {
  RunDirs io = open_run(cfg, "infer");
  LoadedModel lm = load_model(model_path_from(cfg, io));
  Network net = build_network(lm.params);
  SessionConfig session = session_from(cfg);
  std::uint64_t seed = cfg.get_u64("seed", 0);
  const int d = static_cast<int>(lm.model.W_E.rows());

  json results = base_results("infer");
  results["stored"] = lm.model.registry.size();

  int steps = cfg.get_int("infer.radius_steps", 0);
  if (steps > 0) {
    // Accuracy sweep: corrupt every stored pattern at each radius and count
    // retrievals of the right attractor.
    double r0 = cfg.get_double("infer.radius_min", 0.0);
    double r1 = cfg.get_double("infer.radius_max", 1.0);
    int draws = cfg.get_int("infer.draws", 20);
    std::ostringstream csv;
    csv << "radius,trials,successes,accuracy\n";
    json rows = json::array();
    for (int s = 0; s < steps; ++s) {
      double radius = steps == 1 ? r0 : r0 + (r1 - r0) * s / (steps - 1);
      int trials = 0, successes = 0;
      for (std::size_t m = 0; m < lm.model.registry.size(); ++m) {
        const RegistryEntry& entry = lm.model.registry[m];
        for (int j = 0; j < draws; ++j) {
          Eigen::VectorXd probe = corrupt(entry.pattern, radius, mix_seed(seed, s, m, j));
          ++trials;
          try {
            InferenceResult res =
                infer_pattern(lm.model, net, {probe, entry.pattern_id}, session);
            if (res.matched_support == entry.support) ++successes;
          } catch (const std::exception&) {
            // a failed settle counts as a miss
          }
        }
      }
      double acc = trials ? double(successes) / trials : 0.0;
      csv << round_trip(radius) << "," << trials << "," << successes << ","
          << round_trip(acc) << "\n";
      rows.push_back({{"radius", radius},
                      {"trials", trials},
                      {"successes", successes},
                      {"accuracy", acc}});
      io.log("radius " + round_trip(radius) + ": " + std::to_string(successes) + "/" +
             std::to_string(trials));
    }
    std::ofstream csvf(io.out / "accuracy_vs_radius.csv", std::ios::binary);
    csvf << csv.str();
    results["sweep"] = {{"csv", "accuracy_vs_radius.csv"}, {"rows", rows}};
    finish_run(io, cfg, results);
    return 0;
  }

  // Single pass: configured dataset if any, otherwise the stored patterns.
  NamedPatterns data;
  if (cfg.has("data.source") || cfg.has("data.images")) {
    data = load_dataset(cfg, io.out);
  } else {
    for (const auto& entry : lm.model.registry) {
      data.patterns.push_back(entry.pattern);
      data.ids.push_back(entry.pattern_id);
    }
  }
  if (!data.patterns.empty() && data.patterns[0].size() != d) {
    results["error"] = {{"type", "dimension"},
                        {"message", "input dimension " +
                                        std::to_string(data.patterns[0].size()) +
                                        " does not match the model (" +
                                        std::to_string(d) + ")"}};
    finish_run(io, cfg, results);
    return 2;
  }

  double radius = cfg.get_double("infer.radius", 0.0);
  json inputs = json::array();
  for (std::size_t k = 0; k < data.patterns.size(); ++k) {
    const std::string& id = data.ids[k];
    Eigen::VectorXd probe = radius > 0.0
                                ? corrupt(data.patterns[k], radius, mix_seed(seed, k, 0, 0))
                                : data.patterns[k];
    json entry = {{"id", id}};
    try {
      InferenceResult res = infer_pattern(lm.model, net, {probe, id}, session);
      entry["similarity"] = res.similarity;
      entry["support"] = support_json(res.matched_support);
      entry["converged"] = res.converged;
      std::string rid = retrieved_id(lm.model, res.matched_support);
      if (!rid.empty()) entry["retrieved"] = rid;
      io.log("inferred " + id + " -> " + (rid.empty() ? "(unmatched)" : rid));
    } catch (const std::exception& e) {
      entry["error"] = e.what();
      io.log("inference failed on " + id + ": " + e.what());
    }
    inputs.push_back(entry);
  }
  results["inputs"] = inputs;
  results["radius"] = radius;
  finish_run(io, cfg, results);
  return 0;
}

namespace {

json side_json(const SideCertificate& side) {
  if (!side.exists) return json{{"exists", false}};
  return json{{"exists", true},
              {"r", side.r},
              {"alpha", side.alpha},
              {"beta", side.beta},
              {"target_outside", side.target_outside}};
}

}  // namespace

int cmd_certify(const RunConfig& cfg) {
  RunDirs io = open_run(cfg, "certify");
  LoadedModel lm = load_model(model_path_from(cfg, io));
  Network net = build_network(lm.params);

  std::string method = cfg.get_str("method", "both");
  if (method != "lp" && method != "sdp" && method != "both")
    throw UsageError("method must be lp, sdp, or both (got `" + method + "`)");
  bool do_lp = method != "sdp";
  bool do_sdp = method != "lp";

  json results = base_results("certify");
  results["method"] = method;

  FiFeasibility fi = fi_parameters(lm.params);
  if (do_lp)
    results["lp_levels"] = {{"feasible", fi.feasible},
                            {"alpha_min", fi.alpha_min},
                            {"alpha_max", fi.alpha_max}};

  LpOptions opts;
  opts.joint = cfg.get_bool("certify.joint", true);
  SdpSearchConfig scfg;
  scfg.grid_points = cfg.get_int("certify.sdp_grid", scfg.grid_points);

  int trials = cfg.get_int("certify.trials", 0);
  double rho = cfg.get_double("certify.rho", 0.99);
  SessionConfig session = session_from(cfg);
  std::uint64_t seed = cfg.get_u64("seed", 0);

  std::vector<double> lp_radii, sdp_radii;
  json patterns = json::array();
  for (int m = 1; m <= static_cast<int>(lm.model.registry.size()); ++m) {
    const RegistryEntry& reg = lm.model.registry[m - 1];
    json entry = {{"index", m}, {"id", reg.pattern_id}};

    if (do_lp) {
      json lpj;
      if (!fi.feasible) {
        lpj["r"] = 0.0;
        lpj["reason"] =
            "no forward-invariant level band exists for these network parameters";
      } else {
        try {
          LpCertificate cert = certify_lp(net, lm.model, m, opts);
          lpj["r"] = cert.r;
          lpj["toward_previous"] = side_json(cert.toward_previous);
          lpj["toward_next"] = side_json(cert.toward_next);
          lpj["single_sided"] =
              !(cert.toward_previous.exists && cert.toward_next.exists);
          if (cert.r == 0.0)
            lpj["reason"] = "encoded pattern does not sit inside the basin polyhedron";
          if (trials > 0 && cert.r > 0.0) {
            ValidationReport rep =
                validate_certificate(net, lm.model, m, cert.r, rho, trials, seed, session);
            lpj["validation"] = {{"trials", rep.trials},
                                 {"successes", rep.successes},
                                 {"accuracy", rep.accuracy},
                                 {"rho", rho}};
          }
        } catch (const CertificationError& e) {
          lpj["r"] = 0.0;
          lpj["reason"] = e.what();
        }
      }
      lp_radii.push_back(lpj["r"].get<double>());
      entry["lp"] = lpj;
    }

    if (do_sdp) {
      json sj;
      try {
        ShiftedSystem sys = shift_about(net, reg.attractor);
        SdpSearchOutcome outcome = certify_sdp(sys, lm.model, scfg);
        sj["grid"] = {{"feasible", outcome.feasible_points},
                      {"infeasible", outcome.infeasible_points},
                      {"solver_failures", outcome.solver_failures}};
        if (outcome.certificate) {
          const SdpCertificate& cert = *outcome.certificate;
          sj["r"] = cert.r;
          sj["alpha"] = cert.alpha;
          sj["t"] = cert.t;
          sj["margins"] = {cert.margins(0), cert.margins(1), cert.margins(2)};
          if (trials > 0 && cert.r > 0.0) {
            ValidationReport rep =
                validate_certificate(net, lm.model, m, cert.r, rho, trials, seed, session);
            sj["validation"] = {{"trials", rep.trials},
                                {"successes", rep.successes},
                                {"accuracy", rep.accuracy},
                                {"rho", rho}};
          }
        } else {
          sj["r"] = 0.0;
          sj["reason"] = "no domain radius produced a verifiable certificate";
        }
      } catch (const CertificationError& e) {
        sj["r"] = 0.0;
        sj["reason"] = e.what();
      } catch (const num::NumericsError& e) {
        sj["r"] = 0.0;
        sj["reason"] = std::string("solver failure: ") + e.what();
      }
      sdp_radii.push_back(sj["r"].get<double>());
      entry["sdp"] = sj;
    }

    io.log("certified pattern " + std::to_string(m) + " (" + reg.pattern_id + ")");
    patterns.push_back(entry);
  }
  results["patterns"] = patterns;
  if (do_lp && !lp_radii.empty()) results["lp_median"] = median(lp_radii);
  if (do_sdp && !sdp_radii.empty()) results["sdp_median"] = median(sdp_radii);

  if (method == "both" && !patterns.empty()) {
    std::ostringstream csv, table;
    csv << "pattern,r_lp,r_sdp\n";
    table << "pattern               r_lp        r_sdp\n";
    for (std::size_t k = 0; k < patterns.size(); ++k) {
      std::string id = patterns[k]["id"].get<std::string>();
      csv << id << "," << round_trip(lp_radii[k]) << "," << round_trip(sdp_radii[k])
          << "\n";
      char line[96];
      std::snprintf(line, sizeof line, "%-18s %10.6f  %10.6f\n", id.c_str(), lp_radii[k],
                    sdp_radii[k]);
      table << line;
    }
    char line[96];
    std::snprintf(line, sizeof line, "%-18s %10.6f  %10.6f\n", "median",
                  median(lp_radii), median(sdp_radii));
    table << line;
    std::ofstream csvf(io.out / "comparison.csv", std::ios::binary);
    csvf << csv.str();
    std::cout << table.str();
    results["comparison"] = "comparison.csv";
  }

  finish_run(io, cfg, results);
  // An LP-only run on parameters with no invariant band has nothing to
  // certify anywhere; that is a domain failure.  With `both` the SDP half
  // still produced output.
  return (method == "lp" && !fi.feasible) ? 2 : 0;
}

int cmd_benchmark(const RunConfig& cfg) {
  RunDirs io = open_run(cfg, "benchmark");
  CstlnParams params = params_from(cfg);
  SessionConfig session = session_from(cfg);
  int sequences = cfg.get_int("benchmark.sequences", 20);
  int per = cfg.get_int("benchmark.patterns", 6);
  int dim = cfg.get_int("data.dim", 784);
  std::uint64_t seed = cfg.get_u64("seed", 0);
  unsigned hw = std::thread::hardware_concurrency();
  int workers = cfg.get_int("benchmark.workers",
                            int(std::min<unsigned>(hw ? hw : 1, unsigned(sequences))));
  workers = std::clamp(workers, 1, std::max(1, sequences));
  LpOptions opts;
  opts.joint = cfg.get_bool("certify.joint", true);
  SdpSearchConfig scfg;
  scfg.grid_points = cfg.get_int("certify.sdp_grid", scfg.grid_points);

  struct Row {
    int pattern = 0;
    std::string id;
    double r_lp = 0.0, r_sdp = 0.0;
  };
  struct SeqResult {
    std::vector<Row> rows;
    std::string error;
  };
  std::vector<SeqResult> bySeq(sequences);
  std::atomic<int> next{0};

  auto work = [&] {
    for (;;) {
      int s = next.fetch_add(1);
      if (s >= sequences) return;
      SeqResult& res = bySeq[s];
      try {
        Network net = build_network(params);
        PatternSet corpus = synthetic_patterns(per, dim, seed + 7919ull * (s + 1));
        MemoryModel model = make_model(dim, params.n);
        SessionConfig sess = session;
        sess.integ.rng_seed = mix_seed(seed, std::uint64_t(s), 0, 0);
        for (int k = 0; k < per; ++k) {
          std::string id = "s" + std::to_string(s) + "-p" + std::to_string(k + 1);
          learn_pattern(model, net, {corpus.patterns[k], id}, sess);
        }
        for (int m = 1; m <= per; ++m) {
          Row row;
          row.pattern = m;
          row.id = model.registry[m - 1].pattern_id;
          try {
            row.r_lp = certify_lp(net, model, m, opts).r;
          } catch (const CertificationError&) {
            row.r_lp = 0.0;
          }
          try {
            ShiftedSystem sys = shift_about(net, model.registry[m - 1].attractor);
            SdpSearchOutcome outcome = certify_sdp(sys, model, scfg);
            row.r_sdp = outcome.certificate ? outcome.certificate->r : 0.0;
          } catch (const std::exception&) {
            row.r_sdp = 0.0;
          }
          res.rows.push_back(row);
        }
      } catch (const std::exception& e) {
        res.rows.clear();
        res.error = e.what();
      }
    }
  };

  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << "sequence,pattern,id,r_lp,r_sdp\n";
  std::vector<double> lp_all, sdp_all;
  json failures = json::array();
  int ok = 0;
  for (int s = 0; s < sequences; ++s) {
    if (!bySeq[s].error.empty()) {
      failures.push_back({{"sequence", s}, {"message", bySeq[s].error}});
      io.log("sequence " + std::to_string(s) + " failed: " + bySeq[s].error);
      continue;
    }
    ++ok;
    for (const Row& row : bySeq[s].rows) {
      csv << s << "," << row.pattern << "," << row.id << "," << round_trip(row.r_lp)
          << "," << round_trip(row.r_sdp) << "\n";
      lp_all.push_back(row.r_lp);
      sdp_all.push_back(row.r_sdp);
    }
  }
  std::ofstream csvf(io.out / "benchmark.csv", std::ios::binary);
  csvf << csv.str();

  json results = base_results("benchmark");
  results["sequences"] = sequences;
  results["patterns_per_sequence"] = per;
  results["completed"] = ok;
  results["csv"] = "benchmark.csv";
  if (!lp_all.empty()) {
    results["lp_median"] = median(lp_all);
    results["sdp_median"] = median(sdp_all);
    results["lp_median_exceeds_sdp"] = median(lp_all) > median(sdp_all);
  }
  if (!failures.empty()) results["failures"] = failures;
  finish_run(io, cfg, results);
  return ok > 0 ? 0 : 3;
}

namespace {

std::vector<std::vector<double>> read_csv_rows(const fs::path& path, int columns,
                                               int text_column = -1) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<double> row;
    for (int cidx = 0; std::getline(ls, cell, ','); ++cidx) {
      if (cidx == text_column) continue;
      row.push_back(std::stod(cell));
    }
    if (static_cast<int>(row.size()) == columns) rows.push_back(row);
  }
  return rows;
}

// PCA pair of the stored attractors with sign pinned, or coordinate axes
// when fewer than two directions are resolved.
std::pair<Eigen::VectorXd, Eigen::VectorXd> projection_basis(const MemoryModel& model,
                                                             int n) {
  auto pin_sign = [](Eigen::VectorXd v) {
    int imax = 0;
    for (int i = 1; i < v.size(); ++i)
      if (std::abs(v(i)) > std::abs(v(imax))) imax = i;
    if (v(imax) < 0) v = -v;
    return v;
  };
  Eigen::VectorXd u1 = Eigen::VectorXd::Unit(n, 0);
  Eigen::VectorXd u2 = Eigen::VectorXd::Unit(n, 1);
  if (model.registry.empty()) return {u1, u2};

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  for (const auto& e : model.registry) mean += e.attractor;
  mean /= double(model.registry.size());
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : model.registry) {
    Eigen::VectorXd z = e.attractor - mean;
    C += z * z.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  double l1 = es.eigenvalues()(n - 1);
  double l2 = n >= 2 ? es.eigenvalues()(n - 2) : 0.0;
  if (l1 > 1e-12) u1 = pin_sign(es.eigenvectors().col(n - 1));
  else {
    // single stored attractor: span its own support
    const auto& idx = model.registry[0].support.indices;
    u1 = Eigen::VectorXd::Unit(n, idx.empty() ? 0 : idx.front() - 1);
  }
  if (l2 > 1e-12) {
    u2 = pin_sign(es.eigenvectors().col(n - 2));
  } else {
    // complete with the coordinate axis least aligned with u1
    int best = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(u1(i)) < std::abs(u1(best))) best = i;
    Eigen::VectorXd e = Eigen::VectorXd::Unit(n, best);
    u2 = (e - u1 * u1.dot(e)).normalized();
    u2 = pin_sign(u2);
  }
  return {u1, u2};
}

std::string basis_string(const Eigen::VectorXd& u) {
  std::string s = "[";
  for (int i = 0; i < u.size(); ++i) {
    if (i) s += ", ";
    char buf[24];
    std::snprintf(buf, sizeof buf, "%.6g", u(i));
    s += buf;
  }
  return s + "]";
}

void plot_projection(const fs::path& dir, const RunConfig& cfg, const LoadedModel& lm,
                     const Trajectory& traj) {
  const int n = lm.params.n;
  Network net = build_network(lm.params);
  auto [u1, u2] = projection_basis(lm.model, n);

  auto project = [&](const Eigen::VectorXd& x) {
    return std::pair<double, double>{u1.dot(x), u2.dot(x)};
  };

  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  auto grow = [&](std::pair<double, double> p) {
    xlo = std::min(xlo, p.first);
    xhi = std::max(xhi, p.first);
    ylo = std::min(ylo, p.second);
    yhi = std::max(yhi, p.second);
  };
  for (const auto& x : traj.states) grow(project(x));
  for (const auto& e : lm.model.registry) grow(project(e.attractor));
  double padx = std::max(0.1 * (xhi - xlo), 0.05);
  double pady = std::max(0.1 * (yhi - ylo), 0.05);
  xlo -= padx; xhi += padx; ylo -= pady; yhi += pady;

  const int res = cfg.get_int("plot.grid", 200);
  IntegratorConfig gi;
  gi.dt = cfg.get_double("plot.grid_dt", 1e-2);
  gi.t_max = cfg.get_double("plot.grid_t_max", 30.0);
  gi.settle_tol = 1e-6;
  gi.settle_window = 50;

  const double W = 640, H = 640;
  LinearMap mx{xlo, xhi, 80, W - 30};
  LinearMap my{ylo, yhi, H - 60, 30};
  SvgCanvas svg(W, H);
  svg.comment("projection basis u1=" + basis_string(u1) + " u2=" + basis_string(u2));
  svg.comment("basin grid " + std::to_string(res) + "x" + std::to_string(res) +
              ", settle dt=" + round_trip(gi.dt) + " t_max=" + round_trip(gi.t_max));

  // Basin backdrop: lift each grid point into the positive orthant, settle
  // it, and colour by the support it lands on.
  Eigen::VectorXd base = Eigen::VectorXd::Zero(n);
  for (const auto& e : lm.model.registry) base += e.attractor;
  if (!lm.model.registry.empty()) base /= double(lm.model.registry.size());
  double c1 = u1.dot(base), c2 = u2.dot(base);

  std::map<std::string, std::size_t> color_of;
  double cw = (mx.px_hi - mx.px_lo) / res;
  double ch = (my.px_lo - my.px_hi) / res;
  for (int gy = 0; gy < res; ++gy) {
    double p2 = ylo + (gy + 0.5) / res * (yhi - ylo);
    for (int gx = 0; gx < res; ++gx) {
      double p1 = xlo + (gx + 0.5) / res * (xhi - xlo);
      Eigen::VectorXd x0 =
          (base + (p1 - c1) * u1 + (p2 - c2) * u2).cwiseMax(0.0);
      SettleResult sr = settle(net, x0, gi);
      std::string key = sr.converged ? sr.support.to_string() : "(divergent)";
      auto [it, fresh] = color_of.emplace(key, color_of.size());
      svg.rect(mx.px_lo + gx * cw, my.px_lo - (gy + 1) * ch, cw + 0.5, ch + 0.5,
               palette(it->second));
      (void)fresh;
    }
  }

  draw_frame(svg, mx, my, "pc1", "pc2");

  std::vector<std::pair<double, double>> line;
  for (const auto& x : traj.states) {
    auto [a, b] = project(x);
    line.emplace_back(mx(a), my(b));
  }
  svg.polyline(line, "#111", 1.5);
  if (!line.empty()) {
    svg.circle(line.front().first, line.front().second, 4, "#fff");
    svg.circle(line.front().first, line.front().second, 2.5, "#111");
    svg.circle(line.back().first, line.back().second, 3.5, "#d62728");
  }
  for (const auto& e : lm.model.registry) {
    auto [a, b] = project(e.attractor);
    svg.circle(mx(a), my(b), 3, "#000");
    svg.text(mx(a) + 5, my(b) - 5, e.pattern_id, 10);
  }
  double ly = 30;
  for (const auto& [key, idx] : color_of) {
    svg.rect(W - 150, ly, 10, 10, palette(idx));
    svg.text(W - 136, ly + 9, key, 10);
    ly += 14;
  }
  svg.write((dir / "projection.svg").string());
}

void plot_rates(const fs::path& dir, const Trajectory& traj) {
  const int n = traj.states.empty() ? 0 : static_cast<int>(traj.states[0].size());
  const double W = 760;
  const double band = 56, top = 28;
  const double H = top + n * band + 50;
  SvgCanvas svg(W, H);

  double t_lo = traj.times.front(), t_hi = traj.times.back();
  if (t_hi <= t_lo) t_hi = t_lo + 1;
  double gmax = 1e-9;
  for (const auto& x : traj.states) gmax = std::max(gmax, x.maxCoeff());
  LinearMap mt{t_lo, t_hi, 70, W - 20};

  for (int i = 0; i < n; ++i) {
    double base = top + (i + 1) * band - 8;
    svg.line(mt.px_lo, base, mt.px_hi, base, "#ccc", 0.5);
    svg.text(mt.px_lo - 8, base, "x" + std::to_string(i + 1), 11, "end");
    std::vector<std::pair<double, double>> pts;
    pts.reserve(traj.times.size());
    for (std::size_t k = 0; k < traj.times.size(); ++k)
      pts.emplace_back(mt(traj.times[k]),
                       base - traj.states[k](i) / gmax * (band - 14));
    svg.polyline(pts, palette(std::size_t(i)), 1.2);
  }
  double axis_y = top + n * band + 4;
  svg.line(mt.px_lo, axis_y, mt.px_hi, axis_y, "#333", 1.0);
  for (int k = 0; k <= 5; ++k) {
    double tv = t_lo + (t_hi - t_lo) * k / 5;
    char buf[24];
    std::snprintf(buf, sizeof buf, "%.3g", tv);
    svg.line(mt(tv), axis_y, mt(tv), axis_y + 4, "#333", 1.0);
    svg.text(mt(tv), axis_y + 16, buf, 10, "middle");
  }
  svg.text((mt.px_lo + mt.px_hi) / 2, axis_y + 32, "time", 12, "middle");
  svg.write((dir / "rates.svg").string());
}

void plot_radius_accuracy(const fs::path& dir) {
  auto rows = read_csv_rows(dir / "accuracy_vs_radius.csv", 4);
  double r_hi = 1e-9;
  for (const auto& row : rows) r_hi = std::max(r_hi, row[0]);

  const double W = 520, H = 360;
  SvgCanvas svg(W, H);
  LinearMap mx{0, r_hi, 70, W - 24};
  LinearMap my{0, 1.05, H - 50, 24};
  draw_frame(svg, mx, my, "corruption radius", "retrieval accuracy");
  std::vector<std::pair<double, double>> pts;
  for (const auto& row : rows) pts.emplace_back(mx(row[0]), my(row[3]));
  svg.polyline(pts, palette(0), 1.5);
  for (const auto& p : pts) svg.circle(p.first, p.second, 2.5, palette(0));
  svg.write((dir / "radius_accuracy.svg").string());
}

void plot_box(const fs::path& dir) {
  // drop the id column (index 2), keeping sequence, pattern, r_lp, r_sdp
  auto rows = read_csv_rows(dir / "benchmark.csv", 4, 2);
  std::vector<double> lp, sdp;
  for (const auto& row : rows) {
    lp.push_back(row[2]);
    sdp.push_back(row[3]);
  }

  const double W = 420, H = 380;
  SvgCanvas svg(W, H);
  double v_hi = 1e-9;
  for (double v : lp) v_hi = std::max(v_hi, v);
  for (double v : sdp) v_hi = std::max(v_hi, v);
  LinearMap my{0, v_hi * 1.1, H - 50, 30};
  LinearMap mx{0, 3, 70, W - 24};
  draw_frame(svg, mx, my, "", "certified radius");

  auto box = [&](double center, std::vector<double> v, std::size_t color,
                 const std::string& label) {
    if (v.empty()) return;
    double q1 = quantile(v, 0.25), q2 = quantile(v, 0.5), q3 = quantile(v, 0.75);
    double lo = *std::min_element(v.begin(), v.end());
    double hi = *std::max_element(v.begin(), v.end());
    double half = 0.3;
    svg.line(mx(center), my(lo), mx(center), my(q1), "#333", 1.0);
    svg.line(mx(center), my(q3), mx(center), my(hi), "#333", 1.0);
    svg.line(mx(center - half / 2), my(lo), mx(center + half / 2), my(lo), "#333", 1.0);
    svg.line(mx(center - half / 2), my(hi), mx(center + half / 2), my(hi), "#333", 1.0);
    svg.rect(mx(center - half), my(q3), mx(center + half) - mx(center - half),
             my(q1) - my(q3), palette(color), "#333", 1.0);
    svg.line(mx(center - half), my(q2), mx(center + half), my(q2), "#000", 1.5);
    svg.text(mx(center), H - 28, label + " (n=" + std::to_string(v.size()) + ")", 11,
             "middle");
  };
  box(1.0, lp, 0, "LP");
  box(2.0, sdp, 1, "SDP");
  svg.write((dir / "lp_sdp_box.svg").string());
}

}  // namespace

int cmd_plot(const RunConfig& cfg) {
  RunDirs io = open_run(cfg, "plot");
  const fs::path dir = io.out;
  std::vector<std::string> produced, missing;

  std::string tname = cfg.get_str("plot.trajectory", "");
  Trajectory traj;
  if (tname.empty()) {
    std::vector<std::string> found;
    if (fs::exists(dir))
      for (const auto& e : fs::directory_iterator(dir)) {
        std::string f = e.path().filename().string();
        if (f.rfind("trajectory_", 0) == 0 && f.size() > 4 &&
            f.substr(f.size() - 4) == ".csv")
          found.push_back(f);
      }
    std::sort(found.begin(), found.end());
    // The first stored pattern binds without moving, so its trajectory file
    // has no rows; pick the first recording with actual motion in it.
    for (const std::string& f : found) {
      Trajectory t = read_trajectory_csv((dir / f).string());
      if (!t.states.empty()) {
        tname = f;
        traj = std::move(t);
        break;
      }
    }
  } else if (fs::exists(dir / tname)) {
    traj = read_trajectory_csv((dir / tname).string());
  }
  bool have_traj = !traj.states.empty();
  std::string model_path = cfg.get_str("model", (dir / "model.tlnm").string());
  bool have_model = fs::exists(model_path);

  if (have_traj && have_model) {
    LoadedModel lm = load_model(model_path);
    if (lm.model.registry.empty()) {
      missing.push_back("projection.svg: model has no stored patterns");
    } else {
      plot_projection(dir, cfg, lm, traj);
      produced.push_back("projection.svg");
      io.log("projection.svg from " + tname);
    }
  } else {
    missing.push_back("projection.svg: needs a trajectory_*.csv and model.tlnm");
  }

  if (have_traj) {
    plot_rates(dir, traj);
    produced.push_back("rates.svg");
    io.log("rates.svg from " + tname);
  } else {
    missing.push_back("rates.svg: needs a trajectory_*.csv with rows in it");
  }

  if (fs::exists(dir / "accuracy_vs_radius.csv")) {
    plot_radius_accuracy(dir);
    produced.push_back("radius_accuracy.svg");
  } else {
    missing.push_back("radius_accuracy.svg: needs accuracy_vs_radius.csv");
  }

  if (fs::exists(dir / "benchmark.csv")) {
    plot_box(dir);
    produced.push_back("lp_sdp_box.svg");
  } else {
    missing.push_back("lp_sdp_box.svg: needs benchmark.csv");
  }

  json results = base_results("plot");
  results["produced"] = produced;
  results["missing"] = missing;
  finish_run(io, cfg, results);
  for (const std::string& m : missing) std::cerr << "missing input: " << m << "\n";
  return produced.empty() ? 2 : 0;
}

}  // namespace tlnmem::cli
