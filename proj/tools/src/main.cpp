#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <tlnmem/data_io.hpp>
#include <tlnmem/dynamics.hpp>
#include <tlnmem/memory.hpp>
#include <tlnmem/numerics.hpp>
#include <tlnmem/roa.hpp>

#include "commands.hpp"
#include "run_config.hpp"

using namespace tlnmem;
using namespace tlnmem::cli;

int main(int argc, char** argv) {
  CLI::App app{"chain attractor memory workbench"};
  app.require_subcommand(1);

  struct Flags {
    std::string config, out, images, labels, method, model;
    std::uint64_t seed = 0;
  } f;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "key = value configuration file");
    sub->add_option("--seed", f.seed, "RNG seed (overrides the config)");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--data-images", f.images, "IDX image file");
    sub->add_option("--data-labels", f.labels, "IDX label file");
    sub->add_option("--method", f.method, "certification method: lp, sdp, or both");
    sub->add_option("--model", f.model, "model file (default <out>/model.tlnm)");
  };

  add_common(app.add_subcommand("learn", "store a pattern sequence into a fresh model"));
  add_common(app.add_subcommand("infer", "complete (possibly corrupted) inputs"));
  add_common(app.add_subcommand("certify", "certified noise radii per stored pattern"));
  add_common(app.add_subcommand(
      "benchmark", "learn and certify many random sequences, compare LP vs SDP"));
  add_common(app.add_subcommand("plot", "render SVG figures from a results directory"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    RunConfig cfg =
        f.config.empty() ? RunConfig{} : RunConfig::from_file(f.config);
    if (sub->count("--seed")) cfg.set("seed", std::to_string(f.seed));
    if (!f.out.empty()) cfg.set("out", f.out);
    if (!f.images.empty()) {
      cfg.set("data.images", f.images);
      cfg.set("data.source", "idx");
    }
    if (!f.labels.empty()) cfg.set("data.labels", f.labels);
    if (!f.method.empty()) cfg.set("method", f.method);
    if (!f.model.empty()) cfg.set("model", f.model);

    const std::string name = sub->get_name();
    if (name == "learn") return cmd_learn(cfg);
    if (name == "infer") return cmd_infer(cfg);
    if (name == "certify") return cmd_certify(cfg);
    if (name == "benchmark") return cmd_benchmark(cfg);
    return cmd_plot(cfg);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DivergenceError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const num::NumericsError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const MemoryError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CertificationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataIoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected failure: " << e.what() << "\n";
    return 3;
  }
}
