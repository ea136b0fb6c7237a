#include "sgacs/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "sgacs/scenarios.hpp"

namespace sgacs {

namespace fs = std::filesystem;

namespace {

struct Invocation {
  std::string config;
  std::string out;
  std::vector<std::string> sets;
  bool force = false;
  int verbose = 0;
  long seed = -1;
};

void add_common(CLI::App* sub, Invocation& inv) {
  sub->add_option("--config", inv.config, "scenario config file (section.key = value)");
  sub->add_option("--out", inv.out, "output directory (created or empty)");
  sub->add_option("--set", inv.sets, "override section.key=value")->take_all();
  sub->add_flag("--force", inv.force, "clear a non-empty output directory");
  sub->add_flag("-v,--verbose", inv.verbose, "print the manifest");
  sub->add_option("--seed", inv.seed, "random seed (scenario.seed)");
}

Config figure1_defaults() {
  Config c;
  c.set("scenario.name", "figure1");
  c.set("scenario.type", "figure1");
  c.set("grid.dims", "2");
  c.set("grid.n", "161");
  c.set("grid.lo", "-4");
  c.set("grid.hi", "4");
  c.set("grid.bc", "fixed_value");
  return c;
}

Config assemble(const std::string& sub, const Invocation& inv) {
  Config cfg;
  if (!inv.config.empty()) {
    cfg = Config::load(inv.config);
  } else if (sub == "figure1") {
    cfg = figure1_defaults();
  }
  for (const auto& s : inv.sets) cfg.set(s);
  if (inv.seed >= 0) cfg.set("scenario.seed", std::to_string(inv.seed));
  static const std::map<std::string, std::string> forced = {
      {"background", "background"}, {"metric", "metric"}, {"evolve", "evolve"}, {"fock", "fock"}, {"figure1", "figure1"}};
  if (auto it = forced.find(sub); it != forced.end()) {
    if (cfg.has("scenario.type") && cfg.str("scenario.type") != it->second && !inv.config.empty()) {
      // metric is a superset of background; allow running a background config through it
      const bool upgrade = sub == "metric" && cfg.str("scenario.type") == "background";
      if (!upgrade)
        throw ConfigError("scenario.type: config is '" + cfg.str("scenario.type") + "' but subcommand is '" + sub + "'");
    }
    cfg.set("scenario.type", it->second);
  }
  return cfg;
}

fs::path output_dir(const Config& cfg, const Invocation& inv) {
  if (!inv.out.empty()) return inv.out;
  if (cfg.has("output.dir")) return cfg.str("output.dir");
  const std::string name = cfg.str("scenario.name", "scenario");
  if (const char* root = std::getenv("SGACS_OUTPUT_ROOT"); root && *root) return fs::path(root) / name;
  return fs::path("out") / name;
}

void prepare_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw InputError("output path '" + dir.string() + "' is not a directory");
    if (!fs::is_empty(dir)) {
      if (!force) throw InputError("output directory '" + dir.string() + "' is not empty (use --force)");
      for (const auto& e : fs::directory_iterator(dir)) fs::remove_all(e.path());
    }
  }
  fs::create_directories(dir);
}

int validate(const Config& cfg, std::ostream& out) {
  validate_config(cfg);
  const std::string type = cfg.str("scenario.type");
  if (type == "fock" || type == "figure1") {
    out << "config ok (" << type << ")\n";
    return 0;
  }
  const auto built = build_background(cfg);
  ValidityOptions vo;
  vo.kT = cfg.num("background.kT", 0.0);
  const auto rep = validate_assumptions(built.bg, vo);
  write_report_csv(out, rep);
  for (const auto& n : rep.notes) out << "note: " << n << '\n';
  if (rep.all_pass()) return 0;
  if (cfg.has("scenario.waiver")) {
    out << "waived: " << cfg.str("scenario.waiver") << '\n';
    return 0;
  }
  return 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  CLI::App app{"analogue-spacetime sine-Gordon toolkit"};
  app.require_subcommand(1);
  Invocation inv;
  const char* names[] = {"background", "metric", "evolve", "fock", "figure1", "validate", "run"};
  const char* help[] = {"build a background and its validity report", "background plus acoustic metric dumps",
                        "sine-Gordon or coupled-plane evolution", "truncated Fock states and observables",
                        "Fig. 1 velocity field, heatmap and ergoregion", "check a config and its assumptions",
                        "run the scenario named by scenario.type"};
  for (int i = 0; i < 7; ++i) add_common(app.add_subcommand(names[i], help[i]), inv);

  std::string sub = "none";
  int code = 0;
  fs::path dir;
  auto finish = [&](int c) {
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    out << "RESULT " << sub << ' ' << (c == 0 ? "pass" : "fail") << ' ' << ms << '\n';
    return c;
  };

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return finish(1);
  }
  for (auto* s : app.get_subcommands()) sub = s->get_name();

  try {
    Config cfg = assemble(sub, inv);
    if (sub == "validate") return finish(validate(cfg, out));
    validate_config(cfg);
    dir = output_dir(cfg, inv);
    prepare_dir(dir, inv.force);
    const auto r = run_scenario(cfg, dir);
    if (inv.verbose)
      for (const auto& [k, v] : r.manifest) out << k << '=' << v << '\n';
    out << "BUNDLE " << dir.generic_string() << ' ' << hex64(r.hash) << '\n';
    if (!r.pass) err << "one or more scenario checks failed; see " << (dir / "manifest.txt").string() << '\n';
    code = r.pass ? 0 : 1;
  } catch (const InputError& e) {
    err << "validation error: " << e.what() << '\n';
    code = 1;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << '\n';
    if (!dir.empty() && fs::is_directory(dir)) {
      std::ofstream d(dir / "diagnostics.txt");
      d << "subcommand=" << sub << "\nerror=" << e.what() << '\n';
      if (dynamic_cast<const ConvergenceError*>(&e))
        d << "residual=" << dynamic_cast<const ConvergenceError&>(e).residual() << '\n';
      err << "diagnostics written to " << (dir / "diagnostics.txt").string() << '\n';
    }
    code = 2;
  }
  return finish(code);
}

}  // namespace sgacs
