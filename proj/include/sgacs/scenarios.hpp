#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sgacs/background.hpp"
#include "sgacs/metric.hpp"
#include "sgacs/states.hpp"

namespace sgacs {

// Flat `section.key = value` configuration. '#' starts a comment.
class Config {
 public:
  static Config parse(std::istream& is, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  // "section.key=value"
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& source() const { return source_; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string str(const std::string& key) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  double num(const std::string& key) const;
  double num(const std::string& key, double fallback) const;
  long integer(const std::string& key) const;
  long integer(const std::string& key, long fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> list(const std::string& key) const;  // comma separated

 private:
  std::map<std::string, std::string> values_;
  std::string source_ = "<config>";
};

// Throws ConfigError naming every unknown key, then every missing key for
// the scenario type and background family in the config.
void validate_config(const Config& cfg);
std::vector<std::string> known_keys();
std::vector<std::string> required_keys(const Config& cfg);

Grid grid_from_config(const Config& cfg);

struct BuiltBackground {
  Background bg;
  std::vector<double> gpe_energy_history;  // empty unless family = gpe
  bool gpe_monotone = true;
  std::map<std::string, std::string> notes;
};

BuiltBackground build_background(const Config& cfg);

struct Figure1Result {
  Grid grid;
  double w = 1.0;
  double clip = 0.5;
  ScalarField magnitude;        // |grad theta| / sqrt 2, core zeroed, NaN where singular
  ScalarField display;          // magnitude clipped at `clip`
  VectorField velocity;         // grad theta
  std::vector<std::uint8_t> ergo, quiet, singular, core;
  std::vector<Polyline> ergosurface;
  ScalarField superposition_difference;  // wrapped theta - 1/2 Arg(phi0^2 + w^2 phi1^2)
  double axis_residual = 0.0;   // max |sin 2 theta| on the axes, r > core, off-singularity
  bool mask_symmetric = true;   // ergo mask under (x1, x2) -> (-x1, -x2)
  double ergo_area = 0.0;
  double quiet_area = 0.0;
  double max_display = 0.0;
  double max_core_display = 0.0;
};

// Needs a 2-D grid covering [-4, 4]^2.
Figure1Result figure1(double w, const Grid& g, double clip = 0.5, double core_radius = 1.0, double window = 3.0);

// P2 graymap. Value v maps to round(254 min(v, clip) / clip) for v >= 0;
// NaN cells are 255 (white). Rows run from the top (largest x2) down.
void write_pgm(std::ostream& os, const ScalarField& f, double clip);
void write_mask_pgm(std::ostream& os, const Grid& g, const std::vector<std::uint8_t>& mask);
// CSV `x,y,vx,vy,magnitude` every `stride` cells along each axis.
void write_quiver_csv(std::ostream& os, const VectorField& v, int stride);

struct RunResult {
  std::filesystem::path dir;
  std::vector<std::string> files;             // relative, sorted
  std::map<std::string, std::string> manifest;
  std::uint64_t hash = 0;
  bool pass = true;
};

// Runs the scenario described by cfg (scenario.type selects the pipeline)
// and writes the bundle into `dir`, which must exist.
RunResult run_scenario(const Config& cfg, const std::filesystem::path& dir);

// FNV-1a over sorted relative paths and file bytes; bundle.hash and
// diagnostics.txt are skipped.
std::uint64_t bundle_hash(const std::filesystem::path& dir);
std::string hex64(std::uint64_t v);

}  // namespace sgacs
