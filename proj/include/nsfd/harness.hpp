#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include "json.hpp"
#include "nsfd/csv.hpp"
#include "nsfd/denominator.hpp"
#include "nsfd/errors.hpp"
#include "nsfd/ivp.hpp"
#include "nsfd/locus.hpp"
#include "nsfd/tfde.hpp"

#ifndef NSFD_VERSION
#define NSFD_VERSION "0.0.0"
#endif

namespace nsfd::harness {

inline constexpr const char* kOutputEnv = "NSFD_OUTPUT_DIR";

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class SchemaMismatchError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using Params = std::map<std::string, std::string>;

struct ParamInfo {
  std::string_view key;
  std::string_view help;
};

/// Every key accepted by --set. List values are comma separated, DF lists ';' separated.
inline constexpr ParamInfo kParamKeys[] = {
    {"problem", "ex1 | ex2 (scalar IVP), ex3 (1D diffusion), ex4 (2D diffusion)"},
    {"alpha", "fractional order(s) in (0,1), comma separated"},
    {"N", "time steps; a list for IVP tables, a single value for diffusion runs"},
    {"M", "spatial subintervals per axis, comma separated"},
    {"phi", "temporal base DFs for IVP tables, ';' separated (phi=...)"},
    {"mode", "base to effective reduction for IVP tables: ratio | power"},
    {"varphi", "effective temporal DF for diffusion runs (varphi=...)"},
    {"psi", "spatial DFs, ';' separated (psi=...)"},
    {"T", "final time"},
    {"L", "domain length"},
    {"n", "locus degree"},
    {"num_samples", "locus samples on [0, 2pi)"},
    {"variant", "locus variant: as_printed | complex_division"},
    {"tau_hat", "test points on the real axis, comma separated"},
    {"N_ceiling", "largest stability-polynomial degree"},
    {"dense", "degrees 1..dense are all scanned"},
    {"stride", "degree stride above `dense`"},
};

enum class Kind { ivp_table, tfde_table, locus, rmax, frontier, custom };

struct ExperimentInfo {
  std::string id;
  Kind kind;
  std::string description;
  Params defaults;
};

namespace detail {

inline const std::string kPsiTauAlpha1 = "psi=h2;psi=4sin2-half;psi=sin2;psi=scaled-decay-sq(c=100)";
inline const std::string kPsiTauAlpha2 = "psi=sinh2-pi-half;psi=sinh2;psi=scaled-exp-sq(c=100);psi=sinh-h2";
inline const std::string kPhiBases = "phi=tau;phi=scaled-expm1(c=1000);phi=sin;phi=sinh";

inline Params ivp_defaults(const char* problem) {
  return {{"problem", problem}, {"alpha", "0.3,0.5,0.7"}, {"N", "10,20,40,80,160,320"},
          {"phi", kPhiBases},   {"mode", "ratio"},         {"T", "1"}};
}

inline Params tfde_defaults(const char* problem, const char* N, const char* varphi, const std::string& psi) {
  return {{"problem", problem}, {"alpha", "0.9"}, {"N", N}, {"M", "2,4,8,16,32"},
          {"varphi", varphi},   {"psi", psi},     {"T", "1"}, {"L", "1"}};
}

inline Params frontier_defaults(const char* M) {
  return {{"alpha", "0.9"}, {"N", "10000"}, {"L", "5.0848"}, {"T", "1"}, {"varphi", "varphi=tau-alpha"},
          {"psi", "psi=h2;psi=scaled-exp-sq(c=1)"}, {"M", M}};
}

}  // namespace detail

inline const std::vector<ExperimentInfo>& experiments() {
  static const std::vector<ExperimentInfo> list = [] {
    using namespace detail;
    const char* pw = "varphi=pow(exp-decay(lambda=100))";
    const char* ta = "varphi=tau-alpha";
    std::string m_fig3;
    for (int m = 10; m <= 240; m += 10) m_fig3 += (m_fig3.empty() ? "" : ",") + std::to_string(m);
    std::string m_front;
    for (int m = 220; m <= 236; ++m) m_front += (m_front.empty() ? "" : ",") + std::to_string(m);
    return std::vector<ExperimentInfo>{
        {"table1", Kind::ivp_table, "IVP errors, y = t^(2+a)", ivp_defaults("ex1")},
        {"table2", Kind::ivp_table, "IVP errors, y = t^2 + 1", ivp_defaults("ex2")},
        {"table3", Kind::tfde_table, "1D diffusion, varphi = tau^a, first psi set",
         tfde_defaults("ex3", "10000", ta, kPsiTauAlpha1)},
        {"table4", Kind::tfde_table, "1D diffusion, varphi = tau^a, second psi set",
         tfde_defaults("ex3", "10000", ta, kPsiTauAlpha2)},
        {"table5", Kind::tfde_table, "1D diffusion, exponential varphi, second psi set",
         tfde_defaults("ex3", "10000", pw, kPsiTauAlpha2)},
        {"table6", Kind::tfde_table, "2D diffusion, varphi = tau^a, first psi set",
         tfde_defaults("ex4", "20000", ta, kPsiTauAlpha1)},
        {"table7", Kind::tfde_table, "2D diffusion, varphi = tau^a, second psi set",
         tfde_defaults("ex4", "20000", ta, kPsiTauAlpha2)},
        // The reference values for this table are reproduced at N = 20000.
        {"table8", Kind::tfde_table, "2D diffusion, exponential varphi, second psi set",
         tfde_defaults("ex4", "20000", pw, kPsiTauAlpha2)},
        {"fig1", Kind::locus, "boundary locus curves",
         {{"alpha", "0.2,0.4,0.6,0.8"}, {"n", "100000"}, {"num_samples", "2048"}, {"variant", "as_printed"}}},
        {"fig2", Kind::rmax, "largest root modulus against degree",
         {{"alpha", "0.2,0.4,0.6,0.8"},
          {"tau_hat", "-0.5,0.5,1.5"},
          {"N_ceiling", "1000"},
          {"dense", "100"},
          {"stride", "50"}}},
        {"fig3", Kind::frontier, "errors against M on the long domain", frontier_defaults(m_fig3.c_str())},
        {"frontier", Kind::frontier, "divergence onset around the stability bound",
         frontier_defaults(m_front.c_str())},
        {"custom", Kind::custom, "user-defined run; requires problem, alpha, N", {}},
    };
  }();
  return list;
}

inline const ExperimentInfo& find_experiment(std::string_view id) {
  for (const auto& e : experiments())
    if (e.id == id) return e;
  std::string known;
  for (const auto& e : experiments()) known += " " + e.id;
  throw ConfigError("unknown experiment '" + std::string(id) + "'; known:" + known);
}

struct ExperimentConfig {
  std::string experiment;
  Params overrides;
  std::filesystem::path output_dir;
  bool emit_plots = false;

  /// Apply one `key=value` override.
  void set(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw ConfigError("override must look like key=value: '" + std::string(assignment) + "'");
    overrides[std::string(assignment.substr(0, eq))] = std::string(assignment.substr(eq + 1));
  }
};

/**
 * INI file with an [experiment] section (id, output, plots) and a [params]
 * section of overrides. Values given on the command line afterwards win.
 */
inline ExperimentConfig load_config(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.experiment = tree.get<std::string>("experiment.id", "");
  if (auto out = tree.get_optional<std::string>("experiment.output")) cfg.output_dir = *out;
  cfg.emit_plots = tree.get<bool>("experiment.plots", false);
  if (auto params = tree.get_child_optional("params"))
    for (const auto& [key, node] : *params) cfg.overrides[key] = node.data();
  return cfg;
}

// ---------------------------------------------------------------------------
// Parameter parsing

namespace detail {

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(sep, start);
    const auto piece = s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    if (auto t = nsfd::detail::trim(piece); !t.empty()) out.emplace_back(t);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

class Reader {
public:
  explicit Reader(const Params& p) : p_(p) {}

  const std::string& raw(const std::string& key) const {
    auto it = p_.find(key);
    if (it == p_.end()) throw ConfigError("missing parameter '" + key + "'");
    return it->second;
  }
  bool has(const std::string& key) const { return p_.count(key) != 0; }

  double real(const std::string& key) const {
    auto v = csv::to_number(std::string(nsfd::detail::trim(raw(key))));
    if (!v || !std::isfinite(*v)) throw ConfigError("parameter '" + key + "' is not a number: '" + raw(key) + "'");
    return *v;
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : split(raw(key), ',')) {
      auto v = csv::to_number(s);
      if (!v || !std::isfinite(*v)) throw ConfigError("parameter '" + key + "' has a non-numeric entry '" + s + "'");
      out.push_back(*v);
    }
    if (out.empty()) throw ConfigError("parameter '" + key + "' is empty");
    return out;
  }

  std::size_t count(const std::string& key) const {
    auto v = counts(key);
    if (v.size() != 1) throw ConfigError("parameter '" + key + "' takes a single value");
    return v.front();
  }

  std::vector<std::size_t> counts(const std::string& key) const {
    std::vector<std::size_t> out;
    for (double v : reals(key)) {
      if (!(v >= 1.0) || v != std::floor(v) || v > 1e9)
        throw ConfigError("parameter '" + key + "' needs positive integers");
      out.push_back(static_cast<std::size_t>(v));
    }
    return out;
  }

  std::vector<FractionalOrder> alphas() const {
    std::vector<FractionalOrder> out;
    for (double a : reals("alpha")) {
      try {
        out.emplace_back(a);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("alpha: ") + e.what());
      }
    }
    return out;
  }

  std::vector<DenominatorSpec> dfs(const std::string& key, DfKind kind,
                                   std::optional<FractionalOrder> alpha = std::nullopt) const {
    std::vector<DenominatorSpec> out;
    for (const auto& s : split(raw(key), ';')) {
      auto spec = parse_df(s, alpha);
      if (spec.kind() != kind) throw ConfigError("parameter '" + key + "': '" + s + "' has the wrong DF kind");
      out.push_back(spec);
    }
    if (out.empty()) throw ConfigError("parameter '" + key + "' is empty");
    return out;
  }

private:
  const Params& p_;
};

}  // namespace detail

/// Defaults of the experiment overlaid with the overrides; unknown keys are rejected.
inline Params resolve(const ExperimentConfig& config) {
  const auto& info = find_experiment(config.experiment);
  for (const auto& [key, value] : config.overrides) {
    bool known = false;
    for (const auto& k : kParamKeys) known = known || k.key == key;
    if (!known) throw ConfigError("unknown parameter '" + key + "'");
    if (info.kind != Kind::custom && !info.defaults.count(key))
      throw ConfigError("parameter '" + key + "' does not apply to " + info.id);
  }
  Params p = info.defaults;
  for (const auto& [k, v] : config.overrides) p[k] = v;
  if (info.kind == Kind::custom) {
    std::string missing;
    for (const char* k : {"problem", "alpha", "N"})
      if (!p.count(k)) missing += std::string(missing.empty() ? "" : ", ") + k;
    if (!missing.empty()) throw ConfigError("custom experiment requires: " + missing);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Output collection

struct OutputFile {
  std::string name;
  std::string sha256;
};

struct RunManifest {
  std::string experiment;
  Params parameters;
  double wall_seconds = 0.0;
  std::vector<OutputFile> outputs;
  std::string version = NSFD_VERSION;
  bool divergence_observed = false;
  std::vector<std::string> notes;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["experiment"] = experiment;
    j["parameters"] = parameters;
    j["wall_seconds"] = wall_seconds;
    j["version"] = version;
    j["divergence_observed"] = divergence_observed;
    j["outputs"] = nlohmann::json::object();
    for (const auto& o : outputs) j["outputs"][o.name] = o.sha256;
    j["notes"] = notes;
    return j;
  }
};

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

/// Single writer for all run outputs; files are written and checksummed in call order.
class Collector {
public:
  explicit Collector(std::filesystem::path dir, bool plots) : dir_(std::move(dir)), plots_(plots) {
    std::filesystem::create_directories(dir_);
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    out << content;
    files_.push_back({name, sha256_hex(content)});
  }

  void table(const std::string& name, const csv::Table& t) { write(name, csv::to_string(t)); }

  /// Two-column whitespace-separated plot data, only with --plots.
  void plot(const std::string& name, const std::vector<std::pair<double, double>>& xy) {
    if (!plots_) return;
    std::string s;
    for (const auto& [x, y] : xy) s += csv::exact(x) + " " + csv::exact(y) + "\n";
    write(name, s);
  }

  const std::vector<OutputFile>& files() const { return files_; }
  const std::filesystem::path& dir() const { return dir_; }

private:
  std::filesystem::path dir_;
  bool plots_;
  std::vector<OutputFile> files_;
};

/// File-name-safe version of a tag: `psi=scaled-exp-sq(c=1)` -> `psi_scaled-exp-sq_c_1`.
inline std::string slug(std::string_view s) {
  std::string out;
  for (char ch : s) {
    const bool keep = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.';
    if (keep) out += ch;
    else if (!out.empty() && out.back() != '_') out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

// ---------------------------------------------------------------------------
// Experiment runners

namespace detail {

inline ivp::Example ivp_example(const std::string& s) {
  if (s == "ex1") return ivp::Example::ex1;
  if (s == "ex2") return ivp::Example::ex2;
  throw ConfigError("problem '" + s + "' is not a scalar IVP (ex1 | ex2)");
}

inline tfde::Example tfde_example(const std::string& s) {
  if (s == "ex3") return tfde::Example::ex3;
  if (s == "ex4") return tfde::Example::ex4;
  throw ConfigError("problem '" + s + "' is not a diffusion problem (ex3 | ex4)");
}

struct IvpTableJob {
  ivp::Example example;
  std::vector<double> alphas;
  std::vector<std::size_t> N;
  std::vector<DenominatorSpec> phi;
  EffectiveMode mode;
  double T;

  static IvpTableJob from(const Params& p) {
    Reader r(p);
    IvpTableJob j{ivp_example(r.raw("problem")), {}, r.counts("N"), r.dfs("phi", DfKind::temporal_base),
                  EffectiveMode::ratio, r.has("T") ? r.real("T") : 1.0};
    for (auto a : r.alphas()) j.alphas.push_back(a.value());
    const std::string mode = r.has("mode") ? r.raw("mode") : "ratio";
    if (mode == "power") j.mode = EffectiveMode::power;
    else if (mode != "ratio") throw ConfigError("mode must be ratio or power");
    if (!(j.T > 0.0)) throw ConfigError("T must be positive");
    return j;
  }

  void run(Collector& out, const std::string& stem) const {
    ivp::ErrorTable table;
    for (double a : alphas) {
      const FractionalOrder alpha(a);
      const auto base = ivp::example_problem(example, alpha);
      const ivp::IvpProblem problem(base.y0, base.forcing, base.exact, T);
      for (const auto& b : phi) {
        const auto phi_eff = effective_temporal_df(b, alpha, mode);
        std::optional<std::pair<std::size_t, double>> prev;
        std::vector<std::pair<double, double>> series;
        for (std::size_t n : N) {
          const auto sol = ivp::solve_ivp(problem, alpha, n, phi_eff);
          ivp::ErrorRow row{a, n, b.text(), std::abs((*problem.exact)(T) - sol.y.back()), std::nullopt};
          if (prev && prev->first * 2 == n) row.rate = ivp::dyadic_rate(prev->second, row.e_inf);
          prev = std::pair{n, row.e_inf};
          series.emplace_back(static_cast<double>(n), row.e_inf);
          table.rows.push_back(row);
        }
        out.plot(stem + "_a" + csv::exact(a) + "_" + slug(b.text()) + ".dat", series);
      }
    }
    out.table(stem + ".csv", table.to_csv());
  }
};

struct TfdeTableJob {
  tfde::Example example;
  FractionalOrder alpha;
  std::size_t N;
  std::vector<std::size_t> M;
  DenominatorSpec varphi;
  std::vector<DenominatorSpec> psi;
  double T;
  double L;

  static TfdeTableJob from(const Params& p) {
    Reader r(p);
    const auto alphas = r.alphas();
    if (alphas.size() != 1) throw ConfigError("diffusion runs take a single alpha");
    const auto alpha = alphas.front();
    Params q = p;
    if (!q.count("varphi")) q["varphi"] = "varphi=tau-alpha";
    Reader rq(q);
    TfdeTableJob j{tfde_example(r.raw("problem")),
                   alpha,
                   r.count("N"),
                   r.counts("M"),
                   rq.dfs("varphi", DfKind::temporal_effective, alpha).front(),
                   r.dfs("psi", DfKind::spatial),
                   r.has("T") ? r.real("T") : 1.0,
                   r.has("L") ? r.real("L") : 1.0};
    if (!(j.T > 0.0) || !(j.L > 0.0)) throw ConfigError("T and L must be positive");
    for (auto m : j.M)
      if (m < 2) throw ConfigError("M must be >= 2");
    return j;
  }

  bool run(Collector& out, const std::string& stem, std::vector<std::string>& notes) const {
    auto problem = tfde::example_tfde(example, alpha, L);
    if (T != problem.horizon) problem.horizon = T;
    for (const auto& ps : psi)
      for (auto m : M) {
        const tfde::SchemeConfig cfg{alpha, N, varphi, ps, std::nullopt, false, T};
        const auto s = tfde::check_stability(cfg, tfde::SpaceGrid(problem.dim, L, m));
        if (!s.satisfied)
          notes.push_back("stability condition fails for " + ps.text() + " at M=" + std::to_string(m) + ": " +
                          csv::fixed4(s.lhs) + " > " + csv::fixed4(s.threshold));
      }
    const auto rep = tfde::convergence_study(problem, alpha, N, varphi, psi, M);
    out.table(stem + ".csv", rep.to_csv());
    for (std::size_t c = 0; c < psi.size(); ++c) {
      std::vector<std::pair<double, double>> series;
      for (std::size_t r = 0; r < M.size(); ++r)
        if (rep.cells[r][c].e_inf) series.emplace_back(static_cast<double>(M[r]), *rep.cells[r][c].e_inf);
      out.plot(stem + "_" + slug(psi[c].text()) + ".dat", series);
    }
    return rep.any_diverged();
  }
};

struct LocusJob {
  std::vector<FractionalOrder> alphas;
  std::size_t n;
  std::size_t samples;
  locus::LocusVariant variant;

  static LocusJob from(const Params& p) {
    Reader r(p);
    LocusJob j{r.alphas(), r.count("n"), r.count("num_samples"), locus::LocusVariant::as_printed};
    const auto v = r.raw("variant");
    if (v == "complex_division") j.variant = locus::LocusVariant::complex_division;
    else if (v != "as_printed") throw ConfigError("variant must be as_printed or complex_division");
    if (j.n < 2) throw ConfigError("n must be >= 2");
    if (j.samples < 16) throw ConfigError("num_samples must be >= 16");
    return j;
  }

  void run(Collector& out, const std::string& stem) const {
    for (auto alpha : alphas) {
      const auto curve = locus::boundary_locus(alpha, n, samples, variant);
      csv::Table t{{"s", "x_hat", "y_hat"}, {}};
      std::vector<std::pair<double, double>> xy;
      for (const auto& smp : curve.samples) {
        t.rows.push_back({csv::exact(smp.s), csv::exact(smp.x_hat), csv::exact(smp.y_hat)});
        xy.emplace_back(smp.x_hat, smp.y_hat);
      }
      const std::string name = stem + "_a" + csv::exact(alpha.value());
      out.table(name + ".csv", t);
      out.plot(name + ".dat", xy);
    }
  }
};

/// Degrees 1..dense, then every `stride` up to the ceiling, which is always included.
inline std::vector<std::size_t> sampled_degrees(std::size_t ceiling, std::size_t dense, std::size_t stride) {
  std::vector<std::size_t> d;
  for (std::size_t n = 1; n <= std::min(dense, ceiling); ++n) d.push_back(n);
  for (std::size_t n = dense + stride; n <= ceiling; n += stride) d.push_back(n);
  if (d.empty() || d.back() != ceiling) d.push_back(ceiling);
  return d;
}

struct RmaxJob {
  std::vector<FractionalOrder> alphas;
  std::vector<double> tau_hats;
  std::vector<std::size_t> degrees;

  static RmaxJob from(const Params& p) {
    Reader r(p);
    const auto ceiling = r.count("N_ceiling");
    if (ceiling > locus::kRootFinderCeiling)
      throw RootFinderError("degree ceiling exceeded", ceiling, locus::Complex(r.reals("tau_hat").front()));
    return {r.alphas(), r.reals("tau_hat"),
            sampled_degrees(ceiling, r.has("dense") ? r.count("dense") : ceiling, r.has("stride") ? r.count("stride") : 1)};
  }

  void run(Collector& out, const std::string& stem) const {
    for (auto alpha : alphas) {
      std::vector<locus::Complex> th(tau_hats.begin(), tau_hats.end());
      const auto series = locus::rmax_scan(alpha, degrees, th);
      csv::Table t{{"n"}, {}};
      for (double v : tau_hats) t.header.push_back("r_max[tau_hat=" + csv::exact(v) + "]");
      for (std::size_t i = 0; i < degrees.size(); ++i) {
        std::vector<std::string> row{std::to_string(degrees[i])};
        for (const auto& s : series) row.push_back(csv::exact(s.points[i].r_max));
        t.rows.push_back(std::move(row));
      }
      const std::string name = stem + "_a" + csv::exact(alpha.value());
      out.table(name + ".csv", t);
      for (const auto& s : series) {
        std::vector<std::pair<double, double>> xy;
        for (const auto& pt : s.points) xy.emplace_back(static_cast<double>(pt.n), pt.r_max);
        out.plot(name + "_tau_hat" + csv::exact(s.tau_hat.real()) + ".dat", xy);
      }
    }
  }
};

struct FrontierJob {
  FractionalOrder alpha;
  std::size_t N;
  double L;
  DenominatorSpec varphi;
  std::vector<DenominatorSpec> psi;
  std::vector<std::size_t> M;

  static FrontierJob from(const Params& p) {
    Reader r(p);
    const auto alphas = r.alphas();
    if (alphas.size() != 1) throw ConfigError("frontier runs take a single alpha");
    FrontierJob j{alphas.front(), r.count("N"), r.real("L"),
                  r.dfs("varphi", DfKind::temporal_effective, alphas.front()).front(),
                  r.dfs("psi", DfKind::spatial), r.counts("M")};
    if (!(j.L > 0.0)) throw ConfigError("L must be positive");
    if (r.has("T") && r.real("T") != 1.0) throw ConfigError("frontier runs use T = 1");
    return j;
  }

  bool run(Collector& out, const std::string& stem, std::vector<std::string>& notes) const {
    const auto series = tfde::stability_frontier_scan(alpha, L, N, varphi, psi, M);
    bool diverged = false;
    for (const auto& s : series) {
      out.table(stem + "_" + slug(s.psi) + ".csv", s.to_csv());
      std::vector<std::pair<double, double>> xy;
      for (const auto& pt : s.points)
        if (pt.e_inf) xy.emplace_back(static_cast<double>(pt.M), *pt.e_inf);
      out.plot(stem + "_" + slug(s.psi) + ".dat", xy);
      std::string note = s.psi + ": sufficient condition holds up to M = " + std::to_string(s.analytic_limit);
      if (auto m = s.onset()) {
        diverged = true;
        note += ", first divergent M = " + std::to_string(*m);
      } else {
        note += ", no divergence in the scanned range";
      }
      notes.push_back(note);
    }
    return diverged;
  }
};

}  // namespace detail

/// Parse and check every parameter without running anything.
inline Params validate(const ExperimentConfig& config) {
  Params p = resolve(config);
  Kind kind = find_experiment(config.experiment).kind;
  if (kind == Kind::custom) {
    const auto& prob = p.at("problem");
    kind = (prob == "ex1" || prob == "ex2") ? Kind::ivp_table : Kind::tfde_table;
    if (kind == Kind::ivp_table && !p.count("phi")) p["phi"] = "phi=tau";
    if (kind == Kind::tfde_table && !p.count("M")) throw ConfigError("custom diffusion run requires: M");
    if (kind == Kind::tfde_table && !p.count("psi")) p["psi"] = "psi=h2";
  }
  switch (kind) {
    case Kind::ivp_table: detail::IvpTableJob::from(p); break;
    case Kind::tfde_table: detail::TfdeTableJob::from(p); break;
    case Kind::locus: detail::LocusJob::from(p); break;
    case Kind::rmax: detail::RmaxJob::from(p); break;
    case Kind::frontier: detail::FrontierJob::from(p); break;
    case Kind::custom: break;
  }
  return p;
}

/// Output directory: explicit setting, else $NSFD_OUTPUT_DIR, else ./results.
inline std::filesystem::path output_dir(const ExperimentConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
  return "results";
}

/**
 * Run one experiment: CSVs (and plot data with emit_plots) go to the output
 * directory together with manifest.json.
 */
inline RunManifest run(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const Params p = validate(config);
  Kind kind = find_experiment(config.experiment).kind;
  if (kind == Kind::custom) {
    const auto& prob = p.at("problem");
    kind = (prob == "ex1" || prob == "ex2") ? Kind::ivp_table : Kind::tfde_table;
  }

  RunManifest m;
  m.experiment = config.experiment;
  m.parameters = p;
  Collector out(output_dir(config), config.emit_plots);
  const std::string& stem = config.experiment;
  switch (kind) {
    case Kind::ivp_table: detail::IvpTableJob::from(p).run(out, stem); break;
    case Kind::tfde_table: m.divergence_observed = detail::TfdeTableJob::from(p).run(out, stem, m.notes); break;
    case Kind::locus: detail::LocusJob::from(p).run(out, stem); break;
    case Kind::rmax: detail::RmaxJob::from(p).run(out, stem); break;
    case Kind::frontier: m.divergence_observed = detail::FrontierJob::from(p).run(out, stem, m.notes); break;
    case Kind::custom: break;
  }
  m.outputs = out.files();
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream(out.dir() / "manifest.json") << m.to_json().dump(2) << '\n';
  return m;
}

// ---------------------------------------------------------------------------
// Golden comparison

struct Tolerance {
  double rtol = 0.0;
  double atol = 0.0;
};

struct CellDiff {
  std::size_t row = 0;  ///< 1-based data row
  std::string column;
  std::string produced;
  std::string reference;
  double deviation = 0.0;  ///< relative where the reference is nonzero, else absolute
  bool ok = false;
};

struct DiffReport {
  std::size_t cells_compared = 0;
  double max_deviation = 0.0;
  std::vector<CellDiff> cells;  ///< every compared cell, row-major

  std::vector<CellDiff> failures() const {
    std::vector<CellDiff> out;
    for (const auto& c : cells)
      if (!c.ok) out.push_back(c);
    return out;
  }
  bool passed() const { return failures().empty(); }

  std::string summary() const {
    std::ostringstream os;
    const auto bad = failures();
    os << cells_compared << " cells compared, max deviation " << csv::sci(max_deviation) << ", " << bad.size()
       << " outside tolerance\n";
    for (const auto& c : bad)
      os << "  row " << c.row << ", column " << c.column << ": produced " << (c.produced.empty() ? "(empty)" : c.produced)
         << ", reference " << (c.reference.empty() ? "(empty)" : c.reference) << "\n";
    return os.str();
  }
};

/**
 * Cell-by-cell comparison. Numeric cells pass when |p - r| <= atol + rtol |r|;
 * other cells must match exactly. Headers and row counts must agree.
 */
inline DiffReport diff_tables(const csv::Table& produced, const csv::Table& reference,
                              const std::function<Tolerance(const std::string&)>& tolerance_for) {
  if (produced.header != reference.header) throw SchemaMismatchError("diff: headers differ");
  if (produced.rows.size() != reference.rows.size())
    throw SchemaMismatchError("diff: row counts differ (" + std::to_string(produced.rows.size()) + " vs " +
                              std::to_string(reference.rows.size()) + ")");
  DiffReport rep;
  for (std::size_t r = 0; r < reference.rows.size(); ++r) {
    const auto& pr = produced.rows[r];
    const auto& rr = reference.rows[r];
    if (pr.size() != reference.header.size() || rr.size() != reference.header.size())
      throw SchemaMismatchError("diff: row " + std::to_string(r + 1) + " has the wrong number of cells");
    for (std::size_t c = 0; c < rr.size(); ++c) {
      CellDiff d{r + 1, reference.header[c], pr[c], rr[c], 0.0, true};
      const auto pv = csv::to_number(pr[c]);
      const auto rv = csv::to_number(rr[c]);
      if (pv && rv) {
        const auto tol = tolerance_for(reference.header[c]);
        const double diff = std::abs(*pv - *rv);
        d.deviation = *rv != 0.0 ? diff / std::abs(*rv) : diff;
        d.ok = diff <= tol.atol + tol.rtol * std::abs(*rv);
      } else {
        d.ok = pr[c] == rr[c];
        d.deviation = d.ok ? 0.0 : std::numeric_limits<double>::infinity();
      }
      rep.max_deviation = std::max(rep.max_deviation, d.deviation);
      ++rep.cells_compared;
      rep.cells.push_back(std::move(d));
    }
  }
  return rep;
}

inline DiffReport diff_against_reference(const std::filesystem::path& produced,
                                         const std::filesystem::path& reference, double rtol, double atol = 0.0) {
  return diff_tables(csv::read(produced), csv::read(reference), [=](const std::string&) {
    return Tolerance{rtol, atol};
  });
}

}  // namespace nsfd::harness
