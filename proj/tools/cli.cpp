#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "fbq/eig_distribution.hpp"
#include "fbq/error.hpp"
#include "fbq/figures.hpp"
#include "fbq/quantizer.hpp"
#include "fbq/simulation.hpp"
#include "fbq/tradeoff.hpp"

namespace fbq::cli {

namespace {

namespace fs = std::filesystem;

std::string to_text(const std::string& v) { return v; }
std::string to_text(bool v) { return v ? "true" : "false"; }
std::string to_text(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}
template <class T>
  requires std::is_integral_v<T>
std::string to_text(T v) {
  return std::to_string(v);
}

std::string default_cache_dir() {
  const char* env = std::getenv("FBQ_CACHE_DIR");
  return env && *env ? env : ".fbq-cache";
}

// Options of one subcommand, remembered so the resolved values can be echoed
// into output headers and config files can be merged in.
class Registry {
 public:
  explicit Registry(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& name, T& var, const std::string& desc) {
    auto* opt = app_->add_option("--" + name, var, desc)->capture_default_str();
    fields_.push_back({name, [&var] { return to_text(var); }, false, opt, false});
    return opt;
  }
  // Echoed only when given.
  template <class T>
  CLI::Option* add_optional(const std::string& name, T& var, const std::string& desc) {
    auto* opt = app_->add_option("--" + name, var, desc);
    fields_.push_back({name, [&var] { return to_text(var); }, false, opt, true});
    return opt;
  }
  CLI::Option* flag(const std::string& name, bool& var, const std::string& desc) {
    auto* opt = app_->add_flag("--" + name, var, desc);
    fields_.push_back({name, [&var] { return to_text(var); }, true, opt, false});
    return opt;
  }
  // Not echoed (output locations).
  template <class T>
  CLI::Option* add_hidden(const std::string& name, T& var, const std::string& desc) {
    auto* opt = app_->add_option("--" + name, var, desc);
    hidden_.push_back(name);
    return opt;
  }

  bool is_flag(const std::string& name) const {
    for (const auto& f : fields_) {
      if (f.name == name) return f.flag;
    }
    return false;
  }
  bool known(const std::string& name) const {
    for (const auto& f : fields_) {
      if (f.name == name) return true;
    }
    for (const auto& h : hidden_) {
      if (h == name) return true;
    }
    return false;
  }

  std::vector<std::pair<std::string, std::string>> resolved() const {
    std::vector<std::pair<std::string, std::string>> kv{{"command", app_->get_name()}};
    for (const auto& f : fields_) {
      if (f.optional && f.opt->count() == 0) continue;
      kv.emplace_back(f.name, f.get());
    }
    return kv;
  }

  std::string header() const {
    std::string h;
    for (const auto& [k, v] : resolved()) h += "# " + k + "=" + v + "\n";
    return h;
  }

  CLI::App* app() const { return app_; }

 private:
  struct Field {
    std::string name;
    std::function<std::string()> get;
    bool flag;
    CLI::Option* opt;
    bool optional;
  };
  CLI::App* app_;
  std::vector<Field> fields_;
  std::vector<std::string> hidden_;
};

struct DesignArgs {
  int m = 1, n = 1, eig_index = 1, bins = 2;
  double snr_db = 0.0, rate_bits = 0.0;
  std::string method = "kkt", dist = "auto", bin0 = "auto", cache_dir = default_cache_dir(), out;
  std::size_t samples = 1000000;
  std::uint64_t seed = 42;
  int threads = 0;
};

struct SweepArgs {
  std::string scheme, mode = "mc", method = "kkt", dist = "auto", bin0 = "auto", cache_dir = default_cache_dir(), out;
  int m = 1, n = 1, bins = 2, eig_index = 0, decode_index = 0, threads = 0;
  double mux = 0.0, rate_bits = 0.0, snr_start = 0.0, snr_stop = 20.0, snr_step = 1.0, alpha = 0.5;
  double joint_rate_bits = 1.0;
  std::size_t trials = 1000000, samples = 1000000, power_cut_samples = 1000000;
  std::uint64_t seed = 42;
  bool no_floor = false;
};

struct TradeoffArgs {
  std::string scheme, joint_variant = "figure", out;
  int m = 1, n = 1, bins = 2, grid_points = 61;
};

struct FitArgs {
  std::string in;
  double lo = 0.0, hi = 0.0;
};

struct FigureArgs {
  std::string id, out_dir = ".";
  double step = 1.0;
  int grid_points = 61;
};

struct CacheArgs {
  bool build = false, list = false, clear = false;
  int m = 1, n = 1, eig_index = 1, threads = 0;
  std::size_t samples = 1000000;
  std::uint64_t seed = 42;
  std::string cache_dir = default_cache_dir();
};

template <class Fn>
void with_output(const std::string& path, std::ostream& out, Fn&& fn) {
  if (path.empty()) {
    fn(out);
    return;
  }
  std::ofstream file(path);
  if (!file) throw Error("cannot write " + path);
  fn(file);
  if (!file) throw Error("failed writing " + path);
}

std::vector<double> snr_grid(double start, double stop, double step) {
  if (!(step > 0.0)) throw DomainError("--snr-step must be positive");
  if (stop < start) throw DomainError("--snr-stop must not be below --snr-start");
  std::vector<double> g;
  const int count = static_cast<int>(std::floor((stop - start) / step + 1e-9));
  for (int k = 0; k <= count; ++k) g.push_back(start + k * step);
  return g;
}

Bin0Policy parse_bin0(const std::string& s) {
  if (s == "auto") return Bin0Policy::Auto;
  if (s == "transmit") return Bin0Policy::Transmit;
  if (s == "silent") return Bin0Policy::Silent;
  throw DomainError("--bin0 must be auto, transmit or silent");
}

void run_design(const DesignArgs& a, const Registry& reg, std::ostream& out) {
  const AntennaConfig cfg(a.m, a.n);
  SweepConfig sc;
  sc.cfg = cfg;
  sc.dist = parse_dist_source(a.dist);
  sc.dist_samples = a.samples;
  sc.seed = a.seed;
  sc.threads = a.threads;
  sc.cache_dir = a.cache_dir;
  if (a.eig_index < 1 || a.eig_index > cfg.m()) throw DomainError("--eig-index must lie in [1, min(m,n)]");
  const auto dist = sweep_distribution(sc, a.eig_index);
  const double p_av = std::pow(10.0, a.snr_db / 10.0);
  const double k = mimo_rate_constant(cfg, a.eig_index, a.rate_bits);
  DesignOptions opts;
  opts.bin0 = parse_bin0(a.bin0);
  const auto method = parse_method(a.method);
  const auto rep = design_quantizer(method, dist, a.bins, p_av, k, opts);
  QuantizerRecord rec;
  rec.m = a.m;
  rec.n = a.n;
  rec.eig_index = a.eig_index;
  rec.rate_bits = a.rate_bits;
  rec.snr_db = a.snr_db;
  rec.method = method;
  rec.quantizer = rep.quantizer;
  rec.residual_max = rep.residual_max();
  rec.avg_power = avg_power(rep.quantizer, dist);
  const std::string json = quantizer_to_json(rec, reg.resolved());
  with_output(a.out, out, [&](std::ostream& o) {
    o << json;
    if (json.empty() || json.back() != '\n') o << '\n';
  });
}

void run_sweep_cmd(const SweepArgs& a, const Registry& reg, bool has_mux, std::ostream& out) {
  SweepConfig c;
  c.cfg = AntennaConfig(a.m, a.n);
  c.scheme = parse_scheme_kind(a.scheme);
  if (has_mux) {
    c.mux = a.mux;
  } else {
    c.rate_bits = a.rate_bits;
  }
  c.snr_db = snr_grid(a.snr_start, a.snr_stop, a.snr_step);
  c.trials = a.trials;
  c.seed = a.seed;
  c.mode = parse_sweep_mode(a.mode);
  c.bins = a.bins;
  c.eig_index = a.eig_index;
  c.decode_index = a.decode_index;
  c.method = parse_method(a.method);
  c.bin0 = parse_bin0(a.bin0);
  c.dist = parse_dist_source(a.dist);
  c.dist_samples = a.samples;
  c.cache_dir = a.cache_dir;
  c.alpha = a.alpha;
  c.joint_fixed_rate_bits = a.joint_rate_bits;
  c.power_cut_samples = a.power_cut_samples;
  c.threads = a.threads;
  c.rare_event_floor = !a.no_floor;
  const auto points = run_sweep(c);
  with_output(a.out, out, [&](std::ostream& o) {
    o << reg.header();
    write_sweep_csv(o, points);
  });
}

void run_tradeoff(const TradeoffArgs& a, const Registry& reg, std::ostream& out) {
  const AntennaConfig cfg(a.m, a.n);
  const auto curve = tradeoff_curve(parse_curve_scheme(a.scheme), cfg.m(), cfg.n(), a.bins, a.grid_points,
                                    parse_joint_variant(a.joint_variant));
  with_output(a.out, out, [&](std::ostream& o) {
    o << reg.header();
    write_curve_csv(o, curve);
  });
}

void run_fit(const FitArgs& a, std::ostream& out) {
  std::ifstream in(a.in);
  if (!in) throw Error("cannot read " + a.in);
  const auto pts = read_sweep_csv(in);
  const auto fit = fit_diversity(pts, a.lo, a.hi);
  char buf[256];
  if (fit.infinite) {
    out << "d_hat = inf\n# infinite diversity indicated: every point in the window has zero outage\n";
    std::snprintf(buf, sizeof buf, "excluded_zero = %zu\n", fit.excluded_zero);
    out << buf;
    return;
  }
  std::snprintf(buf, sizeof buf, "d_hat = %.3f\nci = %.3g\nr_squared = %.6f\nused = %zu\nexcluded_zero = %zu\n",
                fit.d_hat, fit.ci, fit.r_squared, fit.used, fit.excluded_zero);
  out << buf;
}

void run_figure(const FigureArgs& a, const Registry& reg, std::ostream& out) {
  FigureOptions opts;
  opts.out_dir = a.out_dir;
  opts.snr_step_db = a.step;
  opts.grid_points = a.grid_points;
  for (const auto& [k, v] : reg.resolved()) opts.header_lines.push_back(k + "=" + v);
  for (const auto& p : reproduce_figure(parse_figure(a.id), opts)) out << p.string() << '\n';
}

void run_cache(const CacheArgs& a, std::ostream& out) {
  const fs::path dir = a.cache_dir;
  if (a.build) {
    const AntennaConfig cfg(a.m, a.n);
    if (a.eig_index < 1 || a.eig_index > cfg.m()) throw DomainError("--eig-index must lie in [1, min(m,n)]");
    load_or_build_empirical(dir, cfg, a.eig_index, a.samples, a.seed, a.threads);
    out << cache_file(dir, cfg.m(), cfg.n(), a.eig_index, a.samples, a.seed).string() << '\n';
    return;
  }
  if (!fs::exists(dir)) return;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("eigdist_", 0) == 0 && e.path().extension() == ".csv") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    if (a.clear) {
      fs::remove(f);
      out << "removed " << f.string() << '\n';
    } else {
      out << f.string() << '\n';
    }
  }
}

// Reads `key = value` lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot read " + path);
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  int lineno = 0;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError("--config", path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kv;
}

bool given(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

}  // namespace

int run(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Outage analysis of multi-antenna links with quantized power-control feedback.\n"
               "SNR values are 10 log10(P_av) with unit noise variance, so P_av doubles as the SNR."};
  app.name("fbq");
  app.require_subcommand(1);

  DesignArgs da;
  auto* design = app.add_subcommand("design-quantizer", "Design an L-bin channel quantizer and emit JSON");
  Registry design_reg(design);
  design_reg.add("m", da.m, "Transmit antennas M")->required();
  design_reg.add("n", da.n, "Receive antennas N")->required();
  design_reg.add("eig-index", da.eig_index, "Quantized eigenvalue index i (1 = largest)");
  design_reg.add("bins", da.bins, "Number of quantization bins L");
  design_reg.add("snr-db", da.snr_db, "Average power P_av in dB")->required();
  design_reg.add("rate-bits", da.rate_bits, "Rate R in bit/s/Hz")->required();
  design_reg.add("method", da.method, "equi or kkt")->check(CLI::IsMember({"equi", "kkt"}));
  design_reg.add("dist", da.dist, "auto, analytic or empirical")->check(CLI::IsMember({"auto", "analytic", "empirical"}));
  design_reg.add("bin0", da.bin0, "auto, transmit or silent")->check(CLI::IsMember({"auto", "transmit", "silent"}));
  design_reg.add("samples", da.samples, "Samples for an empirical distribution");
  design_reg.add("seed", da.seed, "Random seed");
  design_reg.add("threads", da.threads, "Worker threads (0 = hardware parallelism)");
  design_reg.add("cache-dir", da.cache_dir, "Empirical table cache (default $FBQ_CACHE_DIR or .fbq-cache)");
  design_reg.add_hidden("out", da.out, "Output JSON file (default stdout)");

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep", "Outage probability versus SNR");
  Registry sweep_reg(sweep);
  sweep_reg.add("scheme", sa.scheme, "no-csit, beamforming, temporal-perfect, optimal-perfect, quantized or joint")
      ->required()
      ->check(CLI::IsMember({"no-csit", "beamforming", "temporal-perfect", "optimal-perfect", "quantized", "joint"}));
  sweep_reg.add("m", sa.m, "Transmit antennas M")->required();
  sweep_reg.add("n", sa.n, "Receive antennas N")->required();
  sweep_reg.add("bins", sa.bins, "Quantization bins L");
  sweep_reg.add("eig-index", sa.eig_index, "Quantized eigenvalue index (0 = scheme default)");
  sweep_reg.add("decode-index", sa.decode_index, "Eigenvalue deciding analytic outage (0 = eig-index)");
  auto* mux = sweep_reg.add_optional("mux", sa.mux, "Multiplexing gain r; rate r log2(P_av)");
  auto* rate = sweep_reg.add_optional("rate-bits", sa.rate_bits, "Fixed rate in bit/s/Hz");
  mux->excludes(rate);
  sweep_reg.add("snr-start", sa.snr_start, "First SNR in dB");
  sweep_reg.add("snr-stop", sa.snr_stop, "Last SNR in dB");
  sweep_reg.add("snr-step", sa.snr_step, "SNR step in dB");
  sweep_reg.add("trials", sa.trials, "Monte Carlo trials per point");
  sweep_reg.add("seed", sa.seed, "Random seed");
  sweep_reg.add("mode", sa.mode, "mc, analytic or both")->check(CLI::IsMember({"mc", "analytic", "both"}));
  sweep_reg.add("method", sa.method, "Quantizer design: equi or kkt")->check(CLI::IsMember({"equi", "kkt"}));
  sweep_reg.add("bin0", sa.bin0, "auto, transmit or silent")->check(CLI::IsMember({"auto", "transmit", "silent"}));
  sweep_reg.add("dist", sa.dist, "auto, analytic or empirical")->check(CLI::IsMember({"auto", "analytic", "empirical"}));
  sweep_reg.add("samples", sa.samples, "Samples for an empirical distribution");
  sweep_reg.add("alpha", sa.alpha, "Joint scheme power split");
  sweep_reg.add("joint-rate-bits", sa.joint_rate_bits, "Joint scheme fixed-rate codebook");
  sweep_reg.add("power-cut-samples", sa.power_cut_samples, "Calibration samples for optimal-perfect");
  sweep_reg.flag("no-floor", sa.no_floor, "Keep Monte Carlo rows below the rare-event floor");
  sweep_reg.add("threads", sa.threads, "Worker threads (0 = hardware parallelism)");
  sweep_reg.add("cache-dir", sa.cache_dir, "Empirical table cache (default $FBQ_CACHE_DIR or .fbq-cache)");
  sweep_reg.add_hidden("out", sa.out, "Output CSV file (default stdout)");

  TradeoffArgs ta;
  auto* tradeoff = app.add_subcommand("tradeoff", "Diversity-multiplexing tradeoff curve");
  Registry tradeoff_reg(tradeoff);
  tradeoff_reg.add("scheme", ta.scheme, "no-csit, beamforming, quantized, perfect, temporal-perfect or joint")
      ->required();
  tradeoff_reg.add("m", ta.m, "Transmit antennas M")->required();
  tradeoff_reg.add("n", ta.n, "Receive antennas N")->required();
  tradeoff_reg.add("bins", ta.bins, "Quantization bins L");
  tradeoff_reg.add("joint-variant", ta.joint_variant, "printed or figure")
      ->check(CLI::IsMember({"printed", "figure"}));
  tradeoff_reg.add("grid-points", ta.grid_points, "Uniform grid points on [0, m]");
  tradeoff_reg.add_hidden("out", ta.out, "Output CSV file (default stdout)");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Diversity slope of a sweep CSV over an SNR window");
  Registry fit_reg(fit);
  fit_reg.add("in", fa.in, "Sweep CSV")->required();
  fit_reg.add("window-start-db", fa.lo, "Window start in dB")->required();
  fit_reg.add("window-stop-db", fa.hi, "Window end in dB")->required();

  FigureArgs ga;
  auto* figure = app.add_subcommand("figure", "Write the data behind a figure");
  Registry figure_reg(figure);
  figure_reg.add("id", ga.id, "fig3, fig4, fig5a, fig5b or fig6")
      ->required()
      ->check(CLI::IsMember({"fig3", "fig4", "fig5a", "fig5b", "fig6"}));
  figure_reg.add("snr-step", ga.step, "SNR step in dB for outage figures");
  figure_reg.add("grid-points", ga.grid_points, "Grid points for tradeoff figures");
  figure_reg.add_hidden("out-dir", ga.out_dir, "Output directory");

  CacheArgs ca;
  auto* cache = app.add_subcommand("cache", "Manage cached empirical eigenvalue tables");
  Registry cache_reg(cache);
  auto* build = cache_reg.flag("build", ca.build, "Build (or reuse) a table");
  auto* list = cache_reg.flag("list", ca.list, "List cached tables");
  auto* clear = cache_reg.flag("clear", ca.clear, "Delete cached tables");
  build->excludes(list)->excludes(clear);
  list->excludes(clear);
  cache_reg.add("m", ca.m, "Transmit antennas M");
  cache_reg.add("n", ca.n, "Receive antennas N");
  cache_reg.add("eig-index", ca.eig_index, "Eigenvalue index i (1 = largest)");
  cache_reg.add("samples", ca.samples, "Samples");
  cache_reg.add("seed", ca.seed, "Random seed");
  cache_reg.add("threads", ca.threads, "Worker threads (0 = hardware parallelism)");
  cache_reg.add("cache-dir", ca.cache_dir, "Cache directory (default $FBQ_CACHE_DIR or .fbq-cache)");

  const std::vector<Registry*> registries{&design_reg, &sweep_reg, &tradeoff_reg, &fit_reg, &figure_reg, &cache_reg};

  std::vector<std::string> args = args_in;
  try {
    // Merge a config file: its keys become flags unless given on the command line.
    for (std::size_t k = 0; k < args.size(); ++k) {
      if (args[k] != "--config" && args[k].rfind("--config=", 0) != 0) continue;
      std::string path;
      std::size_t drop = 1;
      if (args[k] == "--config") {
        if (k + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a file");
        path = args[k + 1];
        drop = 2;
      } else {
        path = args[k].substr(9);
      }
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(k), args.begin() + static_cast<std::ptrdiff_t>(k + drop));
      const Registry* reg = nullptr;
      for (const auto& a : args) {
        for (const auto* r : registries) {
          if (r->app()->get_name() == a) reg = r;
        }
        if (reg) break;
      }
      if (!reg) throw CLI::CallForHelp();
      for (const auto& [key, value] : read_config(path)) {
        if (key == "command") continue;
        if (!reg->known(key)) throw CLI::ValidationError("--config", "unknown key '" + key + "'");
        if (given(args, key)) continue;
        if (reg->is_flag(key)) {
          if (value == "true" || value == "1") args.push_back("--" + key);
        } else {
          args.push_back("--" + key);
          args.push_back(value);
        }
      }
      break;
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (cache->parsed() && !(ca.build || ca.list || ca.clear)) {
      throw CLI::RequiredError("one of --build, --list or --clear");
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (design->parsed()) run_design(da, design_reg, out);
    if (sweep->parsed()) {
      if (mux->count() == 0 && rate->count() == 0) throw DomainError("sweep needs --mux or --rate-bits");
      run_sweep_cmd(sa, sweep_reg, mux->count() > 0, out);
    }
    if (tradeoff->parsed()) run_tradeoff(ta, tradeoff_reg, out);
    if (fit->parsed()) run_fit(fa, out);
    if (figure->parsed()) run_figure(ga, figure_reg, out);
    if (cache->parsed()) run_cache(ca, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

std::map<std::string, std::string> read_header(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) != 0) break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(2, eq - 2);
    // Only option-like keys; free-form metadata lines are skipped.
    const bool option_like = !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
      return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
    });
    if (option_like) kv[key] = line.substr(eq + 1);
  }
  return kv;
}

std::vector<std::string> rerun_args(const std::map<std::string, std::string>& header) {
  const auto cmd = header.find("command");
  if (cmd == header.end()) throw Error("header has no command entry");
  std::vector<std::string> args{cmd->second};
  for (const auto& [k, v] : header) {
    if (k == "command") continue;
    if (v == "true" || v == "false") {
      if (v == "true") args.push_back("--" + k);
      continue;
    }
    args.push_back("--" + k);
    args.push_back(v);
  }
  return args;
}

}  // namespace fbq::cli
