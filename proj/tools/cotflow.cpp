#include "cotfm/bench/lv.hpp"
#include "cotfm/bench/two_d.hpp"
#include "cotfm/cw/empirical.hpp"
#include "cotfm/data/lv.hpp"
#include "cotfm/data/synthetic.hpp"
#include "cotfm/flow/checkpoint.hpp"
#include "cotfm/flow/train.hpp"
#include "cotfm/io/csv.hpp"
#include "cotfm/io/svg.hpp"
#include "cotfm/metrics/mmd.hpp"
#include "cotfm/metrics/wasserstein.hpp"
#include "cotfm/ode/sampler.hpp"
#include "cotfm/runtime.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace cotfm;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

json load_config(const std::string& path) {
  json j = io::read_json(path);
  require(j.is_object(), path + ": config must be a JSON object");
  return j;
}

// Rejects keys outside `allowed`, so typos fail instead of being ignored.
void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& what) {
  for (const auto& [k, v] : j.items())
    require(allowed.count(k) > 0, what + " config: unknown key '" + k + "'");
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& what) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(what + " config: key '" + key + "': " + e.what());
  }
}

std::string out_path(const Common& c, const std::string& name) {
  fs::create_directories(c.out);
  return (fs::path(c.out) / name).string();
}

void write_resolved(const Common& c, const std::string& command, const json& resolved) {
  io::write_json(out_path(c, command + "_config.json"), resolved);
}

void progress(const std::string& msg) { std::cerr << "cotflow: " << msg << '\n'; }

// ------------------------------------------------------------------ generate

int cmd_generate(const Common& c) {
  const json cfg = load_config(c.config);
  check_keys(cfg, {"dataset", "n", "seed"}, "generate");
  const std::string name = get_or<std::string>(cfg, "dataset", "moons", "generate");
  const Index n = get_or<Index>(cfg, "n", 1000, "generate");
  const std::uint64_t seed = c.seed.value_or(get_or<std::uint64_t>(cfg, "seed", 0, "generate"));
  json resolved{{"dataset", name}, {"n", n}, {"seed", seed}};
  const std::string path = out_path(c, "data.csv");
  if (name == "lv") {
    require(n >= 1, "generate: n must be >= 1");
    const data::LvDataset ds = data::lv_dataset(n, seed);
    json prov = resolved;
    prov["coordinates"] = "log";
    prov["rejected_draws"] = ds.rejected;
    io::write_dataset(path, ds.log_joint(), data::kLvObsDim, prov);
  } else {
    const data::Synthetic2DSpec spec{name, n, seed};
    spec.validate();
    json prov = spec.to_json();
    prov["dataset"] = name;
    prov.erase("name");
    prov["coordinates"] = "data";
    io::write_dataset(path, data::sample_2d_points(spec), 1, prov);
  }
  write_resolved(c, "generate", resolved);
  progress("wrote " + path);
  return 0;
}

// --------------------------------------------------------------------- train

int cmd_train(const Common& c) {
  const json cfg = load_config(c.config);
  check_keys(cfg, {"data", "train"}, "train");
  require(cfg.contains("data"), "train config: missing 'data' (path to a joint CSV)");
  const std::string data_path = get_or<std::string>(cfg, "data", "", "train");
  flow::TrainConfig tc = flow::TrainConfig::from_json(cfg.value("train", json::object()));
  if (c.seed) tc.seed = *c.seed;
  tc.validate();
  const auto [rows, d_y] = io::read_dataset(data_path);

  const long every = std::max<long>(1, tc.steps / 10);
  auto on_step = [&](long step, double loss) {
    if ((step + 1) % every == 0) progress("step " + std::to_string(step + 1) + "/" + std::to_string(tc.steps) +
                                          " loss " + std::to_string(loss));
  };
  const flow::TrainResult r = flow::train_on_data(rows, d_y, tc, on_step);
  flow::save_checkpoint({r.params, r.standardizer, tc}, out_path(c, "checkpoint.json"));
  std::ofstream loss(out_path(c, "loss.csv"));
  flow::write_loss_csv(loss, r.loss);
  write_resolved(c, "train", {{"data", data_path}, {"train", tc.to_json()}});
  progress("wrote " + out_path(c, "checkpoint.json"));
  return 0;
}

// -------------------------------------------------------------------- sample

int cmd_sample(const Common& c) {
  const json cfg = load_config(c.config);
  check_keys(cfg, {"checkpoint", "y", "y_file", "n", "integrator", "seed"}, "sample");
  require(cfg.contains("checkpoint"), "sample config: missing 'checkpoint'");
  require(cfg.contains("y") != cfg.contains("y_file"), "sample config: give exactly one of 'y' or 'y_file'");
  const std::string ck_path = get_or<std::string>(cfg, "checkpoint", "", "sample");
  const flow::Checkpoint ck = flow::load_checkpoint(ck_path);
  const Index n = get_or<Index>(cfg, "n", 1, "sample");
  require(n >= 1, "sample config: n must be >= 1");
  const ode::IntegratorConfig ic = ode::IntegratorConfig::from_json(cfg.value("integrator", json::object()));
  const std::uint64_t seed = c.seed.value_or(get_or<std::uint64_t>(cfg, "seed", 0, "sample"));
  const Index d_y = ck.params.d_y;

  RowMatrix ys;
  json resolved{{"checkpoint", ck_path}, {"n", n}, {"integrator", ic.to_json()}, {"seed", seed}};
  if (cfg.contains("y")) {
    const auto v = get_or<std::vector<double>>(cfg, "y", {}, "sample");
    require(static_cast<Index>(v.size()) == d_y, "sample config: 'y' must have " + std::to_string(d_y) + " values");
    ys = RowMatrix(1, d_y);
    for (Index k = 0; k < d_y; ++k) ys(0, k) = v[static_cast<std::size_t>(k)];
    resolved["y"] = v;
  } else {
    const std::string y_path = get_or<std::string>(cfg, "y_file", "", "sample");
    const io::Table t = io::read_csv(y_path);
    ys = RowMatrix(t.values.rows(), d_y);
    for (Index k = 0; k < d_y; ++k) ys.col(k) = t.values.col(t.column("y" + std::to_string(k)));
    resolved["y_file"] = y_path;
  }
  RowMatrix y_rep(ys.rows() * n, d_y);
  for (Index i = 0; i < ys.rows(); ++i) y_rep.middleRows(i * n, n) = ys.row(i).replicate(n, 1);

  Rng rng = make_rng(seed, 0x5a3ULL);
  const RowMatrix u = ode::sample_conditional(ck, y_rep, ic, rng);
  RowMatrix joint(y_rep.rows(), d_y + ck.params.d_u);
  joint << y_rep, u;
  const std::string path = out_path(c, "samples.csv");
  io::write_csv(path, io::joint_header(d_y, ck.params.d_u), joint, "sample_id");
  write_resolved(c, "sample", resolved);
  progress("wrote " + path);
  return 0;
}

// ---------------------------------------------------------------------- eval

int cmd_eval(const Common& c) {
  const json cfg = load_config(c.config);
  check_keys(cfg, {"samples", "reference", "metrics", "epsilon", "mmd_bandwidth", "max_points", "seed"}, "eval");
  require(cfg.contains("samples") && cfg.contains("reference"), "eval config: need 'samples' and 'reference'");
  const std::string s_path = get_or<std::string>(cfg, "samples", "", "eval");
  const std::string r_path = get_or<std::string>(cfg, "reference", "", "eval");
  const auto names = get_or<std::vector<std::string>>(cfg, "metrics", {"w2", "mmd"}, "eval");
  const double eps = get_or<double>(cfg, "epsilon", 1e-2, "eval");
  const double bw = get_or<double>(cfg, "mmd_bandwidth", 0.0, "eval");
  const Index max_points = get_or<Index>(cfg, "max_points", metrics::kMaxMetricPoints, "eval");
  const std::uint64_t seed = c.seed.value_or(get_or<std::uint64_t>(cfg, "seed", 0, "eval"));
  require(max_points >= 1, "eval config: max_points must be >= 1");

  const auto [x, dy_x] = io::read_dataset(s_path);
  const auto [z, dy_z] = io::read_dataset(r_path);
  require(x.cols() == z.cols() && dy_x == dy_z, "eval: samples and reference have different columns");

  json report = json::array();
  for (const auto& m : names) {
    if (m == "w2") {
      report.push_back(metrics::metric_report("w2", metrics::w2_empirical(x, z, seed, max_points),
                                              std::min({x.rows(), z.rows(), max_points}), seed));
    } else if (m == "mmd") {
      metrics::MmdConfig mc;
      mc.bandwidth = bw;
      report.push_back(metrics::metric_report("mmd", metrics::mmd_squared(x, z, mc), std::min(x.rows(), z.rows()),
                                              seed, {{"bandwidth", bw}, {"estimator", "biased"}}));
    } else if (m == "cw") {
      const Index k = std::min({x.rows(), z.rows(), max_points});
      const RowMatrix xs = x.rows() == k ? x : metrics::subsample_rows(x, k, seed);
      const RowMatrix zs = z.rows() == k ? z : metrics::subsample_rows(z, k, seed + 1);
      const cw::CwEstimate e = cw::empirical_cw(ot::DiscreteMeasure::uniform(xs, dy_x),
                                                ot::DiscreteMeasure::uniform(zs, dy_x), 2, eps);
      report.push_back(metrics::metric_report("cw", e.distance, k, seed,
                                              {{"epsilon", eps}, {"p", 2}, {"max_y_slack", e.max_y_slack}}));
    } else {
      throw InvalidArgument("eval config: unknown metric '" + m + "' (expected w2, mmd or cw)");
    }
  }
  io::write_json(out_path(c, "report.json"), {{"samples", s_path}, {"reference", r_path}, {"metrics", report}});
  write_resolved(c, "eval", {{"samples", s_path}, {"reference", r_path}, {"metrics", names}, {"epsilon", eps},
                             {"mmd_bandwidth", bw}, {"max_points", max_points}, {"seed", seed}});
  std::cout << report.dump(2) << '\n';
  return 0;
}

// ----------------------------------------------------------------- benchmark

void write_log_samples(const std::string& path, const RowMatrix& s) {
  io::write_csv(path, {"log_alpha", "log_beta", "log_gamma", "log_delta"}, s, "sample_id");
}

int cmd_benchmark(const Common& c, const std::string& name_flag) {
  json cfg = c.config.empty() ? json::object() : load_config(c.config);
  std::string name = name_flag.empty() ? get_or<std::string>(cfg, "name", "", "benchmark") : name_flag;
  cfg.erase("name");
  if (c.seed) cfg["seed"] = *c.seed;
  if (name == "2d") {
    const bench::Bench2dConfig bc = bench::Bench2dConfig::from_json(cfg);
    const auto rows = bench::run_2d(bc, progress);
    std::ofstream csv(out_path(c, "per_test_set.csv"));
    bench::write_2d_csv(csv, rows);
    std::ofstream md(out_path(c, "table.md"));
    bench::write_2d_table(md, rows);
    bench::write_2d_table(std::cout, rows);
    json resolved = bc.to_json();
    resolved["name"] = "2d";
    write_resolved(c, "benchmark", resolved);
  } else if (name == "lv") {
    const bench::LvBenchConfig bc = bench::LvBenchConfig::from_json(cfg);
    const bench::LvBenchResult r = bench::run_lv(bc, progress);
    write_log_samples(out_path(c, "cot_fm_samples.csv"), r.cot);
    write_log_samples(out_path(c, "de_mc_samples.csv"), r.reference);
    write_log_samples(out_path(c, "prior_samples.csv"), r.prior);
    io::write_csv(out_path(c, "y_obs.csv"), io::numbered("y", r.y_obs.size()), RowMatrix(r.y_obs.transpose()));
    io::write_json(out_path(c, "report.json"), r.to_json());
    std::ofstream md(out_path(c, "table.md"));
    bench::write_lv_table(md, r);
    bench::write_lv_table(std::cout, r);
    json resolved = bc.to_json();
    resolved["name"] = "lv";
    write_resolved(c, "benchmark", resolved);
  } else {
    throw InvalidArgument("benchmark: name must be '2d' or 'lv' (got '" + name + "')");
  }
  return 0;
}

// ---------------------------------------------------------------------- plot

std::vector<double> column_values(const io::Table& t, const std::string& name) {
  const Index k = t.column(name);
  return {t.values.col(k).data(), t.values.col(k).data() + t.values.rows()};
}

int cmd_plot(const Common& c) {
  const json cfg = load_config(c.config);
  check_keys(cfg, {"samples", "reference", "kind", "x", "y", "columns", "title"}, "plot");
  require(cfg.contains("samples"), "plot config: missing 'samples'");
  const std::string s_path = get_or<std::string>(cfg, "samples", "", "plot");
  const std::string kind = get_or<std::string>(cfg, "kind", "scatter", "plot");
  const std::string title = get_or<std::string>(cfg, "title", "", "plot");
  const io::Table samples = io::read_csv(s_path);
  std::optional<io::Table> ref;
  if (cfg.contains("reference")) ref = io::read_csv(get_or<std::string>(cfg, "reference", "", "plot"));

  const std::string path = out_path(c, "plot.svg");
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write " + path);
  if (kind == "scatter") {
    const std::string xc = get_or<std::string>(cfg, "x", "u0", "plot");
    const std::string yc = get_or<std::string>(cfg, "y", "y0", "plot");
    std::vector<io::Series> series;
    if (ref) series.push_back({"reference", column_values(*ref, xc), column_values(*ref, yc), "#999999"});
    series.push_back({"samples", column_values(samples, xc), column_values(samples, yc), "#1f77b4"});
    io::write_scatter_svg(out, series, {title, xc, yc});
  } else if (kind == "kde1d") {
    const auto cols = get_or<std::vector<std::string>>(cfg, "columns", {"u0"}, "plot");
    require(!cols.empty(), "plot config: 'columns' must not be empty");
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::vector<io::Series> series;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const std::string color = palette[k % 6];
      series.push_back({cols[k], column_values(samples, cols[k]), {}, color});
      if (ref) series.push_back({cols[k] + " (reference)", column_values(*ref, cols[k]), {}, "#999999"});
    }
    io::write_kde_svg(out, series, {title, cols.size() == 1 ? cols[0] : "value", "density"});
  } else {
    throw InvalidArgument("plot config: kind must be 'scatter' or 'kde1d'");
  }
  write_resolved(c, "plot", cfg);
  progress("wrote " + path);
  return 0;
}

void add_common(CLI::App* sub, Common& c, bool config_required) {
  auto* opt = sub->add_option("--config", c.config, "JSON config file");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  else opt->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Seed (overrides the config)");
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"cotflow: conditional optimal transport flow matching"};
  app.require_subcommand(1);
  Common common;
  std::string bench_name;
  auto* gen = app.add_subcommand("generate", "Generate a joint dataset (2D synthetic or Lotka-Volterra)");
  auto* train = app.add_subcommand("train", "Train a conditional flow model on a joint CSV");
  auto* sample = app.add_subcommand("sample", "Draw conditional samples from a checkpoint");
  auto* eval = app.add_subcommand("eval", "Compare samples with a reference set (w2, mmd, cw)");
  auto* bench = app.add_subcommand("benchmark", "Run the 2d or lv benchmark end to end");
  auto* plot = app.add_subcommand("plot", "Write an SVG scatter or KDE plot");
  for (auto* s : {gen, train, sample, eval, plot}) add_common(s, common, true);
  add_common(bench, common, false);
  bench->add_option("--name", bench_name, "Benchmark name: 2d or lv (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (*gen) return cmd_generate(common);
    if (*train) return cmd_train(common);
    if (*sample) return cmd_sample(common);
    if (*eval) return cmd_eval(common);
    if (*bench) {
      if (common.config.empty() && bench_name.empty()) throw InvalidArgument("benchmark: give --config or --name");
      return cmd_benchmark(common, bench_name);
    }
    if (*plot) return cmd_plot(common);
  } catch (const InvalidArgument& e) {
    std::cerr << "cotflow: error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "cotflow: numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "cotflow: error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "cotflow: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
