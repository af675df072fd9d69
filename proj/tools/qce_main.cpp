// qce: experiment runner for quantum characteristic exponents.
//
//   qce run    — execute a preset or config-file experiment, write trace CSV,
//                manifest and (optionally) an SVG chart
//   qce chart  — re-plot an existing trace CSV
//   qce oracle — print exact results for a hyperbolic torus automorphism
//
// Exit codes for `run`: 0 completed, 1 usage/config error, 3 guard halt,
// 4 degenerate data, 5 I/O error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "qce/qce.hpp"

namespace {

qce::IVec2 parse_ivec_arg(const std::string& s, const std::string& what) {
  const auto parts = qce::detail::split(s, ',');
  try {
    if (parts.size() == 1) return {std::stol(parts[0]), 0};
    if (parts.size() == 2) return {std::stol(parts[0]), std::stol(parts[1])};
  } catch (const std::exception&) {
  }
  throw qce::config_error(what + ": expected 'a' or 'a,b', got '" + s + "'");
}

int run_command(const std::string& preset_name, const std::string& config_path,
                const std::map<std::string, std::string>& overrides, bool full_scale,
                bool chart, const std::string& out_dir) {
  std::optional<qce::Preset> preset;
  if (!preset_name.empty()) {
    if (preset_name == "cat") preset = qce::Preset::Cat;
    else if (preset_name == "rotor_quadratic") preset = qce::Preset::RotorQuadratic;
    else if (preset_name == "rotor_cosine") preset = qce::Preset::RotorCosine;
    else if (preset_name == "custom") preset = qce::Preset::Custom;
    else throw qce::config_error("unknown preset '" + preset_name + "'");
  }

  qce::ExperimentConfig cfg;
  if (!config_path.empty())
    cfg = qce::load_config(config_path, preset, full_scale);
  else
    cfg = qce::preset_config(preset.value_or(qce::Preset::RotorQuadratic), full_scale);

  for (const auto& [key, value] : overrides) {
    if (key == "grid_n") cfg.grid_n = std::stoi(value);
    else if (key == "n_max") cfg.n_max = std::stoi(value);
    else if (key == "q") cfg.kick_strength = std::stod(value);
    else if (key == "time_step") cfg.time_step = std::stod(value);
    else if (key == "l") cfg.observable_l = parse_ivec_arg(value, "--l");
    else if (key == "saturation_ratio") cfg.guards.saturation_ratio = std::stod(value);
    else if (key == "unitarity_eps") cfg.guards.unitarity_eps = std::stod(value);
    else if (key == "log_floor") cfg.guards.log_floor = std::stod(value);
    else if (key == "directions") {
      cfg.directions.clear();
      for (const auto& part : qce::detail::split(value, ';'))
        cfg.directions.push_back(parse_ivec_arg(part, "--directions"));
    }
  }
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (chart) cfg.emit_chart = true;

  const qce::ExperimentResult res = qce::run_experiment(cfg);

  std::printf("preset            %s\n", qce::to_string(cfg.preset));
  std::printf("grid              %s, N=%d\n", cfg.dim() == 1 ? "circle" : "torus", cfg.grid_n);
  std::printf("records           %zu (n = 0..%d)\n", res.traces.front().records.size(),
              res.traces.front().records.back().n);
  std::printf("status            %s%s%s\n",
              res.status == qce::RunStatus::Completed ? "completed"
              : res.status == qce::RunStatus::GuardHalt ? "halted by guard: " : "degenerate data: ",
              res.status == qce::RunStatus::Completed ? "" : qce::to_string(res.halt), "");
  if (res.fit) {
    std::printf("lambda_fit        %.6f  (rms residual %.3g, n in [%d,%d])\n", res.fit->lambda,
                res.fit->residual, res.fit->n_lo, res.fit->n_hi);
    for (std::size_t i = 0; i < res.traces.size(); ++i)
      std::printf("  transient c[%s]  %+.6f\n",
                  qce::detail::direction_tag(res.traces[i].direction, cfg.dim()).c_str(),
                  res.fit->transients[i]);
  }
  if (res.lambda_exact) {
    std::printf("lambda_exact      %.6f\n", *res.lambda_exact);
    if (res.fit) std::printf("lambda_gap        %.6f\n", std::abs(res.fit->lambda - *res.lambda_exact));
  }
  std::printf("trace             %s\n", res.trace_path.string().c_str());
  std::printf("manifest          %s\n", res.manifest_path.string().c_str());
  if (!res.chart_path.empty()) std::printf("chart             %s\n", res.chart_path.string().c_str());

  switch (res.status) {
    case qce::RunStatus::Completed: return 0;
    case qce::RunStatus::GuardHalt: return 3;
    case qce::RunStatus::DegenerateData: return 4;
  }
  return 0;
}

int oracle_command(const std::string& m_str, const std::string& l_str, const std::string& v_str,
                   bool v_orthogonal, int steps) {
  const qce::CatMatrix cat(qce::detail::parse_mat2(m_str, 0));
  const qce::IVec2 l = parse_ivec_arg(l_str, "--l");
  qce::Vec2 v;
  qce::IVec2 vi = parse_ivec_arg(v_str, "--v");
  if (v_orthogonal) {
    v = cat.orthogonal_to_unstable();
  } else {
    v = {static_cast<double>(vi[0]), static_cast<double>(vi[1])};
  }

  std::printf("matrix            [[%lld, %lld], [%lld, %lld]], det = %lld, trace = %lld\n",
              cat.m.a, cat.m.b, cat.m.c, cat.m.d, cat.m.det(), cat.m.trace());
  std::printf("eigenvalues       mu1 = %.12f, mu2 = %.12f\n", cat.mu1(), cat.mu2());
  std::printf("direction v       (%.12g, %.12g)%s\n", v[0], v[1],
              v_orthogonal ? "  [orthogonal to the unstable eigendirection]" : "");
  std::printf("exact exponent    lambda_v = %.6f\n", qce::exact_exponent(cat, v, l));
  std::printf("log(mu1)          %.6f\n", cat.log_mu1());

  if (steps > 0 && !v_orthogonal) {
    const auto seq = qce::finite_exponent_sequence(cat, vi, l, steps);
    const auto orb = qce::orbit(cat, l, std::min(steps, 8));
    std::printf("orbit M^k l       ");
    for (std::size_t k = 0; k < orb.size(); ++k)
      std::printf("%s(%s, %s)", k ? ", " : "", orb[k].x.str().c_str(), orb[k].y.str().c_str());
    std::printf("%s\n", steps > 8 ? ", ..." : "");
    std::printf("finite-n (1/n)log|v.M^n l|:\n");
    for (int n : {1, 2, 5, 10, steps})
      if (n >= 1 && n <= steps) std::printf("  n=%-4d %.9f\n", n, seq[n - 1]);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for quantum characteristic exponents"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run an experiment and persist its outputs");
  std::string preset_name, config_path, out_dir;
  bool full_scale = false, chart = false;
  std::map<std::string, std::string> ov;
  run->add_option("--preset", preset_name, "cat | rotor_quadratic | rotor_cosine | custom");
  run->add_option("--config", config_path, "config or manifest file to load");
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--full-scale", full_scale, "use the full-size grid for the preset");
  run->add_flag("--chart", chart, "also emit chart.svg");
  for (const char* key : {"grid_n", "n_max", "q", "time_step", "l", "directions",
                          "saturation_ratio", "unitarity_eps", "log_floor"}) {
    ov[key];  // reserve slot so the reference below stays valid
  }
  run->add_option("--grid-n", ov["grid_n"], "points per axis");
  run->add_option("--n-max", ov["n_max"], "trace length");
  run->add_option("--q", ov["q"], "kick strength");
  run->add_option("--time-step", ov["time_step"], "free-flight time per period");
  run->add_option("--l", ov["l"], "observable wavevector, e.g. 1 or 1,1");
  run->add_option("--directions", ov["directions"], "derivative directions, e.g. '1,0; 0,1'");
  run->add_option("--saturation-ratio", ov["saturation_ratio"], "saturation guard ratio");
  run->add_option("--unitarity-eps", ov["unitarity_eps"], "roundtrip guard bound");
  run->add_option("--log-floor", ov["log_floor"], "relative floor for log averages");

  // chart
  auto* chart_cmd = app.add_subcommand("chart", "render an SVG chart from a trace CSV");
  std::string csv_path, svg_path = "chart.svg";
  bool no_fit = false;
  chart_cmd->add_option("csv", csv_path, "trace CSV path")->required();
  chart_cmd->add_option("--out", svg_path, "output SVG path");
  chart_cmd->add_flag("--no-fit", no_fit, "points only, no fitted curves");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "print exact torus-automorphism results");
  std::string m_str = "1,1,1,2", l_str = "1,0", v_str = "1,0";
  bool v_orthogonal = false;
  int steps = 30;
  oracle->add_option("--m", m_str, "integer matrix 'a,b,c,d' row-major (det 1, |trace| > 2)");
  oracle->add_option("--l", l_str, "observable wavevector");
  oracle->add_option("--v", v_str, "integer direction");
  oracle->add_flag("--v-orthogonal", v_orthogonal,
                   "use the closed-form direction orthogonal to the unstable eigendirection");
  oracle->add_option("--steps", steps, "finite-n sequence length");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      std::map<std::string, std::string> given;
      for (auto& [k, v] : ov)
        if (!v.empty()) given[k] = v;
      return run_command(preset_name, config_path, given, full_scale, chart, out_dir);
    }
    if (chart_cmd->parsed()) {
      qce::emit_chart_file(csv_path, svg_path, !no_fit);
      std::printf("chart             %s\n", svg_path.c_str());
      return 0;
    }
    if (oracle->parsed()) return oracle_command(m_str, l_str, v_str, v_orthogonal, steps);
  } catch (const qce::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const qce::csv_parse_error& e) {
    std::fprintf(stderr, "csv error: %s\n", e.what());
    return 1;
  } catch (const qce::io_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 5;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
