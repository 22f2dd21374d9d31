#include "semiglobal/report.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "semiglobal/burnside.hpp"

namespace semiglobal {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

class StageTimer {
 public:
  explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}
  template <typename Fn>
  auto time(const std::string& name, Fn&& fn) {
    auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      sink_[name] += elapsed_ms(t0);
    } else {
      auto out = fn();
      sink_[name] += elapsed_ms(t0);
      return out;
    }
  }

 private:
  static double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t0)
        .count();
  }
  std::map<std::string, double>& sink_;
};

VectorXd to_vec(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

ordered_json diag_json(const ExpansionDiagnostics& d) {
  ordered_json j;
  j["norm_bounds"] = {{"a", d.bounds.a},
                      {"b", d.bounds.b},
                      {"c", d.bounds.c},
                      {"d", d.bounds.d},
                      {"a_limit", d.bounds.a_limit},
                      {"b_limit", d.bounds.b_limit}};
  j["solvability"] = {{"precondition_ok", d.precondition_ok},
                      {"checked", d.eq38_checked},
                      {"pass", d.eq38_pass},
                      {"warning", d.solvability_warning},
                      {"s1_star", d.s1},
                      {"margin_lower_bound", d.margin_lower_bound}};
  if (std::isfinite(d.s2)) j["solvability"]["s2_star"] = d.s2;
  j["conditioning"] = {{"max_phi_cond", d.max_phi_cond},
                       {"max_L_cond", d.max_L_cond},
                       {"cond_Z", d.cond_Z},
                       {"tail_product_norm", d.tail_product_norm},
                       {"max_step_margin", d.max_step_margin}};
  j["path_residual"] = d.path_residual_norm;
  return j;
}

void write_json(const ordered_json& j, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SolverError("cannot open '" + path + "' for writing");
  f << j.dump(2) << '\n';
}

struct ModelEntry {
  ModelSpec (*factory)(const std::map<std::string, double>&);
};

ModelSpec burnside_factory(const std::map<std::string, double>& params) {
  return burnside::make_model(burnside::params_from_overrides(params));
}

const std::map<std::string, ModelEntry>& registry() {
  static const std::map<std::string, ModelEntry> reg = {
      {"burnside", {&burnside_factory}},
  };
  return reg;
}

std::string error_name(const SolverError& e) {
  if (dynamic_cast<const SpecError*>(&e)) return "spec";
  if (dynamic_cast<const DifferentiationError*>(&e)) return "differentiation";
  if (dynamic_cast<const SteadyStateError*>(&e)) return "steady-state";
  if (dynamic_cast<const ConditioningError*>(&e)) return "conditioning";
  if (dynamic_cast<const PathError*>(&e)) return "path";
  if (dynamic_cast<const HorizonError*>(&e)) return "horizon";
  if (dynamic_cast<const IndeterminacyError*>(&e)) return "indeterminacy";
  if (dynamic_cast<const BlanchardKahnError*>(&e)) return "blanchard-kahn";
  if (dynamic_cast<const SingularSystemError*>(&e)) return "singular-system";
  if (dynamic_cast<const RecursionBreakdownError*>(&e)) return "recursion-breakdown";
  if (dynamic_cast<const DivergenceError*>(&e)) return "divergence";
  return "solver";
}

// Expected-path table shared by solve and irf outputs.
Table path_table(const DeterministicPath& p0, const MatrixXd& x1, const MatrixXd& y1,
                 const MatrixXd& x2, const MatrixXd& y2, const MatrixXd& xt,
                 const MatrixXd& yt) {
  Table t;
  const Index T = xt.rows() - 1;
  const Index n_x = xt.cols(), n_y = yt.cols();
  t.columns.push_back("t");
  auto cols = [&](const std::string& base, Index n) {
    for (Index i = 0; i < n; ++i)
      t.columns.push_back(n == 1 ? base : base + "_" + std::to_string(i));
  };
  cols("x_order0", n_x); cols("y_order0", n_y);
  cols("x_order1", n_x); cols("y_order1", n_y);
  cols("x_order2", n_x); cols("y_order2", n_y);
  cols("x_total", n_x);  cols("y_total", n_y);
  for (Index tt = 0; tt <= T; ++tt) {
    std::vector<double> row;
    row.push_back(static_cast<double>(tt));
    for (Index i = 0; i < n_x; ++i) row.push_back(p0.x(tt, i));
    for (Index i = 0; i < n_y; ++i) row.push_back(p0.y(tt, i));
    for (Index i = 0; i < n_x; ++i) row.push_back(x1(tt, i));
    for (Index i = 0; i < n_y; ++i) row.push_back(y1(tt, i));
    for (Index i = 0; i < n_x; ++i) row.push_back(x2(tt, i));
    for (Index i = 0; i < n_y; ++i) row.push_back(y2(tt, i));
    for (Index i = 0; i < n_x; ++i) row.push_back(xt(tt, i));
    for (Index i = 0; i < n_y; ++i) row.push_back(yt(tt, i));
    t.add_row(std::move(row));
  }
  return t;
}

}  // namespace

void RunConfig::validate() const {
  if (command != "solve" && command != "compare" && command != "diagnose" &&
      command != "irf")
    throw SpecError("unknown command '" + command + "'");
  if (registry().find(model) == registry().end()) {
    std::string names;
    for (const auto& n : registered_models()) names += (names.empty() ? "" : ", ") + n;
    throw SpecError("model '" + model + "' is not registered (available: " + names + ")");
  }
  if (order < 0 || order > 2) throw SpecError("order must be 0, 1 or 2");
  if (grid.count < 2) throw SpecError("grid count must be at least 2");
  if (horizon < 2) throw SpecError("horizon must be at least 2");
}

ModelSpec make_model_by_name(const std::string& name,
                             const std::map<std::string, double>& params) {
  auto it = registry().find(name);
  if (it == registry().end()) throw SpecError("model '" + name + "' is not registered");
  return it->second.factory(params);
}

std::vector<std::string> registered_models() {
  std::vector<std::string> names;
  for (const auto& [name, entry] : registry()) names.push_back(name);
  return names;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  auto get_vec = [](const json& v) {
    std::vector<double> out;
    if (v.is_number()) out.push_back(v.get<double>());
    else for (const auto& e : v) out.push_back(e.get<double>());
    return out;
  };
  if (j.contains("command")) c.command = j.at("command").get<std::string>();
  if (j.contains("model")) c.model = j.at("model").get<std::string>();
  if (j.contains("params"))
    for (const auto& [k, v] : j.at("params").items()) c.params[k] = v.get<double>();
  if (j.contains("x0")) c.x0 = get_vec(j.at("x0"));
  if (j.contains("z0")) c.z0 = get_vec(j.at("z0"));
  if (j.contains("sigma")) c.sigma = j.at("sigma").get<double>();
  if (j.contains("order")) c.order = j.at("order").get<int>();
  if (j.contains("horizon")) c.horizon = j.at("horizon").get<Index>();
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    if (g.is_number_integer()) c.grid.count = g.get<int>();
    else {
      if (g.contains("count")) c.grid.count = g.at("count").get<int>();
      if (g.contains("delta")) c.grid.delta = g.at("delta").get<double>();
    }
  }
  if (j.contains("delta")) c.grid.delta = j.at("delta").get<double>();
  if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("shock")) c.shock = j.at("shock").get<double>();
  if (j.contains("parallel")) c.parallel = j.at("parallel").get<bool>();
  return c;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw SpecError("config file '" + path + "' cannot be opened");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw SpecError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

RunReport run(const RunConfig& config) {
  RunReport report;
  StageTimer timer(report.timings_ms);
  ordered_json out;
  out["command"] = config.command;
  out["model"] = config.model;
  out["seed"] = config.seed;

  const fs::path dir(config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);

  auto finalize = [&](int code) {
    std::string path = (dir / "diagnostics.json").string();
    write_json(out, path);
    report.files_written.push_back(path);
    if (!report.timings_ms.empty()) {
      std::ofstream tf(dir / "timings.txt");
      for (const auto& [k, v] : report.timings_ms) tf << k << ' ' << v << " ms\n";
    }
    report.exit_code = code;
    return report;
  };

  try {
    config.validate();
    ModelSpec model = make_model_by_name(config.model, config.params);
    const double sigma = config.sigma >= 0.0 ? config.sigma : model.sigma;
    out["sigma"] = sigma;

    VectorXd x0;
    if (!config.x0.empty()) {
      x0 = to_vec(config.x0);
    } else {
      SteadyState ss = steady_state(model, VectorXd::Zero(model.n_rows()));
      x0 = ss.x;
    }
    VectorXd z0 = config.z0.empty() ? VectorXd::Zero(model.n_z) : to_vec(config.z0);
    if (x0.size() != model.n_x || z0.size() != model.n_z)
      throw SpecError("x0 / z0 dimensions do not match the model");

    ExpansionOptions opts;
    opts.path.T = config.horizon;

    if (config.command == "solve") {
      ExpansionSolution sol = timer.time("solve_expansion", [&] {
        return solve_expansion(model, x0, z0, sigma, config.order, opts);
      });
      out["x0"] = std::vector<double>(x0.data(), x0.data() + x0.size());
      out["order"] = config.order;
      out["steady_state"] = {
          {"y", std::vector<double>(sol.path0.steady.y.data(),
                                    sol.path0.steady.y.data() + model.n_y)},
          {"x", std::vector<double>(sol.path0.steady.x.data(),
                                    sol.path0.steady.x.data() + model.n_x)}};
      ordered_json pol;
      pol["y_order0"] = std::vector<double>(sol.path0.y.row(0).begin(),
                                            sol.path0.y.row(0).end());
      pol["y0_order1"] = std::vector<double>(sol.y0_order1.begin(), sol.y0_order1.end());
      pol["y0_order2"] = std::vector<double>(sol.y0_order2.begin(), sol.y0_order2.end());
      pol["y_total"] =
          std::vector<double>(sol.Ey_total.row(0).begin(), sol.Ey_total.row(0).end());
      out["policy"] = pol;
      out["diagnostics"] = diag_json(sol.diag);

      Table t = path_table(sol.path0, sol.Ex1, sol.Ey1, sol.Ex2, sol.Ey2,
                           sol.Ex_total, sol.Ey_total);
      std::string csv = (dir / "solution.csv").string();
      emit_csv(t, csv);
      report.files_written.push_back(csv);

      std::ostringstream os;
      os << "y(x0) = " << format_number(sol.Ey_total(0, 0))
         << "  (order-0 " << format_number(sol.path0.y(0, 0))
         << ", sigma^2 correction "
         << format_number(sigma * sigma * sol.y0_order2[0]) << ")";
      report.summary = os.str();
    } else if (config.command == "compare") {
      if (config.model != "burnside")
        throw SpecError("compare needs a model with a closed-form reference "
                        "(available: burnside)");
      burnside::Params bp = burnside::params_from_overrides(config.params);
      if (config.sigma >= 0.0) bp.sigma = config.sigma;
      auto grid = burnside::default_grid(bp, config.grid.count, config.grid.delta);
      burnside::AccuracyReport acc = timer.time("accuracy_report", [&] {
        return burnside::accuracy_report(bp, grid, config.parallel);
      });
      std::string csv = (dir / "policy.csv").string();
      emit_csv(acc.table, csv);
      report.files_written.push_back(csv);

      const auto& f = acc.flags;
      out["grid"] = {{"count", config.grid.count},
                     {"delta", config.grid.delta},
                     {"sigma_x", bp.sigma_x()}};
      out["max_rel_error"] = {{"semiglobal2", f.max_rel_semiglobal},
                              {"taylor2", f.max_rel_taylor2},
                              {"taylor6", f.max_rel_taylor6}};
      out["right_endpoint"] = {{"rel_semiglobal2", f.right_rel_semiglobal},
                               {"rel_taylor2", f.right_rel_taylor2},
                               {"rel_taylor6", f.right_rel_taylor6},
                               {"exact_below_steady", f.exact_below_steady},
                               {"taylor2_above_steady", f.taylor2_above_steady},
                               {"semiglobal_below_steady", f.semiglobal_below_steady}};
      out["sign_mismatch"] = {{"taylor2", f.taylor2_sign_mismatch},
                              {"taylor6", f.taylor6_sign_mismatch},
                              {"semiglobal2", f.semiglobal_sign_mismatch}};
      out["right_half_ranking_sg_t6_t2"] = f.right_half_ranking;

      std::ostringstream os;
      os << "max rel err: semiglobal2 " << f.max_rel_semiglobal << ", taylor2 "
         << f.max_rel_taylor2 << ", taylor6 " << f.max_rel_taylor6
         << "; right-half ranking sg<t6<t2: " << (f.right_half_ranking ? "yes" : "no");
      report.summary = os.str();
    } else if (config.command == "diagnose") {
      ExpansionSolution sol = timer.time("pipeline", [&] {
        return solve_expansion(model, x0, z0, sigma, 1, opts);
      });
      out["x0"] = std::vector<double>(x0.data(), x0.data() + x0.size());
      out["diagnostics"] = diag_json(sol.diag);
      const NormBounds& nb = sol.diag.bounds;
      std::ostringstream os;
      os << "a = " << nb.a << ", b = " << nb.b << ", c = " << nb.c
         << ", d = " << nb.d << "; solvability "
         << (sol.diag.precondition_ok
                 ? (sol.diag.eq38_pass ? "pass" : "fail (per-step fallback)")
                 : "precondition violated (per-step fallback)");
      report.summary = os.str();
    } else {  // irf
      VectorXd shock = VectorXd::Constant(model.n_z, config.shock);
      ImpulseResponse irf = timer.time("impulse_response", [&] {
        return impulse_response(model, x0, z0, sigma, shock, opts);
      });
      ExpansionSolution base = solve_expansion(model, x0, z0, sigma, 0, opts);
      Table t = path_table(base.path0, irf.x1, irf.y1, irf.x2, irf.y2, irf.x_total,
                           irf.y_total);
      std::string csv = (dir / "irf.csv").string();
      emit_csv(t, csv);
      report.files_written.push_back(csv);
      out["x0"] = std::vector<double>(x0.data(), x0.data() + x0.size());
      out["shock"] = config.shock;
      out["diagnostics"] = diag_json(base.diag);
      std::ostringstream os;
      os << "impulse response written for " << irf.x_total.rows() << " periods";
      report.summary = os.str();
    }
    return finalize(0);
  } catch (const SolverError& e) {
    ordered_json err;
    err["type"] = error_name(e);
    err["stage"] = e.stage().empty() ? "run" : e.stage();
    err["message"] = e.what();
    out["error"] = err;
    report.summary = std::string("error: ") + e.what();
    return finalize(1);
  } catch (const std::exception& e) {
    ordered_json err;
    err["type"] = "exception";
    err["stage"] = "run";
    err["message"] = e.what();
    out["error"] = err;
    report.summary = std::string("error: ") + e.what();
    return finalize(1);
  }
}

}  // namespace semiglobal
