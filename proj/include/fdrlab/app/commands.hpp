// Copyright (c) 2026 The fdrlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0.txt
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file commands.hpp
 * @brief The experiment runner behind the `fdrlab` command line tool.
 *
 * Every command reads an ExperimentConfig, writes its artifacts into one
 * directory and finishes with manifest.json. Numeric outputs never contain
 * timestamps or thread counts, so they are bitwise reproducible; only the
 * manifest records those.
 */

#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fdrlab/fdrlab.hpp"
#include "fdrlab/io/config.hpp"
#include "fdrlab/io/output.hpp"

namespace fdrlab::app {

namespace fs = std::filesystem;
using io::json;

enum ExitCode : int { kSuccess = 0, kInvalidConfig = 1, kNumericalFailure = 2, kInvariantFailure = 3 };

struct RunOptions {
  unsigned threads = 1;
  std::optional<fs::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<std::size_t> steps;
};

using Logger = std::function<void(const std::string&)>;

/// Applies command-line overrides; the grid is rebuilt so validation runs again.
inline io::ExperimentConfig apply_overrides(io::ExperimentConfig cfg, const RunOptions& opts) {
  if (opts.seed) cfg.master_seed = *opts.seed;
  if (opts.dt || opts.steps) {
    const double dt = opts.dt.value_or(cfg.grid.dt);
    const std::size_t n = opts.steps.value_or(cfg.grid.n_steps);
    if (!(dt > 0.0) || n < 2) throw ConfigError("--dt must be positive and --steps at least 2");
    cfg.grid = TimeGrid(dt, n);
  }
  return cfg;
}

/// SHA-256 of the parsed document plus the overrides that were applied.
inline std::string config_hash(const io::ExperimentConfig& cfg) {
  json j = cfg.document;
  j["__effective"] = {{"master_seed", cfg.master_seed}, {"dt", cfg.grid.dt}, {"n_steps", cfg.grid.n_steps}};
  return io::sha256_hex(j.dump());
}

/// Shared bookkeeping for one command invocation.
class Run {
 public:
  Run(std::string command, io::ExperimentConfig cfg, RunOptions opts, Logger log)
      : command_(std::move(command)), cfg_(std::move(cfg)), opts_(std::move(opts)), log_(std::move(log)),
        start_(std::chrono::steady_clock::now()), started_at_(std::time(nullptr)) {
    dir_ = opts_.out.value_or(fs::path(cfg_.outputs.directory));
    fs::create_directories(dir_);
  }

  const io::ExperimentConfig& cfg() const { return cfg_; }
  const RunOptions& opts() const { return opts_; }
  const fs::path& dir() const { return dir_; }
  void log(const std::string& msg) const {
    if (log_) log_(msg);
  }

  io::CsvWriter csv(const std::string& name, const std::vector<std::string>& header) {
    files_.push_back(dir_ / name);
    return io::CsvWriter(files_.back(), header);
  }

  void write_json(const std::string& name, const json& j) {
    files_.push_back(dir_ / name);
    io::write_json(files_.back(), j);
  }

  /// Writes manifest.json covering every file produced so far.
  json finish() {
    io::RunManifest m;
    m.version = kVersion;
    m.command = command_;
    m.config_hash = config_hash(cfg_);
    m.seed = cfg_.master_seed;
    m.threads = opts_.threads;
    m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::ostringstream ts;
    ts << std::put_time(std::gmtime(&started_at_), "%Y-%m-%dT%H:%M:%SZ");
    m.started_at = ts.str();
    m.outputs = files_;
    const json j = m.to_json();
    io::write_json(dir_ / "manifest.json", j);
    return j;
  }

 private:
  std::string command_;
  io::ExperimentConfig cfg_;
  RunOptions opts_;
  Logger log_;
  fs::path dir_;
  std::vector<fs::path> files_;
  std::chrono::steady_clock::time_point start_;
  std::time_t started_at_;
};

namespace detail {

inline std::vector<std::string> matrix_header(Eigen::Index d) {
  std::vector<std::string> h{"t"};
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      h.push_back("re_" + std::to_string(r) + "_" + std::to_string(c));
      h.push_back("im_" + std::to_string(r) + "_" + std::to_string(c));
    }
  }
  return h;
}

inline std::vector<double> matrix_row(double t, const Matrix& m) {
  std::vector<double> row{t};
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(m(r, c).real());
      row.push_back(m(r, c).imag());
    }
  }
  return row;
}

inline EnsemblePropagation propagate(const io::ExperimentConfig& cfg, const SystemSpec& spec, const TimeGrid& grid,
                                     unsigned threads) {
  auto configs = sample_configurations(spec.ensemble(), cfg.n_configs, cfg.master_seed);
  return EnsemblePropagation(spec, std::move(configs), grid, PropagationOptions{threads, std::nullopt});
}

inline json state_json(const std::string& name, const Matrix& m) {
  return json{{"name", name}, {"dim", m.rows()}, {"matrix", io::matrix_to_json(m)}};
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace detail

/// sigma_beta.json, sigma_prime.json and summary.json.
inline int cmd_equilibrium(Run& run) {
  const auto& cfg = run.cfg();
  const HermitianOperator hbar = cfg.mean_hamiltonian();
  const DensityMatrix sigma = gibbs_state(cfg.h0, cfg.beta);
  const DensityMatrix sigma_prime = adjusted_equilibrium(cfg.h0, cfg.ensemble().declared_mean(), cfg.beta);
  run.write_json("sigma_beta.json", detail::state_json("sigma_beta", sigma.matrix()));
  run.write_json("sigma_prime.json", detail::state_json("sigma_prime", sigma_prime.matrix()));
  const auto e0 = hermitian_eig(cfg.h0).eigenvalues;
  const auto eb = hermitian_eig(hbar).eigenvalues;
  json summary{{"beta", cfg.beta},
               {"h0_eigenvalues", std::vector<double>(e0.data(), e0.data() + e0.size())},
               {"hbar_eigenvalues", std::vector<double>(eb.data(), eb.data() + eb.size())},
               {"energy_sigma_beta_h0", energy(sigma, cfg.h0)},
               {"energy_sigma_prime_hbar", energy(sigma_prime, hbar)},
               {"entropy_sigma_beta", von_neumann_entropy(sigma)},
               {"entropy_sigma_prime", von_neumann_entropy(sigma_prime)},
               {"populations_sigma_beta",
                [&] {
                  const auto p = boltzmann_weights(e0, cfg.beta);
                  return std::vector<double>(p.data(), p.data() + p.size());
                }()}};
  run.write_json("summary.json", summary);
  run.log("equilibrium: wrote sigma_beta.json, sigma_prime.json, summary.json");
  run.finish();
  return kSuccess;
}

/// mean_state.csv, deviation_norm.csv, entropy_margin.csv, residual.csv, eta_check.csv.
inline int cmd_evolve(Run& run) {
  const auto& cfg = run.cfg();
  const SystemSpec spec = cfg.system();
  const Matrix rho0 = cfg.initial_state().matrix();
  const auto prop = detail::propagate(cfg, spec, cfg.grid, run.opts().threads);
  run.log("evolve: " + std::to_string(prop.configs().size()) + " configurations, " +
          std::to_string(cfg.grid.n_steps) + " steps, retained=" + (prop.retained() ? "yes" : "no"));
  const MeanTrajectory mean = mean_state(prop, rho0);
  const DeviationSeries dev = deviation_term(prop, rho0);
  const auto residual = mean_dynamics_residual(mean, dev);
  const auto margin = entropy_margin(mean);
  const auto eta_err = eta_decomposition_error(mean, dev, rho0);
  const auto eta_values = eta(dev);
  const TimeGrid& grid = cfg.grid;

  auto ms = run.csv("mean_state.csv", detail::matrix_header(spec.dim()));
  for (std::size_t k = 0; k < grid.size(); ++k) ms.row(detail::matrix_row(grid.time(k), mean.states[k]));
  ms.close();

  auto dn = run.csv("deviation_norm.csv", {"t", "deviation_norm", "mean_state_standard_error"});
  for (std::size_t k = 0; k < grid.size(); ++k) {
    dn.row({grid.time(k), dev.values[k].norm(), mean.standard_error[k]});
  }
  dn.close();

  auto em = run.csv("entropy_margin.csv", {"t", "entropy", "margin"});
  const double s0 = von_neumann_entropy(mean.states.front());
  for (std::size_t k = 0; k < grid.size(); ++k) em.row({grid.time(k), s0 + margin[k], margin[k]});
  em.close();

  auto rs = run.csv("residual.csv", {"t", "residual"});
  for (std::size_t k = 0; k < residual.size(); ++k) rs.row({grid.time(k + 1), residual[k]});
  rs.close();

  auto ec = run.csv("eta_check.csv", {"t", "eta_norm", "decomposition_error"});
  for (std::size_t k = 0; k < grid.size(); ++k) ec.row({grid.time(k), eta_values[k].norm(), eta_err[k]});
  ec.close();

  double min_margin = 0.0, max_res = 0.0;
  for (double m : margin) min_margin = std::min(min_margin, m);
  for (double r : residual) max_res = std::max(max_res, r);
  run.log("evolve: max residual " + io::format_double(max_res) + ", min entropy margin " +
          io::format_double(min_margin));
  run.finish();
  return kSuccess;
}

/// response.csv, kubo_check.csv, delta.csv, perturbed_expectation.csv, kubo_summary.json.
inline int cmd_response(Run& run) {
  const auto& cfg = run.cfg();
  if (!cfg.bath) throw ConfigError("response: the configuration has no 'bath' section");
  const SystemSpec spec = cfg.system();
  const Matrix a = cfg.op("A").matrix();
  const HermitianOperator& b = cfg.op("B");
  const double eps = cfg.bath->epsilon.value_or(default_epsilon(b));
  const double tp = cfg.bath->t_prime;
  const auto prop = detail::propagate(cfg, spec, cfg.grid, run.opts().threads);
  const TimeGrid& grid = cfg.grid;
  const Matrix rho0 = cfg.initial_state().matrix();

  const ResponseSeries resp = response_function(prop, rho0, a, b, tp, eps);
  auto rc = run.csv("response.csv", {"t", "re_R", "im_R", "richardson_error"});
  for (std::size_t k = 0; k < grid.size(); ++k) {
    rc.row({grid.time(k), resp.values[k].real(), resp.values[k].imag(), resp.richardson_error[k]});
  }
  rc.close();

  const KuboReport kubo = kubo_series(prop, a, b, tp, eps);
  auto kc = run.csv("kubo_check.csv", {"t", "re_lhs", "im_lhs", "re_rhs", "im_rhs", "error", "error_bound",
                                       "re_c_minus", "im_c_minus", "re_delta", "im_delta", "re_first_order",
                                       "im_first_order", "first_order_error"});
  double max_bound = 0.0;
  for (const auto& r : kubo.rows) {
    kc.row({r.t, r.lhs.real(), r.lhs.imag(), r.rhs.real(), r.rhs.imag(), r.abs_error, r.error_bound,
            r.c_minus.real(), r.c_minus.imag(), r.delta.real(), r.delta.imag(), r.first_order.real(),
            r.first_order.imag(), std::abs(r.lhs - r.first_order)});
    max_bound = std::max(max_bound, r.error_bound);
  }
  kc.close();

  auto dc = run.csv("delta.csv", {"t", "re_delta", "im_delta"});
  for (const auto& r : kubo.rows) {
    if (r.t >= kubo.t_prime) dc.row({r.t, r.delta.real(), r.delta.imag()});
  }
  dc.close();

  const BathCoupling coupling{b, cfg.bath->profile, tp, eps};
  const MeanTrajectory free = mean_state(prop, rho0);
  const MeanTrajectory pert = perturbed_mean_state(prop, rho0, coupling);
  auto pe = run.csv("perturbed_expectation.csv", {"t", "re_A", "im_A", "re_A_perturbed", "im_A_perturbed"});
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Complex x0 = (free.states[k] * a).trace();
    const Complex x1 = (pert.states[k] * a).trace();
    pe.row({grid.time(k), x0.real(), x0.imag(), x1.real(), x1.imag()});
  }
  pe.close();

  const KuboRow& at_tp = kubo.at(kubo.t_prime);
  double max_first_order = 0.0;
  for (const auto& r : kubo.rows) max_first_order = std::max(max_first_order, std::abs(r.lhs - r.first_order));
  json summary{{"t_prime", kubo.t_prime},
               {"epsilon", eps},
               {"profile", to_string(cfg.bath->profile)},
               {"fitted_factor", io::complex_to_json(kubo.fitted_factor)},
               {"formula_factor", io::complex_to_json(Complex(0.0, 2.0))},
               {"max_abs_error", kubo.max_abs_error},
               {"max_error_bound", max_bound},
               {"delta_at_t_prime", io::complex_to_json(at_tp.delta)},
               {"first_order_error_at_t_prime", std::abs(at_tp.lhs - at_tp.first_order)},
               {"max_first_order_error", max_first_order},
               {"finite_ensemble", cfg.is_finite()}};
  run.write_json("kubo_summary.json", summary);
  run.log("response: fitted factor " + io::format_double(kubo.fitted_factor.real()) + " + " +
          io::format_double(kubo.fitted_factor.imag()) + "i (formula uses 2i), max |lhs - rhs| " +
          io::format_double(kubo.max_abs_error));
  run.finish();
  return kSuccess;
}

/// Times at which the command line tool evaluates the KMS identity.
inline std::vector<double> kms_times() {
  std::vector<double> t;
  for (int k = -10; k <= 10; ++k) t.push_back(0.5 * k);
  return t;
}

/// lines.csv, kms_check.json, windowed_spectra.csv, windowed_lines.csv, fdr_summary.json.
inline int cmd_fdr(Run& run) {
  const auto& cfg = run.cfg();
  const HermitianOperator hbar = cfg.mean_hamiltonian();
  const Matrix a = cfg.op("A").matrix();
  const Matrix b = cfg.op("B").matrix();

  const auto table = line_identities(a, b, hbar, cfg.beta);
  auto lc = run.csv("lines.csv", {"lambda", "re_plain", "im_plain", "re_sym", "im_sym", "re_antisym", "im_antisym",
                                  "re_response", "im_response", "ratio_antisym_plain", "expected_antisym_plain",
                                  "ratio_response_sym", "expected_response_sym", "antisym_error", "fdr_error",
                                  "pass_antisym", "pass_fdr"});
  for (const auto& r : table.rows) {
    lc.row({r.lambda, r.plain.real(), r.plain.imag(), r.sym.real(), r.sym.imag(), r.antisym.real(), r.antisym.imag(),
            r.response.real(), r.response.imag(), r.ratio_antisym_plain, r.expected_antisym_plain,
            r.ratio_response_sym, r.expected_response_sym, r.antisym_error, r.fdr_error,
            r.pass_antisym ? 1.0 : 0.0, r.pass_fdr ? 1.0 : 0.0});
  }
  lc.close();

  json kms = json::array();
  double kms_worst = 0.0;
  for (double t : kms_times()) {
    const auto r = kms_check(a, b, hbar, cfg.beta, t);
    kms.push_back({{"t", t},
                   {"lhs", io::complex_to_json(r.lhs)},
                   {"rhs", io::complex_to_json(r.rhs)},
                   {"abs_error", r.abs_error},
                   {"scale", r.scale}});
    kms_worst = std::max(kms_worst, r.abs_error / r.scale);
  }
  const bool kms_pass = kms_worst <= 1e-10;
  run.write_json("kms_check.json",
                 json{{"beta", cfg.beta}, {"max_relative_error", kms_worst}, {"pass", kms_pass}, {"points", kms}});

  const auto win = windowed_line_check(a, b, hbar, cfg.beta);
  auto wl = run.csv("windowed_lines.csv",
                    {"lambda", "re_plain_exact", "im_plain_exact", "re_plain_windowed", "im_plain_windowed",
                     "re_sym_exact", "im_sym_exact", "re_sym_windowed", "im_sym_windowed", "re_antisym_exact",
                     "im_antisym_exact", "re_antisym_windowed", "im_antisym_windowed", "weight_error",
                     "tanh_ratio_error"});
  for (const auto& r : win.rows) {
    wl.row({r.lambda, r.plain_exact.real(), r.plain_exact.imag(), r.plain_windowed.real(), r.plain_windowed.imag(),
            r.sym_exact.real(), r.sym_exact.imag(), r.sym_windowed.real(), r.sym_windowed.imag(),
            r.antisym_exact.real(), r.antisym_exact.imag(), r.antisym_windowed.real(), r.antisym_windowed.imag(),
            r.weight_error, r.tanh_ratio_error.value_or(detail::kNaN)});
  }
  wl.close();

  // Scan of the damped transforms on a frequency grid, in line-weight units (pi gamma ghat(-lambda)).
  auto ws = run.csv("windowed_spectra.csv", {"lambda", "re_plain", "im_plain", "re_sym", "im_sym", "re_antisym",
                                             "im_antisym"});
  if (win.gamma > 0.0) {
    const ThermalCorrelator corr(hbar, cfg.beta);
    const auto n = static_cast<std::size_t>(std::ceil(win.horizon / win.sample_dt)) + 1;
    const auto s = sample_correlations(corr, a, b, win.sample_dt, n);
    const auto& e = corr.eig().eigenvalues;
    const double span = 1.2 * std::max(e.maxCoeff() - e.minCoeff(), 1e-12);
    std::vector<double> lambdas, omegas;
    const std::size_t n_points = 801;
    for (std::size_t i = 0; i < n_points; ++i) {
      const double l = -span + 2.0 * span * static_cast<double>(i) / static_cast<double>(n_points - 1);
      lambdas.push_back(l);
      omegas.push_back(-l);
    }
    const double scale = std::numbers::pi * win.gamma;
    const auto p = windowed_fourier_two_sided(s.plain_fwd, s.plain_bwd, s.dt, omegas, win.gamma);
    const auto sy = windowed_fourier_two_sided(s.sym_fwd, s.sym_bwd, s.dt, omegas, win.gamma);
    const auto an = windowed_fourier_two_sided(s.anti_fwd, s.anti_bwd, s.dt, omegas, win.gamma);
    for (std::size_t i = 0; i < n_points; ++i) {
      ws.row({lambdas[i], scale * p[i].real(), scale * p[i].imag(), scale * sy[i].real(), scale * sy[i].imag(),
              scale * an[i].real(), scale * an[i].imag()});
    }
  }
  ws.close();

  run.write_json("fdr_summary.json", json{{"beta", cfg.beta},
                                          {"n_lines", table.rows.size()},
                                          {"lines_pass", table.pass()},
                                          {"kms_pass", kms_pass},
                                          {"windowed_gamma", win.gamma},
                                          {"windowed_max_weight_error", win.max_weight_error},
                                          {"windowed_max_tanh_error", win.max_tanh_error},
                                          {"windowed_pass", win.pass()}});
  run.log("fdr: " + std::to_string(table.rows.size()) + " lines, identities " + (table.pass() ? "hold" : "FAIL") +
          ", KMS max rel error " + io::format_double(kms_worst));
  run.finish();
  return kSuccess;
}

/// One line of the invariant table.
struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string note;
};

/// Runs the invariant suite on the configured system.
inline std::vector<CheckResult> run_checks(const io::ExperimentConfig& cfg, unsigned threads, const Logger& log) {
  std::vector<CheckResult> out;
  auto add = [&](CheckResult r) {
    if (log) log(r.name + (r.pass ? " pass" : " FAIL"));
    out.push_back(std::move(r));
  };
  const SystemSpec spec = cfg.system();
  const TimeGrid& grid = cfg.grid;
  const HermitianOperator hbar = mean_hamiltonian(spec);
  const Matrix rho0 = cfg.initial_state().matrix();
  const Matrix sigma = gibbs_state(hbar, spec.beta()).matrix();
  const Matrix a = cfg.has_operator("A") ? cfg.op("A").matrix() : cfg.h0.matrix();
  const Matrix b = cfg.has_operator("B") ? cfg.op("B").matrix() : a;

  {
    std::vector<double> times;
    const std::size_t stride = std::max<std::size_t>(1, grid.size() / 256);
    for (std::size_t k = 0; k < grid.size(); k += stride) times.push_back(grid.time(k));
    const auto rep = check_mean_constancy(spec, times, cfg.n_configs, 1e-10, cfg.master_seed);
    add({"check_mean_constancy", rep.pass, rep.max_deviation, 1e-10 + 3.0 * rep.max_standard_error,
         "max_t ||E[V(t)] - Vbar||_F"});
  }

  const auto prop = detail::propagate(cfg, spec, grid, threads);
  {
    double drift = 0.0, dual = 0.0, trace_err = 0.0;
    const double tol_drift = 1e-12 * static_cast<double>(grid.n_steps);
    prop.visit(
        [&](const Configuration&, const UnitaryTrajectory& u) {
          std::array<double, 2> r{unitarity_drift(u), 0.0};
          for (std::size_t k = 0; k < u.unitaries.size(); ++k) {
            const Matrix& U = u.unitaries[k];
            const Complex s = (U * rho0 * U.adjoint() * a).trace();
            const Complex h = (rho0 * (U.adjoint() * a * U)).trace();
            r[1] = std::max(r[1], std::abs(s - h));
          }
          return r;
        },
        [&](std::size_t, std::array<double, 2>&& r) {
          drift = std::max(drift, r[0]);
          dual = std::max(dual, r[1]);
        });
    add({"unitarity", drift <= tol_drift, drift, tol_drift, "max ||U^dagger U - I||_F"});
    const double tol_dual = 1e-10 * std::max(1.0, spectral_norm(a));
    add({"duality", dual <= tol_dual, dual, tol_dual, "max |Tr(rho(t) A) - Tr(rho A(t))|"});

    const MeanTrajectory mean = mean_state(prop, rho0);
    for (const auto& s : mean.states) {
      trace_err = std::max({trace_err, std::abs(s.trace() - 1.0), hermiticity_defect(s)});
    }
    add({"trace", trace_err <= 1e-10, trace_err, 1e-10, "max |Tr rho-bar - 1| and Hermiticity defect"});

    const auto margin = entropy_margin(mean);
    const double min_margin = *std::min_element(margin.begin(), margin.end());
    add({"entropy_margin", min_margin >= -1e-8, min_margin, -1e-8, "min_t S(rho-bar(t)) - S(rho0)"});

    double diss = 0.0;
    for (std::size_t k = 0; k < grid.size(); k += std::max<std::size_t>(1, grid.size() / 32)) {
      const auto& items = prop.configs().items;
      for (std::size_t i = 0; i < std::min<std::size_t>(items.size(), 16); ++i) {
        const Matrix dh = (hamiltonian_at(spec, items[i], grid.time(k)) - hbar).matrix();
        const double scale = std::max(1e-300, dh.norm() * mean.states[k].norm() * mean.states[k].norm());
        diss = std::max(diss, dissipativity_identity_check(mean.states[k], dh) / scale);
      }
    }
    add({"dissipativity_identity", diss <= 1e-12, diss, 1e-12, "|Tr(rho [dH, rho])| / scale"});

    const DeviationSeries dev = deviation_term(prop, rho0);
    const auto res = mean_dynamics_residual(mean, dev);
    const TimeGrid fine_grid(0.5 * grid.dt, 2 * grid.n_steps);
    const auto fine_prop = detail::propagate(cfg, spec, fine_grid, threads);
    const auto fine_res = mean_dynamics_residual(mean_state(fine_prop, rho0), deviation_term(fine_prop, rho0));
    std::vector<double> breaks;
    for (const auto& c : prop.configs().items) {
      for (double bp : c.potential.breakpoints()) breaks.push_back(bp);
    }
    double coarse_max = 0.0, fine_max = 0.0;
    for (std::size_t k = 1; k + 1 < grid.size(); ++k) {
      const double t = grid.time(k);
      const bool near_break = std::any_of(breaks.begin(), breaks.end(),
                                          [&](double bp) { return std::abs(bp - t) <= 1.5 * grid.dt; });
      if (near_break) continue;
      coarse_max = std::max(coarse_max, res[k - 1]);
      fine_max = std::max(fine_max, fine_res[2 * k - 1]);
    }
    if (coarse_max <= 1e-12) {
      add({"residual_order", true, coarse_max, 1e-12, "residual at roundoff; halving ratio not meaningful"});
    } else {
      const double ratio = coarse_max / std::max(fine_max, 1e-300);
      add({"residual_order", ratio >= 3.5 && ratio <= 4.5, ratio, 4.0, "max residual ratio dt vs dt/2, in [3.5, 4.5]"});
    }

    if (breaks.empty()) {
      const auto err = eta_decomposition_error(mean, dev, rho0);
      const double dh = max_fluctuation_norm(prop);
      const double scale = spectral_norm(hbar.matrix()) + dh;
      double worst = 0.0;
      for (std::size_t k = 1; k < grid.size(); ++k) {
        const double bound = 5.0 * grid.dt * grid.dt * grid.time(k) * dh * dh * scale;
        worst = std::max(worst, err[k] / (bound + 1e-12));
      }
      add({"eta_decomposition", worst <= 1.0, worst, 1.0,
           "max_t error / (5 dt^2 t ||dH||^2 (||Hbar|| + ||dH||) + 1e-12)"});
    }
  }

  {
    double worst = 0.0;
    for (double t : kms_times()) {
      const auto r = kms_check(a, b, hbar, spec.beta(), t);
      worst = std::max(worst, r.abs_error / r.scale);
    }
    add({"kms", worst <= 1e-10, worst, 1e-10, "max |C_AB(t) - C_BA(-t - i beta)| / (||A|| ||B||)"});
  }
  {
    const auto table = line_identities(a, b, hbar, spec.beta());
    double worst = 0.0;
    for (const auto& r : table.rows) worst = std::max({worst, r.antisym_error, r.fdr_error});
    add({"fdr_lines", table.pass(), worst, 1e-10, "per-line antisym/plain and response/sym identities"});
  }
  {
    const DeviationSeries dev_sigma = deviation_term(prop, sigma);
    const auto delta0 = delta_series(dev_sigma, a, HermitianOperator(b, 1e-10), 0.0);
    double worst = 0.0;
    for (const auto& v : delta0) worst = std::max(worst, std::abs(v));
    add({"delta_at_zero", worst <= 1e-14, worst, 1e-14, "max_t |Delta(t, 0)|"});
    if (cfg.bath && cfg.bath->t_prime > 0.0) {
      const double tp = grid.time(grid.snap(cfg.bath->t_prime));
      const Complex v = delta_term(dev_sigma, a, HermitianOperator(b, 1e-10), tp, tp);
      CheckResult info{"delta_at_t_prime", true, std::abs(v), 0.0, "informational: |Delta(t', t')|"};
      add(info);
    }
  }
  return out;
}

inline void print_checks(std::ostream& os, const std::vector<CheckResult>& rows) {
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  for (const auto& r : rows) {
    os << (r.pass ? "PASS  " : "FAIL  ") << std::left << std::setw(static_cast<int>(width) + 2) << r.name
       << "value=" << io::format_double(r.value) << "  threshold=" << io::format_double(r.threshold) << "  ("
       << r.note << ")\n";
  }
}

/// Prints the table and writes check.json; exit 0 iff every check passes.
inline int cmd_check(Run& run, std::ostream& os) {
  const auto rows = run_checks(run.cfg(), run.opts().threads, [&](const std::string& m) { run.log(m); });
  print_checks(os, rows);
  json j = json::array();
  bool ok = true;
  std::vector<std::string> failed;
  for (const auto& r : rows) {
    j.push_back({{"name", r.name}, {"pass", r.pass}, {"value", r.value}, {"threshold", r.threshold}, {"note", r.note}});
    if (!r.pass) {
      ok = false;
      failed.push_back(r.name);
    }
  }
  run.write_json("check.json", json{{"pass", ok}, {"checks", j}});
  run.finish();
  if (!ok) {
    std::string names;
    for (const auto& f : failed) names += (names.empty() ? "" : ", ") + f;
    os << "invariant suite failed: " << names << "\n";
    return kInvariantFailure;
  }
  os << "all invariants hold\n";
  return kSuccess;
}

}  // namespace fdrlab::app
