#include "dirac/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "json.hpp"

#include "dirac/cli/output.hpp"
#include "dirac/errors.hpp"
#include "dirac/greens.hpp"
#include "dirac/lyapunov.hpp"
#include "dirac/prufer.hpp"
#include "dirac/spectra.hpp"

namespace dirac::cli {

using ojson = nlohmann::ordered_json;

namespace {

using Files = std::map<std::string, std::string>;

struct Context {
  const ExperimentConfig& cfg;
  int threads;
  Provenance prov;
  Files files;

  bool csv() const { return cfg.format != Format::svg; }
  bool svg() const { return cfg.format != Format::csv; }

  void table(const std::string& name, const CsvTable& t) {
    if (csv()) files[name] = t.render(prov);
  }
  void plot(const std::string& name, const SvgPlot& p) {
    if (svg()) files[name] = p.render(prov);
  }
  // The summary is always written; it is the machine-readable verdict.
  void summary(ojson body) {
    ojson j;
    j["provenance"] = {{"version", prov.version},
                       {"command", prov.command},
                       {"config_hash", prov.config_hash},
                       {"seed", prov.seed}};
    for (auto& [k, v] : body.items()) j[k] = v;
    files["fit_summary.json"] = j.dump(2) + "\n";
  }
};

double finite_or_nan(double x) { return std::isfinite(x) ? x : NAN; }

ojson fit_json(const LinearFit& f, const Interval& ci) {
  return {{"slope", finite_or_nan(f.slope)},
          {"slope_stderr", finite_or_nan(f.slope_stderr)},
          {"intercept", finite_or_nan(f.intercept)},
          {"r2", finite_or_nan(f.r2)},
          {"slope_ci", {finite_or_nan(ci.low), finite_or_nan(ci.high)}},
          {"ci_excludes_zero", !ci.contains(0.0)}};
}

Spin spin_of(const std::string& s) { return s == "plus" ? Spin::plus : Spin::minus; }

std::pair<double, double> range_of(const std::vector<double>& v, double pad = 0.05) {
  double lo = INFINITY, hi = -INFINITY;
  for (double x : v)
    if (std::isfinite(x)) lo = std::min(lo, x), hi = std::max(hi, x);
  if (!std::isfinite(lo)) return {0, 1};
  const double d = hi > lo ? (hi - lo) * pad : 0.5;
  return {lo - d, hi + d};
}

// ---------------------------------------------------------------- lyapunov

void cmd_lyapunov(Context& cx) {
  const auto& c = cx.cfg;
  if (c.model.alpha.compare_half() > 0)
    throw c.error_at("/model/alpha", "lyapunov estimates need alpha <= 1/2 (got " + c.model.alpha.str() + ")");
  CsvTable t({"E", "lambda", "beta_closed", "beta_hat", "stderr", "beta_prufer", "beta_product", "N", "M", "status"});
  std::vector<double> xs, ys, es;
  ojson rows = ojson::array();
  int estimated = 0, refused = 0;
  double worst_rel = 0;
  for (double E : c.energies.expand()) {
    std::string status = "ok";
    double closed = NAN;
    LyapunovEstimate est;
    est.beta_hat = est.stderr_ = est.beta_prufer = est.beta_product = NAN;
    if (!in_band_interior(E, c.model.m)) {
      status = "outside_band";
    } else {
      auto ctx = energy_context(E, c.model.m);
      try {
        closed = beta_closed_form(ctx, c.model.lambda);
        LyapunovOptions o;
        o.threads = cx.threads;
        o.theta0 = c.lyapunov.theta0;
        o.with_product = c.lyapunov.product;
        est = estimate_beta(ctx, c.model, c.distribution, c.N, c.M, c.seed, o);
        if (!c.lyapunov.product) est.beta_product = NAN;
        ++estimated;
        if (closed > 0) worst_rel = std::max(worst_rel, std::abs(est.beta_hat - closed) / closed);
        xs.push_back(E);
        ys.push_back(est.beta_hat);
        es.push_back(est.stderr_);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::excluded_k && e.kind() != ErrorKind::near_band_edge) throw;
        status = to_string(e.kind());
        ++refused;
      }
    }
    t.add({fmt(E), fmt(c.model.lambda), fmt(closed), fmt(est.beta_hat), fmt(est.stderr_), fmt(est.beta_prufer),
           fmt(est.beta_product), std::to_string(c.N), std::to_string(c.M), status});
    rows.push_back({{"E", E}, {"beta_closed", finite_or_nan(closed)}, {"beta_hat", finite_or_nan(est.beta_hat)},
                    {"stderr", finite_or_nan(est.stderr_)}, {"status", status}});
  }
  cx.table("lyapunov.csv", t);
  cx.summary({{"estimated", estimated},
              {"refused", refused},
              {"max_relative_deviation", worst_rel},
              {"s_N", normalizer(c.model.alpha.value(), c.N)},
              {"points", rows}});

  const double top = std::sqrt(c.model.m * c.model.m + 4);
  std::vector<double> cx_, cy;
  for (int i = 1; i < 400; ++i) {
    const double E = c.model.m + (top - c.model.m) * i / 400;
    auto ctx = energy_context(E, c.model.m);
    cx_.push_back(E);
    cy.push_back(ctx.near_edge ? NAN : beta_closed_form(ctx, c.model.lambda));
  }
  SvgPlot p("Lyapunov exponent beta(E), lambda = " + fmt(c.model.lambda) + ", m = " + fmt(c.model.m), "E", "beta");
  std::vector<double> sorted;
  for (double y : cy)
    if (std::isfinite(y)) sorted.push_back(y);
  double ymax = sorted.empty() ? 1 : quantile(sorted, 0.9) * 1.5;
  for (std::size_t i = 0; i < ys.size(); ++i) ymax = std::max(ymax, ys[i] + es[i]);
  p.set_ranges(c.model.m, top, 0, ymax);
  for (auto& y : cy)
    if (y > ymax) y = NAN;
  p.line(cx_, cy, "#1f77b4", "closed form");
  p.points(xs, ys, "#d62728", "estimate", es);
  cx.plot("lyapunov.svg", p);
}

// ---------------------------------------------------------------- phase diagram

void cmd_phase_diagram(Context& cx) {
  const auto& c = cx.cfg;
  const auto& ph = c.phase;
  const double m = c.model.m, top = std::sqrt(m * m + 4);
  ModelParams mp = c.model;
  mp.alpha = DecayExponent(1, 2);
  std::vector<double> Es, ls;
  for (int i = 0; i < ph.energy_count; ++i) Es.push_back(-top * 1.05 + 2.1 * top * i / (ph.energy_count - 1));
  for (int j = 0; j < ph.lambda_count; ++j)
    ls.push_back(ph.lambda_count == 1 ? ph.lambda_min
                                      : ph.lambda_min + (ph.lambda_max - ph.lambda_min) * j / (ph.lambda_count - 1));

  CsvTable grid({"E", "lambda", "spectral_type", "beta_closed"});
  std::map<std::string, int> counts;
  for (double l : ls) {
    mp.lambda = l;
    for (double E : Es) {
      auto r = classify(mp, E);
      double beta = NAN;
      if (r.spectral_type != SpectralType::outside_band) {
        auto ctx = energy_context(std::abs(E), m);
        if (!ctx.near_edge) beta = beta_closed_form(ctx, l);
      }
      ++counts[to_string(r.spectral_type)];
      grid.add({fmt(E), fmt(l), to_string(r.spectral_type), fmt(beta)});
    }
  }
  cx.table("phase_diagram.csv", grid);

  CsvTable thr({"lambda", "E_minus", "E_plus", "has_sc_interval"});
  for (double l : ls) {
    auto e = critical_energies(l, m);
    thr.add({fmt(l), fmt(e ? e->E_minus : NAN), fmt(e ? e->E_plus : NAN), e ? "true" : "false"});
  }
  cx.table("thresholds.csv", thr);

  std::vector<double> masses = ph.masses;
  if (std::find(masses.begin(), masses.end(), m) == masses.end()) masses.push_back(m);
  std::sort(masses.begin(), masses.end());
  CsvTable crit({"m", "lambda_star", "E_star", "attained"});
  for (double mm : masses) {
    auto cc = lambda_critical(mm);
    crit.add({fmt(mm), fmt(cc.lambda_star), fmt(cc.E_star), cc.attained ? "true" : "false"});
  }
  cx.table("critical_curve.csv", crit);

  auto cc = lambda_critical(m);
  ojson cnt = ojson::object();
  for (auto& [k, v] : counts) cnt[k] = v;
  cx.summary({{"m", m},
              {"alpha", "1/2"},
              {"lambda_star", cc.lambda_star},
              {"E_star", cc.E_star},
              {"attained", cc.attained},
              {"cells", cnt}});

  SvgPlot p("Spectral phase diagram at alpha = 1/2, m = " + fmt(m), "E", "lambda");
  p.set_ranges(Es.front(), Es.back(), ls.front(), ls.back());
  const double dE = Es.size() > 1 ? Es[1] - Es[0] : 1;
  const double dl = ls.size() > 1 ? ls[1] - ls[0] : 1;
  for (double l : ls) {
    mp.lambda = l;
    for (double E : Es) {
      auto t = classify(mp, E).spectral_type;
      const char* col = t == SpectralType::sc ? "#9ecae1" : t == SpectralType::pp ? "#fdae6b" : "#eeeeee";
      p.cell(E - dE / 2, E + dE / 2, std::max(ls.front(), l - dl / 2), std::min(ls.back(), l + dl / 2), col);
    }
  }
  // E-/+ boundary curves, mirrored to negative energies
  std::vector<double> lam, em, ep;
  for (int i = 0; i <= 400; ++i) {
    const double l = ls.front() + (ls.back() - ls.front()) * i / 400;
    if (auto e = critical_energies(l, m)) {
      lam.push_back(l);
      em.push_back(e->E_minus);
      ep.push_back(e->E_plus);
    }
  }
  auto neg = [](std::vector<double> v) {
    for (auto& x : v) x = -x;
    return v;
  };
  p.line(em, lam, "#08519c", "E-(lambda)");
  p.line(ep, lam, "#a50f15", "E+(lambda)");
  p.line(neg(em), lam, "#08519c");
  p.line(neg(ep), lam, "#a50f15");
  if (cc.lambda_star >= ls.front() && cc.lambda_star <= ls.back())
    p.line({Es.front(), Es.back()}, {cc.lambda_star, cc.lambda_star}, "#333333", "lambda*(m)");
  p.points({}, {}, "#9ecae1", "sc");
  p.points({}, {}, "#fdae6b", "pp");
  p.points({}, {}, "#eeeeee", "outside band");
  cx.plot("phase_diagram.svg", p);

  SvgPlot q("Critical coupling lambda*(m)", "m", "lambda*");
  std::vector<double> mx, ly, ey;
  for (int i = 0; i <= 200; ++i) {
    const double mm = masses.back() * i / 200;
    auto k = lambda_critical(mm);
    mx.push_back(mm);
    ly.push_back(k.lambda_star);
    ey.push_back(k.E_star);
  }
  q.set_ranges(0, std::max(masses.back(), 1e-3), 0, std::max(*std::max_element(ey.begin(), ey.end()), std::sqrt(2.0)) * 1.05);
  q.line(mx, ly, "#333333", "lambda*(m)");
  q.line(mx, ey, "#2ca02c", "E*(m)");
  cx.plot("critical_curve.svg", q);
}

// ---------------------------------------------------------------- green decay

std::vector<int> default_grid(int top, int count = 10) {
  std::vector<int> g;
  for (int k = 1; k <= count; ++k) {
    int n = std::max(1, static_cast<int>(std::lround(static_cast<double>(k) * top / count)));
    if (g.empty() || n > g.back()) g.push_back(n);
  }
  return g;
}

void decay_plot(Context& cx, const std::string& name, const std::string& title, const std::vector<int>& n,
                const std::vector<double>& v, const LinearFit& f, double alpha) {
  std::vector<double> x, y, fy;
  for (std::size_t i = 0; i < n.size(); ++i) {
    x.push_back(std::pow(n[i], 1 - 2 * alpha));
    y.push_back(std::log(v[i]));
    fy.push_back(f.intercept + f.slope * x.back());
  }
  auto [x0, x1] = range_of(x);
  std::vector<double> both = y;
  both.insert(both.end(), fy.begin(), fy.end());
  auto [y0, y1] = range_of(both);
  SvgPlot p(title, "n^(1-2 alpha)", "log mean");
  p.set_ranges(x0, x1, y0, y1);
  p.points(x, y, "#d62728", "data");
  p.line(x, fy, "#1f77b4", "fit");
  cx.plot(name, p);
}

void cmd_green_decay(Context& cx) {
  const auto& c = cx.cfg;
  const auto& g = c.green;
  if (c.model.alpha.compare_half() >= 0)
    throw c.error_at("/model/alpha", "green-decay fits against n^(1-2 alpha) and needs alpha < 1/2");
  const int top = spin_of(g.sigma_p) == Spin::plus ? c.L - 1 : c.L;
  std::vector<int> grid = g.n_grid.empty() ? default_grid(top) : g.n_grid;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i] > top || grid[i] < 1)
      throw c.error_at(g.n_grid.empty() ? "/sizes/L" : "/probes/green/n_grid/" + std::to_string(i),
                       "site outside the box of size L = " + std::to_string(c.L));
  if (grid.size() < 3) throw c.error_at("/probes/green/n_grid", "need at least 3 sites to fit");
  const double alpha = c.model.alpha.value();

  FmOptions o;
  o.sigma = spin_of(g.sigma);
  o.sigma_p = spin_of(g.sigma_p);
  o.bootstrap = g.bootstrap;
  o.threads = cx.threads;
  o.require_significance = false;
  auto fm = fractional_moment_scan(c.model, c.distribution, g.E, g.u, g.s, grid, c.L, c.M, c.seed, o);
  CsvTable t({"n", "mean_abs_G_pow_s", "stderr", "s", "alpha", "lambda", "E", "L", "M"});
  for (std::size_t i = 0; i < fm.n.size(); ++i)
    t.add({std::to_string(fm.n[i]), fmt(fm.values[i]), fmt(fm.stderr_[i]), fmt(g.s), c.model.alpha.str(),
           fmt(c.model.lambda), fmt(g.E), std::to_string(c.L), std::to_string(c.M)});
  cx.table("green_decay.csv", t);
  decay_plot(cx, "green_decay.svg", "Fractional moment E|G(u,n)|^s", fm.n, fm.values, fm.fit, alpha);

  ojson s;
  ojson f = fit_json(fm.fit, fm.slope_ci);
  f["c_hat"] = fm.c_hat;
  f["apriori_constant"] = fm.apriori_constant;
  f["replicas"] = fm.M;
  f["bootstrap_resamples"] = g.bootstrap;
  f["near_singular_redraws"] = fm.resamples;
  f["significant"] = fm.significant;
  s["fractional_moment"] = f;

  if (g.negative_moments) {
    auto nm = negative_moment_scan(c.model, c.distribution, g.E, g.u, g.s_negative, grid, c.M, c.seed,
                                   Eigen::Vector2d(1, 0), 50, g.bootstrap, cx.threads);
    CsvTable u({"n", "mean_norm_pow_minus_s", "stderr", "s"});
    for (std::size_t i = 0; i < nm.n.size(); ++i)
      u.add({std::to_string(nm.n[i]), fmt(nm.values[i]), fmt(nm.stderr_[i]), fmt(g.s_negative)});
    cx.table("negative_moments.csv", u);
    ojson nf = fit_json(nm.fit, nm.slope_ci);
    nf["block_c"] = finite_or_nan(nm.block_c);
    nf["block_length"] = nm.n0;
    nf["replicas"] = nm.M;
    s["negative_moment"] = nf;
  }
  if (g.correlator) {
    auto cs = correlator_scan(c.model, c.distribution, g.window_low, g.window_high, g.u, spin_of(g.sigma),
                              spin_of(g.sigma_p), grid, c.L, c.M, c.seed, g.bootstrap, cx.threads);
    CsvTable u({"n", "mean_Q", "stderr", "window_low", "window_high"});
    for (std::size_t i = 0; i < cs.n.size(); ++i)
      u.add({std::to_string(cs.n[i]), fmt(cs.values[i]), fmt(cs.stderr_[i]), fmt(g.window_low), fmt(g.window_high)});
    cx.table("correlator.csv", u);
    ojson cf = fit_json(cs.fit, cs.slope_ci);
    cf["replicas"] = cs.M;
    s["correlator"] = cf;
  }
  cx.summary(s);
}

// ---------------------------------------------------------------- dynamics

struct Averaged {
  std::vector<double> norms;
  std::vector<std::vector<double>> moments, truncated, stretched;
};

void accumulate(Averaged& a, const EvolutionTrace& tr, double w) {
  auto add = [w](std::vector<double>& dst, const std::vector<double>& src) {
    if (dst.empty()) dst.assign(src.size(), 0.0);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += w * src[i];
  };
  auto add_all = [&](std::vector<std::vector<double>>& dst, const std::vector<std::vector<double>>& src) {
    dst.resize(src.size());
    for (std::size_t q = 0; q < src.size(); ++q) add(dst[q], src[q]);
  };
  add(a.norms, tr.norms);
  add_all(a.moments, tr.moments);
  add_all(a.truncated, tr.truncated);
  add_all(a.stretched, tr.log_stretched);
}

void cmd_dynamics(Context& cx) {
  const auto& c = cx.cfg;
  const auto& d = c.dynamics;
  const BoxDescriptor box{BoxDescriptor::Kind::LambdaPrime, c.L};
  if (!box.contains(d.site, spin_of(d.spin)))
    throw c.error_at("/probes/dynamics/site", "initial site outside the box of size L = " + std::to_string(c.L));
  const double T = d.t_max > 0 ? d.t_max : c.L / 4.0;
  std::vector<double> times;
  for (int i = 0; i <= d.steps; ++i) times.push_back(T * i / d.steps);
  EvolutionProbes pr;
  pr.moments = d.moments;
  std::vector<int> Ns = d.truncated_N.empty() ? std::vector<int>{c.L / 8, c.L / 4, c.L / 2} : d.truncated_N;
  for (int N : Ns) pr.truncated.emplace_back(d.truncated_p, N);
  pr.stretched = d.kappa;

  const int R = d.replicas;
  std::vector<EvolutionTrace> traces(R);
  std::vector<std::vector<StretchedPoint>> boxes(R);
  parallel_for(static_cast<std::size_t>(R), cx.threads, [&](std::size_t r) {
    const std::uint64_t s = rng::replica_seed(c.seed, r);
    const int big = d.box_doubling ? 2 * c.L : c.L;
    auto path = sample_path(c.model, c.distribution, big + 1, s);
    auto dec = diagonalize(assemble_operator(c.model, path, box));
    auto psi0 = delta_state(box, d.site, spin_of(d.spin));
    traces[r] = evolve(dec, psi0, times, pr);
    if (d.box_doubling && !d.kappa.empty()) {
      auto dec2 = diagonalize(assemble_operator(c.model, path, {BoxDescriptor::Kind::LambdaPrime, big}));
      boxes[r] = stretched_moment_probe(dec, dec2, psi0, d.kappa, T, d.steps);
    }
  });
  Averaged avg;
  for (const auto& tr : traces) accumulate(avg, tr, 1.0 / R);

  std::vector<std::string> cols = {"t", "norm"};
  for (double p : d.moments) cols.push_back("X^" + fmt(p));
  for (int N : Ns) cols.push_back("X_" + std::to_string(N) + "^" + fmt(d.truncated_p));
  for (double k : d.kappa) cols.push_back("log_exp_2X^" + fmt(k));
  CsvTable t(cols);
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::vector<std::string> row = {fmt(times[i]), fmt(avg.norms[i])};
    for (const auto& v : avg.moments) row.push_back(fmt(v[i]));
    for (const auto& v : avg.truncated) row.push_back(fmt(v[i]));
    for (const auto& v : avg.stretched) row.push_back(fmt(v[i]));
    t.add(row);
  }
  cx.table("dynamics.csv", t);

  ojson s;
  s["replicas"] = R;
  s["horizon"] = T;
  // growth exponent of each moment on the last three quarters of the horizon
  ojson growth = ojson::array();
  for (std::size_t q = 0; q < d.moments.size(); ++q) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < times.size(); ++i)
      if (times[i] >= T / 4 && avg.moments[q][i] > 0) {
        lx.push_back(std::log(times[i]));
        ly.push_back(std::log(avg.moments[q][i]));
      }
    auto f = fit_line(lx, ly);
    growth.push_back({{"p", d.moments[q]}, {"exponent", finite_or_nan(f.slope)}, {"r2", finite_or_nan(f.r2)}});
  }
  s["moment_growth"] = growth;
  ojson trunc = ojson::array();
  std::vector<double> lN, lA;
  for (std::size_t q = 0; q < Ns.size(); ++q) {
    const double a = time_average(times, avg.truncated[q]);
    trunc.push_back({{"N", Ns[q]}, {"p", d.truncated_p}, {"time_average", a}});
    lN.push_back(std::log(static_cast<double>(Ns[q])));
    lA.push_back(std::log(a));
  }
  s["truncated"] = trunc;
  if (Ns.size() >= 2) s["truncated_N_slope"] = finite_or_nan(fit_line(lN, lA).slope);
  if (d.box_doubling && !d.kappa.empty()) {
    CsvTable b({"replica", "kappa", "log_sup_T", "log_sup_T_big", "log_sup_2T", "horizon_log_ratio", "box_log_ratio",
                "verdict"});
    ojson verdicts = ojson::array();
    for (std::size_t k = 0; k < d.kappa.size(); ++k) {
      std::vector<double> hr, br;
      for (int r = 0; r < R; ++r) {
        const auto& p = boxes[r][k];
        b.add({std::to_string(r), fmt(p.kappa), fmt(p.log_sup_T), fmt(p.log_sup_T_big), fmt(p.log_sup_2T),
               fmt(p.horizon_log_ratio), fmt(p.box_log_ratio), to_string(p.verdict)});
        hr.push_back(p.horizon_log_ratio);
        br.push_back(p.box_log_ratio);
      }
      verdicts.push_back({{"kappa", d.kappa[k]},
                          {"median_horizon_log_ratio", median(hr)},
                          {"median_box_log_ratio", median(br)}});
    }
    cx.table("stretched.csv", b);
    s["stretched"] = verdicts;
  }
  cx.summary(s);

  if (!d.moments.empty()) {
    SvgPlot p("Moment <|X|^" + fmt(d.moments[0]) + "> vs t", "t", "moment");
    auto [y0, y1] = range_of(avg.moments[0]);
    p.set_ranges(0, T, std::min(0.0, y0), y1);
    p.line(times, avg.moments[0], "#1f77b4", "<|X|^" + fmt(d.moments[0]) + ">");
    cx.plot("dynamics.svg", p);
  }
}

// ---------------------------------------------------------------- eigen

void cmd_eigen(Context& cx) {
  const auto& c = cx.cfg;
  const auto& e = c.eigen;
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < e.seeds; ++i) seeds.push_back(rng::replica_seed(c.seed, i));
  EigenProfileOptions o;
  o.centre_fraction = e.centre_fraction;
  o.min_tail = e.min_tail;
  o.threads = cx.threads;
  auto rep = eigenfunction_profile(c.model, c.distribution, e.E_low, e.E_high, c.L, seeds, o);
  CsvTable t({"seed_index", "E", "beta", "centre", "tail_end", "slope", "ratio", "r2", "sule_slope", "kappa", "used"});
  std::vector<double> ex, ry;
  for (const auto& f : rep.fits) {
    t.add({std::to_string(f.seed_index), fmt(f.E), fmt(f.beta), std::to_string(f.centre), std::to_string(f.tail_end),
           fmt(f.slope), fmt(f.ratio), fmt(f.r2), fmt(f.sule_slope), fmt(f.kappa), f.used ? "true" : "false"});
    if (f.used) {
      ex.push_back(f.E);
      ry.push_back(f.ratio);
    }
  }
  cx.table("eigen.csv", t);
  cx.summary({{"eigenpairs", rep.fits.size()},
              {"used", rep.used},
              {"median_ratio", finite_or_nan(rep.median_ratio)},
              {"median_abs_deviation_from_minus_one", finite_or_nan(rep.median_abs_dev)},
              {"window", {e.E_low, e.E_high}},
              {"L", c.L}});
  SvgPlot p("Eigenfunction decay slope / -beta(E)", "E", "slope / beta");
  auto [y0, y1] = range_of(ry);
  p.set_ranges(e.E_low, e.E_high, std::min(y0, -1.5), std::max(y1, -0.5));
  p.line({e.E_low, e.E_high}, {-1, -1}, "#333333", "-1");
  p.points(ex, ry, "#d62728", "fits");
  cx.plot("eigen.svg", p);
}

// ---------------------------------------------------------------- diagnostics

void cmd_diagnostics(Context& cx) {
  const auto& c = cx.cfg;
  const auto& dg = c.diagnostics;
  ojson s;
  ojson refusals = ojson::array();
  const auto energies = c.energies.expand();
  if (dg.martingale) {
    CsvTable t({"E", "replica", "N", "s_N", "log_r2", "drift", "M1", "M2", "M3", "M4", "M5", "M6", "Q1", "Q2",
                "remainder", "abs_remainder", "status"});
    ojson per_e = ojson::array();
    for (double E : energies) {
      if (!in_band_interior(E, c.model.m)) {
        refusals.push_back({{"E", E}, {"probe", "martingale"}, {"reason", "outside_band"}});
        continue;
      }
      auto ctx = energy_context(E, c.model.m);
      std::vector<MartingaleReport> reps(c.M);
      std::string status = "ok";
      try {
        if (near_excluded_k(ctx.k))
          throw Error(ErrorKind::excluded_k, "k = " + fmt(ctx.k) + " within guard of the excluded set");
        ctx.require_analytic();
        parallel_for(static_cast<std::size_t>(c.M), cx.threads, [&](std::size_t r) {
          auto path = sample_path(c.model, c.distribution, c.N + 1, rng::replica_seed(c.seed, r));
          reps[r] = martingale_diagnostics(ctx, path, c.N);
        });
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::excluded_k && e.kind() != ErrorKind::near_band_edge) throw;
        status = to_string(e.kind());
        refusals.push_back({{"E", E}, {"probe", "martingale"}, {"reason", status}, {"message", e.what()}});
        t.add({fmt(E), "", std::to_string(c.N), "", "", "", "", "", "", "", "", "", "", "", "", "", status});
        continue;
      }
      int within = 0;
      for (std::int64_t r = 0; r < c.M; ++r) {
        const auto& m = reps[r];
        std::vector<std::string> row = {fmt(E), std::to_string(r), std::to_string(c.N), fmt(m.s_N), fmt(m.log_r2),
                                        fmt(m.drift)};
        bool ok = true;
        for (double x : m.M) {
          row.push_back(fmt(x));
          ok = ok && std::abs(x) / m.s_N < 0.05;
        }
        for (double x : m.Q) {
          row.push_back(fmt(x));
          ok = ok && std::abs(x) / m.s_N < 0.1;
        }
        row.push_back(fmt(m.remainder));
        row.push_back(fmt(m.abs_remainder));
        row.push_back(status);
        t.add(row);
        within += ok;
      }
      per_e.push_back({{"E", E}, {"replicas", c.M}, {"fraction_within_bounds", static_cast<double>(within) / c.M}});
    }
    cx.table("martingale.csv", t);
    s["martingale"] = per_e;
  }
  if (dg.rn_ratio) {
    CsvTable t({"E", "wronskian_residual", "tail_oscillation", "final_log_r", "status"});
    for (double E : energies) {
      if (!in_band_interior(E, c.model.m)) continue;
      auto ctx = energy_context(E, c.model.m);
      try {
        auto path = sample_path(c.model, c.distribution, c.N + 1, rng::replica_seed(c.seed, 0));
        auto r = rn_ratio_diagnostic(ctx, path, c.N);
        t.add({fmt(E), fmt(r.wronskian_residual), fmt(r.tail_oscillation), fmt(r.log_r.back()), "ok"});
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::excluded_k && e.kind() != ErrorKind::near_band_edge) throw;
        refusals.push_back({{"E", E}, {"probe", "rn_ratio"}, {"reason", to_string(e.kind())}});
        t.add({fmt(E), "", "", "", to_string(e.kind())});
      }
    }
    cx.table("rn_ratio.csv", t);
  }
  if (dg.r4) {
    std::vector<double> es;
    for (double E : energies) {
      if (!in_band_interior(E, c.model.m) || energy_context(E, c.model.m).near_edge) continue;
      es.push_back(E);
    }
    auto r = r4_boundedness_probe(es, c.model, c.distribution, c.N, c.M, c.seed, cx.threads);
    CsvTable t({"E", "log_mean_r4_N", "log_mean_r4_2N", "ratio", "ratio_ci_low", "ratio_ci_high"});
    for (const auto& p : r.points)
      t.add({fmt(p.E), fmt(p.log_mean_r4_N), fmt(p.log_mean_r4_2N), fmt(p.ratio), fmt(p.ratio_ci.low),
             fmt(p.ratio_ci.high)});
    cx.table("r4.csv", t);
    s["r4"] = {{"max_ratio", r.max_ratio},
               {"plateau", r.plateau},
               {"supercritical", r.supercritical},
               {"envelope_constant", r.envelope_constant},
               {"sup_log_mean_r4", r.sup_log_mean_r4}};
  }
  s["refusals"] = refusals;
  cx.summary(s);
}

// ---------------------------------------------------------------- validate-disorder

void cmd_validate_disorder(Context& cx) {
  const auto& c = cx.cfg;
  const auto& v = c.validate;
  if (v.samples < 10000)
    throw c.error_at("/probes/validate_disorder/samples", "at least 10000 samples per site are needed");
  auto rep = validate_assumptions(c.distribution, c.model, v.samples, c.seed, v.decades);
  CsvTable t({"n", "sd_target", "mean", "mean_ci_low", "mean_ci_high", "variance", "variance_ci_low",
              "variance_ci_high", "abs3", "abs4", "corr_v1_v2", "mean_ok", "sd_ok", "independence_ok"});
  for (const auto& s : rep.sites)
    t.add({std::to_string(s.n), fmt(s.sd_target), fmt(s.mean.value), fmt(s.mean.ci_low), fmt(s.mean.ci_high),
           fmt(s.variance.value), fmt(s.variance.ci_low), fmt(s.variance.ci_high), fmt(s.abs3.value),
           fmt(s.abs4.value), fmt(s.corr_v1_v2), s.mean_ok ? "true" : "false", s.sd_ok ? "true" : "false",
           s.independence_ok ? "true" : "false"});
  cx.table("disorder_checks.csv", t);
  auto path = sample_path(c.model, c.distribution, v.path_length, c.seed);
  CsvTable p({"n", "v1", "v2"});
  for (std::int64_t n = 1; n <= path.length(); ++n) p.add({std::to_string(n), fmt(path.V1(n)), fmt(path.V2(n))});
  cx.table("path.csv", p);
  cx.summary({{"samples_per_site", rep.M},
              {"independent_sites", rep.independent},
              {"zero_mean", rep.zero_mean},
              {"sd_matches_envelope", rep.sd_matches},
              {"fourth_moment_bounded", rep.fourth_bounded},
              {"fourth_moment_constant", rep.fourth_constant},
              {"third_moment_decay", rep.third_decays},
              {"third_moment_exponent", rep.third_exponent},
              {"has_density", rep.has_density}});
}

using Handler = void (*)(Context&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h = {{"lyapunov", cmd_lyapunov},
                                                   {"phase-diagram", cmd_phase_diagram},
                                                   {"green-decay", cmd_green_decay},
                                                   {"dynamics", cmd_dynamics},
                                                   {"eigen", cmd_eigen},
                                                   {"diagnostics", cmd_diagnostics},
                                                   {"validate-disorder", cmd_validate_disorder}};
  return h;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> n = {"lyapunov", "phase-diagram", "green-decay",      "dynamics",
                                             "eigen",    "diagnostics",   "validate-disorder"};
  return n;
}

std::map<std::string, std::string> render_command(const std::string& name, const ExperimentConfig& config,
                                                  int threads) {
  auto it = handlers().find(name);
  if (it == handlers().end()) throw ConfigError("unknown command " + name);
  Context cx{config, std::max(1, threads), {config_hash(config), config.seed, version_string(), name}, {}};
  it->second(cx);
  return std::move(cx.files);
}

std::vector<std::string> run_command(const std::string& name, const ExperimentConfig& config, int threads) {
  auto files = render_command(name, config, threads);
  std::vector<std::string> written;
  for (const auto& [file, content] : files) {
    auto path = std::filesystem::path(config.out_dir) / file;
    write_file(path, content);
    written.push_back(path.string());
  }
  return written;
}

}  // namespace dirac::cli
