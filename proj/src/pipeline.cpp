#include <susyfactor/pipeline.hpp>

#include <algorithm>
#include <cmath>

namespace susyfactor {

Expr random_test_function(int n, const Box& box, Rng& rng) {
  ExprBuilder eb(n);
  // q(x) * exp(-|x - c|^2), q a random polynomial of total degree <= 3
  Vec c(n);
  for (int i = 0; i < n; ++i) c[i] = rng.uniform(box.lo[i], box.hi[i]);

  Expr q = eb.num(0.0);
  std::vector<int> expo(n, 0);
  // enumerate monomials of total degree <= 3
  std::function<void(int, int)> enumerate = [&](int axis, int remaining) {
    if (axis == n) {
      Expr mono = eb.num(rng.uniform(-1.0, 1.0));
      for (int i = 0; i < n; ++i)
        if (expo[i] > 0) mono = eb.mul(mono, eb.powi(eb.x(i), expo[i]));
      q = eb.add(q, mono);
      return;
    }
    for (int d = 0; d <= remaining; ++d) {
      expo[axis] = d;
      enumerate(axis + 1, remaining - d);
    }
    expo[axis] = 0;
  };
  enumerate(0, 3);

  Expr r2 = eb.num(0.0);
  for (int i = 0; i < n; ++i) r2 = eb.add(r2, eb.powi(eb.sub(eb.x(i), eb.num(c[i])), 2));
  return eb.mul(q, eb.call("exp", eb.neg(r2)));
}

double c2_norm(const ScalarField& u, const std::vector<Vec>& pts, double h) {
  double m = 0.0;
  for (const Vec& x : pts) {
    const Jet2 j = u.jet2(x, h);
    m = std::max(m, std::abs(j.v) + j.g.cwiseAbs().maxCoeff() + j.h.cwiseAbs().maxCoeff());
  }
  return m;
}

ResidualSweep residual_sweep(const OperatorSpec& op, const SusyStructure& S,
                             const std::vector<Vec>& grid, const std::vector<double>& h_list,
                             const Box& box, int n_test_functions, std::uint64_t seed,
                             int factorization_points, int certificate_points) {
  ResidualSweep sweep;
  const int npts = static_cast<int>(grid.size());

  for (double h : h_list) {
    std::vector<double> r1(npts, 0.0), r2(npts, 0.0), vres(npts, 0.0);
    parallel_for(npts, [&](int p) {
      const EikonalResiduals er = eikonal_residuals(op, op.f.phi, op.f.psi, grid[p], h);
      r1[p] = std::abs(er.r1);
      r2[p] = std::abs(er.r2);
      vres[p] = v_identity_residual(op, S, grid[p], h);
    });
    for (int p = 0; p < npts; ++p) {
      sweep.eikonal_r1 = std::max(sweep.eikonal_r1, r1[p]);
      sweep.eikonal_r2 = std::max(sweep.eikonal_r2, r2[p]);
      sweep.v_identity = std::max(sweep.v_identity, vres[p]);
    }
  }

  // PDE certificate at seeded points
  {
    Rng rng(seed ^ 0x5u);
    std::vector<Vec> pts;
    for (int i = 0; i < certificate_points; ++i) pts.push_back(rng.point_in(box));
    for (double h : h_list) {
      std::vector<double> r(pts.size(), 0.0);
      parallel_for(static_cast<int>(pts.size()), [&](int p) {
        const auto res = pde_certificate_residual(S, pts[p], h);
        r[p] = res ? *res : 0.0;
      });
      for (double v : r) sweep.pde_certificate = std::max(sweep.pde_certificate, v);
    }
  }

  // factorization residuals on seeded test functions
  {
    Rng rng(seed ^ 0x9u);
    std::vector<Vec> pts;
    for (int i = 0; i < factorization_points; ++i) pts.push_back(rng.point_in(box));
    for (int f = 0; f < n_test_functions; ++f) {
      const ScalarField u(random_test_function(op.dim(), box, rng));
      const double scale = 1.0 + c2_norm(u, pts, h_list.front());
      for (double h : h_list) {
        std::vector<double> r(pts.size(), 0.0);
        parallel_for(static_cast<int>(pts.size()), [&](int p) {
          r[p] = std::abs(factorization_residual(op, S, u, pts[p], h));
        });
        for (double v : r)
          sweep.factorization_rel = std::max(sweep.factorization_rel, v / scale);
      }
    }
  }
  return sweep;
}

Json temperateness_to_json(const TemperatenessFit& fit) {
  Json j;
  j["m"] = fit.m;
  j["fit_residual"] = fit.fit_residual;
  Json cs;
  for (const auto& [k, v] : fit.C) cs[k] = v;
  j["C"] = cs;
  Json hv;
  for (const auto& [k, v] : fit.h_variation) hv[k] = v;
  j["h_variation"] = hv;
  j["max_h_variation"] = fit.max_h_variation;
  j["pass"] = fit.pass;
  return j;
}

Json invertibility_to_json(const StructureInvertibility& inv) {
  Json j;
  Json d;
  d["applicable"] = inv.definite.applicable;
  d["C"] = inv.definite.C;
  if (inv.definite.applicable) {
    d["max_inv_norm"] = inv.definite.max_inv_norm;
    d["pass"] = inv.definite.pass;
  }
  j["definite"] = d;
  Json s;
  s["applicable"] = inv.split.applicable;
  if (inv.split.applicable) {
    s["injective"] = inv.split.injective;
    s["dim_E"] = inv.split.dim_E;
    s["dim_F"] = inv.split.dim_F;
    s["dim_check"] = inv.split.dim_check;
    s["C0"] = inv.split.C0;
    s["sigma_min_B_on_E"] = inv.split.sigma_min_BE;
    if (inv.split.inv_norm_bound) s["inv_norm_bound"] = *inv.split.inv_norm_bound;
    if (inv.split.inv_norm_sharp) s["inv_norm_sharp"] = *inv.split.inv_norm_sharp;
    s["kernel_consistent"] = inv.kernel_consistent;
  }
  j["split"] = s;
  return j;
}

namespace {

Json environment_json(const SpecFile& spec) {
  Json env;
  env["seed"] = spec.verify.seed;
  env["grid_points"] = spec.verify.effective_grid_points(spec.dimension);
  env["h"] = spec.h;
  env["box_min"] = std::vector<double>(spec.verify.box.lo.data(),
                                       spec.verify.box.lo.data() + spec.dimension);
  env["box_max"] = std::vector<double>(spec.verify.box.hi.data(),
                                       spec.verify.box.hi.data() + spec.dimension);
  env["test_functions"] = spec.verify.test_functions;
  return env;
}

std::vector<Vec> subsample(const std::vector<Vec>& grid, std::size_t target) {
  if (grid.size() <= target) return grid;
  std::vector<Vec> out;
  const std::size_t stride = (grid.size() + target - 1) / target;
  for (std::size_t i = 0; i < grid.size(); i += stride) out.push_back(grid[i]);
  return out;
}

}  // namespace

VerifyOutcome run_verify_full(const SpecFile& spec) {
  VerifyOutcome out;
  Json rep;
  rep["schema"] = 1;
  rep["tool"] = "susyfactor";
  rep["command"] = "verify";
  rep["spec"] = spec.name;
  rep["environment"] = environment_json(spec);

  std::vector<CheckResult> checks;
  const int n = spec.dimension;
  const auto grid = tensor_grid(spec.verify.box, spec.verify.effective_grid_points(n));

  if (!spec.has_theta) throw SpecError(0, "verify requires a [theta] decomposition");

  // decomposition admissibility
  bool admissible = true;
  std::string admissibility_note;
  try {
    double t_lo = std::numeric_limits<double>::infinity(), t_hi = -t_lo;
    for (const Vec& x : grid) {
      const double t = spec.op.f.phi.value(x, 0.0) + spec.op.f.psi.value(x, 0.0);
      t_lo = std::min(t_lo, t);
      t_hi = std::max(t_hi, t);
    }
    validate_dec(spec.dec, t_lo, t_hi, subsample(grid, 200), spec.h.front());
  } catch (const PreconditionError& e) {
    admissible = false;
    admissibility_note = e.what();
  }
  rep["dec_admissible"] = admissible;
  if (!admissible) rep["dec_admissible_note"] = admissibility_note;

  double assumption = std::numeric_limits<double>::infinity();
  double theta_closed = std::numeric_limits<double>::infinity();
  if (admissible) {
    assumption = 0.0;
    theta_closed = 0.0;
    for (double h : spec.h) {
      const AssumptionReport ar = check_assumption(spec.op, spec.dec, grid, h);
      assumption = std::max(assumption, ar.max_residual);
      theta_closed = std::max(theta_closed, ar.max_delta_theta);
    }
  }
  checks.push_back({"assumption", assumption, spec.verify.tol_assumption,
                    admissible && assumption <= spec.verify.tol_assumption});
  checks.push_back({"theta_closed", theta_closed, 1e-9, admissible && theta_closed <= 1e-9});

  if (checks[0].pass) {
    QuadratureConfig qc;
    SusyStructure S =
        assemble_G(spec.op, spec.dec, qc, subsample(grid, 400), spec.h,
                   spec.verify.tol_assumption);
    const ResidualSweep sweep =
        residual_sweep(spec.op, S, grid, spec.h, spec.verify.box, spec.verify.test_functions,
                       spec.verify.seed);
    checks.push_back({"eikonal_r1", sweep.eikonal_r1, spec.verify.tol_eikonal,
                      sweep.eikonal_r1 <= spec.verify.tol_eikonal});
    checks.push_back({"eikonal_r2", sweep.eikonal_r2, spec.verify.tol_eikonal,
                      sweep.eikonal_r2 <= spec.verify.tol_eikonal});
    const double implication_bound = 10.0 * (sweep.eikonal_r1 + assumption) + 1e-9;
    checks.push_back({"eikonal_implication", sweep.eikonal_r2, implication_bound,
                      sweep.eikonal_r2 <= implication_bound});
    checks.push_back({"pde_certificate", sweep.pde_certificate, spec.verify.tol_pde,
                      sweep.pde_certificate <= spec.verify.tol_pde});
    checks.push_back({"factorization", sweep.factorization_rel, spec.verify.tol_factorization,
                      sweep.factorization_rel <= spec.verify.tol_factorization});
    checks.push_back({"v_identity", sweep.v_identity, spec.verify.tol_factorization,
                      sweep.v_identity <= spec.verify.tol_factorization});

    const TemperatenessFit fit = fit_temperateness(S, subsample(grid, 300), spec.h,
                                                   default_nu_set(n));
    rep["temperateness"] = temperateness_to_json(fit);
    const StructureInvertibility inv =
        invertibility_analysis(S, subsample(grid, 40), spec.h.front());
    rep["invertibility"] = invertibility_to_json(inv);

    out.structure = std::move(S);
    rep["checks"] = checks_to_json(checks);
    out.rr.pass = all_pass(checks) && fit.pass;
  } else {
    rep["checks"] = checks_to_json(checks);
    out.rr.pass = false;
  }

  rep["verdict"] = out.rr.pass ? "PASS" : "FAIL";
  out.rr.report = std::move(rep);
  out.rr.exit_code = out.rr.pass ? 0 : 1;
  return out;
}

RunResult run_verify(const SpecFile& spec) { return run_verify_full(spec).rr; }

RunResult run_morse2d(const SpecFile& spec) {
  RunResult rr;
  Json rep;
  rep["schema"] = 1;
  rep["tool"] = "susyfactor";
  rep["command"] = "morse2d";
  rep["spec"] = spec.name;
  rep["environment"] = environment_json(spec);
  if (spec.dimension != 2) throw SpecError(0, "morse2d requires dimension = 2");
  if (!spec.morse) throw SpecError(0, "morse2d requires a [morse2d] section");
  const Morse2dSettings& ms = *spec.morse;
  rep["morse2d"] = Json::object();
  Json& mj = rep["morse2d"];

  try {
    const ScalarField& phi = spec.op.f.phi;
    const CriticalSet cs = find_critical_points(phi, spec.verify.box);
    Json cj = Json::array();
    for (const auto& p : cs.points) {
      Json e;
      e["x"] = std::vector<double>{p.x[0], p.x[1]};
      e["index"] = p.index;
      e["value"] = p.value;
      cj.push_back(e);
    }
    mj["critical_points"] = cj;
    mj["warnings"] = cs.warnings;
    mj["saddle_values"] = cs.saddle_values();

    Grid2 g;
    g.box = spec.verify.box;
    g.nx = g.ny = ms.grid_points;
    const double h = spec.h.front();
    const StreamGrid stream = recover_stream(spec.op.f.U, g, h, ms.div_tol);
    mj["max_div"] = stream.max_div;
    mj["max_loop_residual"] = stream.max_loop_residual;

    const double margin =
        ms.saddle_margin > 0.0 ? ms.saddle_margin : default_saddle_margin(phi, g, cs);
    mj["saddle_margin"] = margin;
    const ComponentChart chart = component_partition(phi, cs, g, margin);
    mj["components"] = chart.n_components;

    std::vector<ProfileFit> fits;
    Json fj = Json::array();
    bool fits_pass = true;
    for (int c = 0; c < chart.n_components; ++c) {
      const ProfileFit fit = fit_profile(stream, chart, c, ms.fit_tol);
      Json e;
      e["component"] = c;
      e["unbounded"] = static_cast<bool>(chart.touches_boundary[c]);
      e["cells"] = 0;
      int cells = 0;
      for (int f = 0; f < g.nx * g.ny; ++f)
        if (chart.label[f] == c) ++cells;
      e["cells"] = cells;
      e["knots"] = fit.knots;
      e["f_values"] = fit.f_values;
      e["deviation"] = fit.deviation;
      e["pass"] = fit.pass;
      fits_pass = fits_pass && fit.pass;
      fj.push_back(e);
      fits.push_back(fit);
    }
    mj["profile_fits"] = fj;

    if (fits_pass) {
      const GlueReport glue =
          glue_check(fits, stream, chart, spec.op.f.U, cs, h, ms.glue_tol);
      Json gj;
      gj["max_mismatch"] = glue.max_mismatch;
      gj["max_star_residual"] = glue.max_star_residual;
      gj["pairs"] = Json::array();
      for (const auto& p : glue.pairs) {
        Json e;
        e["components"] = std::vector<int>{p.comp_a, p.comp_b};
        e["level"] = p.level;
        e["mismatch"] = p.mismatch;
        e["star_integral_check"] = p.star_integral_check;
        gj["pairs"].push_back(e);
      }
      gj["saddle_smoothness"] = Json::array();
      for (const auto& m : glue.saddles) {
        Json e;
        e["value"] = m.saddle_value;
        e["tested"] = m.tested;
        e["smooth"] = m.smooth;
        e["value_gap"] = m.value_gap;
        e["d1_gap"] = m.d1_gap;
        e["d2_gap"] = m.d2_gap;
        gj["saddle_smoothness"].push_back(e);
      }
      gj["global_pass"] = glue.global_pass;
      gj["verdict_mode"] = glue.verdict_mode;
      mj["glue"] = gj;
      rr.pass = glue.global_pass;
    } else {
      rr.pass = false;
    }
  } catch (const Error& e) {
    mj["error"] = e.what();
    rr.pass = false;
  }

  rep["verdict"] = rr.pass ? "PASS" : "FAIL";
  rr.report = std::move(rep);
  rr.exit_code = rr.pass ? 0 : 1;
  return rr;
}

RunResult run_tensor(const SpecFile& a, const SpecFile& b) {
  RunResult rr;
  Json rep;
  rep["schema"] = 1;
  rep["tool"] = "susyfactor";
  rep["command"] = "tensor";
  rep["spec"] = a.name + " (+) " + b.name;

  VerifyOutcome va = run_verify_full(a);
  VerifyOutcome vb = run_verify_full(b);
  rep["factor_a"] = va.rr.report;
  rep["factor_b"] = vb.rr.report;
  if (!va.rr.pass || !vb.rr.pass || !va.structure || !vb.structure) {
    rep["verdict"] = "FAIL";
    rr.report = std::move(rep);
    rr.pass = false;
    rr.exit_code = 1;
    return rr;
  }

  const OperatorSpec op = direct_sum(a.op, b.op);
  const SusyStructure S = tensorize(*va.structure, *vb.structure);
  const int n = op.dim();
  Box box;
  box.lo = Vec(n);
  box.hi = Vec(n);
  box.lo.head(a.dimension) = a.verify.box.lo;
  box.lo.tail(b.dimension) = b.verify.box.lo;
  box.hi.head(a.dimension) = a.verify.box.hi;
  box.hi.tail(b.dimension) = b.verify.box.hi;

  std::vector<double> h_list = a.h;
  const auto grid = tensor_grid(box, n >= 4 ? 9 : 11);
  std::vector<CheckResult> checks;

  // eikonal of the sum operator and factorization through the block structure
  double r1 = 0, r2 = 0;
  for (double h : h_list) {
    std::vector<double> v1(grid.size(), 0.0), v2(grid.size(), 0.0);
    parallel_for(static_cast<int>(grid.size()), [&](int p) {
      const EikonalResiduals er = eikonal_residuals(op, op.f.phi, op.f.psi, grid[p], h);
      v1[p] = std::abs(er.r1);
      v2[p] = std::abs(er.r2);
    });
    for (std::size_t p = 0; p < grid.size(); ++p) {
      r1 = std::max(r1, v1[p]);
      r2 = std::max(r2, v2[p]);
    }
  }
  checks.push_back({"eikonal_r1", r1, a.verify.tol_eikonal, r1 <= a.verify.tol_eikonal});
  checks.push_back({"eikonal_r2", r2, a.verify.tol_eikonal, r2 <= a.verify.tol_eikonal});

  double fact = 0.0;
  {
    Rng rng(a.verify.seed ^ 0x77u);
    std::vector<Vec> pts;
    for (int i = 0; i < 40; ++i) pts.push_back(rng.point_in(box));
    for (int f = 0; f < std::max(2, a.verify.test_functions / 2); ++f) {
      const ScalarField u(random_test_function(n, box, rng));
      const double scale = 1.0 + c2_norm(u, pts, h_list.front());
      for (double h : h_list) {
        std::vector<double> r(pts.size(), 0.0);
        parallel_for(static_cast<int>(pts.size()), [&](int p) {
          r[p] = std::abs(factorization_residual(op, S, u, pts[p], h));
        });
        for (double v : r) fact = std::max(fact, v / scale);
      }
    }
  }
  checks.push_back({"factorization_product", fact, a.verify.tol_factorization,
                    fact <= a.verify.tol_factorization});

  rep["checks"] = checks_to_json(checks);
  rr.pass = all_pass(checks);
  rep["verdict"] = rr.pass ? "PASS" : "FAIL";
  rr.report = std::move(rep);
  rr.exit_code = rr.pass ? 0 : 1;
  return rr;
}

}  // namespace susyfactor
