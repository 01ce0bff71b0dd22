#include "nlex/harness.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "nlex/exchange_scatter.hpp"

namespace nlex {

namespace {

const std::vector<std::pair<ExperimentKind, const char*>> kKindNames = {
    {ExperimentKind::mesh, "mesh"},
    {ExperimentKind::spectrum, "spectrum"},
    {ExperimentKind::exchange_rate, "exchange_rate"},
    {ExperimentKind::dtn_rate, "dtn_rate"},
    {ExperimentKind::scattering_rate, "scattering_rate"},
    {ExperimentKind::counterexample, "counterexample"},
    {ExperimentKind::solve, "solve"},
};

bool is_sweep(ExperimentKind k) {
  return k == ExperimentKind::exchange_rate || k == ExperimentKind::dtn_rate ||
         k == ExperimentKind::scattering_rate || k == ExperimentKind::counterexample;
}

bool uses_M(ExperimentKind k) {
  return k == ExperimentKind::exchange_rate || k == ExperimentKind::dtn_rate || k == ExperimentKind::scattering_rate;
}

template <class T>
T get(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

std::vector<double> geometric(double g0, int k) {
  std::vector<double> g;
  for (int i = 0; i < k; ++i) g.push_back(std::ldexp(g0, -i));
  return g;
}

// ---------------------------------------------------------------- meshes

bool smooth_geometry(const ExperimentConfig& c) { return Curve(curve_from_json(c.geometry)).smooth(); }

BoundaryMesh make_mesh(const ExperimentConfig& c, double gamma) {
  CurveSpec spec = curve_from_json(c.geometry);
  const bool smooth = Curve(spec).smooth();
  GradingPolicy g;
  if (c.grading.is_null())
    g = smooth ? GradingPolicy::uniform() : GradingPolicy::dyadic(gamma);
  else
    g = grading_from_json(c.grading, gamma);
  std::size_t n = c.nodes > 0 ? c.nodes : (smooth ? 1024 : 2048);
  return build_mesh(spec, n, g);
}

std::mt19937_64 point_rng(std::uint64_t seed, std::size_t k) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(k)};
  return std::mt19937_64(seq);
}

// Random member of X_gamma(M): normal coefficients in the subspace basis.
Vec draw_member(const XSubspace& X, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  Vec a(X.basis.cols());
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = N(rng);
  return X.basis * a;
}

// Two fixed smooth functions of position, used as the gamma-independent density.
Vec smooth_density(const BoundaryMesh& m, int which) {
  Vec f(Eigen::Index(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Point& x = m.nodes()[i];
    f[Eigen::Index(i)] = which == 0 ? 1.0 + 0.5 * x.x() - 0.3 * x.y() + 0.2 * x.x() * x.y()
                                    : std::cos(1.3 * x.x()) + 0.4 * x.y() * x.y() - 0.25;
  }
  return f;
}

std::size_t convex_corners(const BoundaryMesh& m, Side side) {
  std::size_t n = 0;
  for (const Corner& c : m.curve().corners()) {
    if (!c.is_vertex) continue;
    double angle = side == Side::interior ? c.interior_angle : 2.0 * kPi - c.interior_angle;
    if (angle < kPi) ++n;
  }
  return n;
}

Side side_option(const Json& o) {
  auto s = get<std::string>(o, "side", "interior");
  if (s == "interior") return Side::interior;
  if (s == "exterior") return Side::exterior;
  throw ConfigError("options.side must be 'interior' or 'exterior'");
}

std::string s_key(double s) {
  std::ostringstream o;
  o << "s=" << s;
  return o.str();
}

void slope_assertion(RateReport& r, const Json& opt, double lo, double hi) {
  lo = get<double>(opt, "slope_min", lo);
  hi = get<double>(opt, "slope_max", hi);
  std::ostringstream a;
  if (std::isfinite(hi))
    a << "slope in [" << lo << ", " << hi << "]";
  else
    a << "slope >= " << lo;
  r.assertion = a.str();
  r.pass = r.fitted_slope >= lo && r.fitted_slope <= hi;
}

// ---------------------------------------------------------------- sweeps

// Runs body(k, gamma) for every sweep point. Points are independent, so they
// may run concurrently; any exception is recorded for its point.
template <class F>
std::vector<std::string> sweep(const std::vector<double>& gammas, F&& body) {
  std::vector<std::string> err(gammas.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    try {
      body(k, gammas[k]);
    } catch (const std::exception& e) {
      err[k] = e.what();
    }
  }
  return err;
}

std::string first_error(const std::vector<double>& gammas, const std::vector<std::string>& err) {
  for (std::size_t k = 0; k < err.size(); ++k)
    if (!err[k].empty()) {
      std::ostringstream o;
      o << "gamma=" << gammas[k] << ": " << err[k];
      return o.str();
    }
  return {};
}

void exchange_rate(const ExperimentConfig& c, ExperimentResult& out) {
  RateReport& r = out.report;
  const bool smooth = smooth_geometry(c);
  const std::string density = get<std::string>(c.options, "density", smooth ? "smooth" : "x_members");
  if (density != "smooth" && density != "x_members")
    throw ConfigError("options.density must be 'smooth' or 'x_members'");
  const std::size_t S = c.s_values.size(), K = c.gammas.size();
  std::vector<std::vector<double>> def(S, std::vector<double>(K));
  std::vector<double> nodes(K), a_norm(K);
  auto err = sweep(c.gammas, [&](std::size_t k, double g) {
    BoundaryMesh mesh = make_mesh(c, g);
    DtnContext ctx(mesh, g);
    SpectralBasis b0 = steklov_eigs(ctx.dtn(Side::exterior), mesh.weights());
    SpectralBasis b1 = steklov_eigs(ctx.dtn(Side::interior), mesh.weights());
    BoundaryOperator A = ctx.A();
    std::vector<const SpectralBasis*> bases{&b0, &b1};
    std::vector<MultiTrace> phis;
    if (density == "smooth") {
      phis.push_back({{smooth_density(mesh, 0), smooth_density(mesh, 1)}, g});
    } else {
      XSubspace X = build_x_subspace(mesh, g, c.M);
      auto rng = point_rng(c.seed, k);
      for (int d = 0; d < c.draws; ++d) phis.push_back({{draw_member(X, rng), draw_member(X, rng)}, g});
    }
    for (std::size_t i = 0; i < S; ++i) {
      double worst = 0.0;
      for (const auto& phi : phis)
        worst = std::max(worst, density == "smooth" ? exchange_defect(phi, c.s_values[i], A, bases)
                                                    : exchange_defect(phi, c.s_values[i], A, bases, &mesh, c.M));
      def[i][k] = worst;
    }
    nodes[k] = double(mesh.size());
    Vec f = smooth_density(mesh, 0);
    a_norm[k] = std::sqrt((A.matrix * f).cwiseAbs2().dot(mesh.weights()) / f.cwiseAbs2().dot(mesh.weights()));
  });
  r.gammas = c.gammas;
  r.defects = def[0];
  r.columns["nodes"] = nodes;
  r.columns["A_L2_ratio"] = a_norm;
  for (std::size_t i = 0; i < S; ++i) r.columns["defect_" + s_key(c.s_values[i])] = def[i];
  r.metadata["density"] = density;
  out.error = first_error(c.gammas, err);
  if (!out.error.empty()) return;
  const double lo = smooth ? 0.85 : 0.4, hi = smooth ? 1.15 : kInf;
  bool all = true;
  for (std::size_t i = 0; i < S; ++i) {
    SlopeFit f = fit_slope(c.gammas, def[i], c.drop);
    r.scalars["slope_" + s_key(c.s_values[i])] = f.slope;
    r.scalars["fit_residual_" + s_key(c.s_values[i])] = f.residual;
    RateReport t;
    t.fitted_slope = f.slope;
    slope_assertion(t, c.options, lo, hi);
    all = all && t.pass;
    r.assertion = t.assertion + " for every s";
  }
  r.fit(c.drop);
  r.scalars["A_L2_slope"] = fit_slope(c.gammas, a_norm, c.drop).slope;
  r.pass = all;
}

// dtn_rate and scattering_rate share the sampling and the thresholds.
void dtn_like_rate(const ExperimentConfig& c, ExperimentResult& out, bool scattering) {
  RateReport& r = out.report;
  const bool smooth = smooth_geometry(c);
  const Side side = side_option(c.options);
  const std::size_t K = c.gammas.size();
  std::vector<double> def(K), first(K), bound(K), nodes(K), corner(K, 0.0), lam1(K), ident(K, 0.0);
  auto err = sweep(c.gammas, [&](std::size_t k, double g) {
    BoundaryMesh mesh = make_mesh(c, g);
    DtnContext ctx(mesh, g);
    DtnOperator T = ctx.dtn(side);
    SpectralBasis b = steklov_eigs(T, mesh.weights());
    XSubspace X = build_x_subspace(mesh, g, c.M);
    auto rng = point_rng(c.seed, k);
    auto measure = [&](const Vec& h) {
      if (!in_x_subspace(mesh, h, c.M))
        throw MembershipError("sampled trace outside X_gamma(M)", gradient_ratio(mesh, h), c.M);
      if (!scattering) return dtn_defect(h, T, b, mesh, c.M);
      ScatterContext sc{&T, g, 1.0, g};
      Vec tn = T.apply(h) / g;
      CVec d = apply_scattering(h, tn, sc, ScatterKind::local) - apply_scattering(h, tn, sc, ScatterKind::nonlocal);
      CVec expect(h.size());
      expect.real().setZero();
      expect.imag() = h - T.apply(h);
      ident[k] = std::max(ident[k], (d - expect).cwiseAbs().maxCoeff() / std::max(1.0, h.cwiseAbs().maxCoeff()));
      return complex_sobolev_norm(d, -0.5, b) / sobolev_norm(h, -0.5, b);
    };
    double worst = 0.0;
    for (int d = 0; d < c.draws; ++d) worst = std::max(worst, measure(draw_member(X, rng)));
    def[k] = worst;
    first[k] = measure(X.basis.col(0));
    bound[k] = smooth ? std::sqrt(g) + c.M * g : std::cbrt(g) + std::sqrt(c.M) * std::pow(g, c.a / 2.0);
    nodes[k] = double(mesh.size());
    lam1[k] = b.lambdas[0];
    if (!smooth) corner[k] = dtn_defect_unchecked(b.modes.col(0), T, b);
  });
  r.gammas = c.gammas;
  r.defects = def;
  r.columns["first_mode"] = first;
  r.columns["bound_shape"] = bound;
  r.columns["nodes"] = nodes;
  r.columns["lambda_1"] = lam1;
  if (!smooth) r.columns["corner_mode_defect"] = corner;
  if (scattering) {
    r.columns["identity_residual"] = ident;
    r.metadata["normalization"] = "mu=1, omega=gamma";
  }
  r.metadata["side"] = side == Side::interior ? "interior" : "exterior";
  out.error = first_error(c.gammas, err);
  if (!out.error.empty()) return;
  r.fit(c.drop);
  slope_assertion(r, c.options, smooth ? 0.4 : 0.25, kInf);
  if (!smooth) {
    // The corner eigenmode lies outside X_gamma(M); its defect stays bounded below.
    double lmin = *std::min_element(lam1.begin(), lam1.end());
    double floor = (1.0 - lam1.back()) / 2.0;
    bool held = std::all_of(corner.begin(), corner.end(), [&](double v) { return v >= floor; });
    r.scalars["corner_mode_floor"] = floor;
    r.scalars["lambda_1_min"] = lmin;
    r.assertion += "; corner-mode defect >= (1 - lambda_1)/2";
    r.pass = r.pass && held;
  }
}

void counterexample(const ExperimentConfig& c, ExperimentResult& out) {
  CounterexampleOptions o;
  o.c_star = get<double>(c.options, "c_star", o.c_star);
  const std::string profile = get<std::string>(c.options, "profile", "indicator");
  if (profile == "indicator")
    o.profile = DensityProfile::indicator;
  else if (profile == "smooth_bump")
    o.profile = DensityProfile::smooth_bump;
  else
    throw ConfigError("options.profile must be 'indicator' or 'smooth_bump'");
  // A bump scaled with gamma has a gamma-independent ratio, so it keeps the
  // indicator's width at the largest gamma unless told otherwise.
  const double gmax = *std::max_element(c.gammas.begin(), c.gammas.end());
  o.fixed_width = get<double>(c.options, "fixed_width", o.profile == DensityProfile::smooth_bump ? o.c_star * gmax : 0.0);
  o.max_panel_length = get<double>(c.options, "max_panel_length", o.max_panel_length);
  o.s = c.s_values.front();
  o.drop = c.drop;
  try {
    out.report = counterexample_study(c.gammas, o);
  } catch (const std::exception& e) {
    out.report.experiment = "counterexample";
    out.report.gammas = c.gammas;
    out.error = e.what();
    return;
  }
  if (c.options.contains("slope_min") || c.options.contains("slope_max")) {
    slope_assertion(out.report, c.options, -kInf, kInf);
  }
}

void spectrum(const ExperimentConfig& c, ExperimentResult& out) {
  RateReport& r = out.report;
  const Side side = side_option(c.options);
  const int count = get<int>(c.options, "count", 8);
  const double C = get<double>(c.options, "bound_constant", 5.0);
  if (count < 1) throw ConfigError("options.count must be positive");
  const std::size_t K = c.gammas.size();
  std::vector<Vec> lams(K);
  std::vector<double> rem(K), cluster_mean(K), nodes(K), resid(K);
  std::size_t cluster = 0;
  auto err = sweep(c.gammas, [&](std::size_t k, double g) {
    BoundaryMesh mesh = make_mesh(c, g);
    const std::size_t nc = convex_corners(mesh, side);
#pragma omp critical
    cluster = nc;
    DtnContext ctx(mesh, g);
    SpectralBasis b = steklov_eigs(ctx.dtn(side), mesh.weights());
    lams[k] = b.lambdas;
    nodes[k] = double(mesh.size());
    resid[k] = b.symmetry_residual;
    cluster_mean[k] = nc > 0 ? b.lambdas.head(Eigen::Index(nc)).mean() : b.lambdas[0];
    rem[k] = b.lambdas.tail(b.lambdas.size() - Eigen::Index(nc)).minCoeff();
  });
  r.gammas = c.gammas;
  out.error = first_error(c.gammas, err);
  if (!out.error.empty()) return;
  for (int j = 0; j < count; ++j) {
    std::vector<double> col(K);
    for (std::size_t k = 0; k < K; ++k) col[k] = j < lams[k].size() ? lams[k][j] : 0.0;
    r.columns["lambda_" + std::to_string(j + 1)] = col;
  }
  std::vector<double> bound(K);
  for (std::size_t k = 0; k < K; ++k) bound[k] = 1.0 - C * std::pow(c.gammas[k], 2.0 / 3.0);
  r.columns["cluster_mean"] = cluster_mean;
  r.columns["remaining_min"] = rem;
  r.columns["remaining_bound"] = bound;
  r.columns["nodes"] = nodes;
  r.columns["symmetry_residual"] = resid;
  for (std::size_t k = 0; k < K; ++k) r.defects.push_back(std::max(std::abs(1.0 - cluster_mean[k]), 1e-300));
  r.scalars["cluster_size"] = double(cluster);

  // Linear least squares of the cluster mean against gamma^(2/3), smallest
  // gammas first, after dropping the configured endpoints.
  std::vector<std::size_t> idx(K);
  for (std::size_t k = 0; k < K; ++k) idx[k] = k;
  std::stable_sort(idx.begin(), idx.end(), [&](auto x, auto y) { return c.gammas[x] > c.gammas[y]; });
  double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
  for (std::size_t q = std::size_t(std::min<int>(c.drop, int(K) - 2)); q < K; ++q) {
    double x = std::pow(c.gammas[idx[q]], 2.0 / 3.0), y = cluster_mean[idx[q]];
    sx += x, sy += y, sxx += x * x, sxy += x * y, m += 1;
  }
  double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  double limit = (sy - slope * sx) / m;
  r.scalars["cluster_limit"] = limit;
  r.scalars["cluster_rate_constant"] = slope;
  try {
    r.fit(c.drop);
  } catch (const DomainError&) {
    r.metadata["fit"] = "unavailable";
  }
  const bool rem_ok = std::equal(rem.begin(), rem.end(), bound.begin(), [](double v, double b) { return v >= b; });
  if (cluster > 0) {
    r.assertion = "cluster limit in (0, 1); remaining eigenvalues >= 1 - C gamma^(2/3)";
    r.pass = limit > 0 && limit < 1 && rem_ok;
  } else {
    r.assertion = "all eigenvalues >= 1 - C gamma^(2/3)";
    r.pass = rem_ok;
    double cfit = 0.0;
    for (std::size_t k = 0; k < K; ++k) cfit = std::max(cfit, (1.0 - lams[k][0]) / c.gammas[k]);
    r.scalars["fitted_C"] = cfit;
  }
  Json sp = Json::array();
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> v(lams[k].data(), lams[k].data() + std::min<Eigen::Index>(lams[k].size(), count));
    sp.push_back({{"gamma", c.gammas[k]}, {"lambdas", v}});
  }
  out.extra["spectra"] = sp;
}

Partition partition_from_config(const Json& g, double gamma) {
  if (!g.contains("partition")) throw ConfigError("solve: geometry needs a 'partition' entry");
  const Json& p = g.at("partition");
  if (p.is_object()) {
    Json q = p;
    q["gamma"] = gamma;
    return partition_from_json(q);
  }
  const auto name = p.get<std::string>();
  const double h = get<double>(g, "max_panel_length", 0.1);
  if (name == "disc") return disc_partition(get<double>(g, "radius", 1.0), gamma, h);
  if (name == "crosspoint") return crosspoint_partition(gamma, h, get<int>(g, "corner_levels", 0));
  throw ConfigError("solve: unknown partition '" + name + "'");
}

std::vector<PointSource> sources_from_config(const Json& o, const Partition& p) {
  std::vector<PointSource> src;
  if (o.contains("sources")) {
    for (const auto& s : o.at("sources")) src.push_back({point_from_json(s.at("x")), get<double>(s, "q", 1.0)});
    return src;
  }
  // One unit source per subdomain, at a fixed offset inside it.
  for (std::size_t j = 0; j < p.parts.size(); ++j) {
    const auto& m = p.parts[j].mesh;
    const double sg = side_sign(p.parts[j].side);
    const std::size_t i = (m.size() * (2 * j + 1)) / (2 * p.parts.size() + 1);
    src.push_back({m.nodes()[i] - sg * 0.25 * m.normals()[i], j % 2 ? -0.7 : 1.0});
  }
  return src;
}

void solve(const ExperimentConfig& c, ExperimentResult& out) {
  RateReport& r = out.report;
  const double g = c.gammas.front();
  r.gammas = {g};
  Partition p = partition_from_config(c.geometry, g);
  FixedPointOptions o;
  o.relax = get<double>(c.options, "relax", o.relax);
  o.tol = get<double>(c.options, "tol", o.tol);
  o.max_iter = get<int>(c.options, "max_iter", o.max_iter);
  o.omega = get<double>(c.options, "omega", o.omega);
  o.mu = get<double>(c.options, "mu", o.mu);
  const double etol = get<double>(c.options, "error_tol", 1e-5);
  const double rmax = get<double>(c.options, "ratio_max", 0.9);
  const int after = get<int>(c.options, "ratio_after", 5);
  std::vector<PointSource> src = sources_from_config(c.options, p);
  try {
    FixedPointSolver S(p);
    FixedPointResult res = S.solve(src, o);
    const double e = res.history.empty() && src.empty() ? 0.0 : S.trace_error(res, src);
    double worst = 0.0;
    for (std::size_t k = std::size_t(after) + 1; k < res.history.size(); ++k)
      if (res.history[k - 1] > 0) worst = std::max(worst, res.history[k] / res.history[k - 1]);
    r.defects = {std::max(e, 1e-300)};
    r.columns["iterations"] = {double(res.iterations)};
    r.columns["max_step_ratio"] = {worst};
    r.columns["isometry_defect"] = {res.isometry_defect};
    r.columns["max_imag"] = {res.max_imag};
    std::vector<double> nodes;
    for (const auto& d : p.parts) nodes.push_back(double(d.mesh.size()));
    out.extra["nodes_per_part"] = nodes;
    out.extra["history"] = res.history;
    out.extra["converged"] = res.converged;
    std::ostringstream a;
    a << "converged; trace error <= " << etol << "; step ratio <= " << rmax << " after iteration " << after;
    r.assertion = a.str();
    r.pass = res.converged && e <= etol && worst <= rmax;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  r.scalars["omega"] = o.omega;
  r.scalars["relax"] = o.relax;
}

void mesh_kind(const ExperimentConfig& c, ExperimentResult& out) {
  RateReport& r = out.report;
  r.gammas = c.gammas;
  for (double g : c.gammas) {
    BoundaryMesh m = make_mesh(c, g);
    double lo = kInf, hi = 0.0;
    for (const Panel& p : m.panels()) {
      lo = std::min(lo, p.length);
      hi = std::max(hi, p.length);
    }
    r.defects.push_back(lo);
    r.columns["nodes"].push_back(double(m.size()));
    r.columns["panels"].push_back(double(m.panels().size()));
    r.columns["max_panel"].push_back(hi);
    r.columns["length"].push_back(m.length());
    r.columns["area"].push_back(m.signed_area());
    if (!out.extra.contains("mesh_csv")) {
      std::ostringstream s;
      write_mesh_csv(m, s);
      out.extra["mesh_csv"] = s.str();
    }
  }
  r.assertion = "mesh built with positive area";
  r.pass = std::all_of(r.columns["area"].begin(), r.columns["area"].end(), [](double a) { return a > 0; });
}

std::string timestamp_utc() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(); }

}  // namespace

// ---------------------------------------------------------------- config

std::string to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kKindNames)
    if (kind == k) return name;
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (const auto& [kind, name] : kKindNames)
    if (s == name) return kind;
  throw ConfigError("unknown experiment '" + s + "'");
}

ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known = {"schema_version", "experiment", "geometry", "gammas", "nodes",
                                                 "grading", "M", "a", "s", "drop", "seed", "draws", "options"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown config field '" + key + "'");
  ExperimentConfig c;
  if (!j.contains("schema_version")) throw ConfigError("missing field 'schema_version'");
  c.schema_version = get<int>(j, "schema_version", 0);
  if (c.schema_version != kConfigSchemaVersion)
    throw ConfigError("schema_version " + std::to_string(c.schema_version) + " is not supported (expected " +
                      std::to_string(kConfigSchemaVersion) + ")");
  if (!j.contains("experiment")) throw ConfigError("missing field 'experiment'");
  c.kind = experiment_kind_from_string(get<std::string>(j, "experiment", ""));
  if (!j.contains("geometry") || !j.at("geometry").is_object()) throw ConfigError("missing object 'geometry'");
  c.geometry = j.at("geometry");
  if (!j.contains("gammas") || !j.at("gammas").is_array() || j.at("gammas").empty())
    throw ConfigError("'gammas' must be a non-empty array");
  c.gammas = get<std::vector<double>>(j, "gammas", {});
  for (std::size_t k = 0; k < c.gammas.size(); ++k) {
    if (!(c.gammas[k] > 0)) throw ConfigError("gammas must be positive");
    if (k > 0 && !(c.gammas[k] < c.gammas[k - 1])) throw ConfigError("gammas must be strictly decreasing");
  }
  const long long nodes = get<long long>(j, "nodes", 0);
  if (nodes != 0 && nodes < 16) throw ConfigError("'nodes' must be 0 (default) or at least 16");
  c.nodes = std::size_t(nodes);
  c.grading = j.contains("grading") ? j.at("grading") : Json();
  c.M = get<double>(j, "M", c.M);
  c.a = get<double>(j, "a", c.a);
  if (j.contains("s")) {
    const Json& s = j.at("s");
    c.s_values = s.is_array() ? get<std::vector<double>>(j, "s", {}) : std::vector<double>{get<double>(j, "s", 0.0)};
  }
  c.drop = get<int>(j, "drop", c.drop);
  c.seed = get<std::uint64_t>(j, "seed", 0);
  c.draws = get<int>(j, "draws", c.draws);
  c.options = j.contains("options") ? j.at("options") : Json::object();
  if (!c.options.is_object()) throw ConfigError("'options' must be an object");

  if (!(c.a > 0 && c.a < 1)) throw ConfigError("'a' must lie in (0, 1)");
  if (c.s_values.empty()) throw ConfigError("'s' must not be empty");
  for (double s : c.s_values)
    if (!(s >= -0.5 && s <= 0.0)) throw ConfigError("'s' values must lie in [-1/2, 0]");
  if (c.draws < 1) throw ConfigError("'draws' must be positive");
  if (c.drop < 0) throw ConfigError("'drop' must be non-negative");
  if (uses_M(c.kind)) {
    if (!(c.M > 0)) throw ConfigError("'M' must be positive");
    for (double g : c.gammas)
      if (c.M * g > 1.0 + 1e-12) throw ConfigError("'M' must not exceed 1/gamma for every gamma");
  }
  if (is_sweep(c.kind)) {
    const std::size_t need = c.kind == ExperimentKind::counterexample ? 3 : 4;
    if (c.gammas.size() < need) throw ConfigError("slope fits need at least " + std::to_string(need) + " gammas");
    if (c.gammas.size() < std::size_t(c.drop) + 3) throw ConfigError("fewer than 3 gammas left after 'drop'");
  }
  if (c.kind == ExperimentKind::solve) {
    if (c.gammas.size() != 1) throw ConfigError("solve takes exactly one gamma");
    if (!c.geometry.contains("partition")) throw ConfigError("solve: geometry needs a 'partition' entry");
  } else {
    if (c.kind == ExperimentKind::counterexample) {
      // The study always runs on the unit square.
      if (get<std::string>(c.geometry, "kind", "") != "unit_square")
        throw ConfigError("counterexample: geometry must be the unit square");
    }
    curve_from_json(c.geometry);
    if (!c.grading.is_null()) grading_from_json(c.grading, c.gammas.front());
  }
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["schema_version"] = c.schema_version;
  j["experiment"] = to_string(c.kind);
  j["geometry"] = c.geometry;
  j["gammas"] = c.gammas;
  j["nodes"] = c.nodes;
  j["grading"] = c.grading;
  j["M"] = c.M;
  j["a"] = c.a;
  j["s"] = c.s_values;
  j["drop"] = c.drop;
  j["seed"] = c.seed;
  j["draws"] = c.draws;
  j["options"] = c.options;
  return j;
}

ExperimentConfig default_config(ExperimentKind k) {
  ExperimentConfig c;
  c.kind = k;
  const Json ellipse = {{"kind", "ellipse"}, {"a", 1.0}, {"b", 0.6}};
  const Json square = {{"kind", "unit_square"}};
  switch (k) {
    case ExperimentKind::mesh:
      c.geometry = square;
      c.gammas = {0.05};
      break;
    case ExperimentKind::spectrum:
      c.geometry = square;
      c.gammas = geometric(0.2, 6);
      break;
    case ExperimentKind::exchange_rate:
      c.geometry = ellipse;
      c.gammas = geometric(0.2, 6);
      c.s_values = {-0.5, 0.0};
      break;
    case ExperimentKind::dtn_rate:
    case ExperimentKind::scattering_rate:
      c.geometry = ellipse;
      c.gammas = geometric(0.2, 6);
      break;
    case ExperimentKind::counterexample:
      c.geometry = square;
      c.gammas = geometric(0.1, 4);
      c.options = {{"c_star", 0.25}, {"profile", "indicator"}};
      break;
    case ExperimentKind::solve:
      c.geometry = {{"partition", "disc"}, {"radius", 1.0}, {"max_panel_length", 0.1}};
      c.gammas = {0.1};
      c.options = {{"error_tol", 1e-6}};
      break;
  }
  return c;
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string s = config_to_json(c).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << h;
  return o.str();
}

// ---------------------------------------------------------------- driver

ExperimentResult run_experiment(const ExperimentConfig& c) {
  ExperimentResult out;
  out.report.experiment = to_string(c.kind);
  out.report.dropped_endpoints = c.drop;
  try {
    switch (c.kind) {
      case ExperimentKind::mesh: mesh_kind(c, out); break;
      case ExperimentKind::spectrum: spectrum(c, out); break;
      case ExperimentKind::exchange_rate: exchange_rate(c, out); break;
      case ExperimentKind::dtn_rate: dtn_like_rate(c, out, false); break;
      case ExperimentKind::scattering_rate: dtn_like_rate(c, out, true); break;
      case ExperimentKind::counterexample: counterexample(c, out); break;
      case ExperimentKind::solve: solve(c, out); break;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  if (!out.error.empty()) {
    out.report.pass = false;
    out.report.assertion = "not evaluated: " + out.error;
  }
  out.report.experiment = to_string(c.kind);
  return out;
}

// ---------------------------------------------------------------- reports

Json report_to_json(const ExperimentResult& r, const ExperimentConfig& c, bool timestamp) {
  const RateReport& p = r.report;
  Json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["library_version"] = version();
  j["config_hash"] = config_hash(c);
  j["config"] = config_to_json(c);
  j["experiment"] = p.experiment;
  j["gammas"] = p.gammas;
  j["defects"] = p.defects;
  Json cols = Json::object();
  for (const auto& [k, v] : p.columns) cols[k] = v;
  j["columns"] = cols;
  Json sc = Json::object();
  for (const auto& [k, v] : p.scalars) sc[k] = finite_or_null(v);
  j["scalars"] = sc;
  Json md = Json::object();
  for (const auto& [k, v] : p.metadata) md[k] = v;
  j["metadata"] = md;
  j["fit"] = {{"slope", finite_or_null(p.fitted_slope)},
              {"residual", finite_or_null(p.fit_residual)},
              {"dropped_endpoints", p.dropped_endpoints},
              {"constant", finite_or_null(p.constant)}};
  j["assertion"] = p.assertion;
  j["pass"] = p.pass;
  j["error"] = r.error;
  Json extra = r.extra;
  extra.erase("mesh_csv");
  j["extra"] = extra;
  if (timestamp) j["timestamp"] = timestamp_utc();
  return j;
}

std::string report_to_csv(const ExperimentResult& r) {
  const RateReport& p = r.report;
  std::ostringstream o;
  o << std::setprecision(17) << "gamma,defect";
  for (const auto& [k, v] : p.columns) o << ',' << k;
  o << '\n';
  for (std::size_t i = 0; i < p.gammas.size(); ++i) {
    o << p.gammas[i] << ',';
    if (i < p.defects.size()) o << p.defects[i];
    for (const auto& [k, v] : p.columns) {
      o << ',';
      if (i < v.size()) o << v[i];
    }
    o << '\n';
  }
  return o.str();
}

RateReport report_from_json(const Json& j) {
  RateReport p;
  try {
    p.experiment = j.at("experiment").get<std::string>();
    p.gammas = j.at("gammas").get<std::vector<double>>();
    p.defects = j.at("defects").get<std::vector<double>>();
    for (const auto& [k, v] : j.at("columns").items()) p.columns[k] = v.get<std::vector<double>>();
    for (const auto& [k, v] : j.at("scalars").items()) p.scalars[k] = v.is_null() ? std::nan("") : v.get<double>();
    for (const auto& [k, v] : j.at("metadata").items()) p.metadata[k] = v.get<std::string>();
    const Json& f = j.at("fit");
    auto num = [](const Json& v) { return v.is_null() ? std::nan("") : v.get<double>(); };
    p.fitted_slope = num(f.at("slope"));
    p.fit_residual = num(f.at("residual"));
    p.dropped_endpoints = f.at("dropped_endpoints").get<int>();
    p.constant = num(f.at("constant"));
    p.assertion = j.at("assertion").get<std::string>();
    p.pass = j.at("pass").get<bool>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("report: ") + e.what());
  }
  return p;
}

std::vector<std::filesystem::path> emit_report(const ExperimentResult& r, const ExperimentConfig& c,
                                               const std::filesystem::path& dir, ReportFormat fmt) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto write = [&](const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << text;
    f.flush();
    if (!f) throw IoError("write failed for " + path.string());
    written.push_back(path);
  };
  const std::string stem = to_string(c.kind);
  if (fmt != ReportFormat::csv) write(dir / (stem + ".json"), report_to_json(r, c).dump(2) + "\n");
  if (fmt != ReportFormat::json) {
    write(dir / (stem + ".csv"), report_to_csv(r));
    if (r.extra.contains("history")) {
      std::ostringstream h;
      h << std::setprecision(17) << "iter,residual\n";
      const auto hist = r.extra.at("history").get<std::vector<double>>();
      for (std::size_t k = 0; k < hist.size(); ++k) h << (k + 1) << ',' << hist[k] << '\n';
      write(dir / "history.csv", h.str());
    }
    if (r.extra.contains("mesh_csv")) write(dir / "mesh_nodes.csv", r.extra.at("mesh_csv").get<std::string>());
  }
  return written;
}

std::vector<SnapshotDiff> compare_snapshot(const Json& report, const Json& baseline, double rel_tol) {
  std::vector<SnapshotDiff> out;
  auto compare = [&](const std::string& name, const Json& a, const Json& e) {
    if (!a.is_array() || !e.is_array() || a.size() != e.size()) {
      out.push_back({name + " (length)", 0, double(e.is_array() ? e.size() : 0), double(a.is_array() ? a.size() : 0),
                     kInf});
      return;
    }
    for (std::size_t i = 0; i < e.size(); ++i) {
      double x = a[i].get<double>(), y = e[i].get<double>();
      double rel = std::abs(x - y) / std::max(std::abs(y), std::numeric_limits<double>::min());
      if (x == y) rel = 0.0;
      if (!(rel <= rel_tol)) out.push_back({name, i, y, x, rel});
    }
  };
  compare("defects", report.value("defects", Json()), baseline.value("defects", Json()));
  if (baseline.contains("columns"))
    for (const auto& [k, v] : baseline.at("columns").items()) {
      Json a = report.contains("columns") ? report.at("columns").value(k, Json()) : Json();
      compare("columns." + k, a, v);
    }
  return out;
}

}  // namespace nlex
