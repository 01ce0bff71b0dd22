#include "nlex/exchange_scatter.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "nlex/bessel.hpp"

namespace nlex {

// ---------------------------------------------------------------- MultiTrace

MultiTrace MultiTrace::operator+(const MultiTrace& o) const {
  if (o.size() != size()) throw DomainError("MultiTrace: part count mismatch");
  MultiTrace r = *this;
  for (std::size_t k = 0; k < size(); ++k) r.parts[k] += o.parts[k];
  return r;
}

MultiTrace MultiTrace::operator-(const MultiTrace& o) const { return *this + o * -1.0; }

MultiTrace MultiTrace::operator*(double a) const {
  MultiTrace r = *this;
  for (auto& p : r.parts) p *= a;
  return r;
}

double multitrace_norm(const MultiTrace& phi, double s, const std::vector<const SpectralBasis*>& bases) {
  if (bases.size() != phi.size()) throw DomainError("multitrace_norm: need one basis per part");
  double sum = 0.0;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    double v = sobolev_norm(phi.parts[k], s, *bases[k]);
    sum += v * v;
  }
  return std::sqrt(sum);
}

// ---------------------------------------------------------------- two domains

namespace {

void require_two(const MultiTrace& phi) {
  if (phi.size() != 2) throw DomainError("two-domain exchange needs exactly two parts");
  if (phi.parts[0].size() != phi.parts[1].size())
    throw GeometryError("two-domain exchange: parts live on different meshes");
}

}  // namespace

MultiTrace apply_pi0(const MultiTrace& phi) {
  require_two(phi);
  MultiTrace r = phi;
  r.parts[0] = -phi.parts[1];
  r.parts[1] = -phi.parts[0];
  return r;
}

BoundaryOperator assemble_A(const BoundaryMesh& mesh, double gamma, const AssemblyOptions& opt) {
  if (!(gamma > 0)) throw DomainError("assemble_A: gamma must be positive");
  BoundaryOperator a = assemble_adjoint_double_layer(mesh, Side::exterior, gamma, opt);
  a.matrix *= 2.0;
  a.name = "A";
  return a;
}

MultiTrace apply_pi_gamma(const MultiTrace& phi, const BoundaryOperator& A) {
  require_two(phi);
  if (!(A.gamma > 0)) throw DomainError("apply_pi_gamma: gamma must be positive");
  if (A.matrix.rows() != phi.parts[0].size()) throw GeometryError("apply_pi_gamma: A does not match the traces");
  Vec a = A.matrix * (phi.parts[0] + phi.parts[1]);
  MultiTrace r = phi;
  r.parts[0] = -phi.parts[1] - a;
  r.parts[1] = -phi.parts[0] + a;
  return r;
}

Mat pi0_matrix(Eigen::Index n) {
  Mat P = Mat::Zero(2 * n, 2 * n);
  P.topRightCorner(n, n) = -Mat::Identity(n, n);
  P.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
  return P;
}

Mat pi_gamma_matrix(const BoundaryOperator& A) {
  const Eigen::Index n = A.matrix.rows();
  Mat P = pi0_matrix(n);
  P.topLeftCorner(n, n) -= A.matrix;
  P.topRightCorner(n, n) -= A.matrix;
  P.bottomLeftCorner(n, n) += A.matrix;
  P.bottomRightCorner(n, n) += A.matrix;
  return P;
}

double exchange_defect(const MultiTrace& phi, double s, const BoundaryOperator& A,
                       const std::vector<const SpectralBasis*>& bases, const BoundaryMesh* mesh, double M) {
  require_two(phi);
  if (!(s >= -0.5 && s <= 0.0)) throw DomainError("exchange_defect: s must lie in [-1/2, 0]");
  if (mesh && M > 0) {
    for (const Vec& p : phi.parts) {
      if (p.squaredNorm() == 0.0) continue;
      double r = gradient_ratio(*mesh, p);
      if (!(r <= M)) throw MembershipError("exchange_defect: trace outside X_gamma(M)", r, M);
    }
  }
  Vec a = A.matrix * (phi.parts[0] + phi.parts[1]);
  MultiTrace d = phi;
  d.parts[0] = -a;
  d.parts[1] = a;
  double den = multitrace_norm(phi, s, bases);
  if (!(den > 0)) throw DomainError("exchange_defect: zero input");
  return multitrace_norm(d, s, bases) / den;
}

// ---------------------------------------------------------------- partitions

namespace {

Side side_from_string(const std::string& s) {
  if (s == "interior") return Side::interior;
  if (s == "exterior") return Side::exterior;
  throw ConfigError("side must be 'interior' or 'exterior', got '" + s + "'");
}

}  // namespace

Partition partition_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("partition must be a JSON object");
  if (!j.contains("gamma") || !j.at("gamma").is_number()) throw ConfigError("partition: missing numeric 'gamma'");
  Partition p;
  p.gamma = j.at("gamma").get<double>();
  if (!(p.gamma > 0)) throw ConfigError("partition: gamma must be positive");
  GradingPolicy g = grading_from_json(j.value("grading", Json()), p.gamma);
  if (j.contains("max_panel_length")) g.max_panel_length = j.at("max_panel_length").get<double>();
  if (!(g.max_panel_length > 0))
    throw ConfigError("partition: 'max_panel_length' is required so that shared interfaces match");
  if (!j.contains("subdomains") || !j.at("subdomains").is_array() || j.at("subdomains").size() < 2)
    throw ConfigError("partition: need at least two 'subdomains'");
  for (const auto& s : j.at("subdomains")) {
    if (!s.contains("curve")) throw ConfigError("subdomain: missing 'curve'");
    CurveSpec c = curve_from_json(s.at("curve"));
    Side side = side_from_string(s.value("side", std::string("interior")));
    p.parts.push_back({build_mesh(c, kPanelOrder, g), side});
  }
  if (j.contains("interfaces")) {
    for (const auto& e : j.at("interfaces")) {
      if (!e.is_array() || e.size() != 2) throw ConfigError("interfaces: entries are [j, k] pairs");
      int a = e[0].get<int>(), b = e[1].get<int>();
      if (a < 0 || b < 0 || a >= int(p.parts.size()) || b >= int(p.parts.size()) || a == b)
        throw ConfigError("interfaces: bad subdomain index");
      p.interfaces.emplace_back(a, b);
    }
  }
  return p;
}

Partition disc_partition(double R, double gamma, double max_panel_length) {
  GradingPolicy g = GradingPolicy::uniform(max_panel_length);
  BoundaryMesh m = build_mesh(CurveSpec::circle(R), kPanelOrder, g);
  Partition p;
  p.gamma = gamma;
  p.parts.push_back({m, Side::exterior});
  p.parts.push_back({m, Side::interior});
  return p;
}

Partition crosspoint_partition(double gamma, double max_panel_length, int corner_levels) {
  GradingPolicy g = GradingPolicy::dyadic(gamma, max_panel_length);
  g.corner_levels = corner_levels;
  auto mesh = [&](std::vector<Point> v) { return build_mesh(CurveSpec::polygon(v), kPanelOrder, g); };
  Partition p;
  p.gamma = gamma;
  p.parts.push_back(
      {mesh({Point(-1, 0), Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1), Point(-1, 1)}), Side::exterior});
  p.parts.push_back({mesh({Point(-1, 0), Point(0, 0), Point(0, 1), Point(-1, 1)}), Side::interior});
  p.parts.push_back({mesh({Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)}), Side::interior});
  return p;
}

std::vector<std::vector<NodeMatch>> match_interfaces(const Partition& p, double tol) {
  const std::size_t J = p.parts.size();
  std::vector<std::vector<NodeMatch>> out(J);
  for (std::size_t j = 0; j < J; ++j) {
    const auto& xj = p.parts[j].mesh.nodes();
    out[j].assign(xj.size(), NodeMatch{});
    for (std::size_t i = 0; i < xj.size(); ++i) {
      const double t = tol * std::max(1.0, xj[i].norm());
      for (std::size_t k = 0; k < J && out[j][i].part < 0; ++k) {
        if (k == j) continue;
        const auto& xk = p.parts[k].mesh.nodes();
        for (std::size_t m = 0; m < xk.size(); ++m) {
          if ((xk[m] - xj[i]).lpNorm<Eigen::Infinity>() <= t) {
            out[j][i] = {int(k), int(m)};
            break;
          }
        }
      }
      if (out[j][i].part < 0)
        throw GeometryError("match_interfaces: node " + std::to_string(i) + " of subdomain " + std::to_string(j) +
                            " has no partner; interface meshes must coincide");
    }
  }
  if (!p.interfaces.empty()) {
    for (std::size_t j = 0; j < J; ++j)
      for (const NodeMatch& m : out[j]) {
        bool ok = std::any_of(p.interfaces.begin(), p.interfaces.end(), [&](const auto& e) {
          return (e.first == int(j) && e.second == m.part) || (e.second == int(j) && e.first == m.part);
        });
        if (!ok)
          throw ConfigError("match_interfaces: subdomains " + std::to_string(j) + " and " + std::to_string(m.part) +
                            " touch but are not a declared interface");
      }
  }
  return out;
}

ExchangeOperator::ExchangeOperator(const Partition& p, const AssemblyOptions& opt) : gamma_(p.gamma) {
  if (!(gamma_ > 0)) throw DomainError("ExchangeOperator: gamma must be positive");
  const std::size_t J = p.parts.size();
  match_ = match_interfaces(p);
  Eigen::Index off = 0;
  for (const auto& d : p.parts) {
    sizes_.push_back(Eigen::Index(d.mesh.size()));
    offsets_.push_back(off);
    off += Eigen::Index(d.mesh.size());
  }
  blocks_.assign(J, std::vector<Mat>(J));
  // Principal-value adjoint double layer of each mesh with its own normal,
  // reused for coincident meshes so the two-domain form is reproduced exactly.
  std::vector<Mat> self(J);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t j = 0; j < J; ++j)
    self[j] = assemble_adjoint_double_layer(p.parts[j].mesh, p.parts[j].side, gamma_, opt).matrix;
  for (std::size_t j = 0; j < J; ++j) {
    const Subdomain& dj = p.parts[j];
    for (std::size_t k = 0; k < J; ++k) {
      const Subdomain& dk = p.parts[k];
      if (k == j) {
        blocks_[j][k] = self[j];
      } else if (dj.mesh.hash() == dk.mesh.hash()) {
        blocks_[j][k] = self[j];
      } else {
        std::vector<int> src(dj.mesh.size(), -1);
        for (std::size_t i = 0; i < src.size(); ++i)
          if (match_[j][i].part == int(k)) src[i] = match_[j][i].node;
        blocks_[j][k] = assemble_cross(dj.mesh, dj.side, dk.mesh, gamma_, src, opt).Kp;
      }
    }
  }
}

Vec ExchangeOperator::flatten(const MultiTrace& phi) const {
  if (phi.size() != sizes_.size()) throw DomainError("ExchangeOperator: part count mismatch");
  Vec v(offsets_.back() + sizes_.back());
  for (std::size_t j = 0; j < sizes_.size(); ++j) {
    if (phi.parts[j].size() != sizes_[j]) throw GeometryError("ExchangeOperator: trace size mismatch");
    v.segment(offsets_[j], sizes_[j]) = phi.parts[j];
  }
  return v;
}

MultiTrace ExchangeOperator::split(const Vec& v) const {
  MultiTrace r;
  r.gamma = gamma_;
  for (std::size_t j = 0; j < sizes_.size(); ++j) r.parts.push_back(v.segment(offsets_[j], sizes_[j]));
  return r;
}

MultiTrace ExchangeOperator::apply(const MultiTrace& phi, Kind kind) const {
  if (phi.size() != sizes_.size()) throw DomainError("ExchangeOperator: part count mismatch");
  const std::size_t J = sizes_.size();
  MultiTrace r;
  r.gamma = gamma_;
  for (std::size_t j = 0; j < J; ++j) {
    if (phi.parts[j].size() != sizes_[j]) throw GeometryError("ExchangeOperator: trace size mismatch");
    Vec out(sizes_[j]);
    for (Eigen::Index i = 0; i < sizes_[j]; ++i) {
      const NodeMatch& m = match_[j][std::size_t(i)];
      out[i] = -phi.parts[std::size_t(m.part)][m.node];
    }
    if (kind == Kind::nonlocal)
      for (std::size_t k = 0; k < J; ++k) out.noalias() -= 2.0 * (blocks_[j][k] * phi.parts[k]);
    r.parts.push_back(std::move(out));
  }
  return r;
}

CVec ExchangeOperator::apply(const CVec& phi, Kind kind) const {
  Vec re = flatten(apply(split(phi.real()), kind));
  Vec im = flatten(apply(split(phi.imag()), kind));
  CVec out(re.size());
  out.real() = re;
  out.imag() = im;
  return out;
}

Mat ExchangeOperator::dense(Kind kind) const {
  const Eigen::Index N = offsets_.back() + sizes_.back();
  Mat P = Mat::Zero(N, N);
  for (std::size_t j = 0; j < sizes_.size(); ++j) {
    for (Eigen::Index i = 0; i < sizes_[j]; ++i) {
      const NodeMatch& m = match_[j][std::size_t(i)];
      P(offsets_[j] + i, offsets_[std::size_t(m.part)] + m.node) = -1.0;
    }
    if (kind == Kind::nonlocal)
      for (std::size_t k = 0; k < sizes_.size(); ++k)
        P.block(offsets_[j], offsets_[k], sizes_[j], sizes_[k]) -= 2.0 * blocks_[j][k];
  }
  return P;
}

// ---------------------------------------------------------------- scattering

namespace {

CVec robin(const Vec& tau_D, const Vec& tau_N, const ScatterContext& ctx, ScatterKind kind, double sign) {
  if (tau_D.size() != tau_N.size()) throw DomainError("scattering: trace sizes differ");
  if (!(ctx.omega > 0)) throw DomainError("scattering: omega must be positive");
  Vec x;
  if (kind == ScatterKind::nonlocal) {
    if (!ctx.dtn) throw DomainError("scattering: nonlocal kind needs a DtN operator");
    x = ctx.dtn->apply(tau_D);
  } else {
    x = tau_D;
  }
  const double g = ctx.dtn ? ctx.dtn->gamma : ctx.gamma;
  if (!(g > 0)) throw DomainError("scattering: gamma must be positive");
  CVec out(tau_D.size());
  out.real() = ctx.mu * tau_N;
  out.imag() = sign * ctx.omega / g * x;
  return out;
}

}  // namespace

CVec apply_scattering(const Vec& tau_D, const Vec& tau_N, const ScatterContext& ctx, ScatterKind kind) {
  return robin(tau_D, tau_N, ctx, kind, 1.0);
}

CVec ingoing_trace(const Vec& tau_D, const Vec& tau_N, const ScatterContext& ctx, ScatterKind kind) {
  return robin(tau_D, tau_N, ctx, kind, -1.0);
}

double complex_sobolev_norm(const CVec& h, double s, const SpectralBasis& basis) {
  double a = sobolev_norm(h.real(), s, basis), b = sobolev_norm(h.imag(), s, basis);
  return std::sqrt(a * a + b * b);
}

// ---------------------------------------------------------------- counterexample

Vec corner_density(const BoundaryMesh& square, double width, DensityProfile profile) {
  if (!(width > 0)) throw DomainError("corner_density: width must be positive");
  Vec f = Vec::Zero(Eigen::Index(square.size()));
  for (std::size_t i = 0; i < square.size(); ++i) {
    const Point& x = square.nodes()[i];
    if (square.piece_of(i) != 0 || x.x() >= width) continue;
    if (profile == DensityProfile::indicator) {
      f[Eigen::Index(i)] = 1.0;
    } else {
      double s = std::sin(kPi * x.x() / width);
      f[Eigen::Index(i)] = s * s;
    }
  }
  return f;
}

RateReport counterexample_study(const std::vector<double>& gammas, const CounterexampleOptions& opt) {
  if (gammas.size() < 3) throw DomainError("counterexample_study: need at least three gammas");
  if (!(opt.c_star > 0)) throw DomainError("counterexample_study: c_star must be positive");
  RateReport rep;
  rep.experiment = "counterexample";
  rep.metadata["profile"] = opt.profile == DensityProfile::indicator ? "indicator" : "smooth_bump";
  rep.metadata["geometry"] = "unit_square";
  const double h = opt.max_panel_length;
  for (double g : gammas) {
    if (!(g > 0)) throw DomainError("counterexample_study: gammas must be positive");
    const double width = opt.fixed_width > 0 ? opt.fixed_width : opt.c_star * g;
    GradingPolicy gp = GradingPolicy::dyadic(g, h);
    if (opt.profile == DensityProfile::indicator) {
      // Put a panel break exactly at the end of the indicator's support.
      gp.cutoff = width;
      int levels = 0;
      while (std::ldexp(width, -levels) > h / 8.0) ++levels;
      gp.corner_levels = levels;
    }
    BoundaryMesh mesh = build_mesh(CurveSpec::unit_square(), kPanelOrder, gp);
    DtnContext ctx(mesh, g);
    SpectralBasis b0 = steklov_eigs(ctx.dtn(Side::exterior), mesh.weights());
    SpectralBasis b1 = steklov_eigs(ctx.dtn(Side::interior), mesh.weights());
    BoundaryOperator A = ctx.A();
    Vec f = corner_density(mesh, width, opt.profile);
    MultiTrace phi{{f, Vec::Zero(f.size())}, g};
    std::vector<const SpectralBasis*> bases{&b0, &b1};
    rep.gammas.push_back(g);
    rep.defects.push_back(exchange_defect(phi, opt.s, A, bases));
    rep.columns["ratio_L2"].push_back(exchange_defect(phi, 0.0, A, bases));
    rep.columns["nodes"].push_back(double(mesh.size()));
    rep.columns["width"].push_back(width);
    rep.columns["in_x_ratio"].push_back(gradient_ratio(mesh, f));
  }
  rep.fit(opt.drop);
  if (opt.profile == DensityProfile::indicator) {
    rep.assertion = "|slope| <= 0.15";
    rep.pass = std::abs(rep.fitted_slope) <= 0.15;
  } else {
    rep.assertion = "slope >= 0.25";
    rep.pass = rep.fitted_slope >= 0.25;
  }
  rep.scalars["s"] = opt.s;
  rep.scalars["c_star"] = opt.c_star;
  return rep;
}

// ---------------------------------------------------------------- fixed point

double point_source_field(const std::vector<PointSource>& src, double gamma, const Point& x) {
  double u = 0.0;
  for (const auto& s : src) u += s.q * fundamental_solution(x - s.x, gamma);
  return u;
}

Point point_source_gradient(const std::vector<PointSource>& src, double gamma, const Point& x) {
  Point g = Point::Zero();
  for (const auto& s : src) {
    Point d = x - s.x;
    double r = d.norm();
    g += -s.q * bessel_k1(r / gamma) / (2.0 * kPi * gamma) * d / r;
  }
  return g;
}

bool contains(const Subdomain& d, const Point& x) {
  // Winding number of the node polygon.
  const auto& v = d.mesh.nodes();
  double wind = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    Point a = v[i] - x, b = v[(i + 1) % v.size()] - x;
    wind += std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
  }
  const bool inside = std::abs(wind) > kPi;
  return d.side == Side::interior ? inside : !inside;
}

FixedPointSolver::FixedPointSolver(const Partition& p, const AssemblyOptions& opt) : part_(p) {
  pi_ = std::make_unique<ExchangeOperator>(part_, opt);
  const std::size_t J = part_.parts.size();
  dtn_.resize(J);
  dtn_lu_.resize(J);
  basis_.resize(J);
  for (std::size_t j = 0; j < J; ++j) {
    const Subdomain& d = part_.parts[j];
    DtnContext ctx(d.mesh, part_.gamma, opt);
    dtn_[j] = ctx.dtn(d.side);
    dtn_lu_[j].compute(dtn_[j].matrix);
    basis_[j] = steklov_eigs(dtn_[j], d.mesh.weights());
  }
}

Vec FixedPointSolver::exact_dirichlet(std::size_t j, const std::vector<PointSource>& sources) const {
  const auto& nodes = part_.parts[j].mesh.nodes();
  Vec u(Eigen::Index(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i) u[Eigen::Index(i)] = point_source_field(sources, part_.gamma, nodes[i]);
  return u;
}

FixedPointResult FixedPointSolver::solve(const std::vector<PointSource>& sources, const FixedPointOptions& opt) const {
  if (!(opt.relax > 0 && opt.relax <= 1)) throw DomainError("fixed_point_solve: relax must lie in (0, 1]");
  if (!(opt.omega > 0)) throw DomainError("fixed_point_solve: omega must be positive");
  const std::size_t J = part_.parts.size();
  const double g = part_.gamma;
  const cdouble I(0.0, 1.0);
  const cdouble minus = opt.mu - I * opt.omega, plus = opt.mu + I * opt.omega;
  const cdouble rho = plus / minus;

  // Particular solutions: the sources lying in each subdomain.
  std::vector<Vec> uD(J), uN(J);
  std::vector<CVec> tminus(J), gvec(J);
  for (std::size_t j = 0; j < J; ++j) {
    const Subdomain& d = part_.parts[j];
    std::vector<PointSource> own;
    for (const auto& s : sources)
      if (contains(d, s.x)) own.push_back(s);
    const auto& nodes = d.mesh.nodes();
    const double sgn = side_sign(d.side);
    uD[j].resize(Eigen::Index(nodes.size()));
    uN[j].resize(Eigen::Index(nodes.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      uD[j][Eigen::Index(i)] = point_source_field(own, g, nodes[i]);
      uN[j][Eigen::Index(i)] = sgn * point_source_gradient(own, g, nodes[i]).dot(d.mesh.normals()[i]);
    }
    Vec tu = dtn_[j].apply(uD[j]) / g;
    tminus[j] = opt.mu * uN[j].cast<cdouble>() - I * opt.omega * tu.cast<cdouble>();
    CVec tplus = opt.mu * uN[j].cast<cdouble>() + I * opt.omega * tu.cast<cdouble>();
    gvec[j] = tplus - rho * tminus[j];
  }
  auto flat = [&](const std::vector<CVec>& v) {
    Eigen::Index n = 0;
    for (const auto& x : v) n += x.size();
    CVec out(n);
    n = 0;
    for (const auto& x : v) {
      out.segment(n, x.size()) = x;
      n += x.size();
    }
    return out;
  };
  auto parts = [&](const CVec& v) {
    std::vector<CVec> out(J);
    Eigen::Index n = 0;
    for (std::size_t j = 0; j < J; ++j) {
      out[j] = v.segment(n, pi_->sizes()[j]);
      n += pi_->sizes()[j];
    }
    return out;
  };
  auto norm = [&](const CVec& v) {
    auto ps = parts(v);
    double s = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      double a = complex_sobolev_norm(ps[j], -0.5, basis_[j]);
      s += a * a;
    }
    return std::sqrt(s);
  };

  const CVec G = flat(gvec);
  const CVec F = pi_->apply(G);
  CVec p = CVec::Zero(G.size());
  FixedPointResult res;
  const double fnorm = norm(F);
  if (fnorm == 0.0) {
    res.converged = true;
  } else {
    for (int it = 0; it < opt.max_iter; ++it) {
      CVec next = (1.0 - opt.relax) * p + opt.relax * (pi_->apply(CVec(rho * p + G)));
      double r = norm(next - p) / std::max(norm(next), 1e-300);
      p = std::move(next);
      res.history.push_back(r);
      res.iterations = it + 1;
      if (r <= opt.tol) {
        res.converged = true;
        break;
      }
    }
  }

  // Dirichlet reconstruction d = u_f + gamma T^-1 (p - tau_-(u_f)) / (mu - i omega).
  res.p = parts(p);
  double dmax = 0.0, imax = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    CVec rhs = (res.p[j] - tminus[j]) / minus;
    Vec re = dtn_lu_[j].solve(Vec(rhs.real())), im = dtn_lu_[j].solve(Vec(rhs.imag()));
    Vec d = uD[j] + g * re;
    res.dirichlet.push_back(d);
    dmax = std::max(dmax, d.cwiseAbs().maxCoeff());
    imax = std::max(imax, (g * im).cwiseAbs().maxCoeff());
  }
  res.max_imag = dmax > 0 ? imax / dmax : 0.0;
  CVec q = rho * p + G;
  double qn = norm(q);
  res.isometry_defect = qn > 0 ? std::abs(norm(pi_->apply(q)) - qn) / qn : 0.0;
  return res;
}

double FixedPointSolver::trace_error(const FixedPointResult& r, const std::vector<PointSource>& sources) const {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < part_.parts.size(); ++j) {
    Vec u = exact_dirichlet(j, sources);
    double e = sobolev_norm(r.dirichlet[j] - u, 0.5, basis_[j]);
    double n = sobolev_norm(u, 0.5, basis_[j]);
    num += e * e;
    den += n * n;
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

void write_history_csv(const FixedPointResult& r, std::ostream& out) {
  out << "iter,residual\n";
  out.precision(17);
  for (std::size_t k = 0; k < r.history.size(); ++k) out << (k + 1) << ',' << r.history[k] << '\n';
}

}  // namespace nlex
