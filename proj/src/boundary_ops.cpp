#include "nlex/boundary_ops.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "nlex/bessel.hpp"
#include "nlex/quadrature.hpp"
#include "nlex/simd.hpp"

namespace nlex {

namespace {

constexpr double kInv2Pi = 1.0 / (2.0 * kPi);

struct Target {
  Point x;
  Point n;
  int piece = -1;  // set only when the target is a node of the source mesh
  int panel = -1;
  double t = 0.0;
};

struct PanelBox {
  Point center;
  double radius;
};

std::vector<PanelBox> panel_boxes(const BoundaryMesh& m) {
  std::vector<PanelBox> out;
  out.reserve(m.panels().size());
  for (const Panel& p : m.panels()) {
    const Arc& arc = m.curve().pieces()[p.piece];
    Point c = arc.point(0.5 * (p.t0 + p.t1));
    double r = 0.0;
    for (int k = 0; k <= 8; ++k) r = std::max(r, (arc.point(p.t0 + (p.t1 - p.t0) * k / 8.0) - c).norm());
    out.push_back({c, 1.1 * r + 1e-15});
  }
  return out;
}

struct Want {
  bool V = false, Kp = false, K = false;
};

// Scratch buffers reused across rows.
struct Workspace {
  std::vector<int> far_idx;
  std::vector<double> r, k0, k1, dn_x, dn_y;
  std::vector<double> sub_u, sub_w, sub_r, sub_k0, sub_k1, sub_dnx, sub_dny;
  std::vector<std::pair<double, double>> stack, segs;
};

// x - y(t) for a source point on `arc`; uses the chord when x is a node of
// the same piece so that near-tangential differences keep full precision.
inline Point diff_to(const Target& tg, int piece, const Arc& arc, double t) {
  if (tg.piece == piece) return -arc.chord(tg.t, t);
  return tg.x - arc.point(t);
}

double closest_param(const Target& tg, int piece, const Arc& arc, double a, double b) {
  int best = 0;
  double bd = kInf;
  for (int k = 0; k <= 16; ++k) {
    double d = diff_to(tg, piece, arc, a + (b - a) * k / 16.0).squaredNorm();
    if (d < bd) bd = d, best = k;
  }
  double t = a + (b - a) * best / 16.0;
  for (int it = 0; it < 12; ++it) {
    Point d = -diff_to(tg, piece, arc, t);  // y - x
    Point y1 = arc.deriv(t), y2 = arc.deriv2(t);
    double g = d.dot(y1), gp = y1.squaredNorm() + d.dot(y2);
    if (!(gp > 0)) break;
    double step = g / gp;
    t = std::clamp(t - step, a, b);
    if (std::abs(step) < 1e-15 * (b - a)) break;
  }
  return t;
}

// Adaptive Gauss-Legendre segments of [a, b] resolving the target.
void near_segments(const Target& tg, int piece, const Arc& arc, double a, double b, double gamma,
                   Workspace& ws) {
  ws.segs.clear();
  ws.stack.clear();
  double split = -1.0;
  if (tg.piece == piece && tg.t > a && tg.t < b) {
    split = tg.t;
  } else {
    double ts = closest_param(tg, piece, arc, a, b);
    if (ts > a + 1e-14 * (b - a) && ts < b - 1e-14 * (b - a)) split = ts;
  }
  if (split > 0) {
    ws.stack.push_back({a, split});
    ws.stack.push_back({split, b});
  } else {
    ws.stack.push_back({a, b});
  }
  // Bounded below by the parameter spacing so tiny panels near t = 1 terminate.
  const double floor_len = std::max(1e-13 * (b - a), 64.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b)));
  while (!ws.stack.empty()) {
    auto [c, d] = ws.stack.back();
    ws.stack.pop_back();
    double L = arc.chord(c, d).norm();
    double D = kInf;
    for (int k = 0; k <= 4; ++k) D = std::min(D, diff_to(tg, piece, arc, c + (d - c) * k / 4.0).norm());
    if ((D >= L && L <= 4.0 * gamma) || d - c <= floor_len) {
      ws.segs.push_back({c, d});
    } else {
      double m = 0.5 * (c + d);
      ws.stack.push_back({c, m});
      ws.stack.push_back({m, d});
    }
  }
}

void assemble_row(const Target& tg, const BoundaryMesh& src, const std::vector<PanelBox>& boxes,
                  double gamma, const AssemblyOptions& opt, Want want, Workspace& ws, double* rowV,
                  double* rowKp, double* rowK) {
  const PanelRule& rule = panel_rule();
  const double cut = opt.truncation > 0 ? opt.truncation * gamma : kInf;
  const double inv_g = 1.0 / gamma;
  const auto& pieces = src.curve().pieces();
  ws.far_idx.clear();

  for (std::size_t p = 0; p < src.panels().size(); ++p) {
    const Panel& pan = src.panels()[p];
    const PanelBox& box = boxes[p];
    double d_lower = (tg.x - box.center).norm() - box.radius;
    if (d_lower > cut) continue;
    const bool own = tg.piece == pan.piece && tg.panel == int(p);
    const double near_dist = std::max(opt.near_factor * gamma, pan.length);
    bool near = own;
    if (!near && d_lower < near_dist) {
      double D = kInf;
      const Arc& arc = pieces[pan.piece];
      for (int k = 0; k <= 4; ++k)
        D = std::min(D, diff_to(tg, pan.piece, arc, pan.t0 + (pan.t1 - pan.t0) * k / 4.0).norm());
      near = D < pan.length || (pan.length > 4.0 * gamma && D < opt.near_factor * gamma);
    }
    if (!near) {
      for (int k = 0; k < kPanelOrder; ++k) ws.far_idx.push_back(pan.first + k);
      continue;
    }

    // Product integration against the Lagrange basis of this panel.
    const Arc& arc = pieces[pan.piece];
    near_segments(tg, pan.piece, arc, pan.t0, pan.t1, gamma, ws);
    const std::size_t m = ws.segs.size() * kPanelOrder;
    ws.sub_u.resize(m);
    ws.sub_w.resize(m);
    ws.sub_r.resize(m);
    ws.sub_dnx.resize(m);
    ws.sub_dny.resize(m);
    ws.sub_k0.resize(m);
    ws.sub_k1.resize(m);
    const double pm = 0.5 * (pan.t0 + pan.t1), ph = 0.5 * (pan.t1 - pan.t0);
    std::size_t q = 0;
    for (auto [c, d] : ws.segs) {
      double mid = 0.5 * (c + d), half = 0.5 * (d - c);
      for (int k = 0; k < kPanelOrder; ++k, ++q) {
        double t = mid + half * rule.x[k];
        Point y1 = arc.deriv(t);
        double sp = y1.norm();
        Point dv = diff_to(tg, pan.piece, arc, t);
        double r = dv.norm();
        ws.sub_u[q] = (t - pm) / ph;
        ws.sub_w[q] = half * rule.w[k] * sp;
        ws.sub_r[q] = r > 0 ? r * inv_g : 1.0;
        if (!(r > 0) || r > cut) ws.sub_w[q] = 0.0;
        ws.sub_dnx[q] = r > 0 ? dv.dot(tg.n) / r : 0.0;
        ws.sub_dny[q] = r > 0 ? (dv.x() * y1.y() - dv.y() * y1.x()) / (r * sp) : 0.0;
      }
    }
    simd::bessel_k01(ws.sub_r.data(), m, ws.sub_k0.data(), ws.sub_k1.data(), false);
    // Reuse the buffers in place as the three integrand arrays.
    double* fV = ws.sub_k0.data();
    double* fKp = ws.sub_dnx.data();
    double* fK = ws.sub_dny.data();
    for (std::size_t i = 0; i < m; ++i) {
      double w = ws.sub_w[i], k1 = ws.sub_k1[i] * kInv2Pi * inv_g * w;
      fKp[i] = -k1 * fKp[i];
      fK[i] = k1 * fK[i];
      fV[i] = fV[i] * kInv2Pi * w;
    }
    double wv[kPanelOrder] = {}, wkp[kPanelOrder] = {}, wk[kPanelOrder] = {};
    simd::LagrangeSums sums;
    if (want.V) sums.f[0] = fV, sums.w[0] = wv;
    if (want.Kp) sums.f[1] = fKp, sums.w[1] = wkp;
    if (want.K) sums.f[2] = fK, sums.w[2] = wk;
    simd::lagrange_accumulate(ws.sub_u.data(), m, sums);
    for (int k = 0; k < kPanelOrder; ++k) {
      if (want.V) rowV[pan.first + k] += wv[k];
      if (want.Kp) rowKp[pan.first + k] += wkp[k];
      if (want.K) rowK[pan.first + k] += wk[k];
    }
  }

  // Plain Gauss-Legendre on well-separated panels.
  const std::size_t nf = ws.far_idx.size();
  ws.r.resize(nf);
  ws.k0.resize(nf);
  ws.k1.resize(nf);
  ws.dn_x.resize(nf);
  ws.dn_y.resize(nf);
  const auto& nodes = src.nodes();
  const auto& normals = src.normals();
  const auto& params = src.params();
  for (std::size_t q = 0; q < nf; ++q) {
    int j = ws.far_idx[q];
    int pc = src.piece_of(j);
    Point dv = tg.piece == pc ? Point(-pieces[pc].chord(tg.t, params[j])) : Point(tg.x - nodes[j]);
    double r = dv.norm();
    ws.r[q] = r * inv_g;
    ws.dn_x[q] = dv.dot(tg.n) / r;
    ws.dn_y[q] = dv.dot(normals[j]) / r;
  }
  simd::bessel_k01(ws.r.data(), nf, ws.k0.data(), ws.k1.data(), false);
  const Vec& w = src.weights();
  for (std::size_t q = 0; q < nf; ++q) {
    if (ws.r[q] * gamma > cut) continue;
    int j = ws.far_idx[q];
    double wj = w[j];
    if (want.V) rowV[j] += ws.k0[q] * kInv2Pi * wj;
    double k1 = ws.k1[q] * kInv2Pi * inv_g * wj;
    if (want.Kp) rowKp[j] += -k1 * ws.dn_x[q];
    if (want.K) rowK[j] += k1 * ws.dn_y[q];
  }
}

void check_gamma(double gamma) {
  if (!(gamma > 0)) throw DomainError("layer assembly: gamma must be positive");
}

// Rows for the given targets; matrices are targets x source nodes.
void assemble_rows(const std::vector<Target>& targets, const BoundaryMesh& src, double gamma,
                   const AssemblyOptions& opt, Want want, Mat* V, Mat* Kp, Mat* K) {
  check_gamma(gamma);
  const std::size_t nt = targets.size(), ns = src.size();
  if (want.V) V->setZero(nt, ns);
  if (want.Kp) Kp->setZero(nt, ns);
  if (want.K) K->setZero(nt, ns);
  const auto boxes = panel_boxes(src);
#pragma omp parallel
  {
    Workspace ws;
    std::vector<double> bv(want.V ? ns : 0), bkp(want.Kp ? ns : 0), bk(want.K ? ns : 0);
#pragma omp for schedule(dynamic, 8)
    for (long i = 0; i < long(nt); ++i) {
      std::fill(bv.begin(), bv.end(), 0.0);
      std::fill(bkp.begin(), bkp.end(), 0.0);
      std::fill(bk.begin(), bk.end(), 0.0);
      assemble_row(targets[i], src, boxes, gamma, opt, want, ws, bv.data(), bkp.data(), bk.data());
      if (want.V) V->row(i) = Eigen::Map<const Eigen::RowVectorXd>(bv.data(), ns);
      if (want.Kp) Kp->row(i) = Eigen::Map<const Eigen::RowVectorXd>(bkp.data(), ns);
      if (want.K) K->row(i) = Eigen::Map<const Eigen::RowVectorXd>(bk.data(), ns);
    }
  }
}

std::vector<Target> self_targets(const BoundaryMesh& m) {
  std::vector<Target> t(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    t[i].x = m.nodes()[i];
    t[i].n = m.normals()[i];
    t[i].panel = m.panel_index()[i];
    t[i].piece = m.piece_of(i);
    t[i].t = m.params()[i];
  }
  return t;
}

BoundaryOperator wrap(Mat m, const BoundaryMesh& mesh, double gamma, const char* name,
                      Convention c = Convention::density_to_values) {
  BoundaryOperator op;
  op.matrix = std::move(m);
  op.convention = c;
  op.gamma = gamma;
  op.row_mesh = op.col_mesh = mesh.hash();
  op.name = name;
  return op;
}

}  // namespace

LayerOperators assemble_layers(const BoundaryMesh& mesh, double gamma, const AssemblyOptions& opt) {
  Mat V, Kp, K;
  assemble_rows(self_targets(mesh), mesh, gamma, opt, {true, true, true}, &V, &Kp, &K);
  LayerOperators out;
  out.V = wrap(std::move(V), mesh, gamma, "single_layer");
  out.Kp = wrap(std::move(Kp), mesh, gamma, "adjoint_double_layer");
  out.K = wrap(std::move(K), mesh, gamma, "double_layer");
  return out;
}

BoundaryOperator assemble_single_layer(const BoundaryMesh& mesh, double gamma, const AssemblyOptions& opt) {
  Mat V;
  assemble_rows(self_targets(mesh), mesh, gamma, opt, {true, false, false}, &V, nullptr, nullptr);
  return wrap(std::move(V), mesh, gamma, "single_layer");
}

BoundaryOperator assemble_adjoint_double_layer(const BoundaryMesh& mesh, Side normal_of, double gamma,
                                               const AssemblyOptions& opt) {
  Mat Kp;
  assemble_rows(self_targets(mesh), mesh, gamma, opt, {false, true, false}, nullptr, &Kp, nullptr);
  if (normal_of == Side::exterior) Kp = -Kp;
  return wrap(std::move(Kp), mesh, gamma, "adjoint_double_layer");
}

BoundaryOperator assemble_double_layer(const BoundaryMesh& mesh, Side normal_of, double gamma,
                                       const AssemblyOptions& opt) {
  Mat K;
  assemble_rows(self_targets(mesh), mesh, gamma, opt, {false, false, true}, nullptr, nullptr, &K);
  if (normal_of == Side::exterior) K = -K;
  return wrap(std::move(K), mesh, gamma, "double_layer");
}

BoundaryOperator assemble_mass(const BoundaryMesh& mesh) {
  BoundaryOperator op;
  op.matrix = mesh.weights().asDiagonal();
  op.convention = Convention::values_to_values;
  op.row_mesh = op.col_mesh = mesh.hash();
  op.name = "mass";
  return op;
}

CrossLayer assemble_cross(const BoundaryMesh& target, Side target_side, const BoundaryMesh& source,
                          double gamma, const AssemblyOptions& opt) {
  return assemble_cross(target, target_side, source, gamma, std::vector<int>(target.size(), -1), opt);
}

CrossLayer assemble_cross(const BoundaryMesh& target, Side target_side, const BoundaryMesh& source,
                          double gamma, const std::vector<int>& source_node, const AssemblyOptions& opt) {
  if (source_node.size() != target.size()) throw DomainError("assemble_cross: match list size mismatch");
  std::vector<Target> tg(target.size());
  const double s = side_sign(target_side);
  for (std::size_t i = 0; i < target.size(); ++i) {
    tg[i].x = target.nodes()[i];
    tg[i].n = s * target.normals()[i];
    const int m = source_node[i];
    if (m >= 0) {
      tg[i].piece = source.piece_of(std::size_t(m));
      tg[i].panel = source.panel_index()[std::size_t(m)];
      tg[i].t = source.params()[std::size_t(m)];
    }
  }
  CrossLayer out;
  assemble_rows(tg, source, gamma, opt, {true, true, false}, &out.V, &out.Kp, nullptr);
  return out;
}

Vec single_layer_potential(const BoundaryMesh& mesh, const Vec& density, double gamma,
                           const std::vector<Point>& points) {
  std::vector<Target> tg(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    tg[i].x = points[i];
    tg[i].n = Point(1.0, 0.0);
  }
  Mat V;
  AssemblyOptions opt;
  opt.truncation = 0.0;
  assemble_rows(tg, mesh, gamma, opt, {true, false, false}, &V, nullptr, nullptr);
  return V * density;
}

void write_operator(const BoundaryOperator& op, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_operator: cannot open " + path);
  const char magic[8] = {'N', 'L', 'E', 'X', 'M', 'A', 'T', '1'};
  std::uint64_t rows = op.matrix.rows(), cols = op.matrix.cols();
  f.write(magic, 8);
  f.write(reinterpret_cast<const char*>(&rows), 8);
  f.write(reinterpret_cast<const char*>(&cols), 8);
  f.write(reinterpret_cast<const char*>(op.matrix.data()), std::streamsize(rows * cols * sizeof(double)));
  if (!f) throw std::runtime_error("write_operator: write failed for " + path);
  nlohmann::json j;
  j["name"] = op.name;
  j["rows"] = rows;
  j["cols"] = cols;
  j["gamma"] = op.gamma;
  j["convention"] = op.convention == Convention::density_to_values ? "density-to-values" : "values-to-values";
  j["row_mesh_hash"] = op.row_mesh;
  j["col_mesh_hash"] = op.col_mesh;
  j["version"] = version();
  std::ofstream s(path + ".json");
  s << j.dump(2) << '\n';
  if (!s) throw std::runtime_error("write_operator: cannot write sidecar for " + path);
}

BoundaryOperator read_operator(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_operator: cannot open " + path);
  char magic[8];
  std::uint64_t rows = 0, cols = 0;
  f.read(magic, 8);
  if (std::memcmp(magic, "NLEXMAT1", 8) != 0) throw std::runtime_error("read_operator: bad magic in " + path);
  f.read(reinterpret_cast<char*>(&rows), 8);
  f.read(reinterpret_cast<char*>(&cols), 8);
  BoundaryOperator op;
  op.matrix.resize(Eigen::Index(rows), Eigen::Index(cols));
  f.read(reinterpret_cast<char*>(op.matrix.data()), std::streamsize(rows * cols * sizeof(double)));
  if (!f) throw std::runtime_error("read_operator: truncated file " + path);
  std::ifstream s(path + ".json");
  if (s) {
    nlohmann::json j = nlohmann::json::parse(s);
    op.name = j.value("name", "");
    op.gamma = j.value("gamma", 0.0);
    op.convention = j.value("convention", "") == "values-to-values" ? Convention::values_to_values
                                                                  : Convention::density_to_values;
    op.row_mesh = j.value("row_mesh_hash", std::uint64_t(0));
    op.col_mesh = j.value("col_mesh_hash", std::uint64_t(0));
  }
  return op;
}

}  // namespace nlex
