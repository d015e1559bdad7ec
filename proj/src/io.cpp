#include "ddenf/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ddenf {

namespace {

const char* boundary_name(Boundary b) {
  return b == Boundary::Periodic ? "periodic" : "antiperiodic";
}

Boundary boundary_from(const std::string& s) {
  if (s == "periodic") return Boundary::Periodic;
  if (s == "antiperiodic") return Boundary::Antiperiodic;
  throw InputError("profile: unknown boundary '" + s + "'");
}

template <class P>
Json profile_header(const P& p) {
  Json j;
  j["T"] = p.mesh().T();
  j["L"] = p.mesh().L();
  j["M"] = p.mesh().M();
  j["n"] = p.dim();
  j["boundary"] = boundary_name(p.boundary());
  return j;
}

}  // namespace

Json profile_to_json(const RealProfile& p) {
  Json j = profile_header(p);
  j["field"] = "real";
  std::vector<double> vals;
  vals.reserve(size_t(p.dim()) * size_t(p.mesh().num_basis()));
  for (int g = 0; g < p.mesh().num_basis(); ++g)
    for (int c = 0; c < p.dim(); ++c) vals.push_back(p.values()(c, g));
  j["values"] = vals;
  return j;
}

Json profile_to_json(const ComplexProfile& p) {
  Json j = profile_header(p);
  j["field"] = "complex";
  std::vector<double> vals;
  vals.reserve(2 * size_t(p.dim()) * size_t(p.mesh().num_basis()));
  for (int g = 0; g < p.mesh().num_basis(); ++g)
    for (int c = 0; c < p.dim(); ++c) {
      vals.push_back(p.values()(c, g).real());
      vals.push_back(p.values()(c, g).imag());
    }
  j["values"] = vals;
  return j;
}

RealProfile real_profile_from_json(const Json& j) {
  if (j.at("field") != "real") throw InputError("profile: expected a real profile");
  auto mesh = std::make_shared<Mesh>(j.at("L").get<int>(), j.at("M").get<int>(),
                                     j.at("T").get<double>());
  int n = j.at("n").get<int>();
  RealProfile p(mesh, n, boundary_from(j.at("boundary").get<std::string>()));
  const auto& vals = j.at("values");
  if (int(vals.size()) != n * mesh->num_basis())
    throw InputError("profile: values length mismatch");
  size_t k = 0;
  for (int g = 0; g < mesh->num_basis(); ++g)
    for (int c = 0; c < n; ++c) p.values()(c, g) = vals[k++].get<double>();
  return p;
}

ComplexProfile complex_profile_from_json(const Json& j) {
  if (j.at("field") != "complex")
    throw InputError("profile: expected a complex profile");
  auto mesh = std::make_shared<Mesh>(j.at("L").get<int>(), j.at("M").get<int>(),
                                     j.at("T").get<double>());
  int n = j.at("n").get<int>();
  ComplexProfile p(mesh, n, boundary_from(j.at("boundary").get<std::string>()));
  const auto& vals = j.at("values");
  if (int(vals.size()) != 2 * n * mesh->num_basis())
    throw InputError("profile: values length mismatch");
  size_t k = 0;
  for (int g = 0; g < mesh->num_basis(); ++g)
    for (int c = 0; c < n; ++c) {
      double re = vals[k++].get<double>();
      double im = vals[k++].get<double>();
      p.values()(c, g) = cplx(re, im);
    }
  return p;
}

Json orbit_to_json(const PeriodicOrbit& orbit) {
  Json j;
  j["model"] = orbit.lin.model().id();
  Json params;
  const auto& names = orbit.lin.model().param_names();
  for (size_t k = 0; k < names.size(); ++k) params[names[k]] = orbit.params[long(k)];
  j["params"] = params;
  j["T"] = orbit.period();
  j["residual"] = orbit.residual_norm;
  j["profile"] = profile_to_json(orbit.profile());
  return j;
}

PeriodicOrbit orbit_from_json(const Json& j) {
  auto model = make_model(j.at("model").get<std::string>());
  for (auto& [k, v] : j.at("params").items()) model->set_param(k, v.get<double>());
  RealProfile profile = real_profile_from_json(j.at("profile"));
  PeriodicOrbit orbit;
  orbit.lin = CycleLinearization(model, std::move(profile));
  orbit.params = model->params();
  orbit.residual_norm = j.value("residual", 0.0);
  return orbit;
}

Json report_to_json(const NormalFormReport& rep) {
  Json j;
  j["kind"] = rep.kind;
  j["method"] = rep.method == NfMethod::Both
                    ? "both"
                    : (rep.method == NfMethod::Direct ? "direct" : "efficient");
  j["L"] = rep.L;
  j["M"] = rep.M;
  Json coef;
  if (rep.kind == "fold") {
    if (rep.has_direct()) coef["b_direct"] = rep.b_direct;
    if (rep.has_efficient()) coef["b_efficient"] = rep.b_efficient;
    coef["b"] = rep.b();
  } else if (rep.kind == "pd") {
    if (rep.has_direct()) {
      coef["a_direct"] = rep.a_direct;
      coef["c_direct"] = rep.c_direct;
    }
    if (rep.has_efficient()) {
      coef["a_efficient"] = rep.a_efficient;
      coef["c_efficient"] = rep.c_efficient;
    }
    coef["a"] = rep.a();
    coef["c"] = rep.c();
  } else {
    if (rep.has_direct()) {
      coef["a_direct"] = rep.a_direct;
      coef["d_direct_re"] = rep.d_direct.real();
      coef["d_direct_im"] = rep.d_direct.imag();
    }
    if (rep.has_efficient()) {
      coef["a_efficient"] = rep.a_efficient;
      coef["d_efficient_re"] = rep.d_efficient.real();
      coef["d_efficient_im"] = rep.d_efficient.imag();
    }
    coef["d_re"] = rep.d().real();
    coef["d_im"] = rep.d().imag();
    coef["a"] = rep.a();
    j["omega"] = rep.omega;
  }
  j["coefficients"] = coef;
  j["diagnostics"] = rep.diagnostics;
  return j;
}

Json events_to_json(const Codim1Branch& branch) {
  Json arr = Json::array();
  for (const auto& ev : branch.events) {
    Json e;
    e["kind"] = ev.kind;
    e["p1"] = ev.p1;
    e["p2"] = ev.p2;
    e["coef"] = std::isfinite(ev.coef) ? ev.coef : 0.0;
    e["divergence"] = ev.divergence;
    e["lo"] = ev.lo;
    e["hi"] = ev.hi;
    arr.push_back(e);
  }
  Json j;
  j["kind"] = branch.kind;
  j["param1"] = branch.param1;
  j["param2"] = branch.param2;
  j["events"] = arr;
  return j;
}

void write_cycle_branch_csv(const std::string& path, const CycleBranch& branch) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot open '" + path + "' for writing");
  f << std::setprecision(17);
  f << "# free_param=" << branch.free_param << " termination=" << branch.termination
    << "\n";
  f << "param,T,test_fold,test_pd,test_ns,ns_omega,mu1_re,mu1_im,mu2_re,mu2_im\n";
  for (const auto& pt : branch.points) {
    cplx m1 = pt.spectrum.multipliers.size() > 0 ? pt.spectrum.multipliers[0] : cplx(0);
    cplx m2 = pt.spectrum.multipliers.size() > 1 ? pt.spectrum.multipliers[1] : cplx(0);
    f << pt.param << ',' << pt.orbit.period() << ',' << pt.tests.fold << ','
      << pt.tests.pd << ',' << pt.tests.ns << ',' << pt.tests.ns_omega << ','
      << m1.real() << ',' << m1.imag() << ',' << m2.real() << ',' << m2.imag()
      << "\n";
  }
}

void write_codim1_branch_csv(const std::string& path, const Codim1Branch& branch) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot open '" + path + "' for writing");
  f << std::setprecision(17);
  f << "# kind=" << branch.kind << " param1=" << branch.param1
    << " param2=" << branch.param2 << " termination=" << branch.termination << "\n";
  f << "param1,param2,T,coef_real,coef_imag,event_flag\n";
  std::vector<int> flags(branch.points.size(), 0);
  for (const auto& ev : branch.events)
    if (ev.hi >= 0 && ev.hi < int(flags.size())) flags[size_t(ev.hi)] = 1;
  for (size_t k = 0; k < branch.points.size(); ++k) {
    const auto& pt = branch.points[k];
    f << pt.p1 << ',' << pt.p2 << ',' << pt.T << ',' << pt.coef.real() << ','
      << pt.coef.imag() << ',' << flags[k] << "\n";
  }
}

Codim1Branch read_codim1_branch_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open '" + path + "'");
  Codim1Branch br;
  std::string line;
  if (!std::getline(f, line)) throw InputError("branch csv: empty file");
  {
    std::istringstream hs(line);
    std::string tok;
    while (hs >> tok) {
      auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "kind") br.kind = val;
      if (key == "param1") br.param1 = val;
      if (key == "param2") br.param2 = val;
      if (key == "termination") br.termination = val;
    }
  }
  if (!std::getline(f, line)) throw InputError("branch csv: missing header row");
  if (line.rfind("param1,", 0) != 0)
    throw InputError("branch csv: unexpected header '" + line + "'");
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != 6) throw InputError("branch csv: bad row '" + line + "'");
    Codim1BranchPoint pt;
    pt.p1 = row[0];
    pt.p2 = row[1];
    pt.T = row[2];
    pt.coef = cplx(row[3], row[4]);
    br.points.push_back(std::move(pt));
    if (row[5] != 0.0) {
      Codim2Event ev;
      ev.kind = br.kind == "fold" ? "CPC" : (br.kind == "pd" ? "GPD" : "CH");
      ev.lo = int(br.points.size()) - 2;
      ev.hi = int(br.points.size()) - 1;
      ev.p1 = pt.p1;
      ev.p2 = pt.p2;
      br.events.push_back(ev);
    }
  }
  return br;
}

void write_branch_svg(const std::string& path,
                      const std::vector<Codim1Branch>& branches) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& br : branches)
    for (const auto& pt : br.points) {
      x0 = std::min(x0, pt.p1);
      x1 = std::max(x1, pt.p1);
      y0 = std::min(y0, pt.p2);
      y1 = std::max(y1, pt.p2);
    }
  bool empty = !(x0 <= x1 && y0 <= y1);
  if (empty) {
    x0 = y0 = 0;
    x1 = y1 = 1;
  }
  double dx = x1 - x0, dy = y1 - y0;
  if (dx <= 0) dx = 1;
  if (dy <= 0) dy = 1;
  const double W = 640, H = 480, pad = 50;
  auto X = [&](double p) { return pad + (p - x0) / dx * (W - 2 * pad); };
  auto Y = [&](double p) { return H - pad - (p - y0) / dy * (H - 2 * pad); };

  std::ofstream f(path);
  if (!f) throw InputError("cannot open '" + path + "' for writing");
  f << std::setprecision(10);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
    << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  int ci = 0;
  for (const auto& br : branches) {
    if (!br.points.empty()) {
      f << "<polyline fill=\"none\" stroke=\"" << colors[ci % 4]
        << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& pt : br.points) f << X(pt.p1) << ',' << Y(pt.p2) << ' ';
      f << "\"/>\n";
    }
    for (const auto& ev : br.events)
      f << "<circle cx=\"" << X(ev.p1) << "\" cy=\"" << Y(ev.p2)
        << "\" r=\"4\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"><title>"
        << ev.kind << "</title></circle>\n";
    ++ci;
  }
  f << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
    << "\" text-anchor=\"middle\" font-size=\"12\">"
    << (branches.empty() ? std::string("p1") : branches[0].param1) << "</text>\n";
  f << "<text x=\"14\" y=\"" << H / 2
    << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
    << H / 2 << ")\">"
    << (branches.empty() ? std::string("p2") : branches[0].param2) << "</text>\n";
  f << "</svg>\n";
}

void write_orbit_profile_csv(const std::string& path, const PeriodicOrbit& orbit) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot open '" + path + "' for writing");
  f << std::setprecision(17);
  f << "t";
  for (int c = 0; c < orbit.lin.dim(); ++c) f << ",x" << c + 1;
  f << "\n";
  const Mesh& mesh = orbit.lin.mesh();
  for (int g = 0; g < mesh.num_basis(); ++g) {
    f << mesh.basis_time(g);
    for (int c = 0; c < orbit.lin.dim(); ++c)
      f << ',' << orbit.profile().values()(c, g);
    f << "\n";
  }
}

Json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open '" + path + "'");
  Json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw InputError("bad json in '" + path + "': " + e.what());
  }
  return j;
}

void save_json(const std::string& path, const Json& j) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot open '" + path + "' for writing");
  f << j.dump(2) << "\n";
}

}  // namespace ddenf
