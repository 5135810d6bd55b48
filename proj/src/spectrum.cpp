#include "neckspec/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace neckspec {

namespace {

const std::vector<Eigenpair> kEmpty;

void merge_sorted(std::vector<Eigenpair>& v) {
  std::sort(v.begin(), v.end(), [](const Eigenpair& a, const Eigenpair& b) { return a.nu < b.nu; });
  std::vector<Eigenpair> out;
  for (const auto& e : v) {
    if (!out.empty() && std::abs(out.back().nu - e.nu) <= 1e-12)
      out.back().mult += e.mult;
    else
      out.push_back(e);
  }
  v = std::move(out);
}

int parse_degree_key(const std::string& key, const std::string& where) {
  std::size_t pos = 0;
  int q = -1;
  try {
    q = std::stoi(key, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != key.size() || q < 0) throw ParseError(where + ": degree key '" + key + "' is not an integer >= 0");
  return q;
}

}  // namespace

const char* to_string(DegreeTag t) { return t == DegreeTag::alpha ? "alpha" : "beta"; }
const char* to_string(ModeKind k) { return k == ModeKind::Laplace ? "laplace" : "dirac"; }

const std::vector<Eigenpair>& CrossSectionSpectrum::list(int q) const {
  auto it = degrees.find(q);
  return it == degrees.end() ? kEmpty : it->second;
}

int CrossSectionSpectrum::betti(int q) const {
  for (const auto& e : list(q))
    if (e.nu == 0.0) return e.mult;
  return 0;
}

bool CrossSectionSpectrum::twist_is_identity(double tol) const {
  for (const auto& [q, per] : twist)
    for (const auto& [idx, M] : per)
      if (!M.isIdentity(tol)) return false;
  return true;
}

bool CrossSectionSpectrum::operator==(const CrossSectionSpectrum& o) const {
  if (name != o.name || dimension != o.dimension || degrees != o.degrees) return false;
  if (twist.size() != o.twist.size()) return false;
  for (const auto& [q, per] : twist) {
    auto it = o.twist.find(q);
    if (it == o.twist.end() || it->second.size() != per.size()) return false;
    for (const auto& [idx, M] : per) {
      auto jt = it->second.find(idx);
      if (jt == it->second.end() || jt->second != M) return false;
    }
  }
  return true;
}

CrossSectionSpectrum circle_spectrum(double length, int max_modes) {
  if (!(length > 0.0)) throw InvalidArgument("circle_spectrum: length must be positive");
  if (max_modes < 1) throw InvalidArgument("circle_spectrum: max_modes must be >= 1");
  std::vector<Eigenpair> l{{0.0, 1}};
  for (int k = 1; k <= max_modes; ++k) {
    const double w = 2.0 * std::numbers::pi * k / length;
    l.push_back({w * w, 2});
  }
  CrossSectionSpectrum s;
  std::ostringstream nm;
  nm << "circle(" << length << ")";
  s.name = nm.str();
  s.dimension = 1;
  s.degrees[0] = l;
  s.degrees[1] = l;
  return s;
}

CrossSectionSpectrum torus2_spectrum(int max_lattice) {
  if (max_lattice < 1) throw InvalidArgument("torus2_spectrum: max_lattice must be >= 1");
  std::map<int, int> shells;  // m^2 + n^2 -> lattice count
  for (int m = -max_lattice; m <= max_lattice; ++m)
    for (int n = -max_lattice; n <= max_lattice; ++n) ++shells[m * m + n * n];
  const double c = 4.0 * std::numbers::pi * std::numbers::pi;
  CrossSectionSpectrum s;
  s.name = "torus2(" + std::to_string(max_lattice) + ")";
  s.dimension = 2;
  const int binom[3] = {1, 2, 1};
  for (int q = 0; q <= 2; ++q) {
    std::vector<Eigenpair> l;
    for (const auto& [r2, cnt] : shells) l.push_back({c * r2, cnt * binom[q]});
    s.degrees[q] = l;
  }
  return s;
}

CrossSectionSpectrum parse_spectrum(const std::string& json_text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("spectrum: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("spectrum: top level must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "name" && it.key() != "dimension" && it.key() != "degrees" && it.key() != "twist")
      throw ParseError("spectrum: unknown key '" + it.key() + "'");
  CrossSectionSpectrum s;
  if (!j.contains("name") || !j["name"].is_string()) throw ParseError("spectrum.name: missing or not a string");
  s.name = j["name"].get<std::string>();
  if (!j.contains("dimension") || !j["dimension"].is_number_integer())
    throw ParseError("spectrum.dimension: missing or not an integer");
  s.dimension = j["dimension"].get<int>();
  if (!j.contains("degrees") || !j["degrees"].is_object()) throw ParseError("spectrum.degrees: missing or not an object");
  for (auto it = j["degrees"].begin(); it != j["degrees"].end(); ++it) {
    const std::string where = "spectrum.degrees." + it.key();
    const int q = parse_degree_key(it.key(), where);
    if (!it.value().is_array()) throw ParseError(where + ": expected an array of [nu, mult]");
    std::vector<Eigenpair> l;
    for (std::size_t i = 0; i < it.value().size(); ++i) {
      const auto& e = it.value()[i];
      const std::string w = where + "[" + std::to_string(i) + "]";
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number_integer())
        throw ParseError(w + ": expected [nu, mult]");
      const double nu = e[0].get<double>();
      const long long mult = e[1].get<long long>();
      if (!(nu >= 0.0) || !std::isfinite(nu)) throw ParseError(w + ".nu: negative or non-finite eigenvalue");
      if (mult < 1) throw ParseError(w + ".mult: multiplicity must be >= 1");
      l.push_back({nu, static_cast<int>(mult)});
    }
    merge_sorted(l);
    s.degrees[q] = l;
  }
  if (j.contains("twist")) {
    if (!j["twist"].is_object()) throw ParseError("spectrum.twist: expected an object");
    for (auto it = j["twist"].begin(); it != j["twist"].end(); ++it) {
      const std::string where = "spectrum.twist." + it.key();
      const int q = parse_degree_key(it.key(), where);
      if (!it.value().is_object()) throw ParseError(where + ": expected an object keyed by eigenvalue index");
      for (auto jt = it.value().begin(); jt != it.value().end(); ++jt) {
        const std::string w = where + "." + jt.key();
        const int idx = parse_degree_key(jt.key(), w);
        const auto& l = s.list(q);
        if (idx >= static_cast<int>(l.size())) throw ParseError(w + ": eigenvalue index out of range");
        const int n = l[idx].mult;
        const auto& rows = jt.value();
        if (!rows.is_array() || static_cast<int>(rows.size()) != n)
          throw ParseError(w + ": expected a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
        Eigen::MatrixXd M(n, n);
        for (int r = 0; r < n; ++r) {
          if (!rows[r].is_array() || static_cast<int>(rows[r].size()) != n) throw ParseError(w + ": ragged matrix");
          for (int c = 0; c < n; ++c) {
            if (!rows[r][c].is_number()) throw ParseError(w + ": non-numeric entry");
            M(r, c) = rows[r][c].get<double>();
          }
        }
        if (!(M.transpose() * M).isIdentity(1e-10)) throw ParseError(w + ": twist matrix is not orthogonal");
        s.twist[q][idx] = M;
      }
    }
  }
  return s;
}

CrossSectionSpectrum load_spectrum(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError("spectrum: cannot open " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spectrum(buf.str());
}

std::vector<ModeOperator> mode_list(const CrossSectionSpectrum& spec, int q, double cutoff) {
  if (q < 0) throw InvalidArgument("mode_list: degree must be >= 0");
  if (!(cutoff > 0.0)) throw InvalidArgument("mode_list: cutoff must be positive");
  std::vector<ModeOperator> out;
  auto add = [&](int deg, DegreeTag tag) {
    for (const auto& e : spec.list(deg)) {
      if (e.nu > cutoff) break;
      for (int k = 0; k < e.mult; ++k) out.push_back(ModeOperator::laplace(e.nu, tag));
    }
  };
  add(q, DegreeTag::alpha);
  if (q >= 1) add(q - 1, DegreeTag::beta);
  return out;
}

RootData roots_of(const ModeOperator& op) {
  RootData r;
  if (op.kind == ModeKind::Dirac) {
    r.roots.push_back({cplx(0.0, 0.0), 1});
  } else if (op.nu == 0.0) {
    r.roots.push_back({cplx(0.0, 0.0), 2});
  } else {
    const double s = std::sqrt(op.nu);
    r.roots.push_back({cplx(0.0, s), 1});
    r.roots.push_back({cplx(0.0, -s), 1});
  }
  for (const auto& x : r.roots)
    if (x.lambda.imag() == 0.0) {
      r.real_roots.push_back(x);
      r.max_real_order = std::max(r.max_real_order, x.order);
    }
  return r;
}

}  // namespace neckspec
