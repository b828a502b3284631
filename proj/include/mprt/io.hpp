#pragma once

// CSV serialization of fields and scan tables, matrix triplet dumps, and the
// FNV-1a digests the run manifests use to certify byte-identical reruns.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mprt/fields.hpp"
#include "mprt/peierls.hpp"

namespace mprt {

// 17 significant digits: the shortest fixed format that round-trips any
// double exactly through decimal text.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open for writing: " + path);
  out << body;
  if (!out) throw data_error("write failed: " + path);
}

inline std::string scalar_csv(const ScalarField& f) {
  const SpatialGrid& g = f.grid();
  std::string s = "x,y,value\n";
  for (int a = 0; a < g.n_active(); ++a) {
    Vec2 c = g.center(a);
    s += format_g17(c.x);
    s += ',';
    s += format_g17(c.y);
    s += ',';
    s += format_g17(f[a]);
    s += '\n';
  }
  return s;
}

inline std::string angular_csv(const AngularField& u, const AngularQuadrature& ang) {
  const SpatialGrid& g = u.grid();
  std::string s = "x,y,theta,value\n";
  for (int d = 0; d < ang.size(); ++d) {
    for (int a = 0; a < g.n_active(); ++a) {
      Vec2 c = g.center(a);
      s += format_g17(c.x);
      s += ',';
      s += format_g17(c.y);
      s += ',';
      s += format_g17(ang.theta(d));
      s += ',';
      s += format_g17(u.at(d, a));
      s += '\n';
    }
  }
  return s;
}

inline std::string scan_csv(const std::vector<ScanRow>& rows) {
  std::string s = "epsilon,one_minus_rho,lambda_eps_over_eps,mu,slope_cum\n";
  for (const ScanRow& r : rows) {
    s += format_g17(r.eps);
    s += ',';
    s += format_g17(r.one_minus_rho);
    s += ',';
    s += format_g17(r.lambda_over_eps);
    s += ',';
    s += format_g17(r.mu);
    s += ',';
    s += format_g17(r.slope_cum);
    s += '\n';
  }
  return s;
}

// Plain triplet dump "i j value", dense rows in order, zeros skipped.
inline std::string matrix_triplets(const Eigen::MatrixXd& M) {
  std::string s;
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (M(i, j) == 0.0) continue;
      s += std::to_string(i);
      s += ' ';
      s += std::to_string(j);
      s += ' ';
      s += format_g17(M(i, j));
      s += '\n';
    }
  return s;
}

// Numeric rows of a CSV file, header skipped. Used by tests and by specs
// that load coefficient fields from files.
inline std::vector<std::vector<double>> read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open CSV: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;  // header
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw data_error("CSV cell is not numeric in " + path + ": '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// Loads a scalar field from an x,y,value CSV written on the same grid
// layout: every active cell must be covered exactly once.
inline ScalarField read_scalar_csv(const std::string& path, const SpatialGrid& g) {
  std::vector<std::vector<double>> rows = read_csv_table(path);
  if (static_cast<int>(rows.size()) != g.n_active())
    throw data_error("CSV row count does not match the grid: " + path);
  ScalarField f(g, 0.0);
  std::vector<char> seen(g.n_active(), 0);
  for (const auto& r : rows) {
    if (r.size() != 3) throw data_error("scalar CSV needs x,y,value rows: " + path);
    int i = static_cast<int>(std::floor((r[0] + 0.5 * g.nx() * g.h()) / g.h()));
    int j = static_cast<int>(std::floor((r[1] + 0.5 * g.ny() * g.h()) / g.h()));
    int a = g.cell_at(i, j);
    if (a < 0) throw data_error("CSV point lies on no active cell: " + path);
    f[a] = r[2];
    seen[a] = 1;
  }
  for (char c : seen)
    if (!c) throw data_error("CSV leaves active cells unset: " + path);
  return f;
}

inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 14695981039346656037ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

inline std::string hex16(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open for digest: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex16(fnv1a64(ss.str()));
}

}  // namespace mprt
