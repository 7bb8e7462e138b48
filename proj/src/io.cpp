#include "nrflow/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nrflow {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  return os;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && *b == ' ') ++b;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) throw std::runtime_error("bad number in CSV: '" + s + "'");
  return v;
}

void write_row(std::ostream& os, const std::vector<double>& v) {
  for (size_t k = 0; k < v.size(); ++k) {
    if (k) os << ',';
    os << format_double(v[k]);
  }
  os << '\n';
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

std::vector<std::string> field_csv_header(int N, int dim) {
  std::vector<std::string> h{"cell", "x"};
  if (dim == 2) h.emplace_back("y");
  for (int i = 1; i <= N; ++i) h.push_back("rho_" + std::to_string(i));
  h.insert(h.end(), {"T", "S", "p"});
  for (int i = 1; i <= N; ++i) h.push_back("mu_" + std::to_string(i));
  return h;
}

void write_fields_csv(std::ostream& os, const Problem& pb, const EntropyState& st) {
  const int N = pb.N();
  const int dim = pb.grid.dim();
  const auto f = compute_fields(pb, st);
  const auto h = field_csv_header(N, dim);
  for (size_t k = 0; k < h.size(); ++k) os << (k ? "," : "") << h[k];
  os << '\n';
  for (int c = 0; c < pb.num_cells(); ++c) {
    const size_t cu = static_cast<size_t>(c);
    const auto x = pb.grid.center(c);
    std::vector<double> row{static_cast<double>(c), x[0]};
    if (dim == 2) row.push_back(x[1]);
    for (int i = 0; i < N; ++i) row.push_back(f.rho[cu * static_cast<size_t>(N) + static_cast<size_t>(i)]);
    row.insert(row.end(), {f.T[cu], st.S[cu], f.p[cu]});
    for (int i = 0; i < N; ++i) row.push_back(f.mu[cu * static_cast<size_t>(N) + static_cast<size_t>(i)]);
    write_row(os, row);
  }
}

void write_fields_csv(const std::string& path, const Problem& pb, const EntropyState& st) {
  auto os = open_out(path);
  write_fields_csv(os, pb, st);
  if (!os) throw std::runtime_error("write failed: " + path);
}

void write_fields_vtk(std::ostream& os, const Problem& pb, const EntropyState& st, const std::string& title) {
  const Grid& g = pb.grid;
  const int N = pb.N();
  const auto f = compute_fields(pb, st);
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET STRUCTURED_POINTS\n";
  os << "DIMENSIONS " << g.nx() + 1 << ' ' << g.ny() + 1 << " 2\n";
  os << "ORIGIN 0 0 0\n";
  const double hy = g.dim() == 2 ? g.spacing(1) : 1.0;
  os << "SPACING " << format_double(g.spacing(0)) << ' ' << format_double(hy) << ' ' << format_double(hy) << '\n';
  os << "CELL_DATA " << g.num_cells() << '\n';
  auto scalar = [&](const std::string& name, auto value) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int c = 0; c < g.num_cells(); ++c) os << format_double(value(static_cast<size_t>(c))) << '\n';
  };
  for (int i = 0; i < N; ++i) {
    scalar("rho_" + std::to_string(i + 1), [&](size_t c) { return f.rho[c * static_cast<size_t>(N) + static_cast<size_t>(i)]; });
  }
  scalar("T", [&](size_t c) { return f.T[c]; });
  scalar("S", [&](size_t c) { return st.S[c]; });
  scalar("p", [&](size_t c) { return f.p[c]; });
  for (int i = 0; i < N; ++i) {
    scalar("mu_" + std::to_string(i + 1), [&](size_t c) { return f.mu[c * static_cast<size_t>(N) + static_cast<size_t>(i)]; });
  }
}

void write_fields_vtk(const std::string& path, const Problem& pb, const EntropyState& st) {
  auto os = open_out(path);
  write_fields_vtk(os, pb, st, "nrflow fields");
  if (!os) throw std::runtime_error("write failed: " + path);
}

const std::vector<double>& FieldTable::column(const std::string& name) const {
  for (size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return columns[k];
  }
  throw std::runtime_error("field table has no column '" + name + "'");
}

FieldTable read_fields_csv(std::istream& is) {
  FieldTable t;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty field CSV");
  t.header = split(line);
  for (const auto& h : t.header) {
    if (h.rfind("rho_", 0) == 0) ++t.N;
    if (h == "y") t.dim = 2;
  }
  if (t.N == 0 || t.header != field_csv_header(t.N, t.dim)) throw std::runtime_error("unexpected field CSV header");
  t.columns.assign(t.header.size(), {});
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) throw std::runtime_error("ragged row in field CSV");
    for (size_t k = 0; k < cells.size(); ++k) t.columns[k].push_back(parse_double(cells[k]));
  }
  return t;
}

FieldTable read_fields_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_fields_csv(is);
}

EntropyState state_from_table(const FieldTable& t) {
  EntropyState st;
  st.N = t.N;
  const auto& T = t.column("T");
  st.S = t.column("S");
  const size_t n = T.size();
  st.w.resize(n);
  st.z.resize(n * static_cast<size_t>(t.N));
  for (int i = 0; i < t.N; ++i) {
    const auto& mu = t.column("mu_" + std::to_string(i + 1));
    for (size_t c = 0; c < n; ++c) st.z[c * static_cast<size_t>(t.N) + static_cast<size_t>(i)] = mu[c] / T[c];
  }
  for (size_t c = 0; c < n; ++c) st.w[c] = std::log(T[c]);
  return st;
}

InitialFields initial_fields_from_table(const FieldTable& t, int num_cells, int N) {
  if (t.N != N || t.rows() != num_cells) {
    throw std::runtime_error("field file has " + std::to_string(t.rows()) + " cells and " + std::to_string(t.N) +
                             " species, expected " + std::to_string(num_cells) + " and " + std::to_string(N));
  }
  InitialFields f;
  f.T = t.column("T");
  f.S = t.column("S");
  f.rho.resize(static_cast<size_t>(num_cells * N));
  for (int i = 0; i < N; ++i) {
    const auto& r = t.column("rho_" + std::to_string(i + 1));
    for (int c = 0; c < num_cells; ++c) f.rho[static_cast<size_t>(c * N + i)] = r[static_cast<size_t>(c)];
  }
  return f;
}

DiagnosticsWriter::DiagnosticsWriter(std::ostream& os, int N) : os_(os) {
  const auto h = csv_header(N);
  for (size_t k = 0; k < h.size(); ++k) os_ << (k ? "," : "") << h[k];
  os_ << '\n';
}

void DiagnosticsWriter::write(const DiagnosticsRecord& r) { write_row(os_, csv_row(r)); }

}  // namespace nrflow
