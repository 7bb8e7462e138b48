#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nrflow/diagnostics.hpp"
#include "nrflow/scheme.hpp"
#include "nrflow/state.hpp"

namespace nrflow {

/// Columns: cell, x[, y], rho_1..rho_N, T, S, p, mu_1..mu_N.
std::vector<std::string> field_csv_header(int N, int dim);

void write_fields_csv(std::ostream& os, const Problem& pb, const EntropyState& st);
void write_fields_csv(const std::string& path, const Problem& pb, const EntropyState& st);

/// Legacy VTK STRUCTURED_POINTS with one CELL_DATA scalar per field.
void write_fields_vtk(std::ostream& os, const Problem& pb, const EntropyState& st, const std::string& title);
void write_fields_vtk(const std::string& path, const Problem& pb, const EntropyState& st);

/// A field CSV read back as columns.
struct FieldTable {
  int N = 0;
  int dim = 1;
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  const std::vector<double>& column(const std::string& name) const;
  int rows() const { return columns.empty() ? 0 : static_cast<int>(columns.front().size()); }
};

FieldTable read_fields_csv(std::istream& is);
FieldTable read_fields_csv(const std::string& path);

/// State with z = mu/T and w = log T taken from the table.
EntropyState state_from_table(const FieldTable& t);

/// Physical fields (rho, T, S) of the table, for use as initial data.
InitialFields initial_fields_from_table(const FieldTable& t, int num_cells, int N);

/// Shortest representation that round-trips (17 significant digits).
std::string format_double(double x);

class DiagnosticsWriter {
 public:
  DiagnosticsWriter(std::ostream& os, int N);
  void write(const DiagnosticsRecord& r);

 private:
  std::ostream& os_;
};

}  // namespace nrflow
