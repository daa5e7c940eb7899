#pragma once

// CSV emission and re-reading. Real numbers are printed in scientific
// notation with 17 significant digits so round-tripping through text
// reproduces the exact double; lines end with LF.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "invsteer/controllers.hpp"
#include "invsteer/stability.hpp"

namespace invsteer::harness {

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

inline std::string format_count(std::size_t n) { return std::to_string(n); }

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open `" + path + "` for writing");
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("write failed for `" + path_ + "`");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

// Schema: t,normI,log_normI,x1,...,xm
inline void write_trajectory_csv(const std::string& path, const TrajectoryRecord& rec,
                                 std::size_t m) {
  CsvWriter w(path);
  std::vector<std::string> header = {"t", "normI", "log_normI"};
  for (std::size_t i = 1; i <= m; ++i) header.push_back("x" + std::to_string(i));
  w.row(header);
  std::vector<std::string> cells;
  for (const auto& s : rec.samples) {
    cells.clear();
    cells.push_back(format_real(s.t));
    cells.push_back(format_real(s.norm_I));
    cells.push_back(format_real(s.log_norm_I));
    for (double c : s.x) cells.push_back(format_real(c));
    w.row(cells);
  }
  w.close();
}

// Schema: n,t_n,delta_n,beta_n,A_n,B_n,norm_before,norm_after
inline void write_impulses_csv(const std::string& path,
                               const std::vector<ImpulseRecord>& impulses) {
  CsvWriter w(path);
  w.row({"n", "t_n", "delta_n", "beta_n", "A_n", "B_n", "norm_before", "norm_after"});
  for (const auto& r : impulses)
    w.row({format_count(r.n), format_real(r.t_n), format_real(r.delta_n), format_real(r.beta_n),
           format_real(r.A_n), format_real(r.B_n), format_real(r.norm_before),
           format_real(r.norm_after)});
  w.close();
}

// Schema: t_days,cumulative_cases,new_cases_per_day,S,V,E,I,R
// State order in the record is (V,S,E,I,R); cumulative cases come from the
// incidence accumulator; the daily rate is the instantaneous incidence.
inline void write_cases_csv(const std::string& path, const TrajectoryRecord& rec,
                            std::size_t case_acc_index, double incubation_rate,
                            double days_per_unit) {
  CsvWriter w(path);
  w.row({"t_days", "cumulative_cases", "new_cases_per_day", "S", "V", "E", "I", "R"});
  for (const auto& s : rec.samples) {
    const double new_per_day = incubation_rate * s.x[2] / days_per_unit;
    w.row({format_real(s.t * days_per_unit), format_real(s.accumulators[case_acc_index]),
           format_real(new_per_day), format_real(s.x[1]), format_real(s.x[0]),
           format_real(s.x[2]), format_real(s.x[3]), format_real(s.x[4])});
  }
  w.close();
}

// Schema: <param>,D_S,status
inline void write_sweep_csv(const std::string& path, const std::string& param_name,
                            const std::vector<SweepPoint>& points) {
  CsvWriter w(path);
  w.row({param_name, "D_S", "status"});
  for (const auto& p : points)
    w.row({format_real(p.parameter), format_real(p.D_S), p.ok ? "ok" : "failed"});
  w.close();
}

// Schema: t,omega (running average of the growth rate)
inline void write_ds_csv(const std::string& path, const StabilityEstimate& est) {
  CsvWriter w(path);
  w.row({"t", "omega"});
  for (const auto& [t, omega] : est.convergence_series)
    w.row({format_real(t), format_real(omega)});
  w.close();
}

// Minimal reader for the harness's own output (check subcommand, tests).
inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open `" + path + "` for reading");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      cells.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                  : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline double csv_real(const std::string& cell) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size())
    throw std::runtime_error("bad numeric cell `" + cell + "`");
  return v;
}

}  // namespace invsteer::harness
