#ifndef QMOMENT_IO_HPP
#define QMOMENT_IO_HPP

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmoment/amplifier.hpp"
#include "qmoment/error.hpp"
#include "qmoment/moment_table.hpp"
#include "qmoment/simulate.hpp"
#include "qmoment/state_spec.hpp"
#include "qmoment/tomography.hpp"
#include "qmoment/uncertainty.hpp"

namespace qmoment {

using json = nlohmann::json;

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, what + ": " + e.what());
  }
}

inline json read_json(const std::string& path) { return parse_json(read_file(path), path); }

// ---- moment tables ---------------------------------------------------------

inline json entries_to_json(const MomentTable& t, bool keep_zeros = false) {
  json entries = json::array();
  for (int d = 0; d <= t.max_degree(); ++d) {
    for (int i = d; i >= 0; --i) {
      const cplx v = t(i, d - i);
      if (!keep_zeros && std::abs(v) < 1e-15) continue;
      entries.push_back({{"i", i}, {"j", d - i}, {"re", v.real()}, {"im", v.imag()}});
    }
  }
  return entries;
}

/// {"ordering", "max_degree", "entries": [{"i","j","re","im"}]}; entries
/// with |v| < 1e-15 are omitted.
inline json to_json(const MomentTable& t) {
  return {{"ordering", std::string(to_string(t.ordering()))}, {"max_degree", t.max_degree()},
          {"entries", entries_to_json(t)}};
}

namespace detail {

inline void fill_entries(MomentTable& t, const json& entries, const std::string& what) {
  for (const auto& e : entries) {
    const int i = e.at("i").get<int>();
    const int j = e.at("j").get<int>();
    if (!t.contains(i, j)) {
      throw Error(ErrorCode::ParseError, what + ": entry (" + std::to_string(i) + "," + std::to_string(j) +
                                             ") outside max_degree " + std::to_string(t.max_degree()));
    }
    t(i, j) = cplx{e.value("re", 0.0), e.value("im", 0.0)};
  }
}

template <class F>
auto json_guard(const std::string& what, F f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, what + ": " + e.what());
  }
}

}  // namespace detail

/// Missing entries default to zero; entry (0,0) defaults to 1.
inline MomentTable moment_table_from_json(const json& j, const std::string& what = "moment table") {
  return detail::json_guard(what, [&] {
    MomentTable t(parse_ordering(j.at("ordering").get<std::string>()), j.at("max_degree").get<int>());
    detail::fill_entries(t, j.at("entries"), what);
    return t;
  });
}

inline MomentTable read_moment_table(const std::string& path) { return moment_table_from_json(read_json(path), path); }

inline json to_json(const EstimatedMoments& est) {
  json j = to_json(est.table);
  j["stderr"] = entries_to_json(est.stderr_table, true);
  return j;
}

inline json to_json(const TomographicMoments& tm) {
  json j = {{"max_order", tm.max_order}, {"thetas", tm.thetas}};
  const auto rows = [](const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index a = 0; a < m.rows(); ++a) {
      std::vector<double> row;
      for (Eigen::Index r = 0; r < m.cols(); ++r) row.push_back(m(a, r));
      out.push_back(row);
    }
    return out;
  };
  j["values"] = rows(tm.values);
  if (tm.stderrs) j["stderr"] = rows(*tm.stderrs);
  return j;
}

// ---- reports ---------------------------------------------------------------

inline json to_json(const CalibrationReport& r) {
  return {{"g", r.gain},
          {"port", to_string(r.port)},
          {"noise_moments", to_json(r.noise_moments)},
          {"condition_numbers", r.condition_numbers}};
}

inline CalibrationReport calibration_from_json(const json& j, const std::string& what = "calibration") {
  return detail::json_guard(what, [&] {
    CalibrationReport r;
    r.gain = j.at("g").get<double>();
    r.port = parse_port(j.value("port", std::string("signal")));
    r.noise_moments = moment_table_from_json(j.at("noise_moments"), what);
    if (j.contains("condition_numbers")) r.condition_numbers = j.at("condition_numbers").get<std::vector<double>>();
    return r;
  });
}

inline json to_json(const Verdict& v) {
  json j = {{"pass", v.pass}, {"value", v.value}};
  if (!v.pass) j["first_violated"] = v.first_violated;
  return j;
}

inline json to_json(const UncertaintyReport& r) {
  json j;
  j["simple"] = {{"lhs", r.simple_lhs}, {"verdict", to_json(r.simple)}};
  if (r.purity_relation) {
    j["purity_dependent"] = {{"lhs", r.purity_relation->lhs},
                             {"bound", r.purity_relation->bound},
                             {"purity", r.purity_relation->purity},
                             {"verdict", to_json(r.purity_relation->verdict)}};
  } else {
    j["purity_dependent"] = {{"error", r.purity_error.value_or("")}};
  }
  j["moment_matrix"] = {{"order", r.psd.order},
                        {"minors", r.psd.minors},
                        {"eigenvalues", r.psd.eigenvalues},
                        {"verdict", to_json(r.psd.verdict)}};
  return j;
}

inline json to_json(const CrosscheckReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    const cplx delta = e.heterodyne - e.homodyne;
    const double se_re = std::hypot(e.heterodyne_stderr.real(), e.homodyne_stderr.real());
    const double se_im = std::hypot(e.heterodyne_stderr.imag(), e.homodyne_stderr.imag());
    entries.push_back({{"i", e.i},
                       {"j", e.j},
                       {"heterodyne", {e.heterodyne.real(), e.heterodyne.imag()}},
                       {"homodyne", {e.homodyne.real(), e.homodyne.imag()}},
                       {"heterodyne_stderr", {e.heterodyne_stderr.real(), e.heterodyne_stderr.imag()}},
                       {"homodyne_stderr", {e.homodyne_stderr.real(), e.homodyne_stderr.imag()}},
                       {"delta", {delta.real(), delta.imag()}},
                       {"combined_stderr", {se_re, se_im}},
                       {"z", std::isfinite(e.z_score) ? json(e.z_score) : json("inf")},
                       {"ok", e.ok}});
  }
  return {{"ordering", "antinormal"}, {"max_degree", r.max_degree}, {"threshold", r.threshold},
          {"pass", r.pass}, {"entries", entries}};
}

inline void write_json(const std::string& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

// ---- CSV -------------------------------------------------------------------

namespace detail {

inline std::vector<std::vector<double>> read_csv_rows(const std::string& path, const std::vector<std::string>& header) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::vector<double>> rows;
  bool first = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (first) {
      first = false;
      if (cells == header) continue;
    }
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": expected " +
                                             std::to_string(header.size()) + " columns");
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        row.push_back(detail::parse_double(c));
      } catch (const Error&) {
        throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": bad number '" + c + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

/// `theta,x,w` rows, theta-major.
inline std::string tomogram_csv(const TomogramGrid& grid) {
  std::string out = "theta,x,w\n";
  for (int a = 0; a < grid.n_theta(); ++a) {
    for (int i = 0; i < grid.n_x(); ++i) {
      out += format_double(grid.thetas[a]) + "," + format_double(grid.xs[i]) + "," +
             format_double(grid.values(a, i)) + "\n";
    }
  }
  return out;
}

/// Reads a `theta,x,w` file laid out on a theta x X product grid.
inline TomogramGrid read_tomogram_csv(const std::string& path) {
  const auto rows = detail::read_csv_rows(path, {"theta", "x", "w"});
  std::vector<double> thetas;
  std::vector<double> xs;
  for (const auto& r : rows) {
    if (thetas.empty() || thetas.back() != r[0]) {
      if (std::find(thetas.begin(), thetas.end(), r[0]) != thetas.end()) {
        throw Error(ErrorCode::ParseError, path + ": rows must be grouped by theta");
      }
      thetas.push_back(r[0]);
    }
    if (thetas.size() == 1) xs.push_back(r[1]);
  }
  if (thetas.empty() || rows.size() != thetas.size() * xs.size()) {
    throw Error(ErrorCode::ParseError, path + ": not a full theta x X grid");
  }
  Eigen::MatrixXd values(static_cast<Eigen::Index>(thetas.size()), static_cast<Eigen::Index>(xs.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t a = k / xs.size();
    const std::size_t i = k % xs.size();
    if (rows[k][1] != xs[i]) throw Error(ErrorCode::ParseError, path + ": X nodes differ between angles");
    values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(i)) = rows[k][2];
  }
  return grid_from_samples(std::move(thetas), std::move(xs), std::move(values));
}

inline std::string sidecar_path(const std::string& csv_path) { return csv_path + ".json"; }

inline json chain_to_json(const ChainSettings& c) {
  return {{"g", c.gain}, {"noise_temperature", c.noise_temperature}, {"port", "signal"}};
}

inline void write_homodyne_record(const std::string& path, const HomodyneRecord& rec) {
  std::string out = "theta,x\n";
  for (const auto& s : rec.samples) out += format_double(s.theta) + "," + format_double(s.x) + "\n";
  write_file(path, out);
  json side = {{"mode", "homodyne"}, {"seed", rec.seed}, {"n", rec.samples.size()}, {"phases", rec.phases}};
  if (rec.state) side["state"] = to_string(*rec.state);
  write_json(sidecar_path(path), side);
}

inline void write_heterodyne_record(const std::string& path, const HeterodyneRecord& rec) {
  std::string out = "q,p\n";
  for (const auto& s : rec.samples) out += format_double(s.q) + "," + format_double(s.p) + "\n";
  write_file(path, out);
  json side = {{"mode", "heterodyne"}, {"seed", rec.seed}, {"n", rec.samples.size()}};
  if (rec.state) side["state"] = to_string(*rec.state);
  if (rec.amp) side["amp"] = chain_to_json(*rec.amp);
  write_json(sidecar_path(path), side);
}

namespace detail {

inline std::optional<json> read_sidecar(const std::string& csv_path) {
  std::ifstream probe(sidecar_path(csv_path));
  if (!probe) return std::nullopt;
  return read_json(sidecar_path(csv_path));
}

}  // namespace detail

/// Phases come from the sidecar when present, else from the distinct theta values in file order.
inline HomodyneRecord read_homodyne_record(const std::string& path) {
  const auto rows = detail::read_csv_rows(path, {"theta", "x"});
  HomodyneRecord rec;
  for (const auto& r : rows) rec.samples.push_back({r[0], r[1]});
  if (const auto side = detail::read_sidecar(path)) {
    detail::json_guard(path, [&] {
      rec.seed = side->value("seed", std::uint64_t{0});
      if (side->contains("phases")) rec.phases = side->at("phases").get<std::vector<double>>();
      if (side->contains("state")) rec.state = parse_state(side->at("state").get<std::string>());
      return 0;
    });
  }
  if (rec.phases.empty()) {
    for (const auto& s : rec.samples) {
      if (std::find(rec.phases.begin(), rec.phases.end(), s.theta) == rec.phases.end()) rec.phases.push_back(s.theta);
    }
  }
  return rec;
}

inline HeterodyneRecord read_heterodyne_record(const std::string& path) {
  const auto rows = detail::read_csv_rows(path, {"q", "p"});
  HeterodyneRecord rec;
  for (const auto& r : rows) rec.samples.push_back({r[0], r[1]});
  if (const auto side = detail::read_sidecar(path)) {
    detail::json_guard(path, [&] {
      rec.seed = side->value("seed", std::uint64_t{0});
      if (side->contains("state")) rec.state = parse_state(side->at("state").get<std::string>());
      if (side->contains("amp")) {
        rec.amp = ChainSettings{side->at("amp").at("g").get<double>(),
                                side->at("amp").at("noise_temperature").get<double>()};
      }
      return 0;
    });
  }
  return rec;
}

/// `n,m,abs,re,im` rows of one snapshot.
inline std::string snapshot_csv(const MomentTable& t) {
  std::string out = "n,m,abs,re,im\n";
  for (int d = 0; d <= t.max_degree(); ++d) {
    for (int n = d; n >= 0; --n) {
      const cplx v = t(n, d - n);
      out += std::to_string(n) + "," + std::to_string(d - n) + "," + format_double(std::abs(v)) + "," +
             format_double(v.real()) + "," + format_double(v.imag()) + "\n";
    }
  }
  return out;
}

}  // namespace qmoment

#endif  // QMOMENT_IO_HPP
