#pragma once

// File formats: trajectory CSV, plant/controller/analysis JSON and a minimal
// SVG line plot. Numbers are written in shortest round-trip form so repeated
// runs produce byte-identical files.

#include "json.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ddc/plant.hpp"

namespace ddc::io {

using nlohmann::json;

[[nodiscard]] inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw InvalidInput("cannot format number");
  return {buf.data(), end};
}

// ---------------------------------------------------------------------------
// Trajectory CSV:  t,u1..um,y1..yp
// ---------------------------------------------------------------------------

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const Partition& part = traj.partition();
  os << 't';
  for (Eigen::Index j = 0; j < part.m; ++j) os << ",u" << j + 1;
  for (Eigen::Index j = 0; j < part.p; ++j) os << ",y" << j + 1;
  os << '\n';
  for (Eigen::Index k = 0; k < traj.size(); ++k) {
    os << traj.start_time() + k;
    for (Eigen::Index j = 0; j < part.w(); ++j) os << ',' << format_double(traj.samples()(k, j));
    os << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(const std::string& s, std::size_t row, std::size_t col) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v)) {
    throw InvalidInput("CSV row " + std::to_string(row) + ", column " + std::to_string(col) +
                       ": cannot parse '" + s + "' as a finite number");
  }
  return v;
}

}  // namespace detail

/// Reads a trajectory; the partition comes from the header. Row numbers in
/// errors count the header as row 1.
[[nodiscard]] inline Trajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidInput("CSV is empty; expected header t,u1..um,y1..yp");
  const auto header = detail::split_csv(line);
  if (header.empty() || header[0] != "t") throw InvalidInput("CSV header must start with 't'");
  Partition part;
  std::size_t col = 1;
  while (col < header.size() && header[col] == "u" + std::to_string(part.m + 1)) {
    ++part.m;
    ++col;
  }
  while (col < header.size() && header[col] == "y" + std::to_string(part.p + 1)) {
    ++part.p;
    ++col;
  }
  if (col != header.size()) {
    throw InvalidInput("CSV header column " + std::to_string(col + 1) + " ('" + header[col] +
                       "') is out of order or missing its predecessor; expected t,u1..um,y1..yp");
  }
  if (part.w() == 0) throw InvalidInput("CSV header has no u or y columns");

  std::vector<std::vector<double>> rows;
  long start = 0;
  std::size_t row_no = 1;
  while (std::getline(is, line)) {
    ++row_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != header.size()) {
      throw InvalidInput("CSV row " + std::to_string(row_no) + ": expected " +
                         std::to_string(header.size()) + " fields, got " +
                         std::to_string(fields.size()));
    }
    const double t = detail::parse_number(fields[0], row_no, 1);
    if (rows.empty()) start = static_cast<long>(t);
    std::vector<double> vals;
    for (std::size_t c = 1; c < fields.size(); ++c) vals.push_back(detail::parse_number(fields[c], row_no, c + 1));
    rows.push_back(std::move(vals));
  }
  Matrix samples(static_cast<Eigen::Index>(rows.size()), part.w());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (Eigen::Index j = 0; j < part.w(); ++j) samples(static_cast<Eigen::Index>(k), j) = rows[k][static_cast<std::size_t>(j)];
  }
  return Trajectory(part, std::move(samples), start);
}

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

[[nodiscard]] inline json to_json(const Matrix& a) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

[[nodiscard]] inline json to_json(const std::vector<Complex>& ev) {
  json out = json::array();
  for (const Complex& z : ev) out.push_back({z.real(), z.imag()});
  return out;
}

/// Matrix from an array of rows; `cols` is needed when there are no rows.
[[nodiscard]] inline Matrix matrix_from_json(const json& j, const std::string& what,
                                             Eigen::Index cols_if_empty = 0) {
  if (!j.is_array()) throw InvalidInput(what + ": expected an array of rows");
  if (j.empty()) return Matrix(0, cols_if_empty);
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw InvalidInput(what + ": row " + std::to_string(i) + " has the wrong length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw InvalidInput(what + ": non-numeric entry");
      a(i, c) = v.get<double>();
    }
  }
  return a;
}

[[nodiscard]] inline json parse_json(std::istream& is, const std::string& what) {
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw InvalidInput(what + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Plant description
// ---------------------------------------------------------------------------

[[nodiscard]] inline json plant_to_json(const TransferMatrix& g) {
  json rows = json::array();
  for (const auto& row : g.entries) {
    json r = json::array();
    for (const auto& e : row) r.push_back({{"num", e.num}, {"den", e.den}});
    rows.push_back(std::move(r));
  }
  return {{"entries", rows}};
}

[[nodiscard]] inline TransferMatrix plant_from_json(const json& j) {
  if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array()) {
    throw InvalidInput("plant file: expected an object with an 'entries' grid");
  }
  TransferMatrix g;
  std::size_t i = 0;
  for (const auto& row : j["entries"]) {
    ++i;
    if (!row.is_array()) throw InvalidInput("plant file: row " + std::to_string(i) + " is not an array");
    std::vector<TransferEntry> r;
    std::size_t k = 0;
    for (const auto& e : row) {
      ++k;
      const std::string where = "plant file: entry (" + std::to_string(i) + "," + std::to_string(k) + ")";
      if (!e.is_object() || !e.contains("num") || !e.contains("den")) {
        throw InvalidInput(where + " needs 'num' and 'den'");
      }
      try {
        r.push_back({e["num"].get<std::vector<double>>(), e["den"].get<std::vector<double>>()});
      } catch (const json::exception&) {
        throw InvalidInput(where + ": coefficients must be numeric arrays");
      }
    }
    if (!g.entries.empty() && r.size() != g.entries.front().size()) {
      throw InvalidInput("plant file: row " + std::to_string(i) + " has " + std::to_string(r.size()) +
                         " entries, row 1 has " + std::to_string(g.entries.front().size()));
    }
    g.entries.push_back(std::move(r));
  }
  if (g.entries.empty() || g.entries.front().empty()) throw InvalidInput("plant file: empty 'entries' grid");
  return g;
}

// ---------------------------------------------------------------------------
// Analysis and controller documents
// ---------------------------------------------------------------------------

struct AnalysisSummary {
  ExcitationReport excitation;
  Spectrum spectrum;
  bool autonomous = false;
  std::optional<StabilityReport> stability;          // autonomous only
  std::optional<StabilizabilityReport> stabilizability;  // with inputs only
};

[[nodiscard]] inline json analysis_to_json(const AnalysisSummary& a) {
  json j;
  j["rank"] = a.excitation.rank;
  j["inferred_n"] = a.excitation.inferred_n;
  j["n_hint"] = a.excitation.n_hint ? json(*a.excitation.n_hint) : json(nullptr);
  j["excitation_satisfied"] = a.excitation.satisfied;
  j["eigenvalues"] = to_json(a.spectrum.eigenvalues);
  j["spectral_radius"] = a.spectrum.spectral_radius;
  j["autonomous"] = a.autonomous;
  if (a.stability) {
    j["stable"] = a.stability->stable;
    j["M"] = a.stability->certificate_M ? to_json(*a.stability->certificate_M) : json(nullptr);
    j["lmi_min_eigenvalue"] = a.stability->lmi_min_eigenvalue;
  }
  if (a.stabilizability) {
    j["stabilizable"] = a.stabilizability->stabilizable;
    j["controllable_dim"] = a.stabilizability->controllable_dim;
    j["uncontrollable_eigenvalues"] = to_json(a.stabilizability->uncontrollable_eigs);
  }
  return j;
}

[[nodiscard]] inline json controller_to_json(const Controller& c) {
  const BehaviorBasis& b = c.tm.basis;
  json j;
  j["r"] = c.rank();
  j["m"] = b.part.m;
  j["p"] = b.part.p;
  j["L"] = b.L;
  j["W"] = to_json(c.W);
  j["Y"] = to_json(c.Y);
  j["K"] = to_json(c.K);
  j["M"] = to_json(c.M);
  j["A_cl"] = to_json(c.A_cl);
  j["spectral_radius_closed_loop"] = spectral_radius(c.A_cl);
  j["lmi_min_eigenvalue"] = verify_lmi(c);
  j["F"] = to_json(b.F);
  j["sigma"] = std::vector<double>(b.sigma.data(), b.sigma.data() + b.sigma.size());
  // u_k = trajectory_gain · w̃ₖ₋₁, row-major m × (L+1)·w
  const Matrix& tg = c.trajectory_gain;
  std::vector<double> flat;
  for (Eigen::Index i = 0; i < tg.rows(); ++i)
    for (Eigen::Index k = 0; k < tg.cols(); ++k) flat.push_back(tg(i, k));
  j["trajectory_gain"] = {{"rows", tg.rows()}, {"cols", tg.cols()}, {"data", flat}};
  return j;
}

/// Rebuilds a controller; the transition model is recomputed from the stored
/// basis and the deployment matrix is taken verbatim.
[[nodiscard]] inline Controller controller_from_json(const json& j, double tol_rel = kDefaultRankTol) {
  try {
    const Partition part{j.at("m").get<Eigen::Index>(), j.at("p").get<Eigen::Index>()};
    const Eigen::Index L = j.at("L").get<Eigen::Index>();
    const Eigen::Index r = j.at("r").get<Eigen::Index>();
    BehaviorBasis b;
    b.F = matrix_from_json(j.at("F"), "controller F", r);
    const auto sigma = j.at("sigma").get<std::vector<double>>();
    b.sigma = Eigen::Map<const Vector>(sigma.data(), static_cast<Eigen::Index>(sigma.size()));
    b.L = L;
    b.part = part;
    if (b.F.cols() != r || b.F.rows() != b.window_length()) {
      throw InvalidInput("controller file: F has shape " + std::to_string(b.F.rows()) + "x" +
                         std::to_string(b.F.cols()) + ", expected " +
                         std::to_string(b.window_length()) + "x" + std::to_string(r));
    }
    Controller c;
    c.tm = build_transition(b, tol_rel);
    c.W = matrix_from_json(j.at("W"), "controller W", r);
    c.Y = matrix_from_json(j.at("Y"), "controller Y", r);
    c.K = matrix_from_json(j.at("K"), "controller K", r);
    c.M = matrix_from_json(j.at("M"), "controller M", r);
    c.A_cl = matrix_from_json(j.at("A_cl"), "controller A_cl", r);
    c.state_gain = c.tm.Pi_u * b.F * c.A_cl;
    const json& tg = j.at("trajectory_gain");
    const auto rows = tg.at("rows").get<Eigen::Index>();
    const auto cols = tg.at("cols").get<Eigen::Index>();
    const auto data = tg.at("data").get<std::vector<double>>();
    if (rows != part.m || cols != b.window_length() ||
        static_cast<Eigen::Index>(data.size()) != rows * cols) {
      throw InvalidInput("controller file: trajectory_gain has inconsistent shape");
    }
    c.trajectory_gain = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                       Eigen::RowMajor>>(data.data(), rows, cols);
    return c;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("controller file: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// SVG plot: one 800×200 panel per manifest component
// ---------------------------------------------------------------------------

inline void write_svg_plot(std::ostream& os, const Trajectory& traj, const std::string& title) {
  constexpr int kWidth = 800;
  constexpr int kPanel = 200;
  constexpr int kLeft = 70, kRight = 20, kTop = 30, kBottom = 40;
  const Partition& part = traj.partition();
  const Eigen::Index comps = part.w();
  const Eigen::Index steps = traj.size();

  auto fmt = [](double v) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);
    s << v;
    return s.str();
  };
  auto label_num = [](double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
  };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kPanel * comps << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (Eigen::Index c = 0; c < comps; ++c) {
    const std::string name = c < part.m ? "u" + std::to_string(c + 1)
                                        : "y" + std::to_string(c - part.m + 1);
    const double y0 = static_cast<double>(c * kPanel);
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kPanel - kTop - kBottom;
    double lo = 0.0, hi = 0.0;
    if (steps > 0) {
      lo = std::min(0.0, traj.samples().col(c).minCoeff());
      hi = std::max(0.0, traj.samples().col(c).maxCoeff());
    }
    if (hi - lo <= 0.0) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double t0 = static_cast<double>(traj.start_time());
    const double span = std::max<double>(1.0, static_cast<double>(steps - 1));
    auto px = [&](double k) { return kLeft + plot_w * (k / span); };
    auto py = [&](double v) { return y0 + kTop + plot_h * (hi - v) / (hi - lo); };

    os << "<g>\n";
    os << "<text x=\"" << kLeft << "\" y=\"" << fmt(y0 + 18) << "\" font-weight=\"bold\">" << title
       << " - " << name << "</text>\n";
    os << "<rect x=\"" << kLeft << "\" y=\"" << fmt(y0 + kTop) << "\" width=\"" << fmt(plot_w)
       << "\" height=\"" << fmt(plot_h) << "\" fill=\"none\" stroke=\"#888\"/>\n";
    os << "<line x1=\"" << kLeft << "\" y1=\"" << fmt(py(0.0)) << "\" x2=\"" << fmt(kLeft + plot_w)
       << "\" y2=\"" << fmt(py(0.0)) << "\" stroke=\"#ccc\" stroke-dasharray=\"4 3\"/>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << fmt(py(hi) + 4) << "\" text-anchor=\"end\">"
       << label_num(hi) << "</text>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << fmt(py(lo) + 4) << "\" text-anchor=\"end\">"
       << label_num(lo) << "</text>\n";
    os << "<text x=\"" << kLeft << "\" y=\"" << fmt(y0 + kPanel - 22) << "\" text-anchor=\"middle\">"
       << static_cast<long>(t0) << "</text>\n";
    os << "<text x=\"" << fmt(kLeft + plot_w) << "\" y=\"" << fmt(y0 + kPanel - 22)
       << "\" text-anchor=\"middle\">" << static_cast<long>(t0 + span) << "</text>\n";
    os << "<text x=\"" << fmt(kLeft + plot_w / 2) << "\" y=\"" << fmt(y0 + kPanel - 8)
       << "\" text-anchor=\"middle\">step index k</text>\n";
    os << "<text x=\"16\" y=\"" << fmt(y0 + kTop + plot_h / 2) << "\" text-anchor=\"middle\">"
       << name << "</text>\n";
    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (Eigen::Index k = 0; k < steps; ++k) {
      if (k) os << ' ';
      os << fmt(px(static_cast<double>(k))) << ',' << fmt(py(traj.samples()(k, c)));
    }
    os << "\"/>\n</g>\n";
  }
  os << "</svg>\n";
}

}  // namespace ddc::io
