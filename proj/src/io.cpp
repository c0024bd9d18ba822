#include "ellipmeta/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ellipmeta/error.hpp"

namespace ellipmeta {

using nlohmann::json;

InputFormat parse_input_format(const std::string& s) {
  if (s == "json") return InputFormat::kJson;
  if (s == "csv") return InputFormat::kCsv;
  throw Error(ErrorCode::kInput, "unknown format '" + s + "' (expected json|csv)");
}

InputFormat infer_input_format(const std::string& path) {
  const auto dot = path.rfind('.');
  return dot != std::string::npos && path.substr(dot) == ".csv" ? InputFormat::kCsv
                                                                 : InputFormat::kJson;
}

namespace {

Dataset build(std::vector<std::string> labels, Matrix effects, std::vector<SymMatrix> within) {
  try {
    return Dataset(std::move(labels), std::move(effects), std::move(within));
  } catch (const NotPositiveDefiniteError&) {
    throw;
  } catch (const Error& e) {
    throw Error(ErrorCode::kInput, e.what());
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, int line, const char* column) {
  const std::string t = trim(field);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v)) {
    std::ostringstream os;
    os << "line " << line << ": column " << column << " is not a number ('" << t << "')";
    throw Error(ErrorCode::kInput, os.str());
  }
  return v;
}

}  // namespace

Dataset ingest_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInput, std::string("invalid JSON: ") + e.what());
  }
  try {
    const int p = doc.at("p").get<int>();
    if (p < 1) throw Error(ErrorCode::kInput, "p must be >= 1");
    const auto& studies = doc.at("studies");
    if (!studies.is_array() || studies.empty()) {
      throw Error(ErrorCode::kInput, "'studies' must be a non-empty array");
    }
    const auto n = static_cast<int>(studies.size());
    std::vector<std::string> labels;
    Matrix effects(p, n);
    std::vector<SymMatrix> within;
    for (int i = 0; i < n; ++i) {
      const auto& s = studies[static_cast<std::size_t>(i)];
      std::string id = s.contains("id") ? (s["id"].is_string() ? s["id"].get<std::string>()
                                                                : s["id"].dump())
                                        : std::to_string(i + 1);
      const auto eff = s.at("effects").get<std::vector<double>>();
      const auto cov = s.at("cov").get<std::vector<std::vector<double>>>();
      if (static_cast<int>(eff.size()) != p) {
        throw Error(ErrorCode::kInput, "study " + id + ": effects must have p entries");
      }
      if (static_cast<int>(cov.size()) != p) {
        throw Error(ErrorCode::kInput, "study " + id + ": cov must be p x p");
      }
      Matrix u(p, p);
      for (int r = 0; r < p; ++r) {
        if (static_cast<int>(cov[static_cast<std::size_t>(r)].size()) != p) {
          throw Error(ErrorCode::kInput, "study " + id + ": cov must be p x p");
        }
        for (int c = 0; c < p; ++c) u(r, c) = cov[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      }
      if (!u.isApprox(u.transpose(), 1e-12)) {
        throw Error(ErrorCode::kInput, "study " + id + ": cov is not symmetric");
      }
      for (int r = 0; r < p; ++r) effects(r, i) = eff[static_cast<std::size_t>(r)];
      labels.push_back(std::move(id));
      within.emplace_back(u);
    }
    return build(std::move(labels), std::move(effects), std::move(within));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInput, std::string("malformed dataset: ") + e.what());
  }
}

Dataset ingest_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool header = false;
  std::vector<std::string> labels;
  std::vector<Vector> cols;
  std::vector<SymMatrix> within;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(t);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(trim(cell));
    if (!header) {
      const std::vector<std::string> expected{"study", "x1", "x2", "sd1", "rho12", "sd2"};
      if (f != expected) {
        throw Error(ErrorCode::kInput, "CSV header must be study,x1,x2,sd1,rho12,sd2");
      }
      header = true;
      continue;
    }
    if (f.size() != 6) {
      throw Error(ErrorCode::kInput, "line " + std::to_string(line_no) + ": expected 6 columns");
    }
    const double x1 = parse_number(f[1], line_no, "x1");
    const double x2 = parse_number(f[2], line_no, "x2");
    const double sd1 = parse_number(f[3], line_no, "sd1");
    const double rho = parse_number(f[4], line_no, "rho12");
    const double sd2 = parse_number(f[5], line_no, "sd2");
    if (sd1 < 0.0 || sd2 < 0.0) {
      throw Error(ErrorCode::kInput, "study " + f[0] + ": standard deviations must be >= 0");
    }
    if (std::abs(rho) > 1.0) {
      throw Error(ErrorCode::kInput, "study " + f[0] + ": |rho12| > 1");
    }
    Matrix u(2, 2);
    u << sd1 * sd1, rho * sd1 * sd2, rho * sd1 * sd2, sd2 * sd2;
    labels.push_back(f[0]);
    cols.push_back((Vector(2) << x1, x2).finished());
    within.emplace_back(u);
  }
  if (!header) throw Error(ErrorCode::kInput, "empty CSV input");
  if (cols.empty()) throw Error(ErrorCode::kInput, "CSV input has no studies");
  Matrix effects(2, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) effects.col(static_cast<Eigen::Index>(i)) = cols[i];
  return build(std::move(labels), std::move(effects), std::move(within));
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kInput, "cannot read '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kInput, "cannot write '" + path + "'");
  f << text;
}

Dataset ingest(const std::string& path, InputFormat format) {
  const std::string text = read_file(path);
  return format == InputFormat::kCsv ? ingest_csv(text) : ingest_json(text);
}

std::string export_json(const Dataset& data) {
  json doc;
  doc["p"] = data.p();
  json studies = json::array();
  for (int i = 0; i < data.n(); ++i) {
    json s;
    s["id"] = data.labels()[static_cast<std::size_t>(i)];
    std::vector<double> eff(static_cast<std::size_t>(data.p()));
    for (int r = 0; r < data.p(); ++r) eff[static_cast<std::size_t>(r)] = data.effects()(r, i);
    s["effects"] = eff;
    json cov = json::array();
    for (int r = 0; r < data.p(); ++r) {
      std::vector<double> row;
      for (int c = 0; c < data.p(); ++c) row.push_back(data.within(i)(r, c));
      cov.push_back(row);
    }
    s["cov"] = cov;
    studies.push_back(s);
  }
  doc["studies"] = studies;
  return doc.dump(2) + "\n";
}

}  // namespace ellipmeta
