#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <boost/crc.hpp>
#include <nlohmann/json.hpp>

#include "smcprice/harness/config.hpp"

namespace smcprice {

inline constexpr const char* kVersion = "1.0.0";

struct RepRow {
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  double estimate = 0.0;
  double ess_final = 0.0;
  std::size_t resample_epochs = 0;
  double wall_ms = 0.0;
  std::vector<double> extras;     // values for RunReport::extra_names
  std::vector<double> ess_trace;  // per step
};

struct Aggregate {
  double mean = 0.0;
  double variance = 0.0;  // sample variance, n - 1 denominator
  double two_sd = 0.0;
  std::size_t n = 0;
};

inline Aggregate aggregate(const std::vector<double>& xs) {
  Aggregate a;
  a.n = xs.size();
  if (xs.empty()) return a;
  for (double x : xs) a.mean += x;
  a.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    for (double x : xs) a.variance += (x - a.mean) * (x - a.mean);
    a.variance /= static_cast<double>(xs.size() - 1);
  }
  a.two_sd = 2.0 * std::sqrt(a.variance);
  return a;
}

struct RunReport {
  std::string experiment;
  std::string method;
  std::string config_text;
  std::uint64_t base_seed = 0;
  std::vector<std::string> extra_names;
  std::vector<RepRow> rows;

  std::uint32_t config_hash() const {
    boost::crc_32_type crc;
    crc.process_bytes(config_text.data(), config_text.size());
    return crc.checksum();
  }

  std::vector<double> column(const std::string& name) const {
    std::vector<double> out;
    for (const auto& r : rows) {
      if (name == "estimate")
        out.push_back(r.estimate);
      else if (name == "ess_final")
        out.push_back(r.ess_final);
      else if (name == "resample_epochs")
        out.push_back(static_cast<double>(r.resample_epochs));
      else
        for (std::size_t k = 0; k < extra_names.size(); ++k)
          if (extra_names[k] == name) out.push_back(r.extras[k]);
    }
    return out;
  }

  std::vector<std::string> columns() const {
    std::vector<std::string> c = {"estimate", "ess_final", "resample_epochs"};
    c.insert(c.end(), extra_names.begin(), extra_names.end());
    return c;
  }
};

struct VarianceRatio {
  double ratio = 0.0;
  double jackknife_se = 0.0;
};

/**
 * Var(b) / Var(a) over the per-rep estimates, with a delete-one jackknife
 * standard error that drops each rep of either report in turn.
 */
inline VarianceRatio compare_variance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw ConfigError("compare_variance: need at least two reps per report");
  auto leave_out = [](const std::vector<double>& xs, std::size_t skip) {
    std::vector<double> ys;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (i != skip) ys.push_back(xs[i]);
    return aggregate(ys).variance;
  };
  const double va = aggregate(a).variance, vb = aggregate(b).variance;
  VarianceRatio out;
  out.ratio = vb / va;
  double jk = 0.0;
  for (int side = 0; side < 2; ++side) {
    const auto& xs = side == 0 ? a : b;
    const double n = static_cast<double>(xs.size());
    std::vector<double> r(xs.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      r[i] = side == 0 ? vb / leave_out(a, i) : leave_out(b, i) / va;
      mean += r[i];
    }
    mean /= n;
    for (double v : r) jk += (n - 1.0) / n * (v - mean) * (v - mean);
  }
  out.jackknife_se = std::sqrt(jk);
  return out;
}

inline VarianceRatio compare_variance(const RunReport& a, const RunReport& b) {
  return compare_variance(a.column("estimate"), b.column("estimate"));
}

inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Per-rep rows; no timing columns, so reruns are byte-identical.
inline std::string reps_csv(const RunReport& r) {
  std::string out = "rep,seed";
  for (const auto& c : r.columns()) out += "," + c;
  out += "\n";
  for (const auto& row : r.rows) {
    out += std::to_string(row.rep) + "," + std::to_string(row.seed) + "," + format_g17(row.estimate) + "," +
           format_g17(row.ess_final) + "," + std::to_string(row.resample_epochs);
    for (double e : row.extras) out += "," + format_g17(e);
    out += "\n";
  }
  return out;
}

inline std::string summary_csv(const RunReport& r) {
  std::string out = "quantity,mean,two_sd,variance,reps\n";
  for (const auto& c : r.columns()) {
    const auto a = aggregate(r.column(c));
    out += c + "," + format_g17(a.mean) + "," + format_g17(a.two_sd) + "," + format_g17(a.variance) + "," +
           std::to_string(a.n) + "\n";
  }
  return out;
}

inline std::string ess_trace_csv(const RunReport& r) {
  std::string out = "rep,step,ess\n";
  for (const auto& row : r.rows)
    for (std::size_t k = 0; k < row.ess_trace.size(); ++k)
      out += std::to_string(row.rep) + "," + std::to_string(k) + "," + format_g17(row.ess_trace[k]) + "\n";
  return out;
}

inline nlohmann::json report_json(const RunReport& r) {
  using nlohmann::json;
  char hash[16];
  std::snprintf(hash, sizeof hash, "%08x", r.config_hash());
  json j;
  j["tool"] = "smcprice";
  j["version"] = kVersion;
  j["experiment"] = r.experiment;
  j["method"] = r.method;
  j["base_seed"] = r.base_seed;
  j["config"] = r.config_text;
  j["config_hash"] = hash;
  json rows = json::array();
  for (const auto& row : r.rows) {
    json o;
    o["rep"] = row.rep;
    o["seed"] = row.seed;
    o["estimate"] = row.estimate;
    o["ess_final"] = row.ess_final;
    o["resample_epochs"] = row.resample_epochs;
    o["wall_ms"] = row.wall_ms;
    for (std::size_t k = 0; k < r.extra_names.size(); ++k) o[r.extra_names[k]] = row.extras[k];
    rows.push_back(o);
  }
  j["reps"] = rows;
  json agg;
  for (const auto& c : r.columns()) {
    const auto a = aggregate(r.column(c));
    agg[c] = {{"mean", a.mean}, {"two_sd", a.two_sd}, {"variance", a.variance}, {"n", a.n}};
  }
  j["aggregates"] = agg;
  return j;
}

/// Reads the per-rep estimates and embedded config back from report.json.
inline RunReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open report '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  RunReport r;
  r.experiment = j.value("experiment", "");
  r.method = j.value("method", "");
  r.config_text = j.value("config", "");
  r.base_seed = j.value("base_seed", std::uint64_t{0});
  for (const auto& o : j.at("reps")) {
    RepRow row;
    row.rep = o.at("rep").get<std::size_t>();
    row.seed = o.at("seed").get<std::uint64_t>();
    row.estimate = o.at("estimate").get<double>();
    row.ess_final = o.value("ess_final", 0.0);
    row.resample_epochs = o.value("resample_epochs", std::size_t{0});
    row.wall_ms = o.value("wall_ms", 0.0);
    r.rows.push_back(row);
  }
  return r;
}

inline void write_artifacts(const RunReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& body) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + (dir / name).string() + "'");
    out << body;
  };
  put("summary.csv", summary_csv(r));
  put("reps.csv", reps_csv(r));
  put("ess_trace.csv", ess_trace_csv(r));
  put("report.json", report_json(r).dump(2) + "\n");
}

}  // namespace smcprice
