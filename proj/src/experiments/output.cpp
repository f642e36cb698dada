#include "matchprior/experiments/experiments.hpp"

#include "matchprior/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#ifndef MATCHPRIOR_GIT_HASH
#define MATCHPRIOR_GIT_HASH "unknown"
#endif

namespace matchprior::experiments {

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string secs(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::vector<const GapRecord*> sorted(const std::vector<GapRecord>& rs) {
  std::vector<const GapRecord*> out;
  for (const auto& r : rs) out.push_back(&r);
  std::sort(out.begin(), out.end(), [](const GapRecord* a, const GapRecord* b) {
    return std::tie(a->n, a->rep, a->label) < std::tie(b->n, b->rep, b->label);
  });
  return out;
}

Index width(const std::vector<GapRecord>& rs) {
  Index d = 0;
  for (const auto& r : rs) d = std::max(d, r.estimate.size());
  return d;
}

void cells(std::ostringstream& os, const Vector& v, Index d) {
  for (Index i = 0; i < d; ++i) {
    os << ',';
    if (i < v.size()) os << num(v(i));
  }
}

struct Moments {
  std::size_t count = 0;
  double mean = 0;
  double m2 = 0;
  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }
  double sd() const { return count > 1 ? std::sqrt(m2 / static_cast<double>(count - 1)) : 0.0; }
};

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + p.string());
  out << text;
  if (!out) fail(ErrorKind::IoError, "write failed for " + p.string());
}

}  // namespace

std::string git_hash() { return MATCHPRIOR_GIT_HASH; }

std::string records_csv(const RunResult& r) {
  const Index d = width(r.records);
  std::ostringstream os;
  os << "experiment,n,rep,label,reference,status,l2_gap";
  for (const char* col : {"est", "gap", "se"})
    for (Index i = 1; i <= d; ++i) os << ',' << col << i;
  os << '\n';
  for (const GapRecord* g : sorted(r.records)) {
    os << r.experiment << ',' << g->n << ',' << g->rep << ',' << g->label << ',' << g->reference << ',' << g->status
       << ',';
    if (g->gap.size() > 0) os << num(g->l2);
    cells(os, g->estimate, d);
    cells(os, g->gap, d);
    cells(os, g->mc_se, d);
    os << '\n';
  }
  return os.str();
}

std::string summary_csv(const RunResult& r) {
  std::map<std::pair<std::size_t, std::string>, std::pair<Moments, std::size_t>> acc;
  std::map<std::string, std::string> refs;
  for (const auto& g : r.records) {
    auto& [m, rows] = acc[{g.n, g.label}];
    ++rows;
    if (g.gap.size() > 0) m.add(g.l2);
    refs[g.label] = g.reference;
  }
  std::ostringstream os;
  os << "experiment,n,label,reference,rows,ok,mean_l2_gap,sd_l2_gap\n";
  for (const auto& [key, v] : acc) {
    const auto& [m, rows] = v;
    os << r.experiment << ',' << key.first << ',' << key.second << ',' << refs[key.second] << ',' << rows << ','
       << m.count << ',' << (m.count ? num(m.mean) : "") << ',' << (m.count ? num(m.sd()) : "") << '\n';
  }
  return os.str();
}

std::string timing_csv(const RunResult& r) {
  std::map<std::size_t, std::map<std::string, Moments>> acc;
  for (const auto& g : r.records)
    if (std::isfinite(g.seconds)) acc[g.n][g.label].add(g.seconds);
  std::ostringstream os;
  os << "n";
  for (const auto& l : r.timing_labels) os << ',' << l << "_mean_s," << l << "_sd_s";
  os << '\n';
  for (const auto& [n, by_label] : acc) {
    os << n;
    for (const auto& l : r.timing_labels) {
      const auto it = by_label.find(l);
      if (it == by_label.end()) os << ",,";
      else os << "," << secs(it->second.mean) << "," << secs(it->second.sd());
    }
    os << '\n';
  }
  return os.str();
}

nlohmann::json meta_json(const ExperimentConfig& c, const RunResult& r) {
  nlohmann::json j;
  j["experiment"] = r.experiment;
  j["config"] = to_json(c);
  j["config_file"] = c.raw;
  j["git_hash"] = git_hash();
  j["workers"] = worker_count(c.threads);
  j["notes"] = r.notes;
  j["timing_labels"] = r.timing_labels;
  auto& seeds = j["seeds"] = nlohmann::json::array();
  for (const auto& s : r.seeds) seeds.push_back({{"n", s.n}, {"rep", s.rep}, {"seed", s.seed}});
  return j;
}

void write_outputs(const ExperimentConfig& c, const RunResult& r) {
  std::error_code ec;
  std::filesystem::create_directories(c.output, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create " + c.output.string() + ": " + ec.message());
  write_file(c.output / "records.csv", records_csv(r));
  write_file(c.output / "summary.csv", summary_csv(r));
  write_file(c.output / "timing.csv", timing_csv(r));
  write_file(c.output / "meta.json", meta_json(c, r).dump(2) + "\n");
}

}  // namespace matchprior::experiments
