#include "matchprior/core/dataset.hpp"

#include "matchprior/core/error.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace matchprior {

Dataset::Dataset(const std::vector<Observation>& obs) : n_(obs.size()) {
  if (obs.empty()) fail(ErrorKind::InvalidArgument, "dataset needs at least one observation");
  r_ = obs.front().response.size();
  k_ = obs.front().covariates.size();
  if (r_ == 0) fail(ErrorKind::InvalidArgument, "observation has empty response");
  y_.reserve(n_ * r_);
  x_.reserve(n_ * k_);
  for (const auto& o : obs) {
    if (o.response.size() != r_ || o.covariates.size() != k_)
      fail(ErrorKind::InvalidArgument, "observations are not structurally identical");
    y_.insert(y_.end(), o.response.begin(), o.response.end());
    x_.insert(x_.end(), o.covariates.begin(), o.covariates.end());
  }
}

Dataset::Dataset(std::size_t response_dim, std::vector<double> responses, std::size_t covariate_dim,
                 std::vector<double> covariates)
    : r_(response_dim), k_(covariate_dim), y_(std::move(responses)), x_(std::move(covariates)) {
  if (r_ == 0 || y_.empty() || y_.size() % r_ != 0)
    fail(ErrorKind::InvalidArgument, "response buffer does not match response dimension");
  n_ = y_.size() / r_;
  if (x_.size() != n_ * k_) fail(ErrorKind::InvalidArgument, "covariate buffer does not match row count");
}

std::vector<double> Dataset::response_sums() const {
  std::vector<double> s(r_, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < r_; ++j) s[j] += y_[i * r_ + j];
  return s;
}

Dataset Dataset::slice(std::size_t first, std::size_t count) const {
  if (first + count > n_ || count == 0) fail(ErrorKind::InvalidArgument, "slice out of range");
  std::vector<double> y(y_.begin() + static_cast<std::ptrdiff_t>(first * r_),
                        y_.begin() + static_cast<std::ptrdiff_t>((first + count) * r_));
  std::vector<double> x(x_.begin() + static_cast<std::ptrdiff_t>(first * k_),
                        x_.begin() + static_cast<std::ptrdiff_t>((first + count) * k_));
  return Dataset(r_, std::move(y), k_, std::move(x));
}

Dataset Dataset::select(std::span<const std::size_t> rows) const {
  std::vector<double> y;
  std::vector<double> x;
  y.reserve(rows.size() * r_);
  x.reserve(rows.size() * k_);
  for (std::size_t i : rows) {
    if (i >= n_) fail(ErrorKind::InvalidArgument, "row index out of range");
    auto o = (*this)[i];
    y.insert(y.end(), o.response.begin(), o.response.end());
    x.insert(x.end(), o.covariates.begin(), o.covariates.end());
  }
  return Dataset(r_, std::move(y), k_, std::move(x));
}

Dataset Dataset::with_intercept() const {
  std::vector<double> x;
  x.reserve(n_ * (k_ + 1));
  for (std::size_t i = 0; i < n_; ++i) {
    x.push_back(1.0);
    auto row = (*this)[i].covariates;
    x.insert(x.end(), row.begin(), row.end());
  }
  return Dataset(r_, y_, k_ + 1, std::move(x));
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Parses column names like "y", "y3", "x12" into (prefix, index); index 0 for bare "y".
bool column_role(const std::string& name, char prefix, int& index) {
  if (name.empty() || name[0] != prefix) return false;
  if (name.size() == 1) {
    index = 0;
    return prefix == 'y';
  }
  int v = 0;
  auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), v);
  if (ec != std::errc() || ptr != name.data() + name.size() || v < 1) return false;
  index = v;
  return true;
}

}  // namespace

Dataset parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split_fields(line);
    break;
  }
  if (header.empty()) fail(ErrorKind::ParseError, "missing header row");

  std::map<int, std::size_t> ycols;
  std::map<int, std::size_t> xcols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    int idx = 0;
    if (column_role(header[c], 'y', idx)) {
      if (!ycols.emplace(idx, c).second) fail(ErrorKind::ParseError, "duplicate column " + header[c]);
    } else if (column_role(header[c], 'x', idx)) {
      if (!xcols.emplace(idx, c).second) fail(ErrorKind::ParseError, "duplicate column " + header[c]);
    }
  }
  if (ycols.empty()) fail(ErrorKind::ParseError, "no response column (y or y1..yd)");
  if (ycols.count(0) && ycols.size() > 1) fail(ErrorKind::ParseError, "mixes 'y' with 'y1..yd'");
  int expect = ycols.count(0) ? 0 : 1;
  for (const auto& [i, c] : ycols)
    if (i != expect++) fail(ErrorKind::ParseError, "response columns must be y1..yd without gaps");
  expect = 1;
  for (const auto& [i, c] : xcols)
    if (i != expect++) fail(ErrorKind::ParseError, "covariate columns must be x1..xk without gaps");

  std::vector<double> y;
  std::vector<double> x;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_fields(line);
    if (fields.size() != header.size())
      fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                      std::to_string(header.size()) + " fields");
    for (const auto& [i, c] : ycols) y.push_back(parse_number(fields[c], line_no));
    for (const auto& [i, c] : xcols) x.push_back(parse_number(fields[c], line_no));
  }
  if (y.empty()) fail(ErrorKind::ParseError, "no data rows");
  return Dataset(ycols.size(), std::move(y), xcols.size(), std::move(x));
}

Dataset load_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

Dataset parse_banknote(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> y;
  std::vector<double> x;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_fields(line);
    if (fields.size() != 5)
      fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": banknote rows have 5 columns");
    for (int j = 0; j < 4; ++j) x.push_back(parse_number(fields[static_cast<std::size_t>(j)], line_no));
    const double label = parse_number(fields[4], line_no);
    if (label != 0.0 && label != 1.0)
      fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": class label must be 0 or 1");
    y.push_back(label);
  }
  if (y.empty()) fail(ErrorKind::ParseError, "no data rows");
  return Dataset(1, std::move(y), 4, std::move(x));
}

Dataset load_banknote(const std::filesystem::path& path) { return parse_banknote(read_file(path)); }

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out.precision(17);
  const auto r = data.response_dim();
  const auto k = data.covariate_dim();
  for (std::size_t j = 0; j < r; ++j) out << (j ? "," : "") << (r == 1 ? std::string("y") : "y" + std::to_string(j + 1));
  for (std::size_t j = 0; j < k; ++j) out << ",x" << j + 1;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto o = data[i];
    for (std::size_t j = 0; j < r; ++j) out << (j ? "," : "") << o.response[j];
    for (std::size_t j = 0; j < k; ++j) out << ',' << o.covariates[j];
    out << '\n';
  }
}

}  // namespace matchprior
