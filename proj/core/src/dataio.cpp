#include "byzfed/dataio.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <vector>

#include "byzfed/error.hpp"

namespace byzfed {

namespace fs = std::filesystem;

namespace {

constexpr int kFleetFormatVersion = 1;

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

void write_doubles(std::ofstream& out, const double* data, std::size_t count) {
  static_assert(std::endian::native == std::endian::little, "shard files are little-endian");
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
}

}  // namespace

Matrix read_feature_csv(const fs::path& path, const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = opts.header != HeaderMode::Absent;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto fields = split(line, opts.delimiter);
    std::vector<double> row;
    row.reserve(fields.size());
    bool ok = true;
    for (std::size_t c = 0; c < fields.size() && ok; ++c) {
      if (static_cast<int>(c) == opts.label_column) continue;
      double v;
      ok = parse_double(fields[c], v);
      row.push_back(v);
    }
    if (header_pending) {
      header_pending = false;
      if (opts.header == HeaderMode::Present || !ok) continue;
    }
    if (!ok) throw DataError(path.string() + ":" + std::to_string(line_no) + ": unparsable field");
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(rows.front().size()) +
                      " values, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path.string() + ": no data rows");
  Matrix points(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return points;
}

Matrix read_svmlight(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string tok;
    if (!(tokens >> tok)) continue;  // label
    std::vector<std::pair<std::size_t, double>> row;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad token " + tok);
      const std::string key = tok.substr(0, colon);
      if (key == "qid") continue;
      double value;
      std::size_t index = 0;
      if (!parse_double(tok.substr(colon + 1), value)) throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad value");
      auto [p, ec] = std::from_chars(key.data(), key.data() + key.size(), index);
      if (ec != std::errc() || p != key.data() + key.size() || index == 0) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad feature index " + key);
      }
      dim = std::max(dim, index);
      row.emplace_back(index - 1, value);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || dim == 0) throw DataError(path.string() + ": no data rows");
  Matrix points = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (auto [c, v] : rows[r]) points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
  return points;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void save_fleet(const fs::path& dir, const std::vector<WorkerShard>& shards, const GroundTruth& truth) {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["format_version"] = kFleetFormatVersion;
  manifest["machines"] = shards.size();
  nlohmann::json centers = nlohmann::json::array();
  for (const auto& c : truth.centers) centers.push_back(std::vector<double>(c.data(), c.data() + c.size()));
  manifest["centers"] = centers;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& s : shards) {
    char name[32];
    std::snprintf(name, sizeof name, "shard_%06d.bin", s.machine_id);
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rowmajor = s.X;
    write_doubles(out, rowmajor.data(), static_cast<std::size_t>(rowmajor.size()));
    write_doubles(out, s.y.data(), static_cast<std::size_t>(s.y.size()));
    entries.push_back({{"machine_id", s.machine_id},
                       {"byzantine", s.byzantine},
                       {"true_cluster", s.true_cluster},
                       {"rows", s.X.rows()},
                       {"cols", s.X.cols()},
                       {"responses", s.y.size()},
                       {"file", name}});
  }
  manifest["shards"] = entries;
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

LoadedFleet load_fleet(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("cannot open " + (dir / "manifest.json").string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("fleet manifest: ") + e.what());
  }
  if (manifest.value("format_version", 0) != kFleetFormatVersion) throw DataError("fleet manifest: unsupported format_version");
  LoadedFleet fleet;
  for (const auto& c : manifest.at("centers")) {
    const auto values = c.get<std::vector<double>>();
    fleet.truth.centers.push_back(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
  }
  for (const auto& e : manifest.at("shards")) {
    WorkerShard s;
    s.machine_id = e.at("machine_id").get<int>();
    s.byzantine = e.at("byzantine").get<bool>();
    s.true_cluster = e.at("true_cluster").get<int>();
    const auto rows = e.at("rows").get<Eigen::Index>();
    const auto cols = e.at("cols").get<Eigen::Index>();
    const auto responses = e.at("responses").get<Eigen::Index>();
    std::ifstream bin(dir / e.at("file").get<std::string>(), std::ios::binary);
    if (!bin) throw DataError("cannot open shard file " + e.at("file").get<std::string>());
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> X(rows, cols);
    s.y.resize(responses);
    bin.read(reinterpret_cast<char*>(X.data()), static_cast<std::streamsize>(X.size() * sizeof(double)));
    bin.read(reinterpret_cast<char*>(s.y.data()), static_cast<std::streamsize>(s.y.size() * sizeof(double)));
    if (!bin) throw DataError("truncated shard file " + e.at("file").get<std::string>());
    s.X = X;
    fleet.truth.labels.push_back(s.true_cluster);
    fleet.shards.push_back(std::move(s));
  }
  return fleet;
}

}  // namespace byzfed
