#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "hybrid/scenario.hpp"

#ifndef HYBRID_VERSION
#define HYBRID_VERSION "0.0.0"
#endif

namespace hybrid {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing: " + std::generic_category().message(errno));
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string() + ": " + std::generic_category().message(errno));
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

template <typename Int>
Int parse_int(const std::string& text) {
  Int value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) throw Error("not an integer: '" + text + "'");
  return value;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

void write_snapshot(const SnapshotRecord& r, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "time,cell,x,rho,ux,T,h,beta,np\n";
  const std::string t = format_double(r.time);
  for (std::size_t j = 0; j < r.n_cells(); ++j) {
    out << t << ',' << j << ',' << format_double(r.x[j]) << ',' << format_double(r.rho[j]) << ','
        << format_double(r.ux[j]) << ',' << format_double(r.T[j]) << ',' << format_double(r.h[j]) << ','
        << format_double(r.beta[j]) << ',' << r.np[j] << '\n';
  }
  finish(out, path);
}

void write_series(const std::vector<SeriesEntry>& series, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "step,time,dt,total_particles\n";
  for (const auto& e : series) {
    out << e.step << ',' << format_double(e.time) << ',' << format_double(e.dt) << ',' << e.total_particles << '\n';
  }
  finish(out, path);
}

SnapshotRecord read_snapshot(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "time,cell,x,rho,ux,T,h,beta,np") {
    throw Error("unexpected snapshot header in " + path.string());
  }
  SnapshotRecord r;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 9) throw Error("malformed snapshot row in " + path.string());
    r.time = parse_double(f[0]);
    r.x.push_back(parse_double(f[2]));
    r.rho.push_back(parse_double(f[3]));
    r.ux.push_back(parse_double(f[4]));
    r.T.push_back(parse_double(f[5]));
    r.h.push_back(parse_double(f[6]));
    r.beta.push_back(parse_double(f[7]));
    r.np.push_back(parse_int<std::size_t>(f[8]));
  }
  r.total_particles = 0;
  for (auto n : r.np) r.total_particles += n;
  return r;
}

std::vector<SeriesEntry> read_series(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "step,time,dt,total_particles") {
    throw Error("unexpected series header in " + path.string());
  }
  std::vector<SeriesEntry> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw Error("malformed series row in " + path.string());
    out.push_back({parse_int<std::int64_t>(f[0]), parse_double(f[1]), parse_double(f[2]),
                   parse_int<std::size_t>(f[3])});
  }
  return out;
}

void write_manifest(const ScenarioConfig& config, const RunOptions& options, const RunResult& result,
                    const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["version"] = HYBRID_VERSION;
  j["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  j["compiler"] = __VERSION__;
  j["mode"] = to_string(options.mode);
  j["plain_dsmc"] = options.plain_dsmc;
  j["config"] = serialize_config(config);
  j["seed"] = config.seed;
  j["steps"] = result.steps;
  j["wall_seconds"] = result.wall_seconds;
  nlohmann::ordered_json snaps = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < result.snapshots.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "snapshot_%03zu.csv", k);
    snaps.push_back({{"file", name}, {"time", result.snapshots[k].time}});
  }
  j["snapshots"] = snaps;
  j["series"] = "series.csv";
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

}  // namespace hybrid
