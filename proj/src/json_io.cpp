#include "shlab/json_io.hpp"

#include <atomic>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <fmt/core.h>

namespace shlab {

namespace {

constexpr int kSchemaVersion = 1;

void dump_rec(const OrderedJson& j, int indent, int depth, std::string& out) {
  const bool pretty = indent >= 0;
  const std::string pad(pretty ? static_cast<std::size_t>(indent * depth) : 0, ' ');
  const std::string pad_in(pretty ? static_cast<std::size_t>(indent * (depth + 1)) : 0, ' ');
  switch (j.type()) {
    case nlohmann::detail::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) {
          out += ',';
        }
        first = false;
        if (pretty) {
          out += '\n';
          out += pad_in;
        }
        out += OrderedJson(it.key()).dump();
        out += pretty ? ": " : ":";
        dump_rec(it.value(), indent, depth + 1, out);
      }
      if (pretty) {
        out += '\n';
        out += pad;
      }
      out += '}';
      return;
    }
    case nlohmann::detail::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& item : j) {
        if (!first) {
          out += ',';
        }
        first = false;
        if (pretty) {
          out += '\n';
          out += pad_in;
        }
        dump_rec(item, indent, depth + 1, out);
      }
      if (pretty) {
        out += '\n';
        out += pad;
      }
      out += ']';
      return;
    }
    case nlohmann::detail::value_t::number_float: {
      const double v = j.get<double>();
      if (std::isfinite(v)) {
        out += format_sig17(v);
      } else {
        out += OrderedJson(format_sig17(v)).dump();
      }
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string format_sig17(double value) {
  if (std::isnan(value)) {
    return "nan";
  }
  if (std::isinf(value)) {
    return value > 0.0 ? "inf" : "-inf";
  }
  return fmt::format("{:.17g}", value);
}

std::string dump_json(const OrderedJson& j, int indent) {
  std::string out;
  dump_rec(j, indent, 0, out);
  if (indent >= 0) {
    out += '\n';
  }
  return out;
}

OrderedJson artifact_envelope(const OrderedJson& resolved_config) {
  OrderedJson j;
  j["schema_version"] = kSchemaVersion;
  j["config"] = resolved_config;
  return j;
}

std::string csv_preamble(const OrderedJson& resolved_config) {
  std::string out = fmt::format("# schema_version: {}\n", kSchemaVersion);
  out += "# config: ";
  out += dump_json(resolved_config, -1);
  out += '\n';
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path());
  }
  static std::atomic<unsigned> counter{0};
  const fs::path tmp =
      target.parent_path() /
      fmt::format("{}.tmp{}", target.filename().string(), counter.fetch_add(1));
  {
    std::ofstream stream(tmp, std::ios::binary | std::ios::trunc);
    if (!stream) {
      throw std::runtime_error(fmt::format("cannot open '{}' for writing", tmp.string()));
    }
    stream << content;
    if (!stream) {
      throw std::runtime_error(fmt::format("write to '{}' failed", tmp.string()));
    }
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) {
    throw std::runtime_error(fmt::format("cannot open '{}'", path));
  }
  std::string content((std::istreambuf_iterator<char>(stream)),
                      std::istreambuf_iterator<char>());
  return content;
}

std::string field_to_csv(const Field& f, const OrderedJson& resolved_config) {
  std::string out = csv_preamble(resolved_config);
  out += "x,u\n";
  const std::vector<double> xs = f.grid.nodes();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out += format_sig17(xs[i]);
    out += ',';
    out += format_sig17(f.samples[i]);
    out += '\n';
  }
  return out;
}

Field read_field_csv(const std::string& path) {
  const std::string content = read_file(path);
  std::vector<double> xs;
  std::vector<double> us;
  std::size_t line_start = 0;
  int line_no = 0;
  while (line_start < content.size()) {
    std::size_t line_end = content.find('\n', line_start);
    if (line_end == std::string::npos) {
      line_end = content.size();
    }
    std::string line = content.substr(line_start, line_end - line_start);
    line_start = line_end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty() || line.front() == '#') {
      continue;
    }
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) {
      if (xs.empty()) {
        continue;  // header or stray text before any data
      }
      throw std::invalid_argument(
          fmt::format("{}:{}: expected two comma-separated columns", path, line_no));
    }
    try {
      const double x = std::stod(line.substr(0, comma));
      const double u = std::stod(line.substr(comma + 1));
      xs.push_back(x);
      us.push_back(u);
    } catch (const std::exception&) {
      if (xs.empty()) {
        continue;  // header row such as "x,u"
      }
      throw std::invalid_argument(
          fmt::format("{}:{}: cannot parse '{}' as numbers", path, line_no, line));
    }
  }
  if (xs.size() < 5) {
    throw std::invalid_argument(
        fmt::format("{}: needs at least five data rows, found {}", path, xs.size()));
  }
  const int n = static_cast<int>(xs.size());
  const double h = xs[1] - xs[0];
  if (!(h > 0.0)) {
    throw std::invalid_argument(fmt::format("{}: nodes must be strictly increasing", path));
  }
  const double span = xs.back() - xs.front();
  for (int i = 1; i < n; ++i) {
    if (std::abs((xs[i] - xs[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(span))) {
      throw std::invalid_argument(fmt::format("{}: nodes are not uniformly spaced", path));
    }
  }
  const bool wraps = std::abs((span + h) - 1.0) <= 1e-9;
  if (wraps) {
    if (std::abs(xs.front()) > 1e-9) {
      throw std::invalid_argument(
          fmt::format("{}: torus nodes must start at 0, found {:.6g}", path, xs.front()));
    }
    return Field{Grid::torus(n), std::move(us)};
  }
  return Field{Grid::interval(xs.front(), xs.back(), n), std::move(us)};
}

}  // namespace shlab
