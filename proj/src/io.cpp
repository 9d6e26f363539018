#include "kinlv/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "kinlv/errors.hpp"

namespace kinlv {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw KinlvError(ErrorCode::Io, "cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw KinlvError(ErrorCode::Io, "read failed: " + path);
  return ss.str();
}

void atomic_write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(target.parent_path(), ec);
    if (ec) {
      throw KinlvError(ErrorCode::Io, "cannot create directory for " + path +
                                          ": " + ec.message());
    }
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw KinlvError(ErrorCode::Io, "cannot open for writing: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw KinlvError(ErrorCode::Io, "write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    throw KinlvError(ErrorCode::Io,
                     "rename failed: " + tmp + " -> " + path + ": " + ec.message());
  }
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string digest_hex(const std::string& bytes) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

// --- SVG -------------------------------------------------------------------------

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#17becf"};

}  // namespace

std::string render_svg(const std::string& title,
                       const std::vector<SvgPanel>& panels,
                       const std::string& metadata) {
  constexpr double kWidth = 900.0;
  constexpr double kPanelH = 300.0;
  constexpr double kTop = 40.0;
  constexpr double kMarginL = 70.0, kMarginR = 30.0;
  constexpr double kMarginT = 34.0, kMarginB = 46.0;

  const double total_h = kTop + kPanelH * static_cast<double>(panels.size());
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
    << "\" height=\"" << total_h << "\" viewBox=\"0 0 " << kWidth << " "
    << total_h << "\">\n";
  s << "<metadata>" << xml_escape(metadata) << "</metadata>\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << kWidth / 2
    << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"17\">"
    << xml_escape(title) << "</text>\n";

  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const SvgPanel& panel = panels[pi];
    const double oy = kTop + kPanelH * static_cast<double>(pi);
    const double px0 = kMarginL, px1 = kWidth - kMarginR;
    const double py0 = oy + kMarginT, py1 = oy + kPanelH - kMarginB;

    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    bool first = true;
    for (const SvgSeries& ser : panel.series) {
      for (std::size_t i = 0; i < ser.x.size(); ++i) {
        if (!std::isfinite(ser.x[i]) || !std::isfinite(ser.y[i])) continue;
        if (first) {
          x_min = x_max = ser.x[i];
          y_min = y_max = ser.y[i];
          first = false;
        } else {
          x_min = std::min(x_min, ser.x[i]);
          x_max = std::max(x_max, ser.x[i]);
          y_min = std::min(y_min, ser.y[i]);
          y_max = std::max(y_max, ser.y[i]);
        }
      }
    }
    if (x_max - x_min < 1e-300) x_max = x_min + 1.0;
    const double y_pad = std::max(1e-300, 0.05 * (y_max - y_min));
    y_min -= y_pad;
    y_max += y_pad;

    auto sx = [&](double x) {
      return px0 + (x - x_min) / (x_max - x_min) * (px1 - px0);
    };
    auto sy = [&](double y) {
      return py1 - (y - y_min) / (y_max - y_min) * (py1 - py0);
    };

    s << "<text x=\"" << (px0 + px1) / 2 << "\" y=\"" << py0 - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">"
      << xml_escape(panel.title) << "</text>\n";
    s << "<rect x=\"" << px0 << "\" y=\"" << py0 << "\" width=\"" << px1 - px0
      << "\" height=\"" << py1 - py0
      << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";

    constexpr int kTicks = 5;
    for (int k = 0; k <= kTicks; ++k) {
      const double fx = x_min + (x_max - x_min) * k / kTicks;
      const double fy = y_min + (y_max - y_min) * k / kTicks;
      const double gx = sx(fx), gy = sy(fy);
      s << "<line x1=\"" << gx << "\" y1=\"" << py1 << "\" x2=\"" << gx
        << "\" y2=\"" << py1 + 5 << "\" stroke=\"#333\"/>\n";
      s << "<text x=\"" << gx << "\" y=\"" << py1 + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << short_num(fx) << "</text>\n";
      s << "<line x1=\"" << px0 - 5 << "\" y1=\"" << gy << "\" x2=\"" << px0
        << "\" y2=\"" << gy << "\" stroke=\"#333\"/>\n";
      s << "<text x=\"" << px0 - 8 << "\" y=\"" << gy + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << short_num(fy) << "</text>\n";
    }
    s << "<text x=\"" << (px0 + px1) / 2 << "\" y=\"" << py1 + 36
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">"
      << xml_escape(panel.x_label) << "</text>\n";
    s << "<text x=\"" << px0 - 52 << "\" y=\"" << (py0 + py1) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" transform=\"rotate(-90 "
      << px0 - 52 << " " << (py0 + py1) / 2 << ")\">"
      << xml_escape(panel.y_label) << "</text>\n";

    for (std::size_t si = 0; si < panel.series.size(); ++si) {
      const SvgSeries& ser = panel.series[si];
      const char* color = kPalette[si % 6];
      s << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.4\" points=\"";
      for (std::size_t i = 0; i < ser.x.size(); ++i) {
        if (!std::isfinite(ser.x[i]) || !std::isfinite(ser.y[i])) continue;
        s << short_num(sx(ser.x[i])) << "," << short_num(sy(ser.y[i])) << " ";
      }
      s << "\"/>\n";
      const double lx = px1 - 150.0;
      const double ly = py0 + 16.0 + 16.0 * static_cast<double>(si);
      s << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 22
        << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
      s << "<text x=\"" << lx + 28 << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << xml_escape(ser.label) << "</text>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

// --- Manifest ---------------------------------------------------------------------

std::string current_utc_time() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void write_manifest(const std::string& path, const std::string& dir,
                    RunManifest m) {
  nlohmann::json j;
  j["tool_version"] = m.tool_version;
  j["command"] = m.command;
  j["seed"] = m.seed;
  j["digest_algorithm"] = "fnv1a64";
  if (!m.config_json.empty()) {
    j["config"] = nlohmann::json::parse(m.config_json);
  } else {
    j["config"] = nlohmann::json::object();
  }
  j["started_utc"] = m.started_utc;
  j["finished_utc"] = m.finished_utc;
  nlohmann::json outs = nlohmann::json::array();
  for (ManifestEntry& e : m.outputs) {
    if (e.digest.empty()) {
      e.digest = digest_hex(read_file((std::filesystem::path(dir) / e.file).string()));
    }
    outs.push_back({{"file", e.file}, {"digest", e.digest}});
  }
  j["outputs"] = outs;
  nlohmann::json notes = nlohmann::json::object();
  for (const auto& [k, v] : m.notes) notes[k] = v;
  j["notes"] = notes;
  atomic_write_file(path, j.dump(2) + "\n");
}

RunManifest read_manifest(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw KinlvError(ErrorCode::Io, "manifest parse error: " + path + ": " + e.what());
  }
  RunManifest m;
  try {
    m.tool_version = j.value("tool_version", "");
    m.command = j.value("command", "");
    m.seed = j.value("seed", std::uint64_t{0});
    m.config_json = j.contains("config") ? j["config"].dump() : "";
    m.started_utc = j.value("started_utc", "");
    m.finished_utc = j.value("finished_utc", "");
    if (j.contains("outputs")) {
      for (const auto& e : j["outputs"]) {
        m.outputs.push_back({e.at("file").get<std::string>(),
                             e.at("digest").get<std::string>()});
      }
    }
    if (j.contains("notes")) {
      for (const auto& [k, v] : j["notes"].items()) {
        m.notes[k] = v.get<std::string>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw KinlvError(ErrorCode::Io, "manifest field error: " + path + ": " + e.what());
  }
  return m;
}

bool verify_manifest(const std::string& path, std::string* diagnostic) {
  const RunManifest m = read_manifest(path);
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  for (const ManifestEntry& e : m.outputs) {
    const std::string actual = digest_hex(read_file((dir / e.file).string()));
    if (actual != e.digest) {
      if (diagnostic) {
        *diagnostic = e.file + ": expected " + e.digest + ", got " + actual;
      }
      return false;
    }
  }
  if (diagnostic) diagnostic->clear();
  return true;
}

}  // namespace kinlv
