#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace kinlv {

// 17-significant-digit decimal formatting; round-trips IEEE-754 doubles.
std::string format_g17(double v);

// Reads a whole file into memory. Throws KinlvError(Io).
std::string read_file(const std::string& path);

// Writes content to path via a temporary file in the same directory plus
// rename, so readers never observe a partial file. Throws KinlvError(Io).
void atomic_write_file(const std::string& path, const std::string& content);

// FNV-1a 64-bit content digest, rendered as 16 hex digits.
std::uint64_t fnv1a64(const std::string& bytes);
std::string digest_hex(const std::string& bytes);

// --- Minimal self-contained SVG line plots ------------------------------------

struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};

struct SvgPanel {
  std::string title;
  std::string x_label, y_label;
  std::vector<SvgSeries> series;
};

// Stacked panels with linear axes, ticks, and legends; no external assets.
// The metadata string is embedded verbatim in a <metadata> element.
std::string render_svg(const std::string& title,
                       const std::vector<SvgPanel>& panels,
                       const std::string& metadata);

// --- Run manifest ---------------------------------------------------------------

struct ManifestEntry {
  std::string file;    // path relative to the manifest's directory
  std::string digest;  // fnv1a64 hex of the file content
};

struct RunManifest {
  std::string tool_version;
  std::string command;
  std::uint64_t seed = 0;
  std::string config_json;  // resolved config snapshot
  std::string started_utc;
  std::string finished_utc;
  std::vector<ManifestEntry> outputs;
  std::map<std::string, std::string> notes;  // measured quantities etc.
};

std::string current_utc_time();

// Computes digests for the listed files (paths relative to dir) and writes
// the manifest JSON. Throws KinlvError(Io) on unreadable outputs.
void write_manifest(const std::string& path, const std::string& dir,
                    RunManifest m);

RunManifest read_manifest(const std::string& path);

// Re-digests every listed output; false (with diagnostic) on any mismatch.
bool verify_manifest(const std::string& path, std::string* diagnostic);

}  // namespace kinlv
