#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "kinlv/cli.hpp"
#include "kinlv/config.hpp"
#include "kinlv/errors.hpp"
#include "kinlv/io.hpp"
#include "kinlv/params.hpp"

using namespace kinlv;

namespace {

// Scratch directory wiped on entry so reruns start clean.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string str() const { return path.string(); }
  std::string file(const std::string& rel) const {
    return (path / rel).string();
  }
};

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) {
      out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t c = line.find(',', start);
    if (c == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, c - start));
    start = c + 1;
  }
}

int cli(std::initializer_list<const char*> args) {
  std::vector<const char*> argv{"kinlv"};
  argv.insert(argv.end(), args.begin(), args.end());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("numeric formatting round-trips doubles exactly") {
  const double values[] = {0.0,
                           1.0,
                           0.1,
                           1.0 / 3.0,
                           3.141592653589793,
                           1e-300,
                           5e-324,
                           1.7976931348623157e308,
                           -2.2250738585072014e-308};
  for (double v : values) {
    const std::string s = format_g17(v);
    char* end = nullptr;
    const double back = std::strtod(s.c_str(), &end);
    CHECK(*end == '\0');
    CHECK(back == v);
  }
}

TEST_CASE("content digest matches the published test vectors") {
  CHECK(fnv1a64("") == 14695981039346656037ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(digest_hex("") == "cbf29ce484222325");
  CHECK(digest_hex("a") == "af63dc4c8601ec8c");
  CHECK(digest_hex("kinlv").size() == 16);
  CHECK(fnv1a64("ab") != fnv1a64("ba"));
}

TEST_CASE("atomic writes round trip and create parent directories") {
  TempDir tmp("kinlv_io_atomic");
  const std::string body = "line one\nline two\n";
  atomic_write_file(tmp.file("a.txt"), body);
  CHECK(read_file(tmp.file("a.txt")) == body);

  atomic_write_file(tmp.file("a.txt"), "replaced");
  CHECK(read_file(tmp.file("a.txt")) == "replaced");

  atomic_write_file(tmp.file("deep/nested/b.txt"), "x");
  CHECK(read_file(tmp.file("deep/nested/b.txt")) == "x");

  CHECK_THROWS_AS((void)read_file(tmp.file("missing.txt")), KinlvError);
  try {
    (void)read_file(tmp.file("missing.txt"));
  } catch (const KinlvError& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}

TEST_CASE("manifests verify their outputs and detect tampering") {
  TempDir tmp("kinlv_io_manifest");
  atomic_write_file(tmp.file("a.csv"), "t,x\n0,1\n");
  atomic_write_file(tmp.file("b.csv"), "t,y\n0,2\n");

  RunManifest m;
  m.tool_version = kToolVersion;
  m.command = "demo";
  m.seed = 42;
  m.config_json = "{}";
  m.started_utc = current_utc_time();
  m.finished_utc = current_utc_time();
  m.outputs = {{"a.csv", ""}, {"b.csv", ""}};
  m.notes["answer"] = "42";
  write_manifest(tmp.file("demo_manifest.json"), tmp.str(), m);

  const RunManifest back = read_manifest(tmp.file("demo_manifest.json"));
  CHECK(back.command == "demo");
  CHECK(back.seed == 42);
  CHECK(back.tool_version == kToolVersion);
  REQUIRE(back.outputs.size() == 2);
  CHECK(back.outputs[0].digest.size() == 16);
  CHECK(back.notes.at("answer") == "42");

  std::string diag;
  CHECK(verify_manifest(tmp.file("demo_manifest.json"), &diag));
  CHECK(diag.empty());

  atomic_write_file(tmp.file("b.csv"), "t,y\n0,3\n");
  CHECK(!verify_manifest(tmp.file("demo_manifest.json"), &diag));
  CHECK(diag.find("b.csv") != std::string::npos);

  RunManifest missing = m;
  missing.outputs = {{"ghost.csv", ""}};
  CHECK_THROWS_AS(
      write_manifest(tmp.file("bad_manifest.json"), tmp.str(), missing),
      KinlvError);
}

TEST_CASE("rendered plots are self-contained documents") {
  SvgPanel panel;
  panel.title = "two series";
  panel.x_label = "t";
  panel.y_label = "value";
  panel.series = {{"first", {0.0, 1.0, 2.0}, {0.0, 1.0, 0.5}},
                  {"second", {0.0, 1.0, 2.0}, {1.0, 0.5, 0.25}}};
  const std::string svg =
      render_svg("demo plot", {panel, panel}, "config_digest=deadbeef");

  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("demo plot") != std::string::npos);
  CHECK(svg.find("config_digest=deadbeef") != std::string::npos);
  CHECK(svg.find("<metadata>") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(svg.find("first") != std::string::npos);
  CHECK(svg.find("<script") == std::string::npos);
  CHECK(svg.find("<image") == std::string::npos);
  CHECK(svg.find("href") == std::string::npos);

  // The only absolute URL is the SVG namespace itself.
  std::string scrubbed = svg;
  const std::string ns = "http://www.w3.org/2000/svg";
  for (std::size_t at = scrubbed.find(ns); at != std::string::npos;
       at = scrubbed.find(ns)) {
    scrubbed.erase(at, ns.size());
  }
  CHECK(scrubbed.find("http") == std::string::npos);
}

TEST_CASE("config serialization is a fixed point of parsing") {
  RunSettings defaults;
  const std::string j1 = settings_to_json(defaults);
  RunSettings parsed;
  apply_config_text(parsed, j1);
  CHECK(settings_to_json(parsed) == j1);

  RunSettings custom;
  custom.params.gamma = 0.2;
  custom.params.risk_g = Risk::One;
  custom.initial.c_f0 = 0.5;
  custom.initial.shape = DensityShape::LogNormal;
  custom.t_end = 7.5;
  custom.seed = 99;
  custom.agents = 1234;
  custom.regime = RiskRegime::HalfOne;
  custom.out_times = {0.0, 1.0, 7.5};
  custom.histogram_times = {7.5};
  custom.response = ResponseForm::Holling;
  custom.resource = ResourceSampling::Population;
  custom.init_sampling = InitSampling::Stratified;
  custom.with_gini = false;
  custom.which = 4;
  const std::string j2 = settings_to_json(custom);
  RunSettings reparsed;
  apply_config_text(reparsed, j2);
  CHECK(settings_to_json(reparsed) == j2);
  CHECK(reparsed.params.risk_g == Risk::One);
  CHECK(reparsed.regime == RiskRegime::HalfOne);
  CHECK(reparsed.out_times == custom.out_times);
}

TEST_CASE("unknown config keys are rejected by name at every level") {
  const struct {
    const char* text;
    const char* named;
  } cases[] = {
      {R"({"bogus": 1})", "<top>.bogus"},
      {R"({"params": {"alpha": 1, "bogus": 1}})", "params.bogus"},
      {R"({"initial": {"bogus": 1}})", "initial.bogus"},
      {R"({"run": {"t_end": 1, "bogus": 1}})", "run.bogus"},
  };
  for (const auto& c : cases) {
    RunSettings s;
    try {
      apply_config_text(s, c.text);
      FAIL_CHECK("accepted ", c.text);
    } catch (const KinlvError& e) {
      CHECK(e.code() == ErrorCode::Validation);
      CHECK(std::string(e.what()).find(c.named) != std::string::npos);
    }
  }
}

TEST_CASE("malformed config values are rejected") {
  const char* bad_texts[] = {
      "not json",
      R"([1, 2, 3])",
      R"({"params": {"alpha": "one"}})",
      R"({"params": {"risk_f": "quarter"}})",
      R"({"initial": {"shape": "normal"}})",
      R"({"run": {"risk": "one-one"}})",
      R"({"run": {"response": "cubic"}})",
      R"({"run": {"resource": "magic"}})",
      R"({"run": {"init_sampling": "sobol"}})",
      R"({"run": {"seed": -3}})",
      R"({"run": {"out_times": [1, "two"]}})",
      R"({"run": {"with_gini": "yes"}})",
  };
  for (const char* text : bad_texts) {
    RunSettings s;
    CHECK_THROWS_AS(apply_config_text(s, text), KinlvError);
  }
}

TEST_CASE("settings checks pass defaults with a warning and reject bad runs") {
  RunSettings s;
  const std::string warnings = check_settings(s);  // gamma*mu = 1.5 warns
  CHECK(!warnings.empty());
  CHECK(warnings.find("gamma") != std::string::npos);

  RunSettings bad = s;
  bad.t_end = 0.0;
  CHECK_THROWS_AS((void)check_settings(bad), KinlvError);

  RunSettings bad2 = s;
  bad2.out_points = 1;
  CHECK_THROWS_AS((void)check_settings(bad2), KinlvError);

  RunSettings bad3 = s;
  bad3.params.gamma = 0.05;  // growth cannot cover decay
  CHECK_THROWS_AS((void)check_settings(bad3), KinlvError);
}

TEST_CASE("output time grids honor counts and explicit lists") {
  RunSettings s;
  s.t_end = 20.0;
  const auto def = resolved_out_times(s);
  REQUIRE(def.size() == 201);
  CHECK(def.front() == 0.0);
  CHECK(def.back() == 20.0);
  CHECK(def[100] == doctest::Approx(10.0).epsilon(1e-15));

  s.out_points = 5;
  CHECK(resolved_out_times(s).size() == 5);

  s.out_times = {0.0, 0.5, 19.0};
  CHECK(resolved_out_times(s) == std::vector<double>{0.0, 0.5, 19.0});
}

TEST_CASE("mean-system runs emit verifiable, reproducible data files") {
  RunSettings s;
  s.t_end = 3.0;
  s.out_points = 13;
  s.initial.m_f0 = s.params.fixed_point_f();
  s.initial.m_g0 = s.params.fixed_point_g();

  TempDir run1("kinlv_io_means1");
  TempDir run2("kinlv_io_means2");
  cmd_means(s, run1.str());
  cmd_means(s, run2.str());

  const std::string csv = read_file(run1.file("means.csv"));
  const auto lines = split_lines(csv);
  REQUIRE(lines.size() == 14);
  CHECK(lines[0] == "t,m_f,m_g,v_f,v_g,c_f,c_g");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_fields(lines[i]);
    REQUIRE(fields.size() == 7);
    // Stationary means stay put while the dispersion columns evolve.
    CHECK(std::strtod(fields[1].c_str(), nullptr) ==
          doctest::Approx(s.initial.m_f0).epsilon(1e-8));
    CHECK(std::strtod(fields[2].c_str(), nullptr) ==
          doctest::Approx(s.initial.m_g0).epsilon(1e-8));
  }

  std::string diag;
  CHECK(verify_manifest(run1.file("means_manifest.json"), &diag));
  CHECK(fnv1a64(csv) == fnv1a64(read_file(run2.file("means.csv"))));

  const RunManifest m = read_manifest(run1.file("means_manifest.json"));
  CHECK(m.command == "means");
  CHECK(m.tool_version == kToolVersion);
  CHECK(!m.config_json.empty());
}

TEST_CASE("agent runs always produce a final-time histogram") {
  RunSettings s;
  s.t_end = 0.5;
  s.agents = 500;
  s.eps = 0.1;
  s.out_points = 6;

  TempDir tmp("kinlv_io_mc");
  cmd_mc(s, tmp.str());

  const auto lines = split_lines(read_file(tmp.file("mc.csv")));
  REQUIRE(lines.size() >= 7);
  CHECK(lines[0] == "t,m_f,m_g,v_f,v_g,c_f,c_g,gini_f,gini_g,skipped_events");

  const auto hist = split_lines(read_file(tmp.file("mc_hist_0.csv")));
  CHECK(hist[0] == "bin_left,bin_right,density_f,density_g");
  CHECK(hist.size() == 201);

  std::string diag;
  CHECK(verify_manifest(tmp.file("mc_manifest.json"), &diag));
}

TEST_CASE("command line reports success and failure through exit codes") {
  CHECK(cli({"--version"}) == 0);
  CHECK(cli({"means", "--bogus-flag"}) == 2);
  CHECK(cli({"bogus-command"}) == 2);

  TempDir tmp("kinlv_io_cli");
  const std::string out = tmp.file("run");
  CHECK(cli({"means", "--t-end", "1", "--out", out.c_str()}) == 0);
  CHECK(std::filesystem::exists(tmp.path / "run" / "means.csv"));

  atomic_write_file(tmp.file("bad.json"), R"({"params": {"gamma": 0.05}})");
  const std::string cfg = tmp.file("bad.json");
  CHECK(cli({"means", "--config", cfg.c_str(), "--out", out.c_str()}) == 2);

  atomic_write_file(tmp.file("unparseable.json"), "{");
  const std::string cfg2 = tmp.file("unparseable.json");
  CHECK(cli({"means", "--config", cfg2.c_str(), "--out", out.c_str()}) == 2);
}
