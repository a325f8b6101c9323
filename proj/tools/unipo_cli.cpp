// unipo command-line front end. Talks to the core exclusively through the C API.

#include <array>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "unipo/unipo.h"

namespace {

using Json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSchema = 2;
constexpr int kExitCompute = 3;

int exit_code_for(unipo_status s) {
  switch (s) {
    case UNIPO_OK: return kExitOk;
    case UNIPO_ERR_SYNTAX:
    case UNIPO_ERR_SCHEMA:
    case UNIPO_ERR_VALIDATION:
    case UNIPO_ERR_UNKNOWN_BINDING:
    case UNIPO_ERR_DUPLICATE_ALGORITHM: return kExitSchema;
    case UNIPO_ERR_INVALID_ARGUMENT:
    case UNIPO_ERR_NOT_FOUND:
    case UNIPO_ERR_THRESHOLD_TOO_SMALL:
    case UNIPO_ERR_UNKNOWN_METRIC:
    case UNIPO_ERR_INVALID_CONFIG:
    case UNIPO_ERR_IO: return kExitUsage;
    default: return kExitCompute;
  }
}

// Thrown after the error has been reported on stderr.
struct Exit {
  int code;
};

void report_error(unipo_status s) {
  Json j = Json::object();
  j["code"] = unipo_status_name(s);
  j["message"] = unipo_last_error_message();
  j["path"] = unipo_last_error_path();
  if (unipo_last_error_offset() >= 0) j["offset"] = unipo_last_error_offset();
  std::cerr << j.dump() << '\n';
}

void check(unipo_status s) {
  if (s == UNIPO_OK) return;
  report_error(s);
  throw Exit{exit_code_for(s)};
}

[[noreturn]] void usage_error(const std::string& message) {
  std::cerr << Json{{"code", "usage-error"}, {"message", message}, {"path", ""}}.dump() << '\n';
  throw Exit{kExitUsage};
}

// Owns a string returned by the library.
class CString {
 public:
  CString() = default;
  CString(const CString&) = delete;
  CString& operator=(const CString&) = delete;
  ~CString() { unipo_string_free(p_); }
  char** out() { return &p_; }
  std::string str() const { return p_ ? std::string(p_) : std::string(); }

 private:
  char* p_ = nullptr;
};

struct Registry {
  unipo_registry* p = nullptr;
  Registry() { check(unipo_registry_new(&p)); }
  ~Registry() { unipo_registry_free(p); }
};

struct Run {
  unipo_run* p = nullptr;
  ~Run() { unipo_run_free(p); }
};

std::string read_input(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  std::ifstream in(path, std::ios::binary);
  if (!in) usage_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void load_run(const std::string& path, Run& run) {
  const std::string text = read_input(path);
  check(unipo_run_parse(text.data(), text.size(), &run.p));
}

void register_definitions(Registry& reg, const std::vector<std::string>& files) {
  for (const auto& f : files) {
    const std::string text = read_input(f);
    check(unipo_registry_register(reg.p, text.data(), text.size(), nullptr));
  }
}

void print_line(const std::string& s) { std::cout << s << '\n' << std::flush; }

// ---- subcommands -----------------------------------------------------------

int cmd_validate(Registry& reg, const std::string& file) {
  Run run;
  load_run(file, run);
  int valid = 0;
  CString out;
  check(unipo_run_validate(run.p, reg.p, &valid, out.out()));
  print_line(out.str());
  return valid ? kExitOk : kExitSchema;
}

struct ComputeArgs {
  std::string file;
  long long step = 0;
  std::string token;
  std::string algorithm;
};

int cmd_compute(Registry& reg, const ComputeArgs& a) {
  Run run;
  load_run(a.file, run);
  const char* algo = a.algorithm.empty() ? nullptr : a.algorithm.c_str();

  std::optional<std::array<size_t, 3>> path;
  if (!a.token.empty()) {
    std::array<size_t, 3> p{};
    char c1 = 0, c2 = 0;
    std::istringstream ss(a.token);
    long long g = -1, r = -1, t = -1;
    if (!(ss >> g >> c1 >> r >> c2 >> t) || c1 != ',' || c2 != ',' || g < 0 || r < 0 || t < 0 || !ss.eof())
      usage_error("--token expects g,r,t with non-negative integers");
    p = {static_cast<size_t>(g), static_cast<size_t>(r), static_cast<size_t>(t)};
    path = p;
  }

  CString step;
  check(unipo_compute_step(run.p, reg.p, algo, a.step, step.out()));
  Json out = Json::parse(step.str());
  if (path) {
    CString tok;
    check(unipo_token_payload(run.p, reg.p, algo, a.step, (*path)[0], (*path)[1], (*path)[2], tok.out()));
    out["token"] = Json::parse(tok.str());
  }
  print_line(out.dump());
  return kExitOk;
}

int cmd_diff(Registry& reg, const std::string& a, const std::string& b) {
  CString out;
  check(unipo_diff(reg.p, a.c_str(), b.c_str(), out.out()));
  print_line(out.str());
  return kExitOk;
}

int cmd_downsample(Registry& reg, const std::string& file, const std::string& metric, size_t threshold) {
  Run run;
  load_run(file, run);
  CString out;
  check(unipo_metric_series(run.p, reg.p, metric.c_str(), threshold, out.out()));
  print_line(out.str());
  return kExitOk;
}

struct SynthArgs {
  unipo_synth_config cfg{};
  std::string reward = "binary";
  std::string algorithm = "grpo";
  std::string out;
};

int cmd_synth(Registry& reg, SynthArgs& a) {
  if (a.reward == "binary")
    a.cfg.reward_scheme = UNIPO_REWARD_BINARY;
  else if (a.reward == "continuous")
    a.cfg.reward_scheme = UNIPO_REWARD_CONTINUOUS;
  else
    usage_error("--reward must be 'binary' or 'continuous'");
  a.cfg.algorithm_id = a.algorithm.c_str();
  Run run;
  check(unipo_synth(reg.p, &a.cfg, &run.p));
  CString text;
  check(unipo_run_serialize(run.p, text.out()));
  if (a.out.empty() || a.out == "-") {
    std::cout << text.str() << std::flush;
  } else {
    std::ofstream f(a.out, std::ios::binary);
    if (!f || !(f << text.str())) usage_error("cannot write '" + a.out + "'");
  }
  return kExitOk;
}

struct Service {
  unipo_service* p = nullptr;
  explicit Service(Registry& reg) { check(unipo_service_new(reg.p, &p)); }
  ~Service() { unipo_service_free(p); }
};

void load_runs_dir(Service& svc, const std::string& dir) {
  CString summary;
  check(unipo_service_load_dir(svc.p, dir.c_str(), summary.out()));
  const Json j = Json::parse(summary.str());
  for (const auto& s : j["skipped"])
    std::cerr << "skipped " << s["file"].get<std::string>() << ": " << s["reason"].get<std::string>() << '\n';
}

std::string default_runs_dir() {
  const char* env = std::getenv("UNIPO_RUNS_DIR");
  return env ? env : "";
}

struct ServeArgs {
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string runs;
  bool precompute = false;
  std::vector<std::string> cors_origins;
  std::string static_dir;
};

std::atomic<httplib::Server*> g_server{nullptr};

extern "C" void on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

bool origin_allowed(const ServeArgs& a, const std::string& origin) {
  if (origin.empty()) return false;
  if (a.cors_origins.empty())
    return origin.rfind("http://localhost", 0) == 0 || origin.rfind("http://127.0.0.1", 0) == 0;
  for (const auto& o : a.cors_origins)
    if (o == "*" || o == origin) return true;
  return false;
}

int cmd_serve(Registry& reg, const ServeArgs& a) {
  Service svc(reg);
  if (!a.runs.empty()) load_runs_dir(svc, a.runs);
  if (a.precompute) check(unipo_service_precompute(svc.p));

  httplib::Server server;
  const auto handler = [&](const httplib::Request& req, httplib::Response& res) {
    int status = 500;
    CString body;
    const unipo_status s = unipo_service_request(svc.p, req.method.c_str(), req.target.c_str(), req.body.data(),
                                                 req.body.size(), &status, body.out());
    if (s != UNIPO_OK) {
      res.status = 500;
      res.set_content(Json{{"code", unipo_status_name(s)}, {"message", unipo_last_error_message()}, {"path", ""}}.dump(),
                      "application/json");
      return;
    }
    res.status = status;
    res.set_content(body.str(), "application/json");
  };
  server.Get(R"(/api(/.*)?)", handler);
  server.Post(R"(/api(/.*)?)", handler);
  server.Put(R"(/api(/.*)?)", handler);
  server.Delete(R"(/api(/.*)?)", handler);
  server.Options(R"(/api(/.*)?)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.set_post_routing_handler([&](const httplib::Request& req, httplib::Response& res) {
    const std::string origin = req.get_header_value("Origin");
    if (origin_allowed(a, origin)) {
      res.set_header("Access-Control-Allow-Origin", origin);
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.set_header("Vary", "Origin");
    }
  });
  if (!a.static_dir.empty() && !server.set_mount_point("/", a.static_dir))
    usage_error("static directory '" + a.static_dir + "' does not exist");

  int port = a.port;
  if (port == 0) {
    port = server.bind_to_any_port(a.host);
    if (port < 0) usage_error("cannot bind " + a.host);
  } else if (!server.bind_to_port(a.host, port)) {
    usage_error("cannot bind " + a.host + ":" + std::to_string(port));
  }
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on http://" << a.host << ':' << port << std::endl;
  server.listen_after_bind();
  g_server = nullptr;
  return kExitOk;
}

struct ExportArgs {
  std::string runs;
  std::string out;
  size_t threshold = 500;
  bool no_tokens = false;
};

int cmd_export(Registry& reg, const ExportArgs& a) {
  if (a.runs.empty()) usage_error("--runs (or UNIPO_RUNS_DIR) is required");
  Service svc(reg);
  load_runs_dir(svc, a.runs);
  size_t files = 0;
  check(unipo_service_export(svc.p, a.out.c_str(), a.threshold, a.no_tokens ? 0 : 1, &files));
  std::cout << Json{{"out", a.out}, {"files", files}}.dump() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inspect policy-optimization objectives in RL fine-tuning logs."};
  app.set_version_flag("--version", std::string(unipo_version()));
  app.require_subcommand(1);

  std::vector<std::string> register_files;
  app.add_option("--register", register_files, "Extra algorithm definition file (repeatable)")->check(CLI::ExistingFile);

  std::string validate_file;
  auto* validate = app.add_subcommand("validate", "Validate a run file; exit 0 iff the report is empty");
  validate->add_option("file", validate_file, "Run file ('-' for stdin)")->required();

  ComputeArgs compute_args;
  auto* compute = app.add_subcommand("compute", "Print the step objective and optionally one token's breakdown");
  compute->add_option("file", compute_args.file, "Run file ('-' for stdin)")->required();
  compute->add_option("--step", compute_args.step, "Step index")->required();
  compute->add_option("--token", compute_args.token, "Token path g,r,t");
  compute->add_option("--algorithm", compute_args.algorithm, "Evaluate under another registered algorithm");

  std::string diff_a, diff_b;
  auto* diff = app.add_subcommand("diff", "Component-level diff of two algorithms");
  diff->add_option("a", diff_a, "First algorithm id")->required();
  diff->add_option("b", diff_b, "Second algorithm id")->required();

  std::string ds_file, ds_metric = "reward";
  size_t ds_threshold = 500;
  auto* downsample = app.add_subcommand("downsample", "Print a metric series downsampled with LTTB");
  downsample->add_option("file", ds_file, "Run file ('-' for stdin)")->required();
  downsample->add_option("--metric", ds_metric, "Metric name or passthrough:<key>")->capture_default_str();
  downsample->add_option("--threshold", ds_threshold, "Output points (0 keeps every point)")->capture_default_str();

  SynthArgs synth_args;
  unipo_synth_config_init(&synth_args.cfg);
  auto& sc = synth_args.cfg;
  auto* synth = app.add_subcommand("synth", "Write a deterministic synthetic run");
  synth->add_option("--seed", sc.seed)->capture_default_str();
  synth->add_option("--steps", sc.n_steps)->capture_default_str();
  synth->add_option("--groups", sc.groups_per_step, "Groups per step")->capture_default_str();
  synth->add_option("--group-size", sc.group_size)->capture_default_str();
  synth->add_option("--len-min", sc.len_min)->capture_default_str();
  synth->add_option("--len-max", sc.len_max)->capture_default_str();
  synth->add_option("--reward", synth_args.reward, "binary or continuous")->capture_default_str();
  synth->add_option("--p-start", sc.p_correct_start, "Binary: p_correct at the first step")->capture_default_str();
  synth->add_option("--p-end", sc.p_correct_end, "Binary: p_correct at the last step")->capture_default_str();
  synth->add_option("--reward-low", sc.reward_low, "Continuous: lower bound")->capture_default_str();
  synth->add_option("--reward-high", sc.reward_high, "Continuous: upper bound")->capture_default_str();
  synth->add_option("--drift", sc.drift, "Spread of policy vs old log-probs")->capture_default_str();
  synth->add_option("--algorithm", synth_args.algorithm)->capture_default_str();
  synth->add_option("--out", synth_args.out, "Output file (default stdout)");

  ServeArgs serve_args;
  serve_args.runs = default_runs_dir();
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--port", serve_args.port, "Port (0 picks a free one)")->capture_default_str();
  serve->add_option("--host", serve_args.host)->capture_default_str();
  serve->add_option("--runs", serve_args.runs, "Directory of run files (default $UNIPO_RUNS_DIR)");
  serve->add_flag("--precompute", serve_args.precompute, "Evaluate every step before serving");
  serve->add_option("--cors-origin", serve_args.cors_origins, "Allowed CORS origin (repeatable, '*' for any)");
  serve->add_option("--static", serve_args.static_dir, "Directory served at / (UI bundle)");

  ExportArgs export_args;
  export_args.runs = default_runs_dir();
  auto* exp = app.add_subcommand("export", "Write every API response as a static file tree");
  exp->add_option("--runs", export_args.runs, "Directory of run files (default $UNIPO_RUNS_DIR)");
  exp->add_option("--out", export_args.out, "Output directory")->required();
  exp->add_option("--threshold", export_args.threshold, "Metric points per series")->capture_default_str();
  exp->add_flag("--no-tokens", export_args.no_tokens, "Skip per-token files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    Registry reg;
    register_definitions(reg, register_files);
    if (*validate) return cmd_validate(reg, validate_file);
    if (*compute) return cmd_compute(reg, compute_args);
    if (*diff) return cmd_diff(reg, diff_a, diff_b);
    if (*downsample) return cmd_downsample(reg, ds_file, ds_metric, ds_threshold);
    if (*synth) return cmd_synth(reg, synth_args);
    if (*serve) return cmd_serve(reg, serve_args);
    if (*exp) return cmd_export(reg, export_args);
  } catch (const Exit& e) {
    return e.code;
  }
  return kExitUsage;
}
