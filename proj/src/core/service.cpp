#include "unipo/service.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <mutex>

#include "unipo/error.hpp"
#include "unipo/metrics.hpp"
#include "unipo/payloads.hpp"

namespace unipo {

namespace {

std::string percent_decode(std::string_view in, bool plus_is_space) {
  std::string out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const char c = in[i];
    if (c == '+' && plus_is_space) {
      out += ' ';
    } else if (c == '%' && i + 2 < in.size()) {
      int v = 0;
      auto [p, ec] = std::from_chars(in.data() + i + 1, in.data() + i + 3, v, 16);
      if (ec == std::errc() && p == in.data() + i + 3) {
        out += static_cast<char>(v);
        i += 2;
      } else {
        out += c;
      }
    } else {
      out += c;
    }
  }
  return out;
}

std::string percent_encode(std::string_view in) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : in) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 15];
    }
  }
  return out;
}

struct Target {
  std::vector<std::string> segments;
  std::map<std::string, std::string> query;
};

Target parse_target(std::string_view target) {
  Target t;
  const std::size_t q = target.find('?');
  std::string_view path = target.substr(0, q);
  if (q != std::string_view::npos) {
    std::string_view qs = target.substr(q + 1);
    while (!qs.empty()) {
      const std::size_t amp = qs.find('&');
      std::string_view pair = qs.substr(0, amp);
      const std::size_t eq = pair.find('=');
      if (!pair.empty())
        t.query[percent_decode(pair.substr(0, eq), true)] =
            eq == std::string_view::npos ? std::string() : percent_decode(pair.substr(eq + 1), true);
      if (amp == std::string_view::npos) break;
      qs.remove_prefix(amp + 1);
    }
  }
  while (!path.empty()) {
    if (path.front() == '/') {
      path.remove_prefix(1);
      continue;
    }
    const std::size_t slash = path.find('/');
    t.segments.push_back(percent_decode(path.substr(0, slash), false));
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash);
  }
  return t;
}

template <typename Int>
Int parse_int(const std::string& text, const char* what) {
  Int v{};
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size())
    throw Error(ErrorCode::InvalidArgument, std::string("invalid ") + what + " '" + text + "'", what);
  return v;
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Syntax:
    case ErrorCode::InvalidArgument:
    case ErrorCode::ThresholdTooSmall:
    case ErrorCode::UnknownMetric:
      return 400;
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::Schema:
    case ErrorCode::Validation:
    case ErrorCode::UnknownBinding:
      return 422;
    case ErrorCode::DuplicateAlgorithm:
      return 409;
    default:
      return 500;
  }
}

HttpResponse json_response(int status, const Json& body) { return {status, dump_canonical(body)}; }

HttpResponse error_response(const Error& e) { return json_response(status_for(e.code()), error_to_json(e)); }

HttpResponse error_response(int status, const char* code, const std::string& message, const std::string& path = {}) {
  return json_response(status, Json{{"code", code}, {"message", message}, {"path", path}});
}

void write_file(const std::filesystem::path& file, const std::string& content) {
  std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + file.string());
  out << content;
  if (!out) throw Error(ErrorCode::Io, "failed writing " + file.string());
}

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + file.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

ServiceState::ServiceState(std::shared_ptr<AlgorithmRegistry> registry) : registry_(std::move(registry)) {
  if (!registry_) registry_ = AlgorithmRegistry::with_builtins();
}

void ServiceState::load_run(TrainingRun run) {
  const ValidationReport report = validate_run(run, *registry_);
  if (!report.ok()) {
    const Violation& first = report.violations.front();
    throw Error(ErrorCode::Validation, first.invariant + ": " + first.message, first.path);
  }
  auto algo = registry_->get(run.algorithm_id);
  Entry e;
  e.run = std::make_shared<const TrainingRun>(std::move(run));
  e.algo = std::move(algo);
  e.cache = std::make_shared<std::map<std::size_t, std::shared_ptr<const StepEvaluation>>>();
  std::unique_lock lock(mutex_);
  e.generation = next_generation_++;
  runs_.insert_or_assign(e.run->run_id, std::move(e));
}

LoadSummary ServiceState::load_directory(const std::filesystem::path& dir) {
  LoadSummary summary;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    try {
      TrainingRun run = parse_run(read_file(file));
      std::string id = run.run_id;
      load_run(std::move(run));
      summary.loaded.push_back(std::move(id));
    } catch (const Error& e) {
      summary.skipped.emplace_back(file.string(), e.what());
    }
  }
  return summary;
}

ServiceState::Entry ServiceState::entry(std::string_view run_id) const {
  std::shared_lock lock(mutex_);
  auto it = runs_.find(run_id);
  if (it == runs_.end()) throw Error(ErrorCode::NotFound, "unknown run '" + std::string(run_id) + "'");
  return it->second;
}

std::shared_ptr<const TrainingRun> ServiceState::find_run(std::string_view run_id) const {
  std::shared_lock lock(mutex_);
  auto it = runs_.find(run_id);
  return it == runs_.end() ? nullptr : it->second.run;
}

std::vector<std::shared_ptr<const TrainingRun>> ServiceState::runs() const {
  std::shared_lock lock(mutex_);
  std::vector<std::shared_ptr<const TrainingRun>> out;
  for (const auto& [id, e] : runs_) out.push_back(e.run);
  return out;
}

std::shared_ptr<const StepEvaluation> ServiceState::evaluation(std::string_view run_id, std::size_t pos) {
  const Entry e = entry(run_id);
  if (pos >= e.run->steps.size()) throw Error(ErrorCode::NotFound, "step position out of range");
  {
    std::shared_lock lock(mutex_);
    auto it = e.cache->find(pos);
    if (it != e.cache->end()) return it->second;
  }
  // Computed outside the lock; only complete evaluations are published.
  auto eval = std::make_shared<const StepEvaluation>(evaluate_step(e.run->steps[pos], *e.algo, e.run->params));
  std::unique_lock lock(mutex_);
  auto current = runs_.find(run_id);
  if (current != runs_.end() && current->second.generation == e.generation) {
    auto [it, inserted] = e.cache->emplace(pos, eval);
    return it->second;
  }
  return eval;
}

void ServiceState::precompute(std::string_view run_id) {
  const Entry e = entry(run_id);
  for (std::size_t pos = 0; pos < e.run->steps.size(); ++pos) evaluation(run_id, pos);
}

void ServiceState::precompute_all() {
  for (const auto& run : runs()) precompute(run->run_id);
}

std::size_t ServiceState::cached_steps() const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& [id, e] : runs_) n += e.cache->size();
  return n;
}

HttpResponse ServiceState::handle(std::string_view method, std::string_view target_text, std::string_view body) {
  try {
    const Target target = parse_target(target_text);
    const auto& seg = target.segments;
    auto query = [&](const char* key) -> const std::string* {
      auto it = target.query.find(key);
      return it == target.query.end() ? nullptr : &it->second;
    };
    if (seg.empty() || seg[0] != "api") return error_response(404, "not-found", "no such endpoint");

    if (seg.size() >= 2 && seg[1] == "runs") {
      if (seg.size() == 2) {
        if (method == "GET") {
          Json list = Json::array();
          for (const auto& run : runs()) list.push_back(run_summary_json(*run));
          return json_response(200, list);
        }
        if (method == "POST") {
          TrainingRun run = parse_run(body);
          const ValidationReport report = validate_run(run, *registry_);
          if (!report.ok()) {
            const Violation& first = report.violations.front();
            Json err{{"code", "validation-error"},
                     {"message", first.invariant + ": " + first.message},
                     {"path", first.path}};
            err["violations"] = report_to_json(report)["violations"];
            return json_response(422, err);
          }
          Json summary = run_summary_json(run);
          load_run(std::move(run));
          return json_response(201, summary);
        }
        return error_response(405, "method-not-allowed", "use GET or POST");
      }
      if (method != "GET") return error_response(405, "method-not-allowed", "use GET");
      const Entry e = entry(seg[2]);
      const TrainingRun& run = *e.run;
      if (seg.size() == 3) return json_response(200, run_summary_json(run));

      if (seg.size() == 4 && seg[3] == "metrics") {
        const std::string* name = query("name");
        if (!name || name->empty()) throw Error(ErrorCode::InvalidArgument, "missing query parameter 'name'", "name");
        const MetricName metric = MetricName::parse(*name);
        std::size_t threshold = kDefaultMetricThreshold;
        if (const std::string* t = query("threshold")) threshold = parse_int<std::size_t>(*t, "threshold");
        if (threshold < 3) throw Error(ErrorCode::ThresholdTooSmall, "threshold must be at least 3", "threshold");
        const std::string id = run.run_id;
        const MetricSeries series =
            extract_metric_series(run, metric, [&](std::size_t pos) { return *evaluation(id, pos); });
        return json_response(200, series_to_json(lttb_downsample(series, threshold)));
      }

      if (seg.size() >= 5 && seg[3] == "steps") {
        const std::size_t pos = find_step(run, parse_int<std::int64_t>(seg[4], "step"));
        const auto eval = evaluation(run.run_id, pos);
        if (seg.size() == 5) return json_response(200, step_payload(run, pos, *eval, *e.algo));
        if (seg.size() == 9 && seg[5] == "tokens") {
          const TokenPath path{parse_int<std::size_t>(seg[6], "group"), parse_int<std::size_t>(seg[7], "response"),
                               parse_int<std::size_t>(seg[8], "token")};
          return json_response(200, token_payload(run, pos, *eval, *e.algo, path));
        }
      }
      return error_response(404, "not-found", "no such endpoint");
    }

    if (seg.size() >= 2 && seg[1] == "algorithms") {
      if (method != "GET") return error_response(405, "method-not-allowed", "use GET");
      if (seg.size() == 2) {
        Json list = Json::array();
        for (const auto& def : registry_->list()) list.push_back(definition_to_json(*def));
        return json_response(200, list);
      }
      if (seg.size() == 3 && seg[2] == "diff") {
        const std::string* a = query("a");
        const std::string* b = query("b");
        if (!a || !b) throw Error(ErrorCode::InvalidArgument, "diff needs query parameters 'a' and 'b'");
        return json_response(200, diff_to_json(diff_algorithms(*registry_->get(*a), *registry_->get(*b))));
      }
      if (seg.size() == 3) return json_response(200, definition_to_json(*registry_->get(seg[2])));
    }
    return error_response(404, "not-found", "no such endpoint");
  } catch (const Error& e) {
    return error_response(e);
  } catch (const std::exception& e) {
    return error_response(500, "internal-error", e.what());
  }
}

std::size_t ServiceState::export_static(const std::filesystem::path& out_dir, std::size_t threshold,
                                        bool include_tokens) {
  std::size_t files = 0;
  auto emit = [&](const std::filesystem::path& rel, const std::string& target) {
    const HttpResponse r = handle("GET", target);
    if (r.status != 200) throw Error(ErrorCode::Io, "export of " + target + " failed: " + r.body);
    write_file(out_dir / rel, r.body);
    ++files;
  };
  const std::filesystem::path api = "api";
  emit(api / "runs.json", "/api/runs");
  emit(api / "algorithms.json", "/api/algorithms");
  const auto defs = registry_->list();
  for (const auto& a : defs) {
    emit(api / "algorithms" / (a->algorithm_id + ".json"), "/api/algorithms/" + a->algorithm_id);
    for (const auto& b : defs)
      emit(api / "algorithms" / "diff" / a->algorithm_id / (b->algorithm_id + ".json"),
           "/api/algorithms/diff?a=" + a->algorithm_id + "&b=" + b->algorithm_id);
  }
  const std::string t = std::to_string(threshold);
  for (const auto& run : runs()) {
    const std::filesystem::path base = api / "runs" / run->run_id;
    const std::string url = "/api/runs/" + percent_encode(run->run_id);
    emit(api / "runs" / (run->run_id + ".json"), url);
    for (const char* m : {"reward", "step_objective", "kl_mean", "clip_ratio", "response_length_mean"})
      emit(base / "metrics" / (std::string(m) + ".json"), url + "/metrics?name=" + m + "&threshold=" + t);
    std::vector<std::string> passthrough;
    for (const auto& s : run->steps)
      if (s.precomputed_metrics)
        for (const auto& [k, v] : *s.precomputed_metrics)
          if (std::find(passthrough.begin(), passthrough.end(), k) == passthrough.end()) passthrough.push_back(k);
    for (const auto& k : passthrough)
      emit(base / "metrics" / ("passthrough_" + k + ".json"), url + "/metrics?name=passthrough:" + k + "&threshold=" + t);
    for (const auto& s : run->steps) {
      const std::string sidx = std::to_string(s.index);
      emit(base / "steps" / (sidx + ".json"), url + "/steps/" + sidx);
      if (!include_tokens) continue;
      for (std::size_t g = 0; g < s.groups.size(); ++g)
        for (std::size_t r = 0; r < s.groups[g].responses.size(); ++r)
          for (std::size_t k = 0; k < s.groups[g].responses[r].tokens.size(); ++k) {
            const std::string tail = std::to_string(g) + "/" + std::to_string(r) + "/" + std::to_string(k);
            emit(base / "steps" / sidx / "tokens" / std::to_string(g) / std::to_string(r) / (std::to_string(k) + ".json"),
                 url + "/steps/" + sidx + "/tokens/" + tail);
          }
    }
  }
  return files;
}

}  // namespace unipo
