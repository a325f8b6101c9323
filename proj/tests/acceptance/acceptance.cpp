// Acceptance suite: one PASS/FAIL line per criterion, with wall time.
// Exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>

#include "builders.hpp"
#include "oracle.hpp"
#include "process.hpp"
#include "shapes.hpp"
#include "unipo/aggregation.hpp"
#include "unipo/constraints.hpp"
#include "unipo/engine.hpp"
#include "unipo/error.hpp"
#include "unipo/metrics.hpp"
#include "unipo/pipeline.hpp"
#include "unipo/registry.hpp"
#include "unipo/schema.hpp"
#include "unipo/synth.hpp"

using namespace unipo;
namespace fs = std::filesystem;
namespace ts = testing_support;

namespace {

const char* kPresets[] = {"reinforce", "ppo", "grpo", "dapo", "dr_grpo"};

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failures; the first few are kept for the report line.
class Tally {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    ++failures_;
    if (notes_.size() < 3) notes_.push_back(what);
  }
  std::size_t checks() const { return checks_; }
  Outcome outcome(std::string detail) const {
    if (failures_ == 0) return {true, std::move(detail)};
    std::string d = std::to_string(failures_) + "/" + std::to_string(checks_) + " checks failed";
    for (const auto& n : notes_) d += "; " + n;
    if (!detail.empty()) d += "; " + detail;
    return {false, d};
  }

 private:
  std::size_t checks_ = 0, failures_ = 0;
  std::vector<std::string> notes_;
};

std::string num(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

std::vector<std::size_t> all_groups(const Step& s) {
  std::vector<std::size_t> v(s.groups.size());
  for (std::size_t g = 0; g < v.size(); ++g) v[g] = g;
  return v;
}

Outcome zero_variance_collapse() {
  Tally t;
  auto reg = AlgorithmRegistry::with_builtins();
  const TrainingRun run = parse_run(ts::read_file(ts::fixtures_dir() / "fig2_step.json"));
  const std::size_t pos = find_step(run, 242);
  const Step& step = run.steps[pos];
  std::size_t collapsed = step.groups.size();
  for (std::size_t g = 0; g < step.groups.size(); ++g) {
    const auto& rs = step.groups[g].responses;
    if (rs.size() == 4 && std::all_of(rs.begin(), rs.end(), [](const Response& r) { return r.reward == 1.0; }))
      collapsed = g;
  }
  t.expect(collapsed < step.groups.size(), "no group with four rewards of 1.00");
  if (collapsed == step.groups.size()) return t.outcome("");
  std::size_t tokens = 0;
  for (const char* id : {"grpo", "dr_grpo"}) {
    const StepEvaluation e = evaluate_step(step, *reg->get(id), run.params);
    double contribution = 0.0;
    const auto& rs = step.groups[collapsed].responses;
    for (std::size_t r = 0; r < rs.size(); ++r)
      for (std::size_t k = 0; k < rs[r].tokens.size(); ++k) {
        const TokenObjective& o = e.tokens[collapsed][r][k];
        t.expect(o.advantage == 0.0, std::string(id) + " advantage " + num(o.advantage));
        t.expect(o.objective == 0.0, std::string(id) + " objective " + num(o.objective));
        contribution += e.objective.token_weights[collapsed][r][k] * o.objective;
        ++tokens;
      }
    t.expect(contribution == 0.0, std::string(id) + " group contribution " + num(contribution));
  }
  return t.outcome(std::to_string(tokens) + " token checks under grpo and dr_grpo");
}

Outcome oracle_equivalence() {
  Tally t;
  auto reg = AlgorithmRegistry::with_builtins();
  std::size_t runs = 0, steps = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 24; ++seed)
    for (const char* id : kPresets) {
      SynthConfig c;
      c.seed = 1000 + seed;
      c.n_steps = 1 + static_cast<std::int64_t>((seed * 7) % 50);
      c.groups_per_step = 1 + static_cast<std::int64_t>(seed % 3);
      c.group_size = 1 + static_cast<std::int64_t>(seed % 8);
      c.len_min = 1 + static_cast<std::int64_t>(seed % 4);
      c.len_max = 32;
      c.drift = 0.02 + 0.06 * static_cast<double>(seed % 6);
      c.reward_scheme = seed % 2 ? RewardScheme::Continuous : RewardScheme::Binary;
      c.p_correct_start = 0.1;
      c.p_correct_end = 0.9;
      c.algorithm_id = id;
      const TrainingRun run = generate_run(c, *reg);
      const auto& algo = *reg->get(id);
      for (const auto& s : run.steps) {
        const double e = evaluate_step(s, algo, run.params).objective.value;
        const double o = oracle::step_objective(s, algo, run.params).value;
        const double rel = e == o ? 0.0 : std::abs(e - o) / std::abs(o);
        worst = std::max(worst, rel);
        t.expect(rel <= 1e-10, std::string(id) + " seed " + std::to_string(c.seed) + " step " +
                                   std::to_string(s.index) + " engine " + num(e) + " oracle " + num(o));
        ++steps;
      }
      ++runs;
    }
  t.expect(runs >= 100, "fewer than 100 runs");
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu runs, %zu steps, max relative error %.3g", runs, steps, worst);
  return t.outcome(buf);
}

Step random_step(std::mt19937_64& rng, std::int64_t& G, std::int64_t& L) {
  const std::size_t N = 1 + rng() % 4;
  G = 1 + static_cast<std::int64_t>(rng() % 8);
  L = 1 + static_cast<std::int64_t>(rng() % 64);
  std::vector<ResponseGroup> groups;
  for (std::size_t g = 0; g < N; ++g) {
    std::vector<Response> rs;
    for (std::int64_t r = 0; r < G; ++r)
      rs.push_back(ts::response(1 + rng() % static_cast<std::uint64_t>(L), static_cast<double>(rng() % 2)));
    groups.push_back(ts::group(std::move(rs)));
  }
  return ts::step(std::move(groups));
}

Outcome weight_sums() {
  Tally t;
  std::mt19937_64 rng(2024);
  std::size_t cn_exact = 0;
  double worst_unit = 0.0, worst_cn_ulps = 0.0;
  constexpr int kSteps = 1000;
  for (int i = 0; i < kSteps; ++i) {
    std::int64_t G = 0, L = 0;
    const Step s = random_step(rng, G, L);
    const AlgorithmParams p = ts::params(G, L);
    const auto inc = all_groups(s);
    for (auto kind : {AggregationKind::SampleMean, AggregationKind::GlobalTokenMean}) {
      double sum = 0.0;
      for (const auto& g : token_weights(s, kind, p, inc))
        for (const auto& r : g)
          for (double w : r) sum += w;
      worst_unit = std::max(worst_unit, std::abs(sum - 1.0));
      t.expect(std::abs(sum - 1.0) <= 1e-12, std::string(aggregation_kind_name(kind)) + " sum " + num(sum));
    }
    // identical doubles: a long double accumulator is exact up to 2^11 tokens
    long double sum = 0.0L;
    for (const auto& g : token_weights(s, AggregationKind::ConstantNorm, p, inc))
      for (const auto& r : g)
        for (double w : r) sum += w;
    const double got = static_cast<double>(sum);
    const double want = static_cast<double>(total_tokens(s)) /
                        (static_cast<double>(G) * static_cast<double>(L) * static_cast<double>(inc.size()));
    if (got == want) ++cn_exact;
    worst_cn_ulps = std::max(worst_cn_ulps, std::abs(got - want) / (std::nextafter(want, 2 * want) - want));
    t.expect(got == want, "ConstantNorm sum " + num(got) + " vs " + num(want));
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "%d steps, unit-sum max deviation %.3g, ConstantNorm exact on %zu/%d (max %.0f ulp)",
                kSteps, worst_unit, cn_exact, kSteps, worst_cn_ulps);
  return t.outcome(buf);
}

Outcome length_bias_witness() {
  Tally t;
  const Step s = ts::step({ts::group({ts::response(2, 1.0), ts::response(50, 0.0)})});
  const AlgorithmParams p = ts::params(2, 64);
  const auto inc = all_groups(s);

  const auto global = token_weights(s, AggregationKind::GlobalTokenMean, p, inc);
  std::set<double> distinct;
  for (const auto& r : global[0])
    for (double w : r) distinct.insert(w);
  t.expect(distinct.size() == 1, "GlobalTokenMean weights differ");

  const auto sample = token_weights(s, AggregationKind::SampleMean, p, inc);
  for (double w : sample[0][0]) t.expect(w == sample[0][0][0], "SampleMean short tokens differ");
  for (double w : sample[0][1]) t.expect(w == sample[0][0][0] / 25.0, "SampleMean long/short " + num(w / sample[0][0][0]));

  const auto constant = token_weights(s, AggregationKind::ConstantNorm, p, inc);
  const Step other = ts::step({ts::group({ts::response(7, 1.0), ts::response(13, 0.0)})});
  const double reference = token_weights(other, AggregationKind::ConstantNorm, p, all_groups(other))[0][0][0];
  for (const auto& r : constant[0])
    for (double w : r) t.expect(w == reference, "ConstantNorm weight depends on length");
  return t.outcome("lengths 2 and 50, SampleMean ratio " + num(sample[0][1][0] / sample[0][0][0]));
}

Outcome dynamic_sampling() {
  Tally t;
  auto reg = AlgorithmRegistry::with_builtins();
  const auto& dapo = *reg->get("dapo");
  const auto specs = dapo.constraint_specs();
  std::mt19937_64 rng(77);
  std::size_t filtered = 0, kept = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t N = 1 + rng() % 6, G = 2 + rng() % 7;
    std::vector<ResponseGroup> groups;
    std::vector<bool> mixed;
    for (std::size_t g = 0; g < N; ++g) {
      std::vector<Response> rs;
      const int mode = static_cast<int>(rng() % 3);  // all-wrong, all-right, random
      bool saw0 = false, saw1 = false;
      for (std::size_t r = 0; r < G; ++r) {
        const double reward = mode == 2 ? static_cast<double>(rng() % 2) : static_cast<double>(mode);
        (reward == 0.0 ? saw0 : saw1) = true;
        rs.push_back(ts::response(1 + rng() % 5, reward, false));
      }
      groups.push_back(ts::group(std::move(rs)));
      mixed.push_back(saw0 && saw1);
    }
    const Step s = ts::step(std::move(groups));
    const AlgorithmParams p = ts::params(static_cast<std::int64_t>(G), 8);
    const auto once = apply_constraints(s, specs, p);
    const StepEvaluation e = evaluate_step(s, dapo, p);
    for (std::size_t g = 0; g < N; ++g) {
      const bool in = std::find(once.included.begin(), once.included.end(), g) != once.included.end();
      t.expect(in == mixed[g], "group decision disagrees with reward mix");
      t.expect(e.group_included[g] == mixed[g], "evaluate_step disagrees with the filter");
      (in ? kept : filtered)++;
    }
    Step survivors;
    for (std::size_t g : once.included) survivors.groups.push_back(s.groups[g]);
    t.expect(apply_constraints(survivors, specs, p).included.size() == survivors.groups.size(), "not idempotent");
  }
  return t.outcome(std::to_string(filtered) + " groups filtered, " + std::to_string(kept) + " kept over 500 steps");
}

Outcome k3_properties() {
  Tally t;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> lp(-20.0, 0.0);
  for (int i = 0; i < 10000; ++i) {
    const double pol = lp(rng), ref = i % 10 == 0 ? std::nextafter(pol, 0.0) : lp(rng);
    const double k = kl_k3(ts::token(pol, pol, ref));
    t.expect(k >= 0.0, "k3 " + num(k) + " at policy " + num(pol) + " ref " + num(ref));
    t.expect(kl_k3(ts::token(pol, pol, pol)) == 0.0, "k3 nonzero at ref == policy");
  }
  return t.outcome("10000 random pairs, 10000 equal pairs");
}

Outcome clip_correctness() {
  Tally t;
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> ratio(0.0, 3.0), adv(-3.0, 3.0), eps(0.0, 0.5);
  std::size_t clipped = 0;
  for (int i = 0; i < 10000; ++i) {
    const double el = eps(rng), eh = eps(rng);
    double r = ratio(rng);
    if (i % 17 == 0) r = 1.0 + eh;
    if (i % 19 == 0) r = 1.0 - el;
    const double a = i % 23 == 0 ? 0.0 : adv(rng);
    const double unclipped = r * a, clamped = std::clamp(r, 1.0 - el, 1.0 + eh) * a;
    const double expected = std::min(unclipped, clamped);
    const SurrogateResult got = clipped_surrogate(r, a, el, eh);
    t.expect(got.value == expected, "surrogate " + num(got.value) + " vs " + num(expected));
    t.expect(got.clipped == (clamped < unclipped), "clipped flag at ratio " + num(r));
    clipped += got.clipped;
  }
  return t.outcome("10000 tuples, " + std::to_string(clipped) + " clipped");
}

Outcome lttb() {
  Tally t;
  std::mt19937_64 rng(53);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 200;
    const std::size_t threshold = 3 + rng() % 220;
    MetricSeries s;
    std::vector<double> xs, ys;
    std::int64_t x = static_cast<std::int64_t>(rng() % 10);
    for (std::size_t i = 0; i < n; ++i) {
      x += 1 + static_cast<std::int64_t>(rng() % 4);
      const double y = trial % 4 == 0 ? std::round(2 * noise(rng)) : noise(rng);
      s.points.push_back({x, y});
      xs.push_back(static_cast<double>(x));
      ys.push_back(y);
    }
    const MetricSeries out = lttb_downsample(s, threshold);
    t.expect(out.points.size() == std::min(n, threshold), "size " + std::to_string(out.points.size()));
    t.expect(out.points.front() == s.points.front() && out.points.back() == s.points.back(), "endpoints moved");
    const auto ref = oracle::lttb_indices(xs, ys, threshold);
    bool same = ref.size() == out.points.size();
    for (std::size_t i = 0; same && i < ref.size(); ++i) same = out.points[i] == s.points[ref[i]];
    t.expect(same, "differs from reference at n " + std::to_string(n) + " threshold " + std::to_string(threshold));
  }
  return t.outcome("1000 series of length <= 200");
}

Outcome diff_engine() {
  Tally t;
  auto reg = AlgorithmRegistry::with_builtins();
  for (const char* id : kPresets) {
    const DiffResult d = diff_algorithms(*reg->get(id), *reg->get(id));
    bool empty = d.added.empty() && d.removed.empty();
    for (const auto& m : d.matched) empty = empty && m.status == MatchStatus::Identical && m.field_deltas.empty();
    t.expect(empty, std::string("diff(") + id + ", " + id + ") not empty");
  }

  const DiffResult gd = diff_algorithms(*reg->get("grpo"), *reg->get("dapo"));
  t.expect(gd.added == std::vector<std::string>{"constraint.dynamic_sampling"}, "grpo/dapo added");
  t.expect(gd.removed == std::vector<std::string>{"constraint.kl"}, "grpo/dapo removed");
  const ComponentMatch* clip = gd.match("target.clip");
  bool clip_params = false;
  if (clip)
    for (const auto& f : clip->field_deltas) clip_params = clip_params || f.field.rfind("params.", 0) == 0;
  t.expect(clip && clip->status == MatchStatus::Modified && clip_params, "grpo/dapo clip parameters not modified");

  const DiffResult dd = diff_algorithms(*reg->get("dapo"), *reg->get("dr_grpo"));
  const ComponentMatch* agg = dd.match("agg");
  t.expect(agg && agg->status == MatchStatus::Modified, "dapo/dr_grpo agg not modified");

  std::size_t pairs = 0;
  for (const char* a : kPresets)
    for (const char* b : kPresets) {
      const DiffResult ab = diff_algorithms(*reg->get(a), *reg->get(b));
      const DiffResult ba = diff_algorithms(*reg->get(b), *reg->get(a));
      bool anti = ab.added == ba.removed && ab.removed == ba.added && ab.matched.size() == ba.matched.size();
      for (const auto& m : ab.matched) {
        const ComponentMatch* other = ba.match(m.component_id);
        anti = anti && other && other->status == m.status && other->field_deltas.size() == m.field_deltas.size();
        for (std::size_t i = 0; anti && i < m.field_deltas.size(); ++i) {
          const FieldDelta& f = m.field_deltas[i];
          const auto hit = std::find_if(other->field_deltas.begin(), other->field_deltas.end(),
                                        [&](const FieldDelta& g) { return g.field == f.field; });
          anti = hit != other->field_deltas.end() && hit->a == f.b && hit->b == f.a;
        }
      }
      t.expect(anti, std::string("antisymmetry fails for ") + a + "/" + b);
      ++pairs;
    }
  return t.outcome(std::to_string(pairs) + " ordered preset pairs");
}

Outcome schema_round_trip() {
  Tally t;
  std::size_t fixtures = 0;
  for (const char* name : {"fig2_step.json", "invalid_run.json", "unknown_fields_run.json", "ppo_small.json"}) {
    const std::string raw = ts::read_file(ts::fixtures_dir() / name);
    const TrainingRun run = parse_run(raw);
    t.expect(serialize_run(run) == raw, std::string(name) + " not byte-stable");
    t.expect(parse_run(serialize_run(run)) == run, std::string(name) + " not value-stable");
    ++fixtures;
  }
  {
    const std::string raw = ts::read_file(ts::fixtures_dir() / "hybrid_dr_grpo_ds.json");
    const AlgorithmDefinition def = parse_definition(raw);
    t.expect(definition_from_json(definition_to_json(def)) == def, "definition round-trip");
    ++fixtures;
  }

  const Json doc = Json::parse(serialize_run(parse_run(ts::read_file(ts::fixtures_dir() / "unknown_fields_run.json"))));
  t.expect(doc.contains("trainer_notes"), "top-level extra lost");
  t.expect(doc["params"].contains("learning_rate"), "params extra lost");
  t.expect(doc["steps"][0].contains("wall_time_s"), "step extra lost");
  t.expect(doc["steps"][0]["groups"][1]["responses"][2].contains("sampler_seed"), "response extra lost");
  t.expect(doc["steps"][0]["groups"][1]["responses"][2]["tokens"][0].value("token_id", 0) == 1114, "token extra lost");

  auto reg = AlgorithmRegistry::with_builtins();
  for (int i = 0; i < 100; ++i) {
    SynthConfig c;
    c.seed = 500 + static_cast<std::uint64_t>(i);
    c.n_steps = 1 + i % 20;
    c.group_size = 1 + i % 8;
    c.reward_scheme = i % 3 == 0 ? RewardScheme::Continuous : RewardScheme::Binary;
    c.algorithm_id = kPresets[i % 5];
    TrainingRun run = generate_run(c, *reg);
    run.extra["synthetic_tag"] = i;
    run.steps[0].groups[0].responses[0].tokens[0].extra["token_id"] = 1000 + i;
    const std::string text = serialize_run(run);
    const TrainingRun back = parse_run(text);
    t.expect(back == run, "synthetic run " + std::to_string(i) + " changed");
    t.expect(serialize_run(back) == text, "synthetic run " + std::to_string(i) + " not byte-stable");
  }
  return t.outcome(std::to_string(fixtures) + " fixtures, 100 synthetic runs");
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Outcome cli_api_contract() {
  Tally t;
  const std::string cli = UNIPO_CLI_PATH;
  const shapes::Checker checker(UNIPO_API_SHAPES);
  const Json contract = Json::parse(ts::read_file(UNIPO_API_SHAPES));
  const Json& codes = contract["cli_exit_codes"];
  const Json& http = contract["http_status"];
  auto fixture = [](const char* n) { return (ts::fixtures_dir() / n).string(); };
  auto run = [&](std::vector<std::string> args, const std::string& in = {}) {
    args.insert(args.begin(), cli);
    return proc::run(args, in);
  };
  auto shape = [&](const std::string& text, const std::string& payload, const std::string& what) {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const std::exception&) {
      t.expect(false, what + " is not JSON");
      return j;
    }
    const auto errors = checker.check(j, payload);
    t.expect(errors.empty(), what + ": " + (errors.empty() ? "" : errors.front()));
    return j;
  };
  auto code = [&](const proc::Result& r, const char* cmd, const char* key) {
    t.expect(r.exit_code == codes[cmd][key].get<int>(),
             std::string(cmd) + " " + key + " exit " + std::to_string(r.exit_code));
  };

  auto r = run({"validate", fixture("fig2_step.json")});
  code(r, "validate", "valid");
  shape(r.out, "validation_report", "validate report");
  r = run({"validate", fixture("invalid_run.json")});
  code(r, "validate", "violations");
  shape(r.out, "validation_report", "validate violations");
  r = run({"validate", "-"}, "{\"schema_version\":");
  code(r, "validate", "syntax_error");
  shape(r.err, "error", "syntax error");
  code(run({"validate", "/nonexistent/run.json"}), "validate", "missing_file");

  r = run({"compute", fixture("fig2_step.json"), "--step", "242", "--token", "1,0,4"});
  code(r, "compute", "ok");
  const Json computed = shape(r.out, "compute_output", "compute output");
  code(run({"compute", fixture("fig2_step.json"), "--step", "7"}), "compute", "unknown_step");
  code(run({"compute", fixture("fig2_step.json"), "--step", "242", "--token", "9,0,0"}), "compute", "bad_token_path");
  {
    Json broken = Json::parse(ts::read_file(fixture("fig2_step.json")));
    broken["params"]["max_len_L"] = 2;
    code(run({"compute", "-", "--step", "242", "--algorithm", "dr_grpo"}, broken.dump()), "compute", "engine_error");
  }

  r = run({"diff", "grpo", "dapo"});
  code(r, "diff", "ok");
  shape(r.out, "diff", "diff output");
  code(run({"diff", "grpo", "nope"}), "diff", "unknown_algorithm");
  code(run({"--register", fixture("fig2_step.json"), "diff", "grpo", "dapo"}), "diff", "bad_definition");

  r = run({"synth", "--seed", "3", "--steps", "30"});
  code(r, "synth", "ok");
  shape(r.out, "run_document", "synth output");
  code(run({"synth", "--group-size", "0"}), "synth", "invalid_config");

  r = run({"downsample", "-", "--metric", "reward", "--threshold", "10"}, r.out);
  code(r, "downsample", "ok");
  shape(r.out, "metric_series", "downsample output");
  code(run({"downsample", fixture("fig2_step.json"), "--threshold", "2"}), "downsample", "threshold_too_small");
  code(run({"downsample", fixture("fig2_step.json"), "--metric", "loss"}), "downsample", "unknown_metric");
  code(run({"bogus"}), "usage", "unknown_subcommand");
  code(run({"serve", "--port", "0", "--runs", "/nonexistent/runs"}), "serve", "missing_runs_dir");

  const fs::path runs = scratch("unipo_acceptance_runs");
  fs::copy_file(fixture("fig2_step.json"), runs / "fig2_step.json");
  {
    proc::Server server(cli, {"--runs", runs.string()});
    httplib::Client client("127.0.0.1", server.port());
    auto status = [&](const httplib::Result& res, const char* key) {
      t.expect(res && res->status == http[key].get<int>(),
               std::string(key) + " status " + (res ? std::to_string(res->status) : "none"));
    };
    auto res = client.Get("/api/runs");
    status(res, "GET /api/runs");
    if (res)
      for (const auto& s : Json::parse(res->body)) t.expect(checker.check(s, "run_summary").empty(), "run summary shape");
    status(client.Get("/api/runs/fig2-step"), "GET /api/runs/{id}");
    status(client.Get("/api/runs/missing"), "GET /api/runs/missing");

    res = client.Get("/api/runs/fig2-step/steps/242/tokens/1/0/4");
    t.expect(res && res->status == 200, "token request failed");
    if (res) {
      const Json tok = shape(res->body, "token_breakdown", "token payload");
      t.expect(tok.value("advantage", 1.0) == 0.0, "token advantage " + tok.value("advantage", Json()).dump());
      t.expect(tok.value("objective", 1.0) == 0.0, "token objective " + tok.value("objective", Json()).dump());
      if (computed.contains("token")) t.expect(tok == computed["token"], "HTTP token differs from CLI compute");
    }
    res = client.Get("/api/runs/fig2-step/steps/242");
    if (res) {
      const Json payload = shape(res->body, "step_payload", "step payload");
      t.expect(payload["step_objective"] == computed["step_objective"], "HTTP step differs from CLI compute");
    } else {
      t.expect(false, "step request failed");
    }

    res = client.Post("/api/runs", ts::read_file(fixture("invalid_run.json")), "application/json");
    status(res, "POST /api/runs invalid");
    if (res) {
      const Json err = shape(res->body, "validation_error", "422 body");
      t.expect(err.value("path", "") == "steps[0].groups[0].responses[1].tokens[2].logprob_ref",
               "422 path " + err.value("path", Json()).dump());
    }
    status(client.Post("/api/runs", "{\"schema_version\":", "application/json"), "POST /api/runs syntax_error");
    status(client.Post("/api/runs", "{\"schema_version\":1}", "application/json"), "POST /api/runs schema_error");
    status(client.Post("/api/runs", ts::read_file(fixture("ppo_small.json")), "application/json"),
           "POST /api/runs valid");
    status(client.Get("/api/runs/fig2-step/metrics?name=reward&threshold=2"), "GET metrics threshold < 3");
    status(client.Delete("/api/runs"), "DELETE /api/runs");
    t.expect(server.stop() == codes["serve"]["stopped"].get<int>(), "serve exit status after SIGTERM");
  }
  fs::remove_all(runs);
  return t.outcome(std::to_string(t.checks()) + " contract checks against the CLI binary and a live server");
}

struct Criterion {
  const char* name;
  double limit_ms;  // 0 = no time bound
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"zero-variance-collapse", 1000, zero_variance_collapse},
      {"oracle-equivalence", 30000, oracle_equivalence},
      {"weight-sum-invariants", 0, weight_sums},
      {"length-bias-witness", 0, length_bias_witness},
      {"dynamic-sampling", 0, dynamic_sampling},
      {"k3-properties", 0, k3_properties},
      {"clip-correctness", 0, clip_correctness},
      {"lttb", 0, lttb},
      {"diff-engine", 0, diff_engine},
      {"schema-round-trip", 0, schema_round_trip},
      {"cli-api-contract", 0, cli_api_contract},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_ms > 0 && ms >= c.limit_ms) {
      o.pass = false;
      o.detail += "; over the " + num(c.limit_ms) + " ms budget";
    }
    failed += !o.pass;
    std::printf("%s  %-24s %9.1f ms  %s\n", o.pass ? "PASS" : "FAIL", c.name, ms, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
