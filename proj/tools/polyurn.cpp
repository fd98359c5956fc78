// polyurn: construct, classify, simulate and statistically verify balanced
// affine two-color urn schemes with multiple drawings.
//
// Exit codes: 0 ok, 1 verification failed, 2 invalid spec or parameters,
// 3 resource guard tripped.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "polyurn/analytics.hpp"
#include "polyurn/oracle.hpp"
#include "polyurn/simulator.hpp"
#include "polyurn/stats.hpp"
#include "polyurn/urn.hpp"

namespace {

using namespace polyurn;
using nlohmann::json;

UrnSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return spec_from_json(ss.str());
}

std::uint64_t default_seed(std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("POLYURN_SEED")) return std::strtoull(env, nullptr, 10);
  return 0;
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    if (!out) throw SpecError("cannot open output file: " + out_path);
    out << j.dump(2) << "\n";
  }
}

void emit_text(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) throw SpecError("cannot open output file: " + out_path);
    out << text;
  }
}

json spec_json(const UrnSpec& s) { return json::parse(spec_to_json(s)); }

std::vector<std::uint64_t> parse_checkpoints(const std::string& csv) {
  std::vector<std::uint64_t> ns;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) ns.push_back(std::strtoull(item.c_str(), nullptr, 10));
  }
  return ns;
}

json run_table(const UrnSpec& spec,
               std::optional<analytics::TriangularLimitMoments> hint = std::nullopt) {
  const auto lc = analytics::limit_constants(spec, hint);
  json j;
  j["regime"] = to_string(lc.regime);
  j["lambda"] = to_string(lc.lambda);
  j["Q"] = lc.q;
  j["color_swapped"] = lc.color_swapped;
  j["pool_index_condition"] = lc.pool_index_condition;
  if (lc.zeta) j["zeta"] = to_string(*lc.zeta);
  if (lc.theta) j["theta"] = *lc.theta;
  if (lc.gamma1) j["gamma1"] = *lc.gamma1;
  if (lc.alpha) j["alpha"] = *lc.alpha;
  if (lc.beta) j["beta"] = *lc.beta;
  if (lc.s2_leading) j["s2_leading"] = *lc.s2_leading;
  if (lc.ex2_leading) j["ex2_leading"] = *lc.ex2_leading;
  if (lc.m4_leading) j["m4_leading"] = *lc.m4_leading;
  switch (lc.regime) {
    case Regime::SmallIndex:
      j["expansion"] = "W_n = zeta*n + gamma1*sqrt(n)*N";
      break;
    case Regime::CriticalHalf:
      j["expansion"] = "W_n = zeta*n + gamma1*sqrt(n*log n)*N";
      break;
    case Regime::LargeIndex:
      j["expansion"] = "W_n = zeta*n + (W_inf + theta)*n^lambda + (1/alpha)*sqrt(n)*N";
      break;
    case Regime::Triangular:
      j["expansion"] =
          "W_n = (1/Q)*W_inf*n^lambda + (1/(beta*Q))*sqrt(W_inf)*n^(lambda/2)*N";
      break;
    case Regime::GeneralizedPolya:
      j["expansion"] =
          "W_n = (1/Q)*W_inf*n + (1/(beta*Q))*sqrt(W_inf*(T0-W_inf))*sqrt(n)*N";
      break;
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"balanced affine multi-drawing urn toolkit"};
  app.require_subcommand(1);

  std::string spec_path, out_path, quantity, test_name, format = "csv";
  std::uint64_t n = 0, N = 0, horizon = 1000, replicas = 10000, k = 0;
  std::uint64_t n_min = 100, n_max = 1000000;
  std::int64_t w_state = 0;
  std::optional<std::uint64_t> seed_flag;
  int threads = 0;
  std::uint32_t bins = 64, depth = 8;
  bool exact = false;
  double scale_override = 1.0, ks_threshold = 0.03;
  std::optional<double> limit_hint;
  std::string checkpoints_csv = "10,100,1000";

  auto* c_classify = app.add_subcommand("classify", "regime and urn index of a spec");
  c_classify->add_option("--spec", spec_path)->required();
  c_classify->add_option("--out", out_path);

  auto* c_tenable = app.add_subcommand("tenable", "decide tenability");
  c_tenable->add_option("--spec", spec_path)->required();
  c_tenable->add_option("--out", out_path);
  c_tenable->add_option("--depth", depth, "cross-check reachability depth (0 = skip)");

  auto* c_analytics = app.add_subcommand("analytics", "closed-form quantities");
  c_analytics->add_option("quantity", quantity,
                          "g|mean|constants|s2|transition-mass|min-n|cond-second")
      ->required();
  c_analytics->add_option("--spec", spec_path)->required();
  c_analytics->add_option("--n", n);
  c_analytics->add_option("--k", k);
  c_analytics->add_option("--w", w_state);
  c_analytics->add_flag("--exact", exact, "exact rational instead of float");
  c_analytics->add_option("--limit-hint", limit_hint,
                          "E[(L/T0)(1-L/T0)] estimate for lambda = 1");
  c_analytics->add_option("--out", out_path);

  auto* c_simulate = app.add_subcommand("simulate", "trajectory checkpoints as CSV");
  c_simulate->add_option("--spec", spec_path)->required();
  c_simulate->add_option("--horizon", horizon);
  c_simulate->add_option("--checkpoints", checkpoints_csv);
  c_simulate->add_option("--replicas", replicas);
  c_simulate->add_option("--seed", seed_flag);
  c_simulate->add_option("--threads", threads);
  c_simulate->add_option("--format", format, "csv|json");
  c_simulate->add_option("--out", out_path);

  auto* c_oracle = app.add_subcommand("oracle", "exact law of W_n by enumeration");
  c_oracle->add_option("--spec", spec_path)->required();
  c_oracle->add_option("--n", n)->required();
  c_oracle->add_option("--out", out_path);

  auto* c_verify = app.add_subcommand("verify", "statistical verification batteries");
  c_verify->add_option("--test", test_name, "clt|mixing|lil|tails|density|moments")
      ->required();
  c_verify->add_option("--spec", spec_path)->required();
  c_verify->add_option("--n", n);
  c_verify->add_option("--N", N);
  c_verify->add_option("--n-min", n_min);
  c_verify->add_option("--n-max", n_max);
  c_verify->add_option("--replicas", replicas);
  c_verify->add_option("--bins", bins);
  c_verify->add_option("--seed", seed_flag);
  c_verify->add_option("--threads", threads);
  c_verify->add_option("--ks-threshold", ks_threshold);
  c_verify->add_option("--scale-override", scale_override,
                       "multiply the CLT constant (negative controls)");
  c_verify->add_option("--out", out_path);

  auto* c_table = app.add_subcommand("table", "regime expansion row with constants");
  c_table->add_option("--spec", spec_path)->required();
  c_table->add_option("--out", out_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_classify->parsed()) {
      const UrnSpec spec = load_spec(spec_path);
      const UrnClass cls = classify(spec);
      json j;
      j["lambda"] = to_string(cls.lambda);
      j["regime"] = to_string(cls.regime);
      j["deterministic"] = cls.deterministic;
      j["config"]["spec"] = spec_json(spec);
      emit(j, out_path);
      return 0;
    }

    if (c_tenable->parsed()) {
      const UrnSpec spec = load_spec(spec_path);
      const TenabilityResult res = check_tenable(spec);
      json j;
      j["tenable"] = res.tenable;
      j["explanation"] = res.explanation;
      if (depth > 0) {
        const auto scan = oracle::reachability_scan(spec, depth);
        j["reachability_scan"]["depth"] = depth;
        j["reachability_scan"]["tenable_within_depth"] = scan.tenable_within_depth;
        if (!scan.tenable_within_depth) j["reachability_scan"]["violation"] = scan.violation;
      }
      j["config"]["spec"] = spec_json(spec);
      emit(j, out_path);
      return res.tenable ? 0 : 2;
    }

    if (c_analytics->parsed()) {
      const UrnSpec spec = load_spec(spec_path);
      json j;
      j["quantity"] = quantity;
      j["mode"] = exact ? "exact" : "float";
      if (quantity == "g") {
        if (exact)
          j["value"] = to_string(analytics::g_exact(spec, n));
        else
          j["value"] = analytics::g_float(spec, n);
        j["n"] = n;
      } else if (quantity == "mean") {
        if (exact)
          j["value"] = to_string(analytics::mean_white_exact(spec, n));
        else
          j["value"] = analytics::mean_white_float(spec, n);
        j["n"] = n;
      } else if (quantity == "constants") {
        std::optional<analytics::TriangularLimitMoments> hint;
        if (limit_hint) hint = analytics::TriangularLimitMoments{*limit_hint, 0.0};
        j["value"] = run_table(spec, hint);
        j["mode"] = "float";
      } else if (quantity == "s2") {
        j["value"] = analytics::asymptotic_s2(spec, n, limit_hint);
        j["n"] = n;
      } else if (quantity == "transition-mass") {
        const auto forms = analytics::transition_mass_forms(spec, k, n);
        j["value"] = to_string(forms.summed);
        if (forms.closed) j["closed_form"] = to_string(*forms.closed);
        j["k"] = k;
        j["n"] = n;
        j["mode"] = "exact";
      } else if (quantity == "min-n") {
        j["value"] = analytics::transition_mass_min_n(spec);
        j["mode"] = "exact";
      } else if (quantity == "cond-second") {
        if (exact) {
          const auto cm = analytics::conditional_moments(spec, {w_state, n});
          j["value"] = to_string(cm.second);
          j["ev"] = to_string(cm.ev);
        } else {
          j["value"] = analytics::conditional_second_float(spec, {w_state, n});
        }
        j["w"] = w_state;
        j["n"] = n;
      } else {
        throw SpecError("unknown analytics quantity: " + quantity);
      }
      j["config"]["spec"] = spec_json(spec);
      emit(j, out_path);
      return 0;
    }

    if (c_simulate->parsed()) {
      const UrnSpec spec = load_spec(spec_path);
      const std::uint64_t seed = default_seed(seed_flag);
      std::vector<std::uint64_t> ns = parse_checkpoints(checkpoints_csv);
      ns.push_back(horizon);
      ns.erase(std::remove_if(ns.begin(), ns.end(),
                              [&](std::uint64_t v) { return v > horizon; }),
               ns.end());
      const auto rr = sim::run_replicas(spec, ns, replicas, seed, threads);
      if (format == "csv") {
        std::ostringstream csv;
        csv.imbue(std::locale::classic());
        csv << "replica,n,W_n,Y_n\n";
        for (std::uint64_t r = 0; r < replicas; ++r)
          for (std::size_t c = 0; c < rr.plan.ns.size(); ++c) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", rr.y(r, c));
            csv << r << "," << rr.plan.ns[c] << "," << rr.w(r, c) << "," << buf << "\n";
          }
        emit_text(csv.str(), out_path);
      } else {
        json j;
        j["seed"] = seed;
        j["replicas"] = replicas;
        j["config"]["spec"] = spec_json(spec);
        json rows = json::array();
        for (std::uint64_t r = 0; r < replicas; ++r)
          for (std::size_t c = 0; c < rr.plan.ns.size(); ++c)
            rows.push_back({{"replica", r},
                            {"n", rr.plan.ns[c]},
                            {"W", rr.w(r, c)},
                            {"Y", rr.y(r, c)}});
        j["points"] = rows;
        emit(j, out_path);
      }
      return 0;
    }

    if (c_oracle->parsed()) {
      const UrnSpec spec = load_spec(spec_path);
      const auto dist = oracle::exact_distribution(spec, n);
      json j;
      j["n"] = n;
      json law = json::object();
      for (const auto& [w, p] : dist.support) law[std::to_string(w)] = to_string(p);
      j["law"] = law;
      j["mean"] = to_string(oracle::distribution_mean(dist));
      j["config"]["spec"] = spec_json(spec);
      emit(j, out_path);
      return 0;
    }

    if (c_table->parsed()) {
      const UrnSpec spec = load_spec(spec_path);
      json j = run_table(spec);
      j["config"]["spec"] = spec_json(spec);
      emit(j, out_path);
      return 0;
    }

    if (c_verify->parsed()) {
      const UrnSpec spec = load_spec(spec_path);
      const std::uint64_t seed = default_seed(seed_flag);
      stats::VerificationReport rep;
      if (test_name == "clt") {
        stats::CltParams p;
        p.replicas = replicas;
        p.seed = seed;
        p.threads = threads;
        p.scale_override = scale_override;
        p.threshold = ks_threshold;
        if (n) p.n = n;
        if (N) p.N = N;
        rep = stats::verify_clt(spec, p);
      } else if (test_name == "mixing") {
        stats::MixingParams p;
        p.replicas = replicas;
        p.seed = seed;
        p.threads = threads;
        p.scale_override = scale_override;
        p.ks_threshold = ks_threshold;
        if (n) p.n = n;
        if (N) p.N = N;
        rep = stats::verify_mixing(spec, p);
      } else if (test_name == "lil") {
        stats::LilParams p;
        p.replicas = c_verify->count("--replicas") ? replicas : 100;
        p.seed = seed;
        p.threads = threads;
        p.scale_override = scale_override;
        p.n_min = n_min;
        p.n_max = n_max;
        rep = stats::verify_lil(spec, p);
      } else if (test_name == "tails") {
        stats::TailParams p;
        p.replicas = replicas;
        p.seed = seed;
        p.threads = threads;
        p.scale_override = scale_override;
        if (N) p.N = N;
        rep = stats::verify_tails(spec, p);
      } else if (test_name == "density") {
        stats::DensityParams p;
        p.replicas = replicas;
        p.seed = seed;
        p.threads = threads;
        p.bins = bins;
        if (N) p.N = N;
        rep = stats::verify_density(spec, p);
      } else if (test_name == "moments") {
        stats::MomentParams p;
        p.replicas = replicas;
        p.seed = seed;
        p.threads = threads;
        if (n) p.n = n;
        rep = stats::verify_moments(spec, p);
      } else {
        throw SpecError("unknown verify test: " + test_name);
      }
      json j = json::parse(rep.to_json());
      j["config"]["spec"] = spec_json(spec);
      j["config"]["seed"] = seed;
      j["config"]["replicas"] = replicas;
      j["config"]["threads"] = threads;
      emit(j, out_path);
      return rep.passed ? 0 : 1;
    }
  } catch (const GuardError& e) {
    std::cerr << "resource guard: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
