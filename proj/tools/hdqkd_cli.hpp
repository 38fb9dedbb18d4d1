// Copyright 2026 The hdqkd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: subcommands, CSV/JSON output and run manifests.
#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hdqkd/hdqkd.hpp"

namespace hdqkd::cli {

using nlohmann::json;

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kDomain = 3,
  kStatistics = 4,
};

/// Parse "lmin:lmax:step" into a distance grid.
inline std::vector<double> parse_sweep(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw domain_error("--sweep expects lmin:lmax:step, got '" + text + "'");
    }
  }
  if (parts.size() != 3)
    throw domain_error("--sweep expects lmin:lmax:step, got '" + text + "'");
  detail::require(parts[0] >= 0.0, "--sweep: lmin must be >= 0");
  return make_grid(parts[0], parts[1], parts[2]);
}

inline std::vector<double> parse_weights(const std::string& text) {
  std::vector<double> w;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      w.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw domain_error("--truth expects comma-separated probabilities, got '" + text + "'");
    }
  }
  while (w.size() < 2) w.push_back(0.0);
  return w;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// ---------------------------------------------------------------------------

class App {
 public:
  App(std::ostream& out, std::ostream& err) : out_(out), err_(err) { build(); }

  int run(std::vector<std::string> args) {
    args_ = args;
    std::reverse(args.begin(), args.end());  // CLI11 wants reversed order
    try {
      app_.parse(args);
    } catch (const CLI::ParseError& e) {
      const int rc = app_.exit(e, out_, err_);
      return rc == 0 ? kOk : kUsage;
    }
    try {
      return dispatch();
    } catch (const CLI::ParseError& e) {
      const int rc = app_.exit(e, out_, err_);
      return rc == 0 ? kOk : kUsage;
    } catch (const domain_error& e) {
      err_ << "domain error: " << e.what() << '\n';
      return kDomain;
    } catch (const invariant_error& e) {
      err_ << "domain error: " << e.what() << '\n';
      return kDomain;
    } catch (const statistics_error& e) {
      err_ << "statistics error: " << e.what() << '\n';
      return kStatistics;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << '\n';
      return kFailure;
    }
  }

 private:
  // Scenario and sweep flags shared by keyrate / sweep / mutual-info.
  struct ScenarioFlags {
    double gamma = 0.2;
    double ed = 0.0;
    double f_ec = 1.0;
    std::string mode = "independent";
    double length = 0.0;
    std::string sweep;
    double tau = 1.0;
    bool optimize_tau = false;
    double tau_min = kDefaultTauMin;
    double tau_max = kDefaultTauMax;
    double tau_step = kDefaultTauStep;
    double pulse_rate = 0.0;
  };

  struct OutputFlags {
    std::string out;
    std::string manifest;
  };

  void add_output(CLI::App* sub, OutputFlags& o) {
    sub->add_option("--out,-o", o.out, "Output file (default: stdout)");
    sub->add_option("--manifest", o.manifest,
                    "Manifest path (default: <out>.manifest.json when --out is a file)");
  }

  void add_scenario(CLI::App* sub, ScenarioFlags& f, bool with_tau) {
    sub->add_option("--gamma", f.gamma, "Fiber attenuation in dB/km");
    sub->add_option("--ed", f.ed, "Misalignment error probability E_d in [0, 0.5]");
    sub->add_option("--f-ec", f.f_ec, "Error-correction efficiency f >= 1");
    sub->add_option("--mode", f.mode, "independent | differential | spd");
    auto* len = sub->add_option("--length", f.length, "Fiber length in km");
    auto* sw = sub->add_option("--sweep", f.sweep, "Distance sweep lmin:lmax:step (km)");
    len->excludes(sw);
    if (with_tau) {
      auto* tau = sub->add_option("--tau", f.tau, "Fixed detection threshold");
      auto* opt = sub->add_flag("--optimize-tau", f.optimize_tau,
                                "Optimize tau per distance (default unless --tau)");
      tau->excludes(opt);
      sub->add_option("--tau-min", f.tau_min, "Lower end of the tau search");
      sub->add_option("--tau-max", f.tau_max, "Upper end of the tau search");
      sub->add_option("--tau-step", f.tau_step, "Coarse tau grid step");
      sub->add_option("--pulse-rate", f.pulse_rate,
                      "Pulses per second; reports rates in bit/s instead of bit/pulse");
    }
  }

  void build() {
    app_.description("BB84 with conjugate homodyne detection: key rates and simulation");
    app_.require_subcommand(1);
    app_.option_defaults()->always_capture_default();
    app_.set_version_flag("--version", std::string(kVersion));

    auto* dc = app_.add_subcommand("detector-curves", "eta_D, upsilon_D and R versus tau");
    dc->add_option("--tau-min", curves_.tau_min);
    dc->add_option("--tau-max", curves_.tau_max);
    dc->add_option("--tau-step", curves_.tau_step);
    add_output(dc, curves_.out);

    auto* mi = app_.add_subcommand("mutual-info", "I_AB versus distance");
    add_scenario(mi, mi_, true);
    mi->get_option("--mode")->description("independent | differential | spd | all");
    mi_.mode = "all";
    mi_.sweep = "0:100:1";
    add_output(mi, mi_out_);

    auto* kr = app_.add_subcommand("keyrate", "Secret-key rate at one distance or over a sweep");
    kr->add_option("--analysis", kr_analysis_, "standard | improved | improved-tight");
    add_scenario(kr, kr_, true);
    add_output(kr, kr_out_);

    auto* sw = app_.add_subcommand("sweep", "Optimize tau over a distance sweep");
    sw->add_option("--objective", sw_objective_,
                   "mutual-info | standard | improved | improved-tight");
    add_scenario(sw, sw_, true);
    sw_.sweep = "0:50:0.1";
    add_output(sw, sw_out_);

    auto* mc = app_.add_subcommand("montecarlo", "Event-level protocol simulation");
    mc->add_option("--pulses", mc_.pulses);
    mc->add_option("--seed", mc_.seed);
    mc->add_option("--gamma", mc_.gamma);
    auto* mlen = mc->add_option("--length", mc_.length);
    auto* meta = mc->add_option("--eta", mc_.eta, "Channel transmittance (overrides --length)");
    mlen->excludes(meta);
    mc->add_option("--ed", mc_.ed);
    mc->add_option("--tau", mc_.tau);
    mc->add_option("--mode", mc_.mode, "Mode used for the E11 map prediction");
    mc->add_option("--basis-match", mc_.basis_match, "Probability Bob picks Alice's basis");
    mc->add_option("--batch-size", mc_.batch_size);
    mc->add_option("--workers", mc_.workers);
    mc->add_option("--dump-records", mc_.dump_records, "Dump the first N pulses as CSV");
    mc->add_option("--dump-file", mc_.dump_file);
    add_output(mc, mc_out_);

    auto* rc = app_.add_subcommand("reconstruct", "Photon-number distribution from Z samples");
    auto* in = rc->add_option("--input", rc_.input, "Newline-delimited z values");
    auto* truth = rc->add_option("--truth", rc_.truth, "Synthetic truth, e.g. 0.9,0.1");
    in->excludes(truth);
    rc->add_option("--samples", rc_.samples, "Synthetic sample count");
    rc->add_option("--seed", rc_.seed);
    rc->add_option("--n-max", rc_.n_max);
    rc->add_option("--tol", rc_.tol);
    rc->add_option("--max-iters", rc_.max_iters);
    add_output(rc, rc_out_);

    auto* fg = app_.add_subcommand("figures", "Regenerate every figure dataset");
    fg->add_option("--out-dir", fig_.out_dir);
    fg->add_option("--only", fig_.only,
                   "detector-curves mutual-info standard-rate independent-improved optimal-tau "
                   "differential-improved independent-tight differential-tight");

    auto* rp = app_.add_subcommand("replay", "Re-run the command recorded in a manifest");
    rp->add_option("manifest", replay_.manifest)->required();
    rp->add_option("--out,-o", replay_.out, "Override the recorded output path");
  }

  int dispatch() {
    auto* sub = app_.get_subcommands().front();
    current_ = sub;
    const std::string name = sub->get_name();
    if (name == "detector-curves") return cmd_detector_curves();
    if (name == "mutual-info") return cmd_mutual_info();
    if (name == "keyrate") return cmd_keyrate();
    if (name == "sweep") return cmd_sweep();
    if (name == "montecarlo") return cmd_montecarlo();
    if (name == "reconstruct") return cmd_reconstruct();
    if (name == "figures") return cmd_figures();
    if (name == "replay") return cmd_replay();
    return kUsage;
  }

  // --- manifests ----------------------------------------------------------

  json resolved_parameters(const CLI::App* sub) const {
    json p = json::object();
    for (const CLI::Option* o : sub->get_options()) {
      const std::string key = o->get_single_name();
      if (key == "help" || key == "out" || key == "manifest") continue;
      if (o->get_expected_max() == 0) {
        p[key] = o->count() > 0;
      } else if (o->count() > 0) {
        const auto& r = o->results();
        p[key] = r.size() == 1 ? json(r.front()) : json(r);
      } else {
        p[key] = o->get_default_str();
      }
    }
    return p;
  }

  // argv that reproduces this run, minus output destinations
  std::vector<std::string> replay_argv(const CLI::App* sub) const {
    std::vector<std::string> argv{sub->get_name()};
    for (const CLI::Option* o : sub->get_options()) {
      const std::string key = o->get_single_name();
      if (o->count() == 0 || key == "help" || key == "out" || key == "manifest") continue;
      if (o->get_expected_max() == 0) {
        argv.push_back("--" + key);
        continue;
      }
      for (const auto& v : o->results()) {
        if (o->get_positional()) {
          argv.push_back(v);
        } else {
          argv.push_back("--" + key);
          argv.push_back(v);
        }
      }
    }
    return argv;
  }

  json manifest(const std::vector<std::string>& outputs, const json& seeds) const {
    return json{{"tool", "hdqkd"},
                {"version", kVersion},
                {"subcommand", current_->get_name()},
                {"parameters", resolved_parameters(current_)},
                {"argv", replay_argv(current_)},
                {"seeds", seeds},
                {"outputs", outputs},
                {"timestamp", utc_timestamp()}};
  }

  void write_manifest(const OutputFlags& o, const json& seeds = json::array()) {
    std::string path = o.manifest;
    if (path.empty() && !o.out.empty() && o.out != "-") path = o.out + ".manifest.json";
    if (path.empty()) return;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write manifest " + path);
    std::vector<std::string> outs;
    if (!o.out.empty() && o.out != "-") outs.push_back(o.out);
    f << manifest(outs, seeds).dump(2) << '\n';
  }

  // Runs `body` against the requested output stream.
  template <class Body>
  void with_output(const OutputFlags& o, Body&& body) {
    if (o.out.empty() || o.out == "-") {
      body(out_);
      return;
    }
    std::ofstream f(o.out);
    if (!f) throw std::runtime_error("cannot open output " + o.out);
    body(static_cast<std::ostream&>(f));
  }

  // --- scenario helpers ---------------------------------------------------

  static Scenario make_scenario(const ScenarioFlags& f) {
    const auto mode = parse_detection_mode(f.mode);
    if (!mode) throw CLI::ValidationError("--mode", "unknown detection mode '" + f.mode + "'");
    Scenario sc;
    sc.gamma_db_per_km = f.gamma;
    sc.e_d = f.ed;
    sc.f_ec = f.f_ec;
    sc.mode = *mode;
    sc.length_km = f.length;
    sc.tau = f.tau;
    sc.validate();
    return sc;
  }

  static std::vector<double> lengths(const ScenarioFlags& f) {
    if (!f.sweep.empty()) return parse_sweep(f.sweep);
    return {f.length};
  }

  bool tau_given(const CLI::App* sub) const { return sub->get_option("--tau")->count() > 0; }

  SweepConfig make_sweep(const ScenarioFlags& f, Objective obj) const {
    SweepConfig cfg;
    cfg.scenario = make_scenario(f);
    cfg.objective = obj;
    cfg.lengths_km = lengths(f);
    cfg.tau_min = f.tau_min;
    cfg.tau_max = f.tau_max;
    cfg.tau_step = f.tau_step;
    if (tau_given(current_)) cfg.fixed_tau = f.tau;
    return cfg;
  }

  static std::string join_optima(const std::vector<TauPoint>& pts) {
    std::string s;
    for (const auto& p : pts) {
      if (!s.empty()) s += ';';
      s += csv::format(p.tau) + ':' + csv::format(p.value);
    }
    return s;
  }

  static std::vector<std::string> security_fields(const SweepRow& r, double scale) {
    const auto& e = r.eval;
    return {csv::format(r.length_km), csv::format(r.tau_opt),
            csv::format(e.value * scale), csv::format(e.q),
            csv::format(e.e), csv::format(e.q10),
            csv::format(e.q11), csv::format(e.e_uxv),
            csv::format(e.eve_info)};
  }

  // --- subcommands --------------------------------------------------------

  struct CurvesFlags {
    double tau_min = 0.0;
    double tau_max = 10.0;
    double tau_step = 0.01;
    OutputFlags out;
  } curves_;

  int cmd_detector_curves() {
    detail::require(curves_.tau_min >= 0.0, "--tau-min must be >= 0");
    const auto grid = make_grid(curves_.tau_min, curves_.tau_max, curves_.tau_step);
    const auto pts = detector_curves(grid);
    with_output(curves_.out, [&](std::ostream& os) {
      csv::Writer w(os);
      w.header({"tau", "eta_d", "upsilon_d", "ratio"});
      for (const auto& p : pts)
        w.row({csv::format(p.tau), csv::format(p.eta_d), csv::format(p.upsilon_d),
               csv::format(p.ratio)});
    });
    write_manifest(curves_.out);
    return kOk;
  }

  ScenarioFlags mi_;
  OutputFlags mi_out_;

  int cmd_mutual_info() {
    std::vector<DetectionMode> modes;
    if (mi_.mode == "all") {
      modes = {DetectionMode::PerfectSpd, DetectionMode::Independent,
               DetectionMode::Differential};
    } else {
      const auto m = parse_detection_mode(mi_.mode);
      if (!m) throw CLI::ValidationError("--mode", "unknown detection mode '" + mi_.mode + "'");
      modes = {*m};
    }
    ScenarioFlags f = mi_;
    std::vector<std::pair<DetectionMode, std::vector<SweepRow>>> curves;
    for (DetectionMode m : modes) {
      f.mode = std::string(to_string(m));
      curves.emplace_back(m, run_sweep(make_sweep(f, Objective::MutualInfo)));
    }
    with_output(mi_out_, [&](std::ostream& os) {
      csv::Writer w(os);
      w.header({"length_km", "mode", "tau_opt", "I_AB"});
      for (const auto& [m, rows] : curves)
        for (const auto& r : rows)
          w.row({csv::format(r.length_km), std::string(to_string(m)),
                 csv::format(r.tau_opt), csv::format(r.objective_value)});
    });
    write_manifest(mi_out_);
    return kOk;
  }

  std::string kr_analysis_ = "improved";
  ScenarioFlags kr_;
  OutputFlags kr_out_;

  static Objective analysis_objective(const std::string& a) {
    if (a == "standard") return Objective::StandardRate;
    if (a == "improved") return Objective::ImprovedRate;
    if (a == "improved-tight") return Objective::ImprovedTightRate;
    throw CLI::ValidationError("--analysis", "unknown analysis '" + a + "'");
  }

  int cmd_keyrate() {
    const auto cfg = make_sweep(kr_, analysis_objective(kr_analysis_));
    const auto rows = run_sweep(cfg);
    const double scale = kr_.pulse_rate > 0.0 ? kr_.pulse_rate : 1.0;
    with_output(kr_out_, [&](std::ostream& os) {
      csv::Writer w(os);
      w.header({"length_km", "tau", "rate", "q", "e", "q10", "q11", "e_uxv", "eve_info"});
      for (const auto& r : rows) w.row(security_fields(r, scale));
    });
    write_manifest(kr_out_);
    return kOk;
  }

  std::string sw_objective_ = "improved";
  ScenarioFlags sw_;
  OutputFlags sw_out_;

  int cmd_sweep() {
    const auto obj = parse_objective(sw_objective_);
    if (!obj) throw CLI::ValidationError("--objective", "unknown objective '" + sw_objective_ + "'");
    const auto rows = run_sweep(make_sweep(sw_, *obj));
    const double scale = sw_.pulse_rate > 0.0 ? sw_.pulse_rate : 1.0;
    with_output(sw_out_, [&](std::ostream& os) { write_sweep_csv(os, rows, scale); });
    write_manifest(sw_out_);
    return kOk;
  }

  static void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows,
                              double scale = 1.0) {
    csv::Writer w(os);
    w.header({"length_km", "tau", "rate", "q", "e", "q10", "q11", "e_uxv", "eve_info",
              "tau_local_optima"});
    for (const auto& r : rows) {
      auto f = security_fields(r, scale);
      f.push_back(join_optima(r.local_optima));
      w.row(f);
    }
  }

  struct McFlags {
    std::uint64_t pulses = 1000000;
    std::uint64_t seed = 1;
    double gamma = 0.2;
    double length = 0.0;
    double eta = -1.0;
    double ed = 0.0;
    double tau = 1.0;
    std::string mode = "independent";
    double basis_match = 1.0;
    std::uint64_t batch_size = 1 << 16;
    unsigned workers = 1;
    std::uint64_t dump_records = 0;
    std::string dump_file = "pulses.csv";
  } mc_;
  OutputFlags mc_out_;

  static json proportion(const Proportion& p, double predicted) {
    json j{{"value", p.value()}, {"hits", p.hits}, {"trials", p.trials}};
    if (!std::isnan(predicted)) {
      j["predicted"] = predicted;
      j["z_score"] = p.trials ? json(p.z_score(predicted)) : json(nullptr);
    }
    return j;
  }

  int cmd_montecarlo() {
    LinkModel link;
    link.eta_ch = mc_.eta >= 0.0 ? mc_.eta : channel_transmittance(mc_.gamma, mc_.length);
    link.e_d = mc_.ed;
    link.tau = mc_.tau;
    link.validate();
    SimOptions opt;
    opt.basis_match_prob = mc_.basis_match;
    opt.batch_size = mc_.batch_size;
    opt.workers = mc_.workers;
    opt.record_cap = mc_.dump_records;
    const SimSummary s = simulate(link, mc_.pulses, mc_.seed, opt);

    const Threshold tau(link.tau);
    const auto ev = independent_event_probs(link.eta_ch, tau, link.e_d);
    const double nan = RateEvaluation::kNa;
    const bool tau_pos = link.tau > 0.0;
    const double sq_q = 1.0 - ev.p_none;
    const double sq_e = sq_q > 0.0 ? (ev.p_wrong + 0.5 * ev.p_double) / sq_q : nan;
    const auto y = tau_pos ? yields_independent(tau, link.e_d) : YieldSet{0.0, 0.0, 0.5, nan};

    json j;
    j["link"] = {{"eta_ch", link.eta_ch}, {"e_d", link.e_d}, {"tau", link.tau}};
    j["pulses"] = s.counts.pulses;
    j["sifted"] = s.counts.sifted;
    j["seed"] = s.seed;
    j["batch_size"] = opt.batch_size;
    j["independent"] = {
        {"p_none", proportion(s.p_none(), ev.p_none)},
        {"p_correct", proportion(s.p_correct(), ev.p_correct)},
        {"p_wrong", proportion(s.p_wrong(), ev.p_wrong)},
        {"p_double", proportion(s.p_double(), ev.p_double)},
        {"q_sifted", proportion(s.sifted_gain(), ev.q_sifted)},
        {"e_sifted", proportion(s.sifted_qber(), ev.qber)},
        {"q_squashed", proportion(s.squashed_gain(), sq_q)},
        {"e_squashed", proportion(s.squashed_qber(), sq_e)},
        {"y10", proportion(s.yield(0), tau_pos ? y.y10 : nan)},
        {"y11", proportion(s.yield(1), tau_pos ? y.y11 : nan)},
        {"e11", proportion(s.single_click_qber(1), tau_pos ? y.e11 : nan)}};
    j["differential"] = {
        {"qber", proportion(s.differential_qber(), differential_qber(link.eta_ch, link.e_d))},
        {"e11", proportion(s.differential_qber_given(1),
                           e11_map(link.e_d, tau, DetectionMode::Differential))},
        {"ties", s.counts.diff_ties}};
    j["p1n"] = {{"p10", proportion(s.photon_fraction(0), 1.0 - link.eta_ch)},
                {"p11", proportion(s.photon_fraction(1), link.eta_ch)}};
    auto table = [](const auto& t) {
      return json{{"virtual_ok_real_ok", t[0][0]}, {"virtual_ok_real_err", t[0][1]},
                  {"virtual_err_real_ok", t[1][0]}, {"virtual_err_real_err", t[1][1]}};
    };
    j["virtual_vs_real"] = {{"independent", table(s.counts.ind_virtual_real)},
                            {"differential", table(s.counts.diff_virtual_real)},
                            {"virtual_qber", proportion(s.virtual_qber(), link.e_d)}};

    if (mc_.dump_records > 0) {
      std::ofstream f(mc_.dump_file);
      if (!f) throw std::runtime_error("cannot open " + mc_.dump_file);
      csv::Writer w(f);
      w.header({"alice_bit", "alice_basis", "bob_basis", "photon_survived", "routed_detector",
                "virtual_bit", "z0", "z1", "bob_outcome", "differential_bit"});
      static const char* kOutcome[] = {"none", "bit0", "bit1", "double"};
      for (const auto& r : s.records) {
        auto opt_str = [](const std::optional<std::uint8_t>& v) {
          return v ? std::to_string(*v) : std::string();
        };
        w.row({std::to_string(r.alice_bit), std::to_string(r.alice_basis),
               std::to_string(r.bob_basis), r.photon_survived ? "1" : "0",
               opt_str(r.routed_detector), opt_str(r.virtual_bit), csv::format(r.z0),
               csv::format(r.z1), kOutcome[static_cast<int>(r.bob_outcome)],
               std::to_string(r.differential_bit)});
      }
    }
    with_output(mc_out_, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    write_manifest(mc_out_, json::array({mc_.seed}));
    return kOk;
  }

  struct RcFlags {
    std::string input;
    std::string truth;
    std::uint64_t samples = 1000000;
    std::uint64_t seed = 1;
    std::size_t n_max = 10;
    double tol = 1e-8;
    std::size_t max_iters = 10000;
  } rc_;
  OutputFlags rc_out_;

  static ZSampleSet read_samples(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::vector<double> zs;
    std::string line;
    while (std::getline(f, line)) {
      if (line.empty() || line[0] == '#') continue;
      try {
        zs.push_back(std::stod(line));
      } catch (const std::exception&) {
        throw domain_error("not a number in " + path + ": '" + line + "'");
      }
    }
    return ZSampleSet(std::move(zs));
  }

  int cmd_reconstruct() {
    std::optional<PhotonNumberDistribution> truth;
    ZSampleSet samples;
    if (!rc_.input.empty()) {
      samples = read_samples(rc_.input);
    } else if (!rc_.truth.empty()) {
      truth = PhotonNumberDistribution(parse_weights(rc_.truth));
      samples = emit_z_stream(*truth, rc_.samples, rc_.seed);
    } else {
      throw CLI::ValidationError("reconstruct", "one of --input or --truth is required");
    }
    const auto rep = reconstruct(samples, {rc_.n_max, rc_.tol, rc_.max_iters});
    const auto split = split_p1n(rep.estimate);
    json j;
    j["estimate"] = std::vector<double>(rep.estimate.probs().begin(), rep.estimate.probs().end());
    j["iterations"] = rep.iterations;
    j["final_delta"] = rep.final_delta;
    j["converged"] = rep.converged;
    j["log_likelihood"] = rep.log_likelihood;
    j["log_likelihood_monotone"] = rep.monotone;
    j["samples"] = samples.size();
    j["p1n"] = {{"p10", split.p10}, {"p11", split.p11}, {"p_multi", split.p_multi}};
    j["tv_distance_if_truth_known"] =
        truth ? json(tv_distance(rep.estimate, *truth)) : json(nullptr);
    with_output(rc_out_, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    write_manifest(rc_out_, truth ? json::array({rc_.seed}) : json::array());
    return kOk;
  }

  struct FigFlags {
    std::string out_dir = "figures";
    std::vector<std::string> only;
  } fig_;

  bool want(const std::string& fig) const {
    return fig_.only.empty() ||
           std::find(fig_.only.begin(), fig_.only.end(), fig) != fig_.only.end();
  }

  // One figure file; every row carries a `series` label ahead of the
  // sweep columns.
  void write_figure(const std::string& file,
                    const std::vector<std::pair<std::string, std::vector<SweepRow>>>& series,
                    const json& presets) {
    const auto path = (std::filesystem::path(fig_.out_dir) / file).string();
    {
      std::ofstream f(path);
      if (!f) throw std::runtime_error("cannot open " + path);
      csv::Writer w(f);
      w.header({"series", "length_km", "tau", "rate", "q", "e", "q10", "q11", "e_uxv",
                "eve_info", "tau_local_optima"});
      for (const auto& [label, rows] : series)
        for (const auto& r : rows) {
          auto fields = security_fields(r, 1.0);
          fields.insert(fields.begin(), label);
          fields.push_back(join_optima(r.local_optima));
          w.row(fields);
        }
    }
    json m = manifest({path}, json::array());
    m["figure_presets"] = presets;
    std::ofstream(path + ".manifest.json") << m.dump(2) << '\n';
  }

  static std::vector<SweepRow> figure_sweep(DetectionMode mode, Objective obj, double ed,
                                            const std::vector<double>& ls) {
    SweepConfig cfg;
    cfg.scenario.mode = mode;
    cfg.scenario.e_d = ed;
    cfg.objective = obj;
    cfg.lengths_km = ls;
    return run_sweep(cfg);
  }

  static std::string ed_label(double ed) { return "ed=" + csv::format(ed); }

  int cmd_figures() {
    static const std::vector<std::string> kKnown{
        "detector-curves",       "mutual-info",       "standard-rate",
        "independent-improved",  "optimal-tau",       "differential-improved",
        "independent-tight",     "differential-tight"};
    for (const auto& f : fig_.only)
      if (std::find(kKnown.begin(), kKnown.end(), f) == kKnown.end())
        throw CLI::ValidationError("--only", "unknown figure '" + f + "'");
    std::filesystem::create_directories(fig_.out_dir);
    const std::vector<double> eds{0.0, 0.01, 0.05};
    const auto short_range = make_grid(0.0, 60.0, 0.1);
    const auto long_range = make_grid(0.0, 100.0, 1.0);

    if (want("detector-curves")) {
      const auto path = (std::filesystem::path(fig_.out_dir) / "detector_curves.csv").string();
      {
        std::ofstream f(path);
        csv::Writer w(f);
        w.header({"tau", "eta_d", "upsilon_d", "ratio"});
        for (const auto& p : detector_curves(make_grid(0.0, 10.0, 0.01)))
          w.row({csv::format(p.tau), csv::format(p.eta_d), csv::format(p.upsilon_d),
                 csv::format(p.ratio)});
      }
      json m = manifest({path}, json::array());
      m["figure_presets"] = {{"tau_grid", "0:10:0.01"}};
      std::ofstream(path + ".manifest.json") << m.dump(2) << '\n';
    }
    if (want("mutual-info")) {
      std::vector<std::pair<std::string, std::vector<SweepRow>>> s;
      for (auto m : {DetectionMode::PerfectSpd, DetectionMode::Independent,
                     DetectionMode::Differential})
        s.emplace_back(std::string(to_string(m)),
                       figure_sweep(m, Objective::MutualInfo, 0.0, long_range));
      write_figure("mutual_info.csv", s, {{"objective", "mutual-info"}, {"sweep", "0:100:1"}});
    }
    if (want("standard-rate")) {
      std::vector<std::pair<std::string, std::vector<SweepRow>>> s;
      s.emplace_back("spd", figure_sweep(DetectionMode::PerfectSpd, Objective::StandardRate,
                                         0.0, short_range));
      s.emplace_back("independent", figure_sweep(DetectionMode::Independent,
                                                 Objective::StandardRate, 0.0, short_range));
      write_figure("standard_rate.csv", s, {{"objective", "standard"}, {"sweep", "0:60:0.1"}});
    }
    auto rate_figure = [&](const std::string& file, DetectionMode mode, Objective obj,
                           const std::vector<double>& ls, const std::string& sweep) {
      std::vector<std::pair<std::string, std::vector<SweepRow>>> s;
      s.emplace_back("spd", figure_sweep(DetectionMode::PerfectSpd, obj, 0.0, ls));
      for (double ed : eds) s.emplace_back(ed_label(ed), figure_sweep(mode, obj, ed, ls));
      write_figure(file, s, {{"objective", std::string(to_string(obj))},
                             {"mode", std::string(to_string(mode))},
                             {"e_d", eds},
                             {"sweep", sweep}});
    };
    if (want("independent-improved"))
      rate_figure("independent_improved.csv", DetectionMode::Independent,
                  Objective::ImprovedRate, short_range, "0:60:0.1");
    if (want("optimal-tau")) {
      std::vector<std::pair<std::string, std::vector<SweepRow>>> s;
      for (double ed : eds)
        s.emplace_back(ed_label(ed), figure_sweep(DetectionMode::Independent,
                                                  Objective::ImprovedRate, ed, short_range));
      write_figure("optimal_tau.csv", s,
                   {{"objective", "improved"}, {"e_d", eds}, {"sweep", "0:60:0.1"}});
    }
    if (want("differential-improved"))
      rate_figure("differential_improved.csv", DetectionMode::Differential,
                  Objective::ImprovedRate, long_range, "0:100:1");
    if (want("independent-tight"))
      rate_figure("independent_tight.csv", DetectionMode::Independent,
                  Objective::ImprovedTightRate, short_range, "0:60:0.1");
    if (want("differential-tight"))
      rate_figure("differential_tight.csv", DetectionMode::Differential,
                  Objective::ImprovedTightRate, long_range, "0:100:1");
    return kOk;
  }

  struct ReplayFlags {
    std::string manifest;
    std::string out;
  } replay_;

  int cmd_replay() {
    std::ifstream f(replay_.manifest);
    if (!f) throw std::runtime_error("cannot open manifest " + replay_.manifest);
    const json m = json::parse(f);
    if (m.value("version", "") != kVersion)
      err_ << "warning: manifest written by version " << m.value("version", "?")
           << ", running " << kVersion << '\n';
    std::vector<std::string> argv = m.at("argv").get<std::vector<std::string>>();
    std::string out = replay_.out;
    if (out.empty() && !m.at("outputs").empty()) out = m.at("outputs").front();
    // figures keeps its --out-dir inside argv
    if (!out.empty() && argv.front() != "figures") {
      argv.push_back("--out");
      argv.push_back(out);
    }
    App nested(out_, err_);
    return nested.run(argv);
  }

  std::ostream& out_;
  std::ostream& err_;
  CLI::App app_{"", "hdqkd"};
  CLI::App* current_ = nullptr;
  std::vector<std::string> args_;
};

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  App app(out, err);
  return app.run(args);
}

}  // namespace hdqkd::cli
