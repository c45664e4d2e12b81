#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qmoment/qmoment.hpp"

using namespace qmoment;
namespace fs = std::filesystem;

namespace {

/// JSON config reader for CLI11. Top-level keys apply to the subcommand being
/// run; an object keyed by a subcommand name applies to that subcommand only.
/// Values given on the command line take precedence.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    std::vector<std::string> active;
    for (const auto* sub : app_->get_subcommands()) active.push_back(sub->get_name());
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        for (const auto& [inner, v] : value.items()) items.push_back(item({key}, inner, v));
      } else if (!active.empty()) {
        items.push_back(item(active, key, value));
      }
    }
    return items;
  }

 private:
  static std::string scalar(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

  static CLI::ConfigItem item(std::vector<std::string> parents, const std::string& name, const json& value) {
    CLI::ConfigItem it;
    it.parents = std::move(parents);
    it.name = name;
    if (value.is_array()) {
      for (const auto& v : value) it.inputs.push_back(scalar(v));
    } else {
      it.inputs.push_back(scalar(value));
    }
    return it;
  }

  const CLI::App* app_;
};

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file(out, text);
  }
}

void emit(const std::string& out, const json& j) { emit(out, j.dump(2) + "\n"); }

MomentTable in_ordering(const MomentTable& t, Ordering o) { return t.ordering() == o ? t : convert_ordering(t); }

std::vector<double> parse_times(const std::string& text, double dt) {
  std::vector<double> times;
  if (!text.empty() && text.back() == 'x') {
    const int count = std::stoi(text.substr(0, text.size() - 1));
    if (count < 1) throw Error(ErrorCode::InvalidParameter, "--times Kx needs K >= 1");
    for (int k = 0; k < count; ++k) times.push_back(k * dt);
    return times;
  }
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) times.push_back(detail::parse_double(field));
  if (times.empty()) throw Error(ErrorCode::InvalidParameter, "--times is empty");
  return times;
}

std::string record_mode(const std::string& path) {
  if (const auto side = detail::read_sidecar(path)) {
    if (side->contains("mode")) return side->at("mode").get<std::string>();
  }
  std::istringstream in(read_file(path));
  std::string header;
  std::getline(in, header);
  if (header.rfind("theta,x", 0) == 0) return "homodyne";
  if (header.rfind("q,p", 0) == 0) return "heterodyne";
  throw Error(ErrorCode::ParseError, path + ": unknown record header '" + header + "'");
}

struct Options {
  std::string out;
  std::string state;
  std::string ordering = "normal";
  int max_degree = 4;
  std::optional<int> cutoff;
  std::string in;
  std::string from_moments;
  bool oracle = false;
  std::vector<int> grid{16, 48};
  std::string homodyne;
  std::string heterodyne;
  double threshold = 4.0;
  std::string vacuum_response;
  double gain = 0.0;
  std::string port = "signal";
  std::string calib;
  double tolerance = 1e-9;
  int order = 2;
  std::optional<double> gamma;
  std::string times = "8x";
  double dt = 5.0;
  std::string out_dir = "snapshots";
  std::string mode;
  std::size_t n = 10000;
  std::uint64_t seed = 0;
  int phases = 8;
  std::vector<double> amp;
  std::optional<int> x_bins;
  bool ordering_given = false;
  bool max_degree_given = false;
};

int run_state_moments(const Options& o) {
  const StateSpec spec = parse_state(o.state);
  const Ordering ordering = parse_ordering(o.ordering);
  const MomentTable table = closed_form_moments(spec, ordering, o.max_degree);
  const int cutoff = o.cutoff.value_or(suggested_cutoff(spec, o.max_degree));
  const MomentTable oracle = oracle_moments(realize(spec, cutoff), ordering, o.max_degree);
  json j = to_json(table);
  j["state"] = to_string(spec);
  j["cutoff"] = cutoff;
  j["oracle_residual"] = max_abs_difference(table, oracle);
  emit(o.out, j);
  return 0;
}

int run_tomogram(const Options& o) {
  if (o.oracle == !o.from_moments.empty()) {
    throw Error(ErrorCode::InvalidParameter, "tomogram needs exactly one of --from-moments or --oracle");
  }
  TomogramGrid grid;
  if (o.oracle) {
    const StateSpec spec = parse_state(o.state);
    grid = oracle_tomogram_grid(realize(spec, o.cutoff.value_or(suggested_cutoff(spec, 4) + 4)), o.grid[0], o.grid[1]);
  } else {
    grid = tomogram_grid_from_moments(read_moment_table(o.from_moments), o.grid[0], o.grid[1]);
  }
  emit(o.out, tomogram_csv(grid));
  return 0;
}

int run_invert_tomogram(const Options& o) {
  emit(o.out, to_json(moments_from_tomogram(read_tomogram_csv(o.in), parse_ordering(o.ordering), o.max_degree)));
  return 0;
}

int run_crosscheck(const Options& o) {
  const auto report =
      crosscheck(read_homodyne_record(o.homodyne), read_heterodyne_record(o.heterodyne), o.max_degree, o.threshold);
  emit(o.out, to_json(report));
  return 0;
}

int run_calibrate(const Options& o) {
  const Port port = parse_port(o.port);
  const MomentTable response = read_moment_table(o.vacuum_response);
  const Ordering needed = port == Port::Signal ? Ordering::Antinormal : Ordering::Normal;
  const int r = o.max_degree_given ? o.max_degree : response.max_degree();
  emit(o.out, to_json(calibrate_noise(in_ordering(response, needed), o.gain, r, port)));
  return 0;
}

int run_deamplify(const Options& o) {
  const MomentTable amplified = read_moment_table(o.in);
  const AmplifierModel model = calibration_from_json(read_json(o.calib), o.calib).model();
  const int r = o.max_degree_given ? o.max_degree : std::min(amplified.max_degree(), model.noise().max_degree());
  const MomentTable signal = deamplify_moments(in_ordering(amplified, model.signal_ordering()), model, r);
  emit(o.out, to_json(in_ordering(signal, amplified.ordering())));
  return 0;
}

int run_purity(const Options& o) {
  const auto result = purity(in_ordering(read_moment_table(o.in), Ordering::Normal), o.tolerance);
  emit(o.out, json{{"purity", result.value}, {"converged", result.converged}, {"partial_sums", result.partial_sums}});
  return 0;
}

int run_uncertainty(const Options& o) {
  emit(o.out, to_json(uncertainty_report(read_moment_table(o.in), o.order)));
  return 0;
}

int run_evolve(const Options& o) {
  if (o.in.empty() == o.state.empty()) throw Error(ErrorCode::InvalidParameter, "evolve needs exactly one of --in or --state");
  std::optional<StateSpec> spec;
  MomentTable t0 = o.in.empty() ? MomentTable(Ordering::Normal, 0) : read_moment_table(o.in);
  if (!o.state.empty()) {
    spec = parse_state(o.state);
    t0 = closed_form_moments(*spec, o.ordering_given ? parse_ordering(o.ordering) : Ordering::Normal,
                             o.max_degree_given ? o.max_degree : 8);
  }
  const std::vector<double> times = parse_times(o.times, o.dt);
  EvolutionGenerator gen;
  if (o.gamma) {
    gen = build_generator(GeneratorKind::DampedNormal, t0.max_degree(), *o.gamma);
    t0 = in_ordering(t0, Ordering::Normal);
  } else {
    gen = build_generator(t0.ordering() == Ordering::Normal ? GeneratorKind::HarmonicNormal
                                                            : GeneratorKind::HarmonicAntinormal,
                          t0.max_degree());
  }
  const auto frames = snapshot_series(t0, gen, times);
  fs::create_directories(o.out_dir);
  json files = json::array();
  for (std::size_t k = 0; k < frames.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%03zu.csv", k);
    write_file((fs::path(o.out_dir) / name).string(), snapshot_csv(frames[k]));
    files.push_back(name);
  }
  json manifest = {{"generator", to_string(gen.kind)},
                   {"gamma", o.gamma ? json(*o.gamma) : json(nullptr)},
                   {"R", t0.max_degree()},
                   {"ordering", std::string(to_string(t0.ordering()))},
                   {"times", times},
                   {"files", files}};
  manifest["state"] = spec ? json(to_string(*spec)) : json(o.in);
  write_json((fs::path(o.out_dir) / "manifest.json").string(), manifest);
  emit(o.out, manifest);
  return 0;
}

int run_simulate(const Options& o) {
  if (o.out.empty() || o.out == "-") throw Error(ErrorCode::InvalidParameter, "simulate needs --out <record.csv>");
  const StateSpec spec = parse_state(o.state);
  std::optional<ChainSettings> chain;
  if (!o.amp.empty()) chain = ChainSettings{o.amp[0], o.amp[1]};
  json summary = {{"mode", o.mode}, {"seed", o.seed}, {"out", o.out}, {"sidecar", sidecar_path(o.out)}};
  if (o.mode == "homodyne") {
    if (chain) throw Error(ErrorCode::InvalidParameter, "--amp is supported for heterodyne records only");
    const auto rec = sample_homodyne(spec, equispaced_angles(o.phases), o.n, o.seed);
    write_homodyne_record(o.out, rec);
    summary["n"] = rec.samples.size();
  } else {
    const auto rec = sample_heterodyne(spec, o.n, o.seed, chain);
    write_heterodyne_record(o.out, rec);
    summary["n"] = rec.samples.size();
  }
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int run_estimate(const Options& o) {
  const std::string mode = record_mode(o.in);
  if (mode == "homodyne") {
    if (!o.calib.empty()) throw Error(ErrorCode::InvalidParameter, "--calib applies to heterodyne records");
    const auto rec = read_homodyne_record(o.in);
    if (o.x_bins) {
      emit(o.out, tomogram_csv(estimate_tomogram(rec, *o.x_bins)));
    } else if (o.ordering_given) {
      emit(o.out, to_json(estimate_moments_from_homodyne(rec, parse_ordering(o.ordering), o.max_degree)));
    } else {
      emit(o.out, to_json(estimate_tomographic_moments(rec, o.max_degree)));
    }
    return 0;
  }
  if (o.x_bins) throw Error(ErrorCode::InvalidParameter, "--x-bins applies to homodyne records");
  const auto rec = read_heterodyne_record(o.in);
  const Ordering ordering = o.ordering_given ? parse_ordering(o.ordering) : Ordering::Antinormal;
  std::optional<AmplifierModel> model;
  if (!o.calib.empty()) model = calibration_from_json(read_json(o.calib), o.calib).model();
  if (model && model->port() != Port::Signal) {
    throw Error(ErrorCode::InvalidParameter, "heterodyne deamplification needs a signal-port calibration");
  }
  const int r = o.max_degree;
  emit(o.out, to_json(estimate_antinormal_moments(rec, r, [&](const MomentTable& t) {
                 const MomentTable signal = model ? deamplify_moments(t, *model, r) : t;
                 return in_ordering(signal, ordering);
               })));
  return 0;
}

void print_error(std::string_view code, const std::string& context) {
  std::cerr << json{{"error", code}, {"context", context}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moment-based quantum state tools: ordered moments, tomograms, amplifier calibration, "
               "uncertainty tests, evolution and simulated detection records."};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "JSON config; command-line flags override its values");
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.allow_config_extras(CLI::config_extras_mode::error);

  Options o;
  const auto add_out = [&](CLI::App* s, const std::string& what) {
    s->add_option("--out,-o", o.out, what + " (default stdout)");
  };
  const auto add_degree = [&](CLI::App* s) {
    return s->add_option("-R,--max-degree", o.max_degree, "Largest moment degree")->check(CLI::NonNegativeNumber);
  };
  const auto add_ordering = [&](CLI::App* s) {
    return s->add_option("--ordering", o.ordering, "normal or antinormal")
        ->check(CLI::IsMember({"normal", "antinormal"}));
  };

  auto* sm = app.add_subcommand("state-moments", "Closed-form moment table of a catalogue state");
  sm->add_option("--state", o.state, "fock:N, coherent:RE[,IM], thermal:T, even:RE[,IM], odd:RE[,IM]")->required();
  add_ordering(sm);
  add_degree(sm);
  sm->add_option("--cutoff", o.cutoff, "Fock cutoff for the oracle residual")->check(CLI::PositiveNumber);
  add_out(sm, "Moment table JSON");

  auto* tg = app.add_subcommand("tomogram", "Optical tomogram on a Gauss-Hermite grid");
  tg->add_option("--from-moments", o.from_moments, "Moment table JSON")->check(CLI::ExistingFile);
  tg->add_flag("--oracle", o.oracle, "Evaluate from the Fock-space state given by --state");
  tg->add_option("--state", o.state, "State for --oracle");
  tg->add_option("--cutoff", o.cutoff, "Fock cutoff for --oracle")->check(CLI::PositiveNumber);
  tg->add_option("--grid", o.grid, "Number of phases and x nodes")->expected(2)->check(CLI::PositiveNumber);
  add_out(tg, "Tomogram CSV");

  auto* it = app.add_subcommand("invert-tomogram", "Ordered moments from a tomogram CSV");
  it->add_option("--in", o.in, "Tomogram CSV (theta,x,w)")->required();
  add_ordering(it);
  add_degree(it);
  add_out(it, "Moment table JSON");

  auto* cc = app.add_subcommand("crosscheck", "Compare heterodyne and homodyne moment estimates");
  cc->add_option("--homodyne", o.homodyne, "Homodyne record CSV")->required();
  cc->add_option("--heterodyne", o.heterodyne, "Heterodyne record CSV")->required();
  add_degree(cc);
  cc->add_option("--threshold", o.threshold, "Largest accepted z-score")->check(CLI::PositiveNumber);
  add_out(cc, "Report JSON");

  auto* ca = app.add_subcommand("calibrate-amp", "Amplifier noise moments from a vacuum response");
  ca->add_option("--vacuum-response", o.vacuum_response, "Output moments for vacuum input")->required();
  ca->add_option("--g", o.gain, "Power gain")->required();
  ca->add_option("--port", o.port, "signal or idler")->check(CLI::IsMember({"signal", "idler"}));
  add_degree(ca);
  add_out(ca, "Calibration JSON");

  auto* da = app.add_subcommand("deamplify", "Input moments from amplified moments and a calibration");
  da->add_option("--in", o.in, "Amplified moment table JSON")->required();
  da->add_option("--calib", o.calib, "Calibration JSON from calibrate-amp")->required();
  add_degree(da);
  add_out(da, "Moment table JSON");

  auto* pu = app.add_subcommand("purity", "Tr rho^2 from a moment table");
  pu->add_option("--in", o.in, "Moment table JSON")->required();
  pu->add_option("--tolerance", o.tolerance, "Convergence tolerance of the series")->check(CLI::PositiveNumber);
  add_out(pu, "Result JSON");

  auto* un = app.add_subcommand("uncertainty", "Uncertainty relations and moment-matrix positivity");
  un->add_option("--in", o.in, "Moment table JSON")->required();
  un->add_option("--order", o.order, "Moment-matrix order")->check(CLI::PositiveNumber);
  add_out(un, "Report JSON");

  auto* ev = app.add_subcommand("evolve", "Moment snapshots under harmonic or damped evolution");
  ev->add_option("--in", o.in, "Initial moment table JSON");
  ev->add_option("--state", o.state, "Initial catalogue state");
  add_ordering(ev);
  add_degree(ev);
  ev->add_option("--gamma", o.gamma, "Damping rate in (0, 1); harmonic evolution when absent");
  ev->add_option("--times", o.times, "Comma-separated times, or Kx for K times spaced by --dt");
  ev->add_option("--dt", o.dt, "Time step for --times Kx")->check(CLI::PositiveNumber);
  ev->add_option("--out-dir", o.out_dir, "Directory for snapshot CSVs and manifest.json");
  add_out(ev, "Manifest JSON");

  auto* si = app.add_subcommand("simulate", "Seeded homodyne or heterodyne record");
  si->add_option("--mode", o.mode, "homodyne or heterodyne")->required()->check(CLI::IsMember({"homodyne", "heterodyne"}));
  si->add_option("--state", o.state, "Catalogue state")->required();
  si->add_option("--n", o.n, "Samples (per phase for homodyne)")->check(CLI::PositiveNumber);
  si->add_option("--seed", o.seed, "RNG seed");
  si->add_option("--phases", o.phases, "Number of equispaced homodyne phases")->check(CLI::PositiveNumber);
  si->add_option("--amp", o.amp, "Gain and noise temperature of a signal-port amplifier")->expected(2);
  si->add_option("--out,-o", o.out, "Record CSV; the sidecar is written next to it")->required();

  auto* es = app.add_subcommand("estimate", "Moments or tomogram estimated from a record");
  es->add_option("--in", o.in, "Record CSV")->required();
  add_ordering(es);
  add_degree(es);
  es->add_option("--calib", o.calib, "Deamplify heterodyne estimates with this calibration");
  es->add_option("--x-bins", o.x_bins, "Histogram tomogram with this many bins")->check(CLI::PositiveNumber);
  add_out(es, "Estimate JSON or tomogram CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("UsageError", e.what());
    return 1;
  }

  const auto given = [](CLI::App* s, const std::string& name) { return s->count(name) > 0; };
  try {
    CLI::App* sub = app.get_subcommands().front();
    o.max_degree_given = sub->get_option_no_throw("--max-degree") && given(sub, "--max-degree");
    o.ordering_given = sub->get_option_no_throw("--ordering") && given(sub, "--ordering");
    if (sub == sm) return run_state_moments(o);
    if (sub == tg) return run_tomogram(o);
    if (sub == it) return run_invert_tomogram(o);
    if (sub == cc) return run_crosscheck(o);
    if (sub == ca) return run_calibrate(o);
    if (sub == da) return run_deamplify(o);
    if (sub == pu) return run_purity(o);
    if (sub == un) return run_uncertainty(o);
    if (sub == ev) return run_evolve(o);
    if (sub == si) return run_simulate(o);
    if (sub == es) return run_estimate(o);
  } catch (const IoError& e) {
    print_error("IoError", e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    print_error("IoError", e.what());
    return 2;
  } catch (const Error& e) {
    print_error(to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("InvalidParameter", e.what());
    return 1;
  }
  return 1;
}
