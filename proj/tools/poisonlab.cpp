#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "poisonlab/attacks.hpp"
#include "poisonlab/dataset.hpp"
#include "poisonlab/http.hpp"
#include "poisonlab/json_io.hpp"
#include "poisonlab/service.hpp"
#include "poisonlab/synth.hpp"
#include "poisonlab/vulnerability.hpp"

namespace fs = std::filesystem;
using namespace poisonlab;

namespace {

struct DataFlags {
  std::string dataset;
  std::string label_col = "label";
  std::string pos = "1";
  std::string neg = "-1";
  std::optional<std::size_t> subsample;
  std::uint64_t seed = 42;
};

void add_data_flags(CLI::App& cmd, DataFlags& f) {
  cmd.add_option("--dataset", f.dataset, "CSV file with a header row")->required()->check(CLI::ExistingFile);
  cmd.add_option("--label-col", f.label_col, "Name of the label column")->capture_default_str();
  cmd.add_option("--pos", f.pos, "Label value of the positive class")->capture_default_str();
  cmd.add_option("--neg", f.neg, "Label value of the negative class")->capture_default_str();
  cmd.add_option("--subsample", f.subsample, "Stratified subsample size (default: use every row)");
  cmd.add_option("--seed", f.seed, "Seed for subsampling, attacks, DBD directions and t-SNE")->capture_default_str();
}

Dataset prepare(const DataFlags& f) {
  Dataset raw = load_csv(f.dataset, f.label_col, f.pos, f.neg);
  if (f.subsample) raw = stratified_subsample(raw, *f.subsample, f.seed);
  return standardize(raw);
}

Json data_flags_json(const DataFlags& f) {
  return Json{{"dataset", f.dataset},         {"label_col", f.label_col}, {"pos", f.pos}, {"neg", f.neg},
              {"subsample", detail::optional_json(f.subsample)}, {"seed", f.seed}};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw DataError(path.string() + ": write failed");
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open");
  return Json::parse(in);
}

std::string percent(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << 100.0 * v << '%';
  return s.str();
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

void print_report(const fs::path& dir, std::ostream& out) {
  const Json result = read_json(dir / "result.json");
  const Json overview = read_json(dir / "overview.json");
  const Json& vm = overview.at("victim_metrics");
  const Json& pm = overview.at("poisoned_metrics");
  out << "target:          " << result.at("target_id") << " (desired label " << result.at("desired_label") << ")\n"
      << "algorithm:       " << result.at("config").at("algorithm").get<std::string>() << ", budget "
      << result.at("config").at("budget") << ", seed " << result.at("config").at("seed") << "\n"
      << "outcome:         " << (result.at("success").get<bool>() ? "success" : "failed at budget") << "\n"
      << "poisons:         " << result.at("poison_count") << " inserted, poisoning rate "
      << percent(result.at("poisoning_rate").get<double>()) << "\n\n"
      << "metric      victim    poisoned  delta\n";
  for (const char* m : {"accuracy", "recall", "f1", "roc_auc"}) {
    const double a = vm.at(m).get<double>();
    const double b = pm.at(m).get<double>();
    out << std::left << std::setw(12) << m << fixed(a) << "    " << fixed(b) << "    " << fixed(b - a) << "\n";
  }
  out << "\ninnocents:       ";
  const Json& innocents = result.at("innocents");
  if (innocents.empty()) {
    out << "none";
  } else {
    for (std::size_t i = 0; i < innocents.size(); ++i) out << (i ? ", " : "") << innocents[i];
  }
  out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"poisonlab: targeted data-poisoning vulnerability workbench"};
  app.require_subcommand(1);

  // sweep
  DataFlags sweep_data;
  std::vector<std::string> sweep_algorithms{"binary-search", "stingray"};
  std::optional<std::size_t> sweep_cap;
  std::size_t parallelism = 1;
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Attack every instance and tabulate DBD, MCSA, risk and metrics");
  add_data_flags(*sweep, sweep_data);
  sweep->add_option("--algorithm", sweep_algorithms, "Attack algorithms to run (binary-search, stingray)")
      ->check(CLI::IsMember({"binary-search", "stingray"}))
      ->capture_default_str();
  sweep->add_option("--cap", sweep_cap, "MCSA cap in insertions (default: ceil(n/4))");
  sweep->add_option("--parallelism", parallelism, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--out", sweep_out, "Output file; .json writes JSON, anything else CSV")->required();

  // attack
  DataFlags attack_data;
  std::size_t target = 0;
  std::string algorithm = "binary-search";
  std::optional<std::size_t> budget;
  std::size_t k = 7;
  std::size_t bins = 20;
  std::string attack_out;
  auto* attack = app.add_subcommand("attack", "Attack one target and write the result and every view payload");
  add_data_flags(*attack, attack_data);
  attack->add_option("--target", target, "Instance id of the target")->required();
  attack->add_option("--algorithm", algorithm, "binary-search or stingray")
      ->check(CLI::IsMember({"binary-search", "stingray"}))
      ->capture_default_str();
  attack->add_option("--budget", budget, "Maximum poison insertions (default: ceil(n/4))");
  attack->add_option("--k", k, "Neighbours per node in the local impact graph")->capture_default_str();
  attack->add_option("--bins", bins, "Histogram bins in the feature report")->capture_default_str();
  attack->add_option("--out", attack_out, "Output directory")->required();

  // report
  std::string report_dir;
  auto* report = app.add_subcommand("report", "Summarise an attack output directory");
  report->add_option("--out", report_dir, "Directory written by 'attack'")->required()->check(CLI::ExistingDirectory);

  // serve
  std::string listen = "127.0.0.1:8080";
  std::string data_dir = "poisonlab-data";
  std::size_t workers = 4;
  auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON service");
  serve->add_option("--listen", listen, "host:port to bind")->envname("POISONLAB_LISTEN")->capture_default_str();
  serve->add_option("--data-dir", data_dir, "Session storage directory")
      ->envname("POISONLAB_DATA_DIR")
      ->capture_default_str();
  serve->add_option("--workers", workers, "Concurrent jobs")
      ->envname("POISONLAB_WORKERS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // synth
  std::string synth_kind = "spambase";
  std::uint64_t synth_seed = 42;
  std::size_t synth_count = 200;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset as CSV (label column 'label', 1/-1)");
  synth_cmd->add_option("--kind", synth_kind, "spambase, digits or gaussians")
      ->check(CLI::IsMember({"spambase", "digits", "gaussians"}))
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
  synth_cmd->add_option("--count", synth_count, "Rows per class (digits) or total rows (gaussians)")
      ->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "Output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) {
      const Dataset data = prepare(sweep_data);
      std::vector<AttackConfig> configs;
      for (const auto& a : sweep_algorithms) {
        AttackConfig c;
        c.algorithm = parse_algorithm(a);
        c.seed = sweep_data.seed;
        configs.push_back(c);
      }
      DbdConfig dbd;
      dbd.seed = sweep_data.seed;
      const std::size_t cap = sweep_cap.value_or(default_mcsa_cap(data.size()));
      std::cerr << "sweep: n=" << data.size() << " cap=" << cap << " seed=" << sweep_data.seed << "\n";
      const SweepReport rep = vulnerability_sweep(data, ModelConfig{}, configs, dbd, cap, parallelism);
      const fs::path out(sweep_out);
      if (out.extension() == ".json") {
        Json j = to_json(rep);
        j["seed"] = sweep_data.seed;
        write_text(out, dump(j));
      } else {
        write_text(out, sweep_csv(rep));
      }
      Json run = data_flags_json(sweep_data);
      run["algorithms"] = sweep_algorithms;
      run["cap"] = cap;
      run["parallelism"] = parallelism;
      write_text(out.string() + ".run.json", dump(run));
    } else if (*attack) {
      const Dataset data = prepare(attack_data);
      AttackRequest request;
      request.target_id = target;
      request.attack_config.algorithm = parse_algorithm(algorithm);
      request.attack_config.budget = budget.value_or(default_mcsa_cap(data.size()));
      request.attack_config.seed = attack_data.seed;
      request.dbd_config.seed = attack_data.seed;
      request.projection_config.seed = attack_data.seed;
      request.k = k;
      request.bins = bins;
      if (k < 1 || k >= data.size()) throw DataError("--k must lie in [1, n-1]");
      const ModelConfig model_config;
      const Model victim = train(data, model_config);
      const AttackArtifacts artifacts = compute_attack_artifacts(data, model_config, victim, request);
      const fs::path dir(attack_out);
      write_text(dir / "result.json", artifacts.result);
      for (const auto& [view, text] : artifacts.views) write_text(dir / (view + ".json"), text);
      Json run = data_flags_json(attack_data);
      run["request"] = to_json(request);
      write_text(dir / "run.json", dump(run));
      print_report(dir, std::cout);
    } else if (*report) {
      print_report(report_dir, std::cout);
    } else if (*serve) {
      const auto colon = listen.rfind(':');
      if (colon == std::string::npos) throw DataError("--listen must look like host:port");
      const std::string host = listen.substr(0, colon);
      const int port = std::stoi(listen.substr(colon + 1));
      Service service(data_dir, workers);
      httplib::Server server;
      mount(server, service);
      std::cerr << "serving " << service.session_ids().size() << " session(s) from " << data_dir << " on " << listen
                << "\n";
      if (!server.listen(host, port)) throw DataError("cannot listen on " + listen);
    } else if (*synth_cmd) {
      Dataset d;
      if (synth_kind == "spambase") {
        d = synth::spambase_like(synth_seed);
      } else if (synth_kind == "digits") {
        d = synth::digits_like(synth_count, synth_seed);
      } else {
        d = synth::two_gaussians(synth_count, 4.0, 1.0, synth_seed);
      }
      std::ostringstream csv;
      write_csv(csv, d);
      write_text(synth_out, csv.str());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
