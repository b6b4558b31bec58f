// molexplain command-line driver.
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "manifest.hpp"
#include "molexplain/attribution.hpp"
#include "molexplain/datasets.hpp"
#include "molexplain/densenet.hpp"
#include "molexplain/fingerprint.hpp"
#include "molexplain/gcn.hpp"
#include "molexplain/metrics.hpp"
#include "molexplain/model_io.hpp"
#include "molexplain/parallel.hpp"
#include "molexplain/pattern.hpp"
#include "molexplain/unitscreen.hpp"

namespace {

using namespace molexplain;
using nlohmann::json;
namespace fs = std::filesystem;
using cli::Manifest;

// Registers flags on a subcommand and remembers their bound variables so
// the manifest can record the effective configuration.
class Flags {
 public:
  explicit Flags(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& name, T& value, const std::string& help) {
    snapshot_.emplace_back(name, [&value] { return json(value); });
    return app_->add_option("--" + name, value, help);
  }

  CLI::Option* flag(const std::string& name, bool& value, const std::string& help) {
    snapshot_.emplace_back(name, [&value] { return json(value); });
    return app_->add_flag("--" + name + ",!--no-" + name, value, help);
  }

  json snapshot() const {
    json out = json::object();
    for (const auto& [name, get] : snapshot_) out[name] = get();
    return out;
  }

  CLI::App* app() const { return app_; }

 private:
  CLI::App* app_;
  std::vector<std::pair<std::string, std::function<json()>>> snapshot_;
};

struct Common {
  std::size_t threads = 0;
  std::string config;
};

void add_common(Flags& f, Common& c) {
  f.add("threads", c.threads, "Worker thread cap (0 = one per hardware thread)");
  f.app()->add_option("--config", c.config, "key=value file with defaults for this command's flags");
}

std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

json auc_json(const std::vector<std::optional<double>>& aucs) {
  json arr = json::array();
  for (const auto& a : aucs) arr.push_back(a ? json(*a) : json(nullptr));
  return arr;
}

std::array<double, 3> split_fractions(const std::vector<double>& v) {
  if (v.size() != 3) throw UserError("--split needs three fractions (train,valid,test)");
  return {v[0], v[1], v[2]};
}

// SMILES from a plain list or a table; a leading "smiles" header is skipped
// and only the first field of each line is used.
struct SmilesInput {
  std::vector<std::string> smiles;
  std::vector<chem::MolecularGraph> graphs;
  std::vector<datasets::SkippedRow> skipped;
};

SmilesInput read_smiles(const std::string& path, const std::vector<std::string>& inline_smiles) {
  SmilesInput out;
  auto take = [&](const std::string& s, std::size_t line) {
    try {
      out.graphs.push_back(chem::parse_smiles(s));
      out.smiles.push_back(s);
    } catch (const UserError& e) {
      out.skipped.push_back({line, e.what()});
      std::cerr << "skipping line " << line << ": " << e.what() << "\n";
    }
  };
  if (!path.empty()) {
    std::istringstream in(cli::read_file(path));
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::string field = line.substr(0, line.find_first_of("\t, "));
      if (field.empty() || field[0] == '#') continue;
      if (number == 1 && field == "smiles") continue;
      take(field, number);
    }
  }
  for (const std::string& s : inline_smiles) take(s, 0);
  if (out.graphs.empty()) throw UserError("no valid molecules in the input");
  return out;
}

Matrix fingerprint_matrix(const std::vector<chem::MolecularGraph>& graphs, const fingerprint::FingerprintConfig& cfg) {
  Matrix x(graphs.size(), cfg.n_bits);
  parallel_for(graphs.size(), [&](std::size_t i) {
    for (std::size_t b : fingerprint::ecfp(graphs[i], cfg).on_bits()) x(i, b) = 1.0;
  });
  return x;
}

std::size_t resolve_task(const std::string& task, const std::vector<std::string>& names, std::size_t n_tasks) {
  for (std::size_t t = 0; t < names.size(); ++t) {
    if (names[t] == task) return t;
  }
  std::size_t pos = 0;
  std::size_t index = 0;
  try {
    index = std::stoul(task, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != task.size() || index >= n_tasks) {
    throw UserError("unknown task '" + task + "' (model has " + std::to_string(n_tasks) + " tasks)");
  }
  return index;
}

// ---------------------------------------------------------------- gen-toy

struct GenToy {
  Common common;
  std::uint64_t seed = 0;
  std::string out;
  datasets::AlcoholConfig cfg;
};

void setup_gen_toy(CLI::App& app, GenToy& o, std::vector<Flags>& flags) {
  CLI::App* sub = app.add_subcommand("gen-toy", "Generate the alcohol toy data set");
  Flags& f = flags.emplace_back(sub);
  add_common(f, o.common);
  f.add("seed", o.seed, "Random seed");
  f.add("out", o.out, "Output SMILES-TSV")->required();
  f.add("positives", o.cfg.positives, "Alcohols (positive class)");
  f.add("negatives", o.cfg.negatives, "Oxygen-free negatives");
  f.add("acids", o.cfg.acids, "Carboxylic-acid negatives");
  f.add("min-atoms", o.cfg.min_atoms, "Minimum heavy atoms");
  f.add("max-atoms", o.cfg.max_atoms, "Maximum heavy atoms");
  f.add("ring-probability", o.cfg.ring_probability, "Chance of a ring closure per scaffold");
}

void run_gen_toy(GenToy& o, Manifest& m) {
  o.cfg.seed = o.seed;
  m.seeds()["data"] = o.seed;
  const datasets::LabeledSet set = datasets::generate_alcohol_set(o.cfg);
  m.add_output(o.out);
  datasets::write_table(o.out, set);
  m.results()["molecules"] = set.size();
  m.write(manifest_path(o.out));
}

// ------------------------------------------------------------ gen-planted

struct GenPlanted {
  Common common;
  std::uint64_t seed = 0;
  std::string out;
  datasets::PlantedConfig cfg;
};

void setup_gen_planted(CLI::App& app, GenPlanted& o, std::vector<Flags>& flags) {
  CLI::App* sub = app.add_subcommand("gen-planted", "Generate a planted-substructure data set");
  Flags& f = flags.emplace_back(sub);
  add_common(f, o.common);
  f.add("seed", o.seed, "Random seed");
  f.add("out", o.out, "Output SMILES-TSV")->required();
  f.add("patterns", o.cfg.patterns, "SMILES fragment to plant (repeatable or comma-separated)")
      ->delimiter(',')
      ->allow_extra_args(false)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  f.add("positives", o.cfg.positives, "Molecules carrying a planted fragment");
  f.add("negatives", o.cfg.negatives, "Molecules matching no fragment");
  f.add("min-atoms", o.cfg.min_atoms, "Minimum heavy atoms");
  f.add("max-atoms", o.cfg.max_atoms, "Maximum heavy atoms");
  f.add("ring-probability", o.cfg.ring_probability, "Chance of a ring closure per scaffold");
  f.add("max-retries", o.cfg.max_retries, "Attempts per molecule before giving up");
}

void run_gen_planted(GenPlanted& o, Manifest& m) {
  o.cfg.seed = o.seed;
  m.seeds()["data"] = o.seed;
  const datasets::LabeledSet set = datasets::generate_planted_set(o.cfg);
  m.add_output(o.out);
  datasets::write_table(o.out, set);
  m.results()["molecules"] = set.size();
  m.write(manifest_path(o.out));
}

// ------------------------------------------------------------- training

struct DataFlags {
  std::string data;
  std::string format = "tsv";
  std::vector<double> split = {0.8, 0.1, 0.1};
  std::uint64_t split_seed = 0;
  bool stratify = true;
};

void add_data_flags(Flags& f, DataFlags& d) {
  f.add("data", d.data, "Labelled table (smiles column then one column per task)")->required();
  f.add("format", d.format, "Table format: tsv or csv");
}

void add_split_flags(Flags& f, DataFlags& d) {
  f.add("split", d.split, "Train,valid,test fractions")->delimiter(',')->expected(3);
  f.add("split-seed", d.split_seed, "Seed of the train/valid/test split");
  f.flag("stratify", d.stratify, "Stratify the split by the first task's classes");
}

datasets::LabeledSet load_data(const DataFlags& d, Manifest& m) {
  m.add_input(d.data);
  datasets::TableLoad load = datasets::load_table(d.data, datasets::table_format_from_name(d.format));
  for (const auto& s : load.skipped) std::cerr << "skipping line " << s.line << ": " << s.reason << "\n";
  m.results()["rows_loaded"] = load.set.size();
  m.results()["rows_skipped"] = load.skipped.size();
  m.results()["duplicate_smiles"] = load.duplicates;
  return std::move(load.set);
}

json split_json(const DataFlags& d, std::size_t rows) {
  return {{"fractions", d.split}, {"seed", d.split_seed}, {"stratify", d.stratify}, {"rows", rows}};
}

// Re-applies the split stored with a model to the same table.
void apply_stored_split(datasets::LabeledSet& set, const io::ModelMetadata& meta) {
  if (!meta.extra.contains("split")) throw UserError("model has no stored split; retrain with this version");
  const json& s = meta.extra.at("split");
  if (s.at("rows").get<std::size_t>() != set.size()) {
    throw UserError("data has " + std::to_string(set.size()) + " usable rows but the model was trained on " +
                    std::to_string(s.at("rows").get<std::size_t>()));
  }
  set.split = datasets::split(set, split_fractions(s.at("fractions").get<std::vector<double>>()),
                              s.at("seed").get<std::uint64_t>(), s.at("stratify").get<bool>());
}

struct TrainFlags {
  std::uint64_t seed = 0;
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::string optimizer = "adam";
  std::size_t patience = 0;
};

void add_train_flags(Flags& f, TrainFlags& t) {
  f.add("seed", t.seed, "Initialisation and shuffling seed");
  f.add("epochs", t.epochs, "Training epochs");
  f.add("batch-size", t.batch_size, "Mini-batch size");
  f.add("lr", t.learning_rate, "Learning rate");
  f.add("optimizer", t.optimizer, "adam or sgd");
  f.add("patience", t.patience, "Early-stopping patience in epochs on validation AUC (0 = off)");
}

nn::TrainConfig train_config(const TrainFlags& t) {
  nn::TrainConfig cfg;
  cfg.seed = t.seed;
  cfg.epochs = t.epochs;
  cfg.batch_size = t.batch_size;
  cfg.learning_rate = t.learning_rate;
  cfg.patience = t.patience;
  if (t.optimizer == "adam") {
    cfg.optimizer = nn::Optimizer::Adam;
  } else if (t.optimizer == "sgd") {
    cfg.optimizer = nn::Optimizer::Sgd;
  } else {
    throw UserError("unknown optimizer '" + t.optimizer + "' (expected adam or sgd)");
  }
  return cfg;
}

void write_epoch_log(const std::string& path, const nn::TrainReport& report, const std::vector<std::string>& tasks) {
  std::string out = "epoch\ttrain_loss\tmean_valid_auc";
  for (const std::string& t : tasks) out += "\tvalid_auc_" + t;
  out += "\n";
  for (const nn::EpochRecord& r : report.history) {
    out += std::to_string(r.epoch) + "\t" + fmt(r.train_loss) + "\t" + fmt(r.mean_valid_auc);
    for (const auto& a : r.valid_auc) out += "\t" + fmt(a);
    out += "\n";
  }
  cli::write_file(path, out);
}

void record_report(Manifest& m, const nn::TrainReport& report) {
  m.results()["initial_loss"] = report.initial_loss;
  m.results()["best_epoch"] = report.best_epoch;
  m.results()["skipped_tasks"] = report.skipped_tasks;
}

struct TrainDense {
  Common common;
  DataFlags data;
  TrainFlags train;
  std::string preset = "tox21-small";
  std::vector<std::size_t> hidden;
  int radius = 1;
  std::size_t bits = 1024;
  std::string out = "model.bin";
};

void setup_train_dense(CLI::App& app, TrainDense& o, std::vector<Flags>& flags) {
  CLI::App* sub = app.add_subcommand("train-dense", "Train a fingerprint-based dense network");
  Flags& f = flags.emplace_back(sub);
  add_common(f, o.common);
  add_data_flags(f, o.data);
  add_split_flags(f, o.data);
  add_train_flags(f, o.train);
  f.add("preset", o.preset, "Architecture: tox21-small, tox21-4x1024 or tox21-4x2048");
  f.add("hidden", o.hidden, "Comma-separated hidden widths overriding the preset")->delimiter(',');
  f.add("radius", o.radius, "ECFP radius");
  f.add("bits", o.bits, "ECFP length (power of two)");
  f.add("out", o.out, "Model file");
}

void run_train_dense(TrainDense& o, Manifest& m) {
  m.seeds()["train"] = o.train.seed;
  m.seeds()["split"] = o.data.split_seed;
  datasets::LabeledSet set = load_data(o.data, m);
  set.split = datasets::split(set, split_fractions(o.data.split), o.data.split_seed, o.data.stratify);
  const fingerprint::FingerprintConfig fp{o.radius, o.bits};
  fp.validate();
  const Matrix x = fingerprint_matrix(set.molecules, fp);

  auto rows_of = [&](datasets::SplitTag tag) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (set.split[i] == tag) rows.push_back(i);
    }
    return rows;
  };
  auto data_of = [&](const std::vector<std::size_t>& rows) {
    nn::DenseData d{Matrix(rows.size(), x.cols()), set.labels.select(rows)};
    for (std::size_t i = 0; i < rows.size(); ++i) std::copy_n(x.row(rows[i]).data(), x.cols(), d.x.row(i).data());
    return d;
  };
  const nn::DenseData train = data_of(rows_of(datasets::SplitTag::Train));
  const nn::DenseData valid = data_of(rows_of(datasets::SplitTag::Valid));
  const nn::DenseData test = data_of(rows_of(datasets::SplitTag::Test));

  nn::DenseSpec spec = nn::dense_preset(o.preset, o.bits, set.task_names.size());
  if (!o.hidden.empty()) spec.hidden = o.hidden;
  const nn::DenseTrainResult result =
      nn::train_dense(train, valid.x.rows() > 0 ? &valid : nullptr, spec, train_config(o.train));

  const auto test_auc = test.x.rows() > 0 ? nn::task_aucs(nn::predict(result.net, test.x), test.y)
                                          : std::vector<std::optional<double>>(spec.n_tasks);
  io::ModelMetadata meta;
  meta.seed = o.train.seed;
  meta.fingerprint = fp;
  meta.task_names = set.task_names;
  meta.extra = {{"preset", o.preset}, {"split", split_json(o.data, set.size())}, {"test_auc", auc_json(test_auc)}};

  const std::string log = o.out + ".epochs.tsv";
  m.add_output(o.out);
  m.add_output(log);
  io::save_model(o.out, result.net, meta);
  write_epoch_log(log, result.report, set.task_names);
  record_report(m, result.report);
  m.results()["test_auc"] = auc_json(test_auc);
  m.write(manifest_path(o.out));
  for (std::size_t t = 0; t < test_auc.size(); ++t) {
    std::cout << set.task_names[t] << "\ttest_auc\t" << fmt(test_auc[t]) << "\n";
  }
}

struct TrainGcn {
  Common common;
  DataFlags data;
  TrainFlags train;
  std::string preset = "ames-gcn-3x128-fc512";
  std::string pooling = "max";
  bool skip = false;
  std::string out = "model.bin";
};

void setup_train_gcn(CLI::App& app, TrainGcn& o, std::vector<Flags>& flags) {
  CLI::App* sub = app.add_subcommand("train-gcn", "Train a graph convolutional network");
  Flags& f = flags.emplace_back(sub);
  add_common(f, o.common);
  add_data_flags(f, o.data);
  add_split_flags(f, o.data);
  add_train_flags(f, o.train);
  f.add("preset", o.preset, "Architecture: ames-gcn-<layers>x<filters>-fc<units>, e.g. ames-gcn-3x1024-fc512");
  f.add("pooling", o.pooling, "Neighbour and graph pooling: max, sum or mean");
  f.flag("skip", o.skip, "Concatenate every layer's graph vector before the head");
  f.add("out", o.out, "Model file");
}

void run_train_gcn(TrainGcn& o, Manifest& m) {
  m.seeds()["train"] = o.train.seed;
  m.seeds()["split"] = o.data.split_seed;
  datasets::LabeledSet set = load_data(o.data, m);
  set.split = datasets::split(set, split_fractions(o.data.split), o.data.split_seed, o.data.stratify);
  auto data_of = [&](datasets::SplitTag tag) {
    datasets::LabeledSet part = set.subset(tag);
    return gcn::GraphData{std::move(part.molecules), std::move(part.labels)};
  };
  const gcn::GraphData train = data_of(datasets::SplitTag::Train);
  const gcn::GraphData valid = data_of(datasets::SplitTag::Valid);
  const gcn::GraphData test = data_of(datasets::SplitTag::Test);

  gcn::GcnSpec spec = gcn::gcn_preset(o.preset, set.task_names.size());
  spec.pooling = gcn::pooling_from_name(o.pooling);
  spec.skip_connections = o.skip;
  const gcn::GcnTrainResult result =
      gcn::train_gcn(train, valid.graphs.empty() ? nullptr : &valid, spec, train_config(o.train));

  const auto test_auc = test.graphs.empty() ? std::vector<std::optional<double>>(spec.n_tasks)
                                            : nn::task_aucs(gcn::predict(result.net, test.graphs), test.y);
  io::ModelMetadata meta;
  meta.seed = o.train.seed;
  meta.task_names = set.task_names;
  meta.extra = {{"preset", o.preset}, {"split", split_json(o.data, set.size())}, {"test_auc", auc_json(test_auc)}};

  const std::string log = o.out + ".epochs.tsv";
  m.add_output(o.out);
  m.add_output(log);
  io::save_model(o.out, result.net, meta);
  write_epoch_log(log, result.report, set.task_names);
  record_report(m, result.report);
  m.results()["test_auc"] = auc_json(test_auc);
  m.write(manifest_path(o.out));
  for (std::size_t t = 0; t < test_auc.size(); ++t) {
    std::cout << set.task_names[t] << "\ttest_auc\t" << fmt(test_auc[t]) << "\n";
  }
}

// ------------------------------------------------------------- attribute

io::LoadedModel load_model(const std::string& path, io::ModelKind kind, Manifest& m) {
  m.add_input(path);
  io::LoadedModel model = io::load_model(path);
  if (model.kind != kind) {
    throw UserError("'" + path + "' is a " + (model.kind == io::ModelKind::Dense ? "dense" : "graph") +
                    " model; this command needs a " + (kind == io::ModelKind::Dense ? "dense" : "graph") + " model");
  }
  return model;
}

struct Attribute {
  Common common;
  std::string model;
  std::string smiles_file;
  std::vector<std::string> smiles;
  std::string task = "0";
  int steps = 1000;
  std::string out_format = "json";
  bool trapezoid = false;
  std::string output = "probability";
  std::string out = "attributions";
};

void setup_attribute(CLI::App& app, Attribute& o, std::vector<Flags>& flags) {
  CLI::App* sub = app.add_subcommand("attribute", "Integrated-gradients atom attributions from a dense model");
  Flags& f = flags.emplace_back(sub);
  add_common(f, o.common);
  f.add("model", o.model, "Dense model file")->required();
  f.add("smiles-file", o.smiles_file, "Molecules, one SMILES per line (first field)");
  f.add("smiles", o.smiles, "Inline SMILES (repeatable)")
      ->allow_extra_args(false)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  f.add("task", o.task, "Task name or index");
  f.add("steps", o.steps, "Riemann steps m");
  f.add("out-format", o.out_format, "json, dot or svg");
  f.flag("trapezoid", o.trapezoid, "Trapezoid rule instead of the right-endpoint sum");
  f.add("output", o.output, "Differentiated quantity: probability or logit");
  f.add("out", o.out, "Output directory");
}

void run_attribute(Attribute& o, Manifest& m) {
  if (o.smiles_file.empty() && o.smiles.empty()) throw UserError("--smiles-file or --smiles is required");
  const io::LoadedModel model = load_model(o.model, io::ModelKind::Dense, m);
  if (!model.metadata.fingerprint) throw UserError("model has no fingerprint configuration");
  if (!o.smiles_file.empty()) m.add_input(o.smiles_file);
  const SmilesInput input = read_smiles(o.smiles_file, o.smiles);
  const nn::DenseNet& net = *model.dense;
  const std::size_t task = resolve_task(o.task, model.metadata.task_names, net.n_tasks());
  const attribution::RenderFormat format = attribution::render_format_from_name(o.out_format);
  attribution::IgOptions opts;
  opts.trapezoid = o.trapezoid;
  if (o.output == "probability") {
    opts.mode = nn::OutputMode::Probability;
  } else if (o.output == "logit") {
    opts.mode = nn::OutputMode::Logit;
  } else {
    throw UserError("unknown --output '" + o.output + "' (expected probability or logit)");
  }

  const std::size_t n = input.graphs.size();
  std::vector<attribution::AttributionResult> results(n);
  std::vector<std::string> rendered(n);
  parallel_for(n, [&](std::size_t i) {
    results[i] = attribution::attribute_molecule(net, input.graphs[i], *model.metadata.fingerprint, o.steps, task, opts);
    rendered[i] = attribution::render_attribution(input.graphs[i], results[i].per_atom, format);
  });

  std::string summary = "index\tsmiles\tf_x\tf_baseline\tattribution_sum\tcompleteness_gap\ttop_atom\tfile\n";
  double worst_gap = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "mol_%04zu.%s", i, o.out_format.c_str());
    const std::string path = (fs::path(o.out) / name).string();
    m.add_output(path);
    cli::write_file(path, rendered[i]);
    const auto& r = results[i];
    double sum = 0.0;
    for (double a : r.per_feature) sum += a;
    const auto top = std::max_element(r.per_atom.begin(), r.per_atom.end()) - r.per_atom.begin();
    summary += std::to_string(i) + "\t" + input.smiles[i] + "\t" + fmt(r.f_x) + "\t" + fmt(r.f_baseline) + "\t" +
               fmt(sum) + "\t" + fmt(r.completeness_gap) + "\t" + std::to_string(top) + "\t" + name + "\n";
    worst_gap = std::max(worst_gap, r.completeness_gap);
  }
  const std::string summary_path = (fs::path(o.out) / "summary.tsv").string();
  m.add_output(summary_path);
  cli::write_file(summary_path, summary);
  m.results()["molecules"] = n;
  m.results()["skipped"] = input.skipped.size();
  m.results()["max_completeness_gap"] = worst_gap;
  m.results()["task"] = task;
  m.write((fs::path(o.out) / "manifest.json").string());
}

// ------------------------------------------------------------- correlate

datasets::SplitTag subset_tag(const std::string& name) {
  if (name == "train") return datasets::SplitTag::Train;
  if (name == "valid") return datasets::SplitTag::Valid;
  if (name == "test") return datasets::SplitTag::Test;
  throw UserError("unknown subset '" + name + "' (expected train, valid, test or all)");
}

struct Correlate {
  Common common;
  std::string model;
  DataFlags data;
  std::string patterns;
  std::size_t min_support = unitscreen::kDefaultMinSupport;
  double alpha = 0.05;
  std::string subset = "train";
  std::string out = "screen.tsv";
};

void setup_correlate(CLI::App& app, Correlate& o, std::vector<Flags>& flags) {
  CLI::App* sub = app.add_subcommand("correlate", "Screen hidden units against substructure presence calls");
  Flags& f = flags.emplace_back(sub);
  add_common(f, o.common);
  f.add("model", o.model, "Dense model file")->required();
  add_data_flags(f, o.data);
  f.add("patterns", o.patterns, "Pattern file: id and SMARTS per line")->required();
  f.add("min-support", o.min_support, "Drop patterns present in fewer molecules");
  f.add("alpha", o.alpha, "Family-wise significance level");
  f.add("subset", o.subset, "Molecules to screen: train, valid, test or all");
  f.add("out", o.out, "Association table");
}

void run_correlate(Correlate& o, Manifest& m) {
  const io::LoadedModel model = load_model(o.model, io::ModelKind::Dense, m);
  if (!model.metadata.fingerprint) throw UserError("model has no fingerprint configuration");
  datasets::LabeledSet set = load_data(o.data, m);
  if (o.subset != "all") {
    apply_stored_split(set, model.metadata);
    set = set.subset(subset_tag(o.subset));
  }
  m.add_input(o.patterns);
  const auto patterns = chem::read_pattern_file(o.patterns);
  const unitscreen::PresenceCalls calls = unitscreen::presence_calls(patterns, set.molecules, o.min_support);
  const Matrix x = fingerprint_matrix(set.molecules, *model.metadata.fingerprint);
  const unitscreen::ScreeningReport report = unitscreen::screen(*model.dense, x, calls, o.alpha);

  std::string assoc = "layer\tunit\tpattern\tu\tp_raw\tp_adjusted\tdirection\n";
  for (const auto& a : report.associations) {
    assoc += std::to_string(a.layer) + "\t" + std::to_string(a.unit) + "\t" + a.pattern + "\t" + fmt(a.u) + "\t" +
             fmt(a.p_raw) + "\t" + fmt(a.p_adjusted) + "\t" + std::to_string(a.direction) + "\n";
  }
  std::string disc = "layer\tfirst_discoveries\tmean_size\tse_size\n";
  for (const auto& d : report.discovery) {
    disc += std::to_string(d.layer) + "\t" + std::to_string(d.count) + "\t" + fmt(d.mean_size) + "\t" +
            fmt(d.se_size) + "\n";
  }
  std::string filter = "pattern\tsupport\tstatus\n";
  for (std::size_t i = 0; i < calls.dropped.size(); ++i) {
    filter += calls.dropped[i] + "\t" + std::to_string(calls.dropped_support[i]) + "\tbelow_min_support\n";
  }
  for (const std::string& s : report.skipped) filter += s + "\t\tsingle_class\n";

  const std::string disc_path = o.out + ".discovery.tsv";
  const std::string filter_path = o.out + ".filter.tsv";
  m.add_output(o.out);
  m.add_output(disc_path);
  m.add_output(filter_path);
  cli::write_file(o.out, assoc);
  cli::write_file(disc_path, disc);
  cli::write_file(filter_path, filter);
  m.results()["molecules"] = set.size();
  m.results()["tests"] = report.tests;
  m.results()["associations"] = report.associations.size();
  m.results()["patterns_kept"] = calls.ids.size();
  m.results()["patterns_dropped"] = calls.dropped.size();
  m.results()["patterns_single_class"] = report.skipped.size();
  m.write(manifest_path(o.out));
}

// --------------------------------------------------------------- extract

struct Extract {
  Common common;
  std::string model;
  DataFlags data;
  std::string task = "0";
  std::size_t top = 10;
  std::string out = "fragments.tsv";
};

void setup_extract(CLI::App& app, Extract& o, std::vector<Flags>& flags) {
  CLI::App* sub = app.add_subcommand("extract", "Top-scoring substructures of a graph model with test-set PPV");
  Flags& f = flags.emplace_back(sub);
  add_common(f, o.common);
  f.add("model", o.model, "Graph model file")->required();
  add_data_flags(f, o.data);
  f.add("task", o.task, "Task name or index");
  f.add("top", o.top, "Fragments to report");
  f.add("out", o.out, "Fragment table");
}

void run_extract(Extract& o, Manifest& m) {
  const io::LoadedModel model = load_model(o.model, io::ModelKind::Gcn, m);
  datasets::LabeledSet set = load_data(o.data, m);
  apply_stored_split(set, model.metadata);
  const gcn::GraphConvNet& net = *model.gcn;
  const std::size_t task = resolve_task(o.task, model.metadata.task_names, net.spec().n_tasks);
  const datasets::LabeledSet valid = set.subset(datasets::SplitTag::Valid);
  datasets::LabeledSet test_set = set.subset(datasets::SplitTag::Test);
  const gcn::GraphData test{std::move(test_set.molecules), std::move(test_set.labels)};
  const auto fragments = gcn::extract_top_substructures(net, valid.molecules, test, task, o.top);

  std::string out = "rank\tfragment\tscore\tsource_smiles\tcenter\tradius\tsupport\tpositives\tppv\tlow_support\n";
  for (std::size_t i = 0; i < fragments.size(); ++i) {
    const auto& f = fragments[i];
    out += std::to_string(i + 1) + "\t" + f.smiles + "\t" + fmt(f.score) + "\t" + valid.smiles[f.source_molecule] +
           "\t" + std::to_string(f.best.center) + "\t" + std::to_string(f.best.radius) + "\t" +
           std::to_string(f.support) + "\t" + std::to_string(f.positives) + "\t" + fmt(f.ppv) + "\t" +
           (f.low_support ? "1" : "0") + "\n";
  }
  m.add_output(o.out);
  cli::write_file(o.out, out);
  m.results()["validation_molecules"] = valid.size();
  m.results()["test_molecules"] = test.graphs.size();
  m.results()["fragments"] = fragments.size();
  m.write(manifest_path(o.out));
}

// ---------------------------------------------------------------- render

struct Render {
  Common common;
  std::string in;
  std::string format = "svg";
  std::string out;
};

void setup_render(CLI::App& app, Render& o, std::vector<Flags>& flags) {
  CLI::App* sub = app.add_subcommand("render", "Convert an attribution document to DOT, SVG or JSON");
  Flags& f = flags.emplace_back(sub);
  add_common(f, o.common);
  f.add("in", o.in, "Attribution JSON written by attribute")->required();
  f.add("format", o.format, "json, dot or svg");
  f.add("out", o.out, "Output file (default: input with the new extension)");
}

void run_render(Render& o, Manifest& m) {
  m.add_input(o.in);
  const attribution::RenderFormat format = attribution::render_format_from_name(o.format);
  const attribution::RenderedScores doc = attribution::parse_attribution_json(cli::read_file(o.in));
  if (o.out.empty()) o.out = fs::path(o.in).replace_extension(o.format).string();
  m.add_output(o.out);
  cli::write_file(o.out, attribution::render_attribution(doc.graph, doc.scores, format));
  m.results()["atoms"] = doc.graph.atom_count();
  m.write(manifest_path(o.out));
}

// ----------------------------------------------------------- fingerprint

struct Fp {
  Common common;
  std::string smiles_file;
  std::vector<std::string> smiles;
  int radius = 1;
  std::size_t bits = 1024;
  std::string out = "fingerprints.tsv";
};

void setup_fingerprint(CLI::App& app, Fp& o, std::vector<Flags>& flags) {
  CLI::App* sub = app.add_subcommand("fingerprint", "Write ECFP on-bits per molecule");
  Flags& f = flags.emplace_back(sub);
  add_common(f, o.common);
  f.add("smiles-file", o.smiles_file, "Molecules, one SMILES per line (first field)");
  f.add("smiles", o.smiles, "Inline SMILES (repeatable)")
      ->allow_extra_args(false)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  f.add("radius", o.radius, "ECFP radius");
  f.add("bits", o.bits, "ECFP length (power of two)");
  f.add("out", o.out, "Output TSV: smiles then space-separated on-bits");
}

void run_fingerprint(Fp& o, Manifest& m) {
  if (o.smiles_file.empty() && o.smiles.empty()) throw UserError("--smiles-file or --smiles is required");
  if (!o.smiles_file.empty()) m.add_input(o.smiles_file);
  const fingerprint::FingerprintConfig cfg{o.radius, o.bits};
  cfg.validate();
  const SmilesInput input = read_smiles(o.smiles_file, o.smiles);
  std::vector<std::string> lines(input.graphs.size());
  parallel_for(lines.size(), [&](std::size_t i) {
    std::string line = input.smiles[i] + "\t";
    bool first = true;
    for (std::size_t b : fingerprint::ecfp(input.graphs[i], cfg).on_bits()) {
      if (!first) line += ' ';
      line += std::to_string(b);
      first = false;
    }
    lines[i] = line + "\n";
  });
  std::string out = "# radius " + std::to_string(o.radius) + ", " + std::to_string(o.bits) + " bits\n";
  for (const std::string& l : lines) out += l;
  m.add_output(o.out);
  cli::write_file(o.out, out);
  m.results()["molecules"] = lines.size();
  m.write(manifest_path(o.out));
}

// -------------------------------------------------------------- dispatch

// Inserts the --config file's key=value pairs as flags right after the
// subcommand name, so anything given on the command line comes later and
// wins.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  if (args.empty() || args[0].starts_with("-")) return args;
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw UserError("cannot read config file '" + path + "'");
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw UserError("bad config file '" + path + "': " + e.what());
  }
  std::vector<std::string> extra;
  for (const CLI::ConfigItem& item : items) {
    if (!item.parents.empty() && item.parents.front() != args[0]) continue;
    if (item.name == "config" || item.name == "++" || item.name == "--") continue;
    std::string value;
    for (std::size_t k = 0; k < item.inputs.size(); ++k) value += (k ? "," : "") + item.inputs[k];
    extra.push_back("--" + item.name + "=" + value);
  }
  args.insert(args.begin() + 1, extra.begin(), extra.end());
  return args;
}

int run(int argc, char** argv) {
  CLI::App app{"Explainable molecular property models: training, attribution and substructure mining", "molexplain"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(MOLEXPLAIN_VERSION));
  app.footer(
      "Every command writes <output>.manifest.json (attribute: <out>/manifest.json).\n"
      "--config FILE reads key=value lines (optionally under a [command] section) as flag defaults;\n"
      "flags given on the command line win.");

  std::vector<Flags> flags;
  flags.reserve(16);
  GenToy gen_toy;
  GenPlanted gen_planted;
  TrainDense train_dense;
  TrainGcn train_gcn;
  Attribute attribute;
  Correlate correlate;
  Extract extract;
  Render render;
  Fp fp;
  setup_gen_toy(app, gen_toy, flags);
  setup_gen_planted(app, gen_planted, flags);
  setup_train_dense(app, train_dense, flags);
  setup_train_gcn(app, train_gcn, flags);
  setup_attribute(app, attribute, flags);
  setup_correlate(app, correlate, flags);
  setup_extract(app, extract, flags);
  setup_render(app, render, flags);
  setup_fingerprint(app, fp, flags);

  std::vector<std::string> args(argv + 1, argv + argc);
  if (!args.empty() && !args[0].starts_with("-") && app.get_subcommand_no_throw(args[0]) == nullptr) {
    std::cerr << "unknown subcommand '" << args[0] << "'\n\n" << app.help();
    return 1;
  }
  try {
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  const Flags& f = *std::find_if(flags.begin(), flags.end(), [&](const Flags& x) { return x.app() == sub; });
  Manifest manifest(name);
  manifest.config() = f.snapshot();
  auto start = [&](Common& c) {
    set_max_threads(c.threads);
    if (!c.config.empty()) manifest.add_input(c.config);
  };
  if (name == "gen-toy") {
    start(gen_toy.common);
    run_gen_toy(gen_toy, manifest);
  } else if (name == "gen-planted") {
    start(gen_planted.common);
    run_gen_planted(gen_planted, manifest);
  } else if (name == "train-dense") {
    start(train_dense.common);
    run_train_dense(train_dense, manifest);
  } else if (name == "train-gcn") {
    start(train_gcn.common);
    run_train_gcn(train_gcn, manifest);
  } else if (name == "attribute") {
    start(attribute.common);
    run_attribute(attribute, manifest);
  } else if (name == "correlate") {
    start(correlate.common);
    run_correlate(correlate, manifest);
  } else if (name == "extract") {
    start(extract.common);
    run_extract(extract, manifest);
  } else if (name == "render") {
    start(render.common);
    run_render(render, manifest);
  } else {
    start(fp.common);
    run_fingerprint(fp, manifest);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const molexplain::InvariantError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  } catch (const molexplain::UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
