#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tjgen/bench.hpp"
#include "tjgen/error.hpp"
#include "tjgen/insert.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace tjgen;

namespace {

// JSON config files: top-level keys are subcommand names, each holding
// option names (without dashes) and values.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json j = json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& res = opt->results();
        if (opt->get_type_size() == 0) {
          j[name] = true;
        } else if (res.size() == 1) {
          j[name] = res.front();
        } else {
          j[name] = res;
        }
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump();
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw CLI::ConversionError("config", std::string("invalid JSON: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void flatten(const json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, v] : j.items()) {
      if (v.is_object()) {
        auto p = parents;
        p.push_back(key);
        flatten(v, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (v.is_array()) {
        for (const auto& e : v) item.inputs.push_back(scalar(e));
      } else {
        item.inputs.push_back(scalar(v));
      }
      out.push_back(std::move(item));
    }
  }
};

class Log {
 public:
  void open(const std::string& path) {
    if (path.empty()) return;
    file_.open(path, std::ios::binary);
    if (!file_) throw Error(ErrorCode::Io, "cannot write " + path);
  }
  void line(const std::string& s) {
    std::cerr << s << "\n";
    if (file_) file_ << s << "\n";
  }

 private:
  std::ofstream file_;
};

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double x) {
  std::ostringstream ss;
  ss.precision(6);
  ss << x;
  return ss.str();
}

struct Common {
  std::uint64_t seed = 1;
  std::size_t vectors = 100000;
  std::optional<std::string> clock;
  std::optional<std::string> reset;
  std::string log_path;
};

void add_common(CLI::App* sub, Common& c, bool netlist_control = true) {
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_option("--vectors", c.vectors, "Random simulation vectors")->capture_default_str();
  if (netlist_control) {
    sub->add_option("--clock", c.clock, "Clock net of the design (default: detected from flip-flops)");
    sub->add_option("--reset", c.reset, "Active-low reset net of the design (default: detected)");
  }
  sub->add_option("--log", c.log_path, "Also write the log to this file");
}

Netlist load_design(const std::string& path, const Common& c) {
  return read_netlist_file(path, ParseOptions{c.clock, c.reset});
}

void log_header(Log& log, const CLI::App& app, const CLI::App* sub, const Common& c) {
  log.open(c.log_path);
  log.line("# tjgen " + sub->get_name() + " seed=" + std::to_string(c.seed));
  log.line("# config " + JsonConfig().to_config(sub, true, false, ""));
  (void)app;
}

std::array<double, kTrojanFeatureCount> parse_weights(const std::string& s) {
  std::array<double, kTrojanFeatureCount> w{};
  std::stringstream ss(s);
  std::string tok;
  std::size_t i = 0;
  while (std::getline(ss, tok, ',')) {
    if (i >= w.size()) break;
    try {
      w[i++] = std::stod(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad weight '" + tok + "'");
    }
  }
  if (i != w.size() || std::getline(ss, tok, ',')) {
    throw Error(ErrorCode::InvalidArgument, "--weights needs " + std::to_string(kTrojanFeatureCount) + " values");
  }
  return w;
}

std::string witness_text(const Witness& w) {
  std::string s;
  for (const auto& [k, v] : w.inputs) s += "witness input " + k + "=" + (v ? "1" : "0") + "\n";
  for (const auto& [k, v] : w.state) s += "witness state " + k + "=" + (v ? "1" : "0") + "\n";
  return s;
}

// Insertion reports in a directory, paired with their netlists, by file name.
std::vector<InsertedTrojan> load_trojans(const fs::path& dir, const Common& c) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, dir.string() + " is not a directory");
  std::vector<fs::path> reports;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".json") continue;
    if (fs::exists(fs::path(e.path()).replace_extension(".v"))) reports.push_back(e.path());
  }
  std::sort(reports.begin(), reports.end());
  std::vector<InsertedTrojan> out;
  for (const auto& p : reports) {
    InsertionReport r = report_from_json(read_file(p));
    Netlist n = load_design(fs::path(p).replace_extension(".v").string(), c);
    out.push_back({std::move(n), std::move(r)});
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn Trojan signatures from examples and insert matching, verified Trojans into gate-level netlists"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option values, keyed by subcommand");

  Common common;

  // features
  auto* features = app.add_subcommand("features", "Per-net feature table of a netlist");
  std::string f_netlist, f_out, f_format = "csv", f_graph;
  features->add_option("--netlist", f_netlist, "Structural Verilog design")->required();
  features->add_option("--out", f_out, "Output file (default: stdout)");
  features->add_option("--format", f_format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  features->add_option("--dump-graph", f_graph, "Write the cell-to-cell edge list to this file");
  add_common(features, common);

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Random rare-net Trojans for training data");
  std::string b_netlist, b_template, b_out;
  BaselineConfig bcfg;
  baseline->add_option("--netlist", b_netlist, "Host design")->required();
  baseline->add_option("--template", b_template, "Template id (c1, c2, s1, s2) or path")->required();
  baseline->add_option("--theta", bcfg.theta, "Rare-side probability threshold")->capture_default_str();
  baseline->add_option("--count", bcfg.count, "Trojans to generate")->capture_default_str();
  baseline->add_option("--verify-vectors", bcfg.verify_vectors, "Dormant-check vectors")->capture_default_str();
  baseline->add_option("--out-dir", b_out, "Output directory")->required();
  add_common(baseline, common);

  // train
  auto* train = app.add_subcommand("train", "Cluster Trojans and train per-cluster models");
  std::string t_dir, t_out;
  TrainingConfig tcfg;
  train->add_option("--trojans", t_dir, "Directory of Trojan netlists with their JSON reports")->required();
  train->add_option("--out-dir", t_out, "Output directory for bundles")->required();
  train->add_option("--trees", tcfg.forest.trees, "Trees per forest")->capture_default_str();
  train->add_option("--max-depth", tcfg.forest.max_depth, "Tree depth limit")->capture_default_str();
  train->add_option("--negatives", tcfg.negatives_per_design, "Negative nets sampled per design")->capture_default_str();
  train->add_option("--damping", tcfg.ap.damping, "Affinity propagation damping")->capture_default_str();
  train->add_option("--components", tcfg.mixture.max_components, "Largest mixture size tried")->capture_default_str();
  train->add_flag("--functional-only", tcfg.functional_only, "Train on the six functional features only");
  add_common(train, common);

  // insert
  auto* insert = app.add_subcommand("insert", "Insert Trojans guided by a trained bundle");
  std::string i_netlist, i_template, i_models, i_out, i_weights = "1,1,1,1,1", i_selection = "model";
  InsertionConfig icfg;
  bool i_no_sort = false, i_no_diversity = false;
  insert->add_option("--netlist", i_netlist, "Host design")->required();
  insert->add_option("--template", i_template, "Template id (c1, c2, s1, s2) or path")->required();
  insert->add_option("--models", i_models, "Model bundle JSON")->required();
  insert->add_option("--num", icfg.num_trojans, "Trojans to insert")->capture_default_str();
  insert->add_option("--pool-factor", icfg.virtual_pool_factor, "Virtual Trojans evaluated per requested Trojan")
      ->capture_default_str();
  insert->add_option("--weights", i_weights, "Five ranking weights: probability,activity,cc1,cc0,co")
      ->capture_default_str();
  insert->add_option("--candidate-cap", icfg.candidate_cap, "Trigger candidates kept")->capture_default_str();
  insert->add_option("--verify-vectors", icfg.verify_vectors, "Dormant-check vectors")->capture_default_str();
  insert->add_option("--selection", i_selection, "model or random")
      ->check(CLI::IsMember({"model", "random"}))
      ->capture_default_str();
  insert->add_flag("--no-sort", i_no_sort, "Keep the virtual pool in enumeration order");
  insert->add_flag("--no-diversity", i_no_diversity, "Plain combination order for trigger sets");
  insert->add_option("--out-dir", i_out, "Output directory")->required();
  add_common(insert, common);

  // eval
  auto* eval = app.add_subcommand("eval", "Top-N cluster-hit accuracy of the ablation arms");
  std::string e_netlist, e_template, e_models, e_out, e_json, e_train_design, e_train_template;
  std::vector<std::string> e_arms = {"none", "trojan_only", "trig_pay_only", "both"};
  ExperimentSpec spec;
  bool e_append = false;
  eval->add_option("--netlist", e_netlist, "Test design")->required();
  eval->add_option("--template", e_template, "Test template id or path")->required();
  eval->add_option("--models", e_models, "Directory written by train")->required();
  eval->add_option("--runs", spec.runs, "Runs per cluster")->capture_default_str();
  eval->add_option("--top-n", spec.top_n, "N values")->delimiter(',')->capture_default_str();
  eval->add_option("--arms", e_arms, "Arms: none, trojan_only, trig_pay_only, both")->delimiter(',');
  eval->add_option("--verify-vectors", spec.insertion.verify_vectors, "Dormant-check vectors")->capture_default_str();
  eval->add_option("--train-design", e_train_design, "Training design label (default: test design)");
  eval->add_option("--train-template", e_train_template, "Training template label (default: from the bundles)");
  eval->add_option("--out", e_out, "Accuracy table (CSV)")->required();
  eval->add_flag("--append", e_append, "Append a row to an existing table");
  eval->add_option("--json", e_json, "Per-trial details");
  add_common(eval, common);

  // validate
  auto* validate = app.add_subcommand("validate", "Check a Trojan netlist: justification, dormancy, activation");
  std::string v_netlist, v_report, v_original, v_dimacs;
  std::size_t v_verify = 10000;
  validate->add_option("--netlist", v_netlist, "Trojan netlist")->required();
  validate->add_option("--report", v_report, "Insertion report JSON")->required();
  validate->add_option("--original", v_original, "Original design; enables dormant and activation checks");
  validate->add_option("--dimacs", v_dimacs, "Write the justification CNF (DIMACS) to this file");
  validate->add_option("--verify-vectors", v_verify, "Dormant-check vectors")->capture_default_str();
  add_common(validate, common);

  // --config belongs to the top-level app; accept it after the subcommand too.
  std::vector<std::string> args;
  for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);  // CLI11 wants them reversed
  for (std::size_t i = args.size(); i-- > 0;) {
    const bool joined = args[i].starts_with("--config=");
    if (args[i] != "--config" && !joined) continue;
    if (joined) {
      const std::string a = args[i];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      args.push_back(a);
    } else if (i > 0) {
      const std::string a = args[i], v = args[i - 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i - 1), args.begin() + static_cast<std::ptrdiff_t>(i + 1));
      args.push_back(v);
      args.push_back(a);
    }
    break;
  }
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  Log log;
  try {
    if (*features) {
      log_header(log, app, features, common);
      const Netlist n = load_design(f_netlist, common);
      const FeatureTable ft = extract_features(n, {.vectors = common.vectors, .seed = common.seed});
      std::ostringstream os;
      if (f_format == "csv") {
        write_features_csv(os, n, ft);
      } else {
        write_features_json(os, n, ft);
      }
      if (f_out.empty()) {
        std::cout << os.str();
      } else {
        write_file(f_out, os.str());
      }
      if (!f_graph.empty()) write_file(f_graph, dump_edges(n));
      log.line(n.module_name() + ": " + std::to_string(n.nets().size()) + " nets, " +
               std::to_string(n.cells().size()) + " cells");
    } else if (*baseline) {
      log_header(log, app, baseline, common);
      const Netlist n = load_design(b_netlist, common);
      const TrojanTemplate t = resolve_template(b_template);
      bcfg.seed = common.seed;
      bcfg.vectors = common.vectors;
      bcfg.clock = common.clock;
      bcfg.reset = common.reset;
      const BaselineResult r = baseline_insert(n, t, bcfg);
      json files = json::array();
      for (const auto& tj : r.trojans) {
        const std::string stem = tj.report.design + "_" + tj.report.template_id + "_" + std::to_string(tj.report.index);
        write_file(fs::path(b_out) / (stem + ".v"), emit_netlist(tj.netlist));
        write_file(fs::path(b_out) / (stem + ".json"), report_json(tj.report));
        files.push_back(stem);
      }
      json summary = {{"design", n.module_name()},
                      {"template_id", t.template_id},
                      {"theta", bcfg.theta},
                      {"seed", bcfg.seed},
                      {"requested", bcfg.count},
                      {"emitted", r.trojans.size()},
                      {"rare_nets", r.rare_nets},
                      {"attempts", r.attempts},
                      {"unsatisfiable", r.unsat},
                      {"repeated_sets", r.duplicates},
                      {"no_legal_payload", r.no_payload},
                      {"victims_rejected", r.verification_failed},
                      {"shortfall", r.shortfall},
                      {"trojans", files}};
      // No matching .v, so train skips it.
      write_file(fs::path(b_out) / "baseline.json", summary.dump(2) + "\n");
      log.line("emitted " + std::to_string(r.trojans.size()) + " Trojans from " + std::to_string(r.rare_nets) +
               " rare nets");
      if (!r.shortfall.empty()) log.line("warning: " + r.shortfall);
      if (r.trojans.empty()) return 1;
    } else if (*train) {
      log_header(log, app, train, common);
      tcfg.vectors = common.vectors;
      tcfg.seed = common.seed;
      const std::vector<InsertedTrojan> trojans = load_trojans(t_dir, common);
      log.line("loaded " + std::to_string(trojans.size()) + " Trojans");
      const TrainingSet s = build_training_set(trojans, tcfg);
      for (const auto& w : s.warnings) log.line("warning: " + w);
      for (const auto& b : s.bundles) {
        write_file(fs::path(t_out) / ("bundle_" + std::to_string(b.cluster_id) + ".json"), bundle_to_json(b));
      }
      write_file(fs::path(t_out) / "clusters.json", clusters_to_json(s));
      log.line(std::to_string(s.clustering.clusters()) + " clusters, " + std::to_string(s.bundles.size()) +
               " bundles");
    } else if (*insert) {
      log_header(log, app, insert, common);
      const Netlist n = load_design(i_netlist, common);
      const TrojanTemplate t = resolve_template(i_template);
      const ModelBundle bundle = load_bundle(i_models);
      if (auto w = cross_kind_warning(bundle, t)) log.line("warning: " + *w);
      icfg.feature_weights = parse_weights(i_weights);
      icfg.seed = common.seed;
      icfg.vectors = common.vectors;
      icfg.clock = common.clock;
      icfg.reset = common.reset;
      icfg.selection = i_selection == "random" ? Selection::Random : Selection::Model;
      icfg.sort_pool = !i_no_sort;
      icfg.diversity = !i_no_diversity;
      const InsertionResult r = insert_trojans(n, t, bundle, icfg);
      write_insertion(r, icfg, i_out);
      const PoolLedger& l = r.ledger;
      log.line("pool " + std::to_string(r.pool.size()) + "/" + std::to_string(l.target) + ": " +
               std::to_string(l.sets_enumerated) + " sets, " + std::to_string(l.unsat) + " unsatisfiable, " +
               std::to_string(l.no_payload) + " without payload");
      for (const auto& tj : r.trojans) {
        log.line("trojan " + std::to_string(tj.report.index) + ": rank " + std::to_string(tj.report.pool_rank) +
                 ", distance " + format_double(tj.report.distance));
      }
      if (!r.shortfall.empty()) log.line("warning: " + r.shortfall);
      if (r.trojans.empty()) return 1;
    } else if (*eval) {
      log_header(log, app, eval, common);
      const Netlist n = load_design(e_netlist, common);
      const TrojanTemplate t = resolve_template(e_template);
      std::vector<ModelBundle> bundles;
      std::vector<fs::path> paths;
      for (const auto& e : fs::directory_iterator(e_models)) {
        const std::string name = e.path().filename().string();
        if (name.starts_with("bundle_") && e.path().extension() == ".json") paths.push_back(e.path());
      }
      if (paths.empty()) throw Error(ErrorCode::Io, "no bundle_*.json in " + e_models);
      std::sort(paths.begin(), paths.end());
      for (const auto& p : paths) bundles.push_back(load_bundle(p));
      std::sort(bundles.begin(), bundles.end(),
                [](const ModelBundle& a, const ModelBundle& b) { return a.cluster_id < b.cluster_id; });
      const Samples exemplars = exemplars_from_json(read_file(fs::path(e_models) / "clusters.json"));
      spec.arms.clear();
      for (const auto& a : e_arms) spec.arms.push_back(parse_arm(a));
      spec.seed = common.seed;
      spec.insertion.vectors = common.vectors;
      spec.insertion.clock = common.clock;
      spec.insertion.reset = common.reset;
      spec.test_design = n.module_name();
      spec.test_template = t.template_id;
      spec.train_design = e_train_design.empty() ? n.module_name() : e_train_design;
      spec.train_template = e_train_template.empty() ? bundles.front().template_id : e_train_template;
      const ExperimentResult r = run_experiment(n, t, bundles, exemplars, spec);
      for (const auto& w : r.warnings) log.line("warning: " + w);
      const std::vector<ExperimentResult> rows = {r};
      std::string csv = experiment_csv(rows);
      if (e_append && fs::exists(e_out)) {
        const std::string old = read_file(e_out);
        const std::string header = csv.substr(0, csv.find('\n') + 1);
        if (!old.starts_with(header)) throw Error(ErrorCode::InvalidArgument, e_out + " has a different header");
        csv = old + csv.substr(header.size());
      }
      write_file(e_out, csv);
      if (!e_json.empty()) write_file(e_json, experiment_json(r));
      for (const auto& a : r.arms) {
        std::string s = std::string(arm_name(a.arm));
        for (std::size_t k = 0; k < spec.top_n.size(); ++k) {
          s += " top" + std::to_string(spec.top_n[k]) + "=" + format_double(100.0 * a.accuracy[k]) + "%";
        }
        log.line(s);
      }
    } else if (*validate) {
      log_header(log, app, validate, common);
      const Netlist n = load_design(v_netlist, common);
      const InsertionReport rep = report_from_json(read_file(v_report));
      const TriggerCondition cond = rep.binding.condition();
      std::ofstream dimacs;
      JustifyOptions jo;
      if (!v_dimacs.empty()) {
        dimacs.open(v_dimacs, std::ios::binary);
        if (!dimacs) throw Error(ErrorCode::Io, "cannot write " + v_dimacs);
        jo.dimacs = &dimacs;
      }
      TriggerCondition with_trigger = cond;
      with_trigger.push_back({rep.final_trigger_net, true});
      const Justification j = justify(n, with_trigger, jo);
      if (!j.satisfiable()) {
        std::cout << "justify: " << (j.status == SatResult::Unsat ? "UNSAT" : "UNKNOWN") << "\n";
        log.line("error: trigger condition cannot fire");
        return 1;
      }
      std::cout << "justify: SAT\n" << witness_text(j.witness);
      if (!v_original.empty()) {
        const Netlist original = load_design(v_original, common);
        VerifyOptions vo;
        vo.vectors = v_verify;
        vo.seed = common.seed;
        vo.trigger_net = rep.final_trigger_net;
        const VerifyReport vr = verify_inserted(original, n, cond, vo);
        std::cout << "dormant: " << vr.mismatches << " mismatches over " << vr.compared << " lane-cycles\n";
        std::cout << "activation: " << (vr.activation_replayed ? "cycle " + std::to_string(vr.activation_cycle) : "none")
                  << "\n";
        for (const auto& o : vr.differing_outputs) std::cout << "differs " << o << "\n";
        std::cout << "activation " << witness_text(vr.witness);
        std::cout << (vr.passed() ? "PASS" : "FAIL") << "\n";
        if (!vr.passed()) {
          if (!vr.detail.empty()) log.line("detail: " + vr.detail);
          return 1;
        }
      }
    }
  } catch (const Error& e) {
    log.line(std::string("error: ") + e.what());
    return 1;
  } catch (const std::exception& e) {
    log.line(std::string("error: ") + e.what());
    return 1;
  }
  return 0;
}
