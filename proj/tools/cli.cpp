#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "kraft/error.hpp"

namespace kraft::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const fs::path& path, std::string_view what) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + std::string(what) + " '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(std::string(what) + " '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  if (path.is_relative()) path = base / path;
  return fs::absolute(path).lexically_normal();
}

std::vector<int> parse_orders(const std::string& text) {
  std::vector<int> orders;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      orders.push_back(v);
    } catch (const std::exception&) {
      throw InputError("--sweep expects comma-separated non-negative orders, got '" + text + "'");
    }
  }
  if (orders.empty()) throw InputError("--sweep needs at least one order");
  return orders;
}

// Flags given on the command line override manifest values.
struct RunFlags {
  std::string manifest;
  std::size_t episodes = 0, steps = 0, cap = 0, budget = 0, k = 0, patience = 0;
  int max_order = 0;
  std::uint64_t seed = 0;
  std::string learner, policy, out, sweep;
  CLI::Option *o_episodes{}, *o_steps{}, *o_cap{}, *o_budget{}, *o_k{}, *o_patience{}, *o_max_order{}, *o_seed{};
};

int cmd_run(const RunFlags& f, std::ostream& out) {
  const RunManifest manifest = load_manifest(f.manifest);
  EngineConfig cfg = config_from_json(manifest.config);
  if (f.o_episodes->count()) cfg.episodes = f.episodes;
  if (f.o_steps->count()) cfg.steps = f.steps;
  if (f.o_cap->count()) cfg.cap = f.cap;
  if (f.o_budget->count()) cfg.budget = f.budget;
  if (f.o_k->count()) cfg.k = f.k;
  if (f.o_patience->count()) cfg.patience = f.patience;
  if (f.o_max_order->count()) cfg.max_order = f.max_order;
  if (f.o_seed->count()) cfg.seed = f.seed;
  if (!f.learner.empty()) {
    LearnerSpec spec = cfg.learner.value_or(LearnerSpec{});
    spec.kind = parse_learner_kind(f.learner);
    cfg.learner = spec;
  }
  if (!f.policy.empty()) cfg.policy = parse_policy(f.policy);
  const fs::path out_dir = f.out.empty() ? manifest.out : fs::path(f.out);
  if (out_dir.empty()) throw InputError("no output directory: set \"out\" in the manifest or pass --out");
  cfg.validate();

  const LoadedInputs loaded = load_inputs(manifest.inputs);
  FEResult result = run(cfg, loaded.dataset, loaded.kg);
  result.inputs = manifest.inputs;
  if (!f.sweep.empty()) {
    const auto orders = parse_orders(f.sweep);
    result.order_sweep = max_order_sweep(cfg, loaded.dataset, loaded.kg, orders);
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw InputError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  write_text(out_dir / "result.json", dump_result(result, loaded.kg));
  std::ostringstream features, log;
  write_features_csv(features, result, loaded.dataset);
  write_log(log, result);
  write_text(out_dir / "features.csv", features.str());
  write_text(out_dir / "log.txt", log.str());

  const auto generated = std::count_if(result.best_features.begin(), result.best_features.end(),
                                       [](const FeatureRecord& r) { return r.generated; });
  out << "baseline " << fixed(result.baseline_score, 4) << " best " << fixed(result.best_score, 4) << " ("
      << result.best_features.size() << " features, " << generated << " generated, " << result.discarded.size()
      << " discarded) -> " << out_dir.string() << "\n";
  return 0;
}

int cmd_kg_check(const std::string& kg_path, const std::string& dataset_path, const std::string& mapping_path,
                 std::string schema_path, std::ostream& out) {
  KnowledgeGraph kg = load_kg(kg_path);
  if (schema_path.empty()) {
    const fs::path sibling = fs::path(dataset_path).parent_path() / "schema.json";
    if (!fs::exists(sibling)) throw InputError("no schema given and none found next to '" + dataset_path + "'");
    schema_path = sibling.string();
  }
  const SchemaConfig schema = load_schema(schema_path);
  const Dataset d = load_csv(dataset_path, schema);
  if (!mapping_path.empty())
    kg = kg.with_mapping(load_concept_map(mapping_path));
  else if (!schema.concept_map_path.empty())
    kg = kg.with_mapping(load_concept_map(schema.concept_map_path));

  out << "classes: " << kg.classes().size() << "\n";
  out << "units: " << kg.units().size() << "\n";
  out << "rules: " << kg.rules().size() << "\n";
  out << "coverage: " << fixed(coverage(kg, d), 2) << "\n";
  const auto unmapped = unmapped_columns(kg, d);
  out << "unmapped:";
  for (std::size_t i = 0; i < unmapped.size(); ++i) out << (i ? ", " : " ") << unmapped[i];
  out << "\n";
  return 0;
}

void print_tree(const json& node, std::ostream& out, int depth) {
  out << std::string(static_cast<std::size_t>(2 * depth + 2), ' ') << node.at("name").get<std::string>();
  out << "  [" << (node.at("unit").is_null() ? std::string("unknown unit") : node.at("unit").get<std::string>())
      << "]";
  if (node.contains("class") && !node.at("class").is_null()) out << "  class " << node.at("class").get<std::string>();
  out << "\n";
  if (node.contains("children"))
    for (const auto& c : node.at("children")) print_tree(c, out, depth + 1);
}

int cmd_explain(const std::string& result_path, const std::string& name, std::ostream& out) {
  const json result = read_json_file(result_path, "result");
  const json* hit = nullptr;
  std::string verdict, reason;
  std::vector<std::string> names;
  for (const auto& f : result.at("best_features")) {
    names.push_back(f.at("name").get<std::string>());
    if (!hit && names.back() == name) {
      hit = &f;
      verdict = f.at("verdict").get<std::string>();
      reason = f.value("reason", std::string());
    }
  }
  for (const auto& f : result.at("discarded")) {
    names.push_back(f.at("name").get<std::string>());
    if (!hit && names.back() == name) {
      hit = &f;
      verdict = std::string(to_string(Verdict::Kind::NonInterpretable));
      reason = f.at("reason").get<std::string>();
    }
  }
  if (!hit) {
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    std::stable_sort(names.begin(), names.end(), [&](const std::string& a, const std::string& b) {
      return levenshtein(a, name) < levenshtein(b, name);
    });
    std::string msg = "no feature named '" + name + "' in " + result_path;
    if (!names.empty()) {
      msg += "; nearest:";
      for (std::size_t i = 0; i < std::min<std::size_t>(3, names.size()); ++i) msg += (i ? ", " : " ") + names[i];
    }
    throw InputError(msg);
  }
  const json& tree = hit->at("tree");
  out << "feature: " << name << "\n";
  out << "verdict: " << verdict << "\n";
  if (!reason.empty()) out << "reason: " << reason << "\n";
  out << "unit: " << (tree.at("unit").is_null() ? std::string("unknown") : tree.at("unit").get<std::string>()) << "\n";
  out << "tree:\n";
  print_tree(tree, out, 0);
  return 0;
}

int cmd_report(const std::string& result_path, std::string out_dir, std::size_t top, std::ostream& out) {
  const json result = read_json_file(result_path, "result");
  if (out_dir.empty()) out_dir = fs::path(result_path).parent_path().string();
  if (out_dir.empty()) out_dir = ".";
  const auto& inputs = result.at("inputs");
  const SchemaConfig schema = load_schema(inputs.at("schema").get<std::string>());
  const Dataset d = load_csv(inputs.at("dataset").get<std::string>(), schema);

  FeatureTable table;
  std::vector<std::string> origin;
  std::size_t taken = 0;
  for (const auto& f : result.at("best_features")) {
    const bool generated = f.at("generated").get<bool>();
    if (generated && taken >= top) continue;
    taken += generated;
    CandidateFeature c = apply(expr_from_json(f.at("expr")), d);
    table.add(f.at("name").get<std::string>(), std::move(c.values), std::move(c.missing));
    origin.push_back(generated ? "generated" : "raw");
  }
  std::vector<std::size_t> rows(d.n_rows());
  std::iota(rows.begin(), rows.end(), 0);
  LearnerSpec forest;
  forest.kind = LearnerKind::RandomForest;
  forest.seed = derive_seed(result.at("seed").get<std::uint64_t>(), 0x7265706fULL);
  const auto importance =
      feature_importance(train(forest, impute_matrix(table, rows, rows), TargetVector::from(d)));

  std::vector<std::size_t> order(importance.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });

  fs::create_directories(out_dir);
  std::ostringstream csv;
  csv << "feature,importance,origin\n";
  char buf[32];
  for (std::size_t i : order) {
    std::snprintf(buf, sizeof buf, "%.17g", importance[i]);
    csv << csv_escape(table.names[i]) << ',' << buf << ',' << origin[i] << '\n';
  }
  write_text(fs::path(out_dir) / "importance.csv", csv.str());
  out << "wrote " << (fs::path(out_dir) / "importance.csv").string() << "\n";

  if (result.contains("order_sweep")) {
    std::ostringstream sweep;
    sweep << "order,best_score,baseline_score\n";
    for (const auto& p : result.at("order_sweep")) {
      std::snprintf(buf, sizeof buf, "%.17g", p.at("best_score").get<double>());
      sweep << p.at("order").get<int>() << ',' << buf << ',';
      std::snprintf(buf, sizeof buf, "%.17g", p.at("baseline_score").get<double>());
      sweep << buf << '\n';
    }
    write_text(fs::path(out_dir) / "order_sweep.csv", sweep.str());
    out << "wrote " << (fs::path(out_dir) / "order_sweep.csv").string() << "\n";
  }
  return 0;
}

}  // namespace

RunManifest load_manifest(const fs::path& path) {
  const json j = read_json_file(path, "manifest");
  if (!j.is_object()) throw InputError("manifest '" + path.string() + "' must be a JSON object");
  const fs::path base = fs::absolute(path).parent_path();
  RunManifest m;
  try {
    m.inputs.dataset = resolve(base, j.at("dataset").get<std::string>());
    m.inputs.schema = resolve(base, j.at("schema").get<std::string>());
    m.inputs.kg = resolve(base, j.at("kg").get<std::string>());
    m.inputs.mapping = resolve(base, j.value("mapping", std::string()));
    m.out = resolve(base, j.value("out", std::string()));
    if (j.contains("config")) m.config = j.at("config");
  } catch (const json::exception& e) {
    throw InputError("manifest '" + path.string() + "': " + e.what());
  }
  for (const auto& [what, p] : {std::pair{"dataset", m.inputs.dataset}, std::pair{"schema", m.inputs.schema},
                                std::pair{"kg", m.inputs.kg}, std::pair{"mapping", m.inputs.mapping}}) {
    if (!p.empty() && !fs::exists(p)) throw InputError(std::string(what) + " file not found: '" + p.string() + "'");
  }
  return m;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Knowledge-guided automated feature engineering", "kraft"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run_cmd = app.add_subcommand("run", "Run feature engineering from a manifest");
  run_cmd->add_option("manifest", rf.manifest, "Run manifest (JSON)")->required();
  rf.o_episodes = run_cmd->add_option("--episodes", rf.episodes, "Episode budget");
  rf.o_steps = run_cmd->add_option("--steps", rf.steps, "Transformations per episode");
  rf.o_cap = run_cmd->add_option("--cap", rf.cap, "Candidates kept per action");
  rf.o_budget = run_cmd->add_option("--budget", rf.budget, "Maximum feature-set size");
  rf.o_max_order = run_cmd->add_option("--max-order", rf.max_order, "Maximum feature order");
  rf.o_k = run_cmd->add_option("--k", rf.k, "Cross-validation folds");
  rf.o_patience = run_cmd->add_option("--patience", rf.patience, "Episodes without improvement before stopping");
  rf.o_seed = run_cmd->add_option("--seed", rf.seed, "Random seed");
  run_cmd->add_option("--learner", rf.learner, "decision_tree, random_forest, linear or logistic");
  run_cmd->add_option("--policy", rf.policy, "dqn or random");
  run_cmd->add_option("--out", rf.out, "Output directory");
  run_cmd->add_option("--sweep", rf.sweep, "Comma-separated max orders for an order sweep");

  std::string kg_path, dataset_path, mapping_path, schema_path;
  auto* check_cmd = app.add_subcommand("kg-check", "Validate a KG and report dataset coverage");
  check_cmd->add_option("kg", kg_path, "KG document")->required();
  check_cmd->add_option("dataset", dataset_path, "Dataset CSV")->required();
  check_cmd->add_option("mapping", mapping_path, "Concept mapping (defaults to the schema's)");
  check_cmd->add_option("--schema", schema_path, "Schema (defaults to schema.json beside the dataset)");

  std::string result_path, feature_name;
  auto* explain_cmd = app.add_subcommand("explain", "Explain one feature of a result");
  explain_cmd->add_option("result", result_path, "result.json")->required();
  explain_cmd->add_option("feature", feature_name, "Feature display name")->required();

  std::string report_result, report_out;
  std::size_t top = 10;
  auto* report_cmd = app.add_subcommand("report", "Write importance and order-sweep CSVs");
  report_cmd->add_option("result", report_result, "result.json")->required();
  report_cmd->add_option("--out", report_out, "Output directory (defaults to the result's)");
  report_cmd->add_option("--top", top, "Generated features included in the importance forest");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd) return cmd_run(rf, out);
    if (*check_cmd) return cmd_kg_check(kg_path, dataset_path, mapping_path, schema_path, out);
    if (*explain_cmd) return cmd_explain(result_path, feature_name, out);
    if (*report_cmd) return cmd_report(report_result, report_out, top, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace kraft::cli
