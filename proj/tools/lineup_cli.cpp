// lineup: build lineups and answer keys, reveal, score, and serve sessions.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 generation error.

#include <charconv>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lineup/all.hpp"
#include "lineup/http.hpp"

namespace fs = std::filesystem;
using namespace lineup;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitGeneration = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::invalid_spec:
    case Errc::incompatible_spec:
    case Errc::bad_counts:
      return kExitUsage;
    case Errc::null_generation_failed:
      return kExitGeneration;
    default:
      return kExitData;
  }
}

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct LineupArgs {
  std::string data, kind, response, group, predictor, out, key, axis = "fitted";
  std::string bundle, claim;
  int degree = 1;
  std::optional<std::size_t> bins, groups;
  std::size_t m = kDefaultPanels;
  std::uint64_t seed = 0;
  std::size_t cols = 5;
  bool rorschach = false;
};

LineupSpec spec_from_args(const LineupArgs& a) {
  const auto kind = plot_kind_from_string(a.kind);
  if (!kind) throw UsageError("unknown --kind '" + a.kind + "'");
  const bool needs_group = *kind == PlotKind::boxplot;
  const bool needs_predictor = *kind == PlotKind::scatter_residual ||
                               *kind == PlotKind::binned_residual ||
                               *kind == PlotKind::empirical_logit;
  if (needs_group && a.group.empty()) throw UsageError("--kind boxplot needs --group");
  if (needs_predictor && a.predictor.empty()) {
    throw UsageError("--kind " + a.kind + " needs --predictor");
  }
  if (!needs_group && !a.group.empty()) {
    throw UsageError("--group only applies to --kind boxplot");
  }
  if (a.bins && *kind != PlotKind::binned_residual) {
    throw UsageError("--bins only applies to --kind binned_residual");
  }
  if (a.groups && *kind != PlotKind::empirical_logit) {
    throw UsageError("--groups only applies to --kind empirical_logit");
  }
  if (a.out == a.key) throw UsageError("--out and --key must be different files");
  if (a.cols == 0) throw UsageError("--cols must be at least 1");

  LineupSpec spec;
  spec.plot_kind = *kind;
  spec.null_method = default_null_method(*kind, a.response, a.predictor, a.group, a.degree);
  spec.m = a.m;
  spec.seed = a.seed;
  spec.rorschach = a.rorschach;
  spec.params.n_bins = a.bins;
  if (a.groups) spec.params.groups = *a.groups;
  spec.params.axis = a.axis == "predictor" ? BinAxis::predictor : BinAxis::fitted;
  spec.claim = a.claim;
  validate(spec);
  return spec;
}

int cmd_lineup(const LineupArgs& a) {
  const auto spec = spec_from_args(a);
  const auto ds = parse_csv(io::read_file(a.data), fs::path(a.data).stem().string());
  const auto bundle = build_lineup(ds, spec);
  svg::LayoutOptions layout;
  layout.cols = a.cols;
  std::vector<std::pair<fs::path, std::string>> files{
      {a.out, svg::render_lineup(bundle, layout)},
      {a.key, to_json(bundle.key).dump(2) + "\n"}};
  if (!a.bundle.empty()) files.emplace_back(a.bundle, to_json(bundle).dump() + "\n");
  io::write_files_atomically(files);
  std::cerr << "wrote " << a.out << " (" << spec.m << " panels) and key " << a.key << "\n";
  return kExitOk;
}

int cmd_reveal(const std::string& key_path, const std::string& bundle_path) {
  Json doc;
  try {
    doc = Json::parse(io::read_file(key_path));
  } catch (const Json::exception&) {
    throw Error(Errc::key_tampered, "answer key file is not valid JSON");
  }
  const auto key = key_from_json(doc);
  if (!bundle_path.empty()) {
    const auto bundle_doc = Json::parse(io::read_file(bundle_path));
    const auto bundle = bundle_from_json(bundle_doc, doc);
    if (bundle.spec.rorschach) {
      std::cout << "all panels are null (Rorschach lineup)\n";
      return kExitOk;
    }
    std::cout << "data panel: " << reveal(bundle, key) << "\n";
    return kExitOk;
  }
  if (!verify(key)) throw Error(Errc::key_tampered, "answer key digest does not verify");
  if (!key.data_panel) {
    std::cout << "all panels are null (Rorschach lineup)\n";
    return kExitOk;
  }
  std::cout << "data panel: " << *key.data_panel << "\n";
  return kExitOk;
}

int cmd_pvalue(std::size_t correct, std::size_t observers, std::size_t m) {
  std::cout << shortest(visual_p_value(correct, observers, m).p) << "\n";
  return kExitOk;
}

httplib::Server* g_server = nullptr;

int cmd_serve(std::optional<int> port, std::optional<std::string> store_dir,
              std::optional<std::string> ui_dir, const std::string& host) {
  const auto dir = http::store_dir_from_env(store_dir);
  const int p = http::port_from_env(port);
  service::SessionStore store(dir);
  httplib::Server server;
  http::ServerOptions opt;
  if (ui_dir) opt.ui_dir = *ui_dir;
  http::register_routes(server, store, opt);
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  std::cerr << "serving on " << host << ":" << p << ", store " << dir.string() << "\n";
  if (!server.listen(host, p)) {
    std::cerr << "error: cannot listen on " << host << ":" << p << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual inference lineups: build, reveal, score and serve"};
  app.require_subcommand(1);

  LineupArgs la;
  auto* lineup_cmd = app.add_subcommand("lineup", "Build a lineup SVG and its answer key");
  lineup_cmd->add_option("--data", la.data, "CSV file")->required()->check(CLI::ExistingFile);
  lineup_cmd->add_option("--kind", la.kind, "Plot kind")
      ->required()
      ->check(CLI::IsMember({"boxplot", "scatter_residual", "binned_residual",
                             "empirical_logit", "qq"}));
  lineup_cmd->add_option("--response", la.response, "Response column")->required();
  auto* group_opt = lineup_cmd->add_option("--group", la.group, "Grouping column (boxplot)");
  auto* pred_opt =
      lineup_cmd->add_option("--predictor", la.predictor, "Predictor column");
  group_opt->excludes(pred_opt);
  lineup_cmd->add_option("--degree", la.degree, "Logistic degree (1 or 2)")
      ->check(CLI::Range(1, 2));
  auto* bins_opt = lineup_cmd->add_option("--bins", la.bins, "Bins (binned_residual)");
  auto* groups_opt =
      lineup_cmd->add_option("--groups", la.groups, "Bins (empirical_logit)");
  bins_opt->excludes(groups_opt);
  lineup_cmd->add_option("--axis", la.axis, "Binned-residual axis")
      ->check(CLI::IsMember({"fitted", "predictor"}));
  lineup_cmd->add_option("--m", la.m, "Number of panels")->required()->check(CLI::Range(2, 100));
  lineup_cmd->add_option("--seed", la.seed, "Seed")->required();
  lineup_cmd->add_option("--out", la.out, "SVG output path")->required();
  lineup_cmd->add_option("--key", la.key, "Answer key output path")->required();
  lineup_cmd->add_option("--bundle", la.bundle, "Optional bundle JSON output path");
  lineup_cmd->add_option("--cols", la.cols, "Grid columns")->check(CLI::Range(1, 100));
  lineup_cmd->add_option("--claim", la.claim, "Hypothesis statement recorded in the bundle");
  lineup_cmd->add_flag("--rorschach", la.rorschach, "All panels are null plots");

  std::string key_path, bundle_path;
  auto* reveal_cmd = app.add_subcommand("reveal", "Show the data panel from an answer key");
  reveal_cmd->add_option("--key", key_path, "Answer key JSON")->required()->check(CLI::ExistingFile);
  reveal_cmd->add_option("--bundle", bundle_path, "Bundle JSON to check the key against")
      ->check(CLI::ExistingFile);

  std::size_t correct = 0, observers = 0, pm = 0;
  auto* pvalue_cmd = app.add_subcommand("pvalue", "Visual p-value of x correct picks out of K");
  pvalue_cmd->add_option("--correct", correct, "x, observers who picked the data panel")->required();
  pvalue_cmd->add_option("--observers", observers, "K, number of observers")->required();
  pvalue_cmd->add_option("--m", pm, "Panels in the lineup")->required();

  std::optional<int> port;
  std::optional<std::string> store_dir, ui_dir;
  std::string host = "0.0.0.0";
  auto* serve_cmd = app.add_subcommand("serve", "Run the classroom session service");
  serve_cmd->add_option("--port", port, "Port (default LINEUP_PORT or 8080)")
      ->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--store", store_dir, "Store directory (default LINEUP_STORE_DIR)");
  serve_cmd->add_option("--ui", ui_dir, "Static web UI directory mounted at /ui");
  serve_cmd->add_option("--host", host, "Bind address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (lineup_cmd->parsed()) return cmd_lineup(la);
    if (reveal_cmd->parsed()) return cmd_reveal(key_path, bundle_path);
    if (pvalue_cmd->parsed()) return cmd_pvalue(correct, observers, pm);
    if (serve_cmd->parsed()) return cmd_serve(port, store_dir, ui_dir, host);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const Json::exception& e) {
    std::cerr << "error [parse_error]: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
