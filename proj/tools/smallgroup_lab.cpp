#include <bit>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <smallgroup/report.hpp>
#include <smallgroup/scenario.hpp>
#include <smallgroup/version.hpp>

namespace {

using nlohmann::json;

struct CliFlags {
  std::string config_path;
  std::string out_path;
  std::string format = "json";
  std::uint64_t seed = 0;
  std::uint64_t max_order = 0;
  std::uint64_t max_resolution = 0;

  std::string generator;
  std::vector<std::uint32_t> exponents;
  std::uint64_t j_max = 0;
  std::uint64_t depth = 0;
  std::string mode;
  std::vector<std::uint64_t> space;
  std::uint64_t stages = 0;
  std::uint64_t samples = 0;
  bool include_one = false;
  std::string parity;
  std::string atlas;
  std::uint64_t dim = 0;
  std::string target = "profinite";
};

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good())
    throw smallgroup::ConfigError("cannot open '" + path + "'");
  return json::parse(in);  // parse_error carries the byte position
}

void write_text(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out.good())
    throw smallgroup::ConfigError("cannot open '" + out_path + "' for writing");
  out << text;
  if (!out.good())
    throw smallgroup::ConfigError("failed writing '" + out_path + "'");
}

// Atlas flags name either a builtin ("two-arcs") or a JSON file; paths are
// recognized by a slash or a .json suffix.
json atlas_value(const std::string& flag) {
  bool is_path = flag.find('/') != std::string::npos ||
                 (flag.size() > 5 && flag.rfind(".json") == flag.size() - 5);
  if (!is_path) return json(flag);
  return load_json_file(flag);
}

int run(const CLI::App& app, const CliFlags& f) {
  json cfg = json::object();
  if (!f.config_path.empty()) cfg = load_json_file(f.config_path);
  if (!cfg.is_object())
    throw smallgroup::ConfigError("config file must hold a JSON object");

  const CLI::App* verb = nullptr;
  for (const CLI::App* sub : app.get_subcommands()) verb = sub;

  if (verb != nullptr) {
    std::string name = verb->get_name();
    if (name == "pipeline")
      cfg["kind"] = f.target == "torus" ? "full-torus-pipeline"
                                        : "full-profinite-pipeline";
    else
      cfg["kind"] = name;
    auto given = [&](const char* flag) {
      const CLI::Option* opt = verb->get_option_no_throw(flag);
      return opt != nullptr && opt->count() > 0;
    };
    if (given("--generator")) cfg["generator"] = f.generator;
    if (given("--exponents")) cfg["exponents"] = f.exponents;
    if (given("--j-max")) cfg["j_max"] = f.j_max;
    if (given("--depth")) cfg["depth"] = f.depth;
    if (given("--mode")) cfg["mode"] = f.mode;
    if (given("--space")) cfg["space"] = f.space;
    if (given("--stages")) cfg["stages"] = f.stages;
    if (given("--samples")) cfg["samples"] = f.samples;
    if (given("--include-one")) cfg["include_one"] = f.include_one;
    if (given("--parity")) cfg["parity"] = f.parity;
    if (given("--atlas")) cfg["atlas"] = atlas_value(f.atlas);
    if (given("--dim")) cfg["dim"] = f.dim;
  }

  smallgroup::ScenarioOptions opts;
  if (app.count("--seed")) opts.seed = f.seed;
  if (app.count("--max-order")) opts.tower.max_order = f.max_order;
  if (app.count("--max-resolution")) {
    if (f.max_resolution < 2)
      throw smallgroup::ConfigError("--max-resolution must be at least 2");
    opts.torus.max_exponent =
        static_cast<std::uint32_t>(std::bit_width(f.max_resolution) - 1);
  }

  smallgroup::Report rep = smallgroup::run_scenario(cfg, opts);
  std::string text = f.format == "table" ? smallgroup::render_table(rep)
                                         : smallgroup::report_to_string(rep);
  write_text(f.out_path, text);
  return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CliFlags f;
  CLI::App app{std::string(smallgroup::kToolName) +
               " - exact checks for tower level sets, coordinate games and "
               "dyadic cube families"};
  app.set_version_flag("--version", std::string(smallgroup::kToolVersion));
  app.require_subcommand(0, 1);

  app.add_option("--config", f.config_path, "scenario config JSON file");
  app.add_option("--out", f.out_path, "write the report here instead of stdout");
  app.add_option("--format", f.format, "report format")
      ->check(CLI::IsMember({"json", "table"}));
  app.add_option("--seed", f.seed, "seed for randomized suites");
  app.add_option("--max-order", f.max_order, "largest tower level order");
  app.add_option("--max-resolution", f.max_resolution,
                 "most dyadic subdivisions per torus axis");

  auto add_generator = [&](CLI::App* sub) {
    sub->add_option("--generator", f.generator,
                    "tower generator, e.g. cyclic:2 or product:2");
  };
  auto add_exponents = [&](CLI::App* sub) {
    sub->add_option("--exponents", f.exponents, "tower exponent list")
        ->delimiter(',');
  };
  auto add_depth = [&](CLI::App* sub) {
    sub->add_option("--depth", f.depth, "tower or construction depth");
  };
  auto add_mode = [&](CLI::App* sub) {
    sub->add_option("--mode", f.mode, "thinning mode")
        ->check(CLI::IsMember({"apriori", "exact"}));
  };

  CLI::App* levelsets =
      app.add_subcommand("levelsets", "verify the six chain closure relations");
  add_generator(levelsets);
  add_exponents(levelsets);
  levelsets->add_option("--j-max", f.j_max, "deepest chain index");

  CLI::App* thin =
      app.add_subcommand("thin", "pick exponents until levels are thin");
  add_generator(thin);
  add_depth(thin);
  add_mode(thin);

  CLI::App* coords = app.add_subcommand(
      "coords", "verify the coordinate bijection and cylinder measures");
  add_generator(coords);
  add_exponents(coords);

  CLI::App* skeleton = app.add_subcommand(
      "skeleton", "witness arithmetic and tail measure bounds");
  add_generator(skeleton);
  add_exponents(skeleton);
  add_depth(skeleton);
  add_mode(skeleton);

  CLI::App* game =
      app.add_subcommand("game", "solve a dense-open family on a product space");
  game->add_option("--space", f.space, "coordinate sizes, e.g. 2,2")
      ->delimiter(',');
  game->add_option("--stages", f.stages, "window stages when no sets given");
  game->add_option("--samples", f.samples, "block-agreeing words per stage");
  game->add_flag("--include-one", f.include_one,
                 "window stages always allow symbol 1");

  CLI::App* demo = app.add_subcommand(
      "demo", "steer a word through window stages over a thinned tower");
  add_generator(demo);
  add_depth(demo);
  add_mode(demo);
  demo->add_option("--stages", f.stages, "window stages");
  demo->add_option("--samples", f.samples, "block-agreeing words per stage");
  demo->add_option("--parity", f.parity, "which block parity to steer")
      ->check(CLI::IsMember({"both", "even", "odd"}));

  CLI::App* torus = app.add_subcommand(
      "torus", "build and verify nested dyadic cube families");
  torus->add_option("--atlas", f.atlas, "builtin atlas name or JSON file");
  torus->add_option("--dim", f.dim, "torus dimension (must match the atlas)");
  add_depth(torus);

  CLI::App* pipeline =
      app.add_subcommand("pipeline", "run an end-to-end suite");
  pipeline->add_option("--target", f.target, "which pipeline")
      ->check(CLI::IsMember({"profinite", "torus"}));
  add_generator(pipeline);
  add_depth(pipeline);
  add_mode(pipeline);
  pipeline->add_option("--stages", f.stages, "window stages");
  pipeline->add_option("--samples", f.samples, "block-agreeing words per stage");
  pipeline->add_option("--atlas", f.atlas, "builtin atlas name or JSON file");
  pipeline->add_option("--dim", f.dim, "torus dimension (must match the atlas)");

  CLI::App* schema =
      app.add_subcommand("schema", "print the report JSON schema");

  for (CLI::App* sub : {levelsets, thin, coords, skeleton, game, demo, torus,
                        pipeline, schema})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (schema->parsed()) {
      write_text(f.out_path, smallgroup::kReportSchema);
      return 0;
    }
    return run(app, f);
  } catch (const json::exception& e) {
    // Parse errors and type/shape errors alike can only come from the
    // config or atlas input; internally built JSON is write-only.
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const smallgroup::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const smallgroup::CheckFailure& e) {
    std::cerr << "check failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
