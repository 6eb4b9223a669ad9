// Command-line front door: verify / gallery / morse2d / tensor.
// Exit codes: 0 all checks pass, 1 a check failed (report still written),
// 2 input error (parse failure, unknown gallery, bad flags).

#include <susyfactor/gallery.hpp>
#include <susyfactor/pipeline.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

using namespace susyfactor;

struct CommonFlags {
  std::string out;
  std::string h_override;
  std::int64_t seed = -1;
  int grid = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->set_help_flag("--help", "print help");
  cmd->add_option("--out", flags.out, "write the JSON report to this path");
  cmd->add_option("--h", flags.h_override, "comma-separated list of h values");
  cmd->add_option("--seed", flags.seed, "random seed override");
  cmd->add_option("--grid", flags.grid, "grid points per axis override");
}

void apply_overrides(SpecFile& spec, const CommonFlags& flags) {
  if (!flags.h_override.empty()) {
    std::vector<double> hs;
    std::stringstream ss(flags.h_override);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const double h = std::strtod(tok.c_str(), nullptr);
      if (!(h > 0.0 && h <= 1.0)) throw SpecError(0, "--h values must lie in ]0, 1]");
      hs.push_back(h);
    }
    if (hs.empty()) throw SpecError(0, "--h list is empty");
    spec.h = hs;
  }
  if (flags.seed >= 0) spec.verify.seed = static_cast<std::uint64_t>(flags.seed);
  if (flags.grid > 0) spec.verify.grid_points = flags.grid;
}

int finish(const RunResult& rr, const CommonFlags& flags) {
  if (!flags.out.empty()) write_report(rr.report, flags.out);
  std::cout << rr.report.dump(2) << "\n";
  return rr.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"supersymmetric-structure construction and verification for second-order "
               "semiclassical operators"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);

  CommonFlags vf, gf, mf, tf;
  std::string verify_path, gallery_name, morse_path, tensor_a, tensor_b;

  CLI::App* verify = app.add_subcommand("verify", "run the verification pipeline on a spec file");
  verify->add_option("spec", verify_path, "spec file (TOML)")->required();
  add_common(verify, vf);

  CLI::App* gallery = app.add_subcommand("gallery", "run a built-in example");
  gallery->add_option("name", gallery_name,
                      "one of: witten, kfp, r3-example, alpha-linear, perturbation-two-wells")
      ->required();
  add_common(gallery, gf);

  CLI::App* morse = app.add_subcommand("morse2d", "run the 2D level-set pipeline on a spec file");
  morse->add_option("spec", morse_path, "spec file (TOML) with a [morse2d] section")->required();
  add_common(morse, mf);

  CLI::App* tensor = app.add_subcommand("tensor", "verify the direct sum of two spec files");
  tensor->add_option("spec_a", tensor_a, "first spec file")->required();
  tensor->add_option("spec_b", tensor_b, "second spec file")->required();
  add_common(tensor, tf);

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) {
      SpecFile spec = load_spec(verify_path);
      apply_overrides(spec, vf);
      return finish(run_verify(spec), vf);
    }
    if (gallery->parsed()) {
      if (!is_gallery_name(gallery_name)) {
        std::cerr << "error: unknown gallery '" << gallery_name << "'\n";
        return 2;
      }
      return finish(run_gallery(gallery_name), gf);
    }
    if (morse->parsed()) {
      SpecFile spec = load_spec(morse_path);
      apply_overrides(spec, mf);
      return finish(run_morse2d(spec), mf);
    }
    if (tensor->parsed()) {
      SpecFile a = load_spec(tensor_a);
      SpecFile b = load_spec(tensor_b);
      apply_overrides(a, tf);
      apply_overrides(b, tf);
      return finish(run_tensor(a, b), tf);
    }
  } catch (const SpecError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const susyfactor::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
