#include "qnvb/io/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qnvb/errors.hpp"
#include "qnvb/io/advisor.hpp"
#include "qnvb/io/checkpoint.hpp"
#include "qnvb/io/libsvm.hpp"
#include "qnvb/io/numfmt.hpp"
#include "qnvb/io/trace_csv.hpp"
#include "qnvb/optimizer.hpp"

namespace qnvb::io {

namespace {

struct FitOptions {
  std::string data;
  Index covariates = 100;
  std::string family = "stiefel:2";
  std::string activation = "tanh";
  std::string estimator = "classical";
  Index samples = 1000;
  double sample_growth = 0.0;
  std::int64_t n_total = 500;
  std::int64_t ae_shots = 0;
  double omega = 0.6;
  double alpha0 = 0.1;
  double tau = 100.0;
  double clip = 1.0;
  Index iters = 500;
  Index patience = 10;
  Index window = 50;
  double jitter = 0.0;
  double prior_variance = 10.0;
  std::uint64_t seed = 0;
  std::string trace_out;
  std::string checkpoint;
  Index checkpoint_every = 10;
  std::string resume;
};

struct AdviseOptions {
  double n = 0, m = 0, kappa = 1, epsilon = 0.1, frobenius = 1.0;
};

struct ReadoutOptions {
  std::string g = "random:8";
  std::int64_t n_total = 500;
  Index reps = 1000;
  std::uint64_t seed = 0;
};

struct ParseCheckOptions {
  std::string data;
  Index covariates = 100;
};

VariationalFamily make_family(const FitOptions& o, Index d) {
  const Activation act = o.activation == "identity" ? Activation::identity
                         : o.activation == "tanh"
                             ? Activation::tanh
                             : throw ValidationError("unknown activation '" + o.activation + "'");
  if (o.family == "gaussian") return VariationalFamily::gaussian(d);
  if (o.family.rfind("stiefel:", 0) == 0) {
    const auto k = parse_int<Index>(std::string_view(o.family).substr(8));
    if (!k || *k < 1) throw ValidationError("bad layer count in '" + o.family + "'");
    return VariationalFamily::stiefel_flow(d, *k, act);
  }
  throw ValidationError("unknown family '" + o.family + "'");
}

OptimizerConfig make_config(const FitOptions& o) {
  OptimizerConfig c;
  c.omega = o.omega;
  c.alpha0 = o.alpha0;
  c.tau = o.tau;
  c.clip_threshold = o.clip;
  c.initial_samples = o.samples;
  if (o.sample_growth > 0.0) c.growth = {SampleGrowth::Kind::linear, o.sample_growth};
  c.readout_shots = o.n_total;
  c.estimator = parse_estimator(o.estimator);
  c.ae_mode = o.ae_shots > 0 ? AEMode::with_shots(o.ae_shots) : AEMode::exact();
  c.max_iters = o.iters;
  c.patience = o.patience;
  c.smoothing_window = o.window;
  c.jitter = o.jitter;
  c.seed = o.seed;
  c.validate();
  return c;
}

int cmd_fit(const FitOptions& o) {
  const Dataset data = read_libsvm_file(o.data, o.covariates);
  const Model model = Model::logistic(data, o.prior_variance);
  const VariationalFamily shape = make_family(o, data.dim());
  const OptimizerConfig config = make_config(o);

  OptimizerState state = initial_state(shape);
  Rng rng(config.seed);
  if (!o.resume.empty()) {
    Checkpoint cp = checkpoint_load(o.resume, shape, config);
    state = std::move(cp.state);
    rng = cp.rng;
    std::cout << "resumed from " << o.resume << " at t=" << state.t << "\n";
  }

  const auto save = [&](const OptimizerState& s, const Rng& r) {
    if (!o.checkpoint.empty()) checkpoint_save(o.checkpoint, s, r, config);
  };
  const auto on_iteration = [&](const OptimizerState& s, const Rng& r) {
    if (o.checkpoint_every > 0 && s.t % o.checkpoint_every == 0) save(s, r);
  };

  std::cout << "fit: n_obs=" << data.n_obs() << " d=" << data.dim()
            << " family=" << shape.layout_tag() << " N=" << shape.num_params()
            << " estimator=" << to_string(config.estimator) << "\n";
  try {
    state = run(config, model, std::move(state), rng, on_iteration);
  } catch (const RunAborted& e) {
    if (!o.trace_out.empty()) write_trace_csv(e.partial().trace, o.window, o.trace_out);
    throw;
  }
  save(state, rng);
  if (!o.trace_out.empty()) write_trace_csv(state.trace, o.window, o.trace_out);

  const Vector smoothed = smooth_lower_bound(state.trace, o.window);
  std::cout << "iterations: " << state.t << "\n";
  if (smoothed.size() > 0) {
    std::cout << "smoothed lower bound: start " << format_double(smoothed[0]) << ", end "
              << format_double(smoothed[smoothed.size() - 1]) << "\n";
  }
  if (shape.is_flow()) {
    std::cout << "orthogonality error: " << state.params.orthogonality_error() << "\n";
  }
  return kExitOk;
}

int cmd_advise(const AdviseOptions& o) {
  const AdvisorInput in{o.n, o.m, o.kappa, o.frobenius};
  in.validate();
  const double alpha = in.alpha(), delta = in.delta();
  std::cout << "alpha = ln M / ln N = " << alpha << "  bucket " << to_string(bucket_exponent(alpha))
            << "\n";
  std::cout << "delta = ln kappa / ln N = " << delta << "  bucket "
            << to_string(bucket_exponent(delta)) << "\n";
  std::cout << "favoured:";
  for (const auto& a : select_algorithm(in)) std::cout << ' ' << a;
  std::cout << "\n\ncost estimates (epsilon = " << o.epsilon << ", polylog factors dropped):\n";
  for (auto name : kAlgorithms) {
    const CostEstimate c = complexity_estimate(in, name, o.epsilon);
    std::cout << "  " << std::left << std::setw(7) << c.algorithm << std::setw(14)
              << std::scientific << std::setprecision(3) << c.operations << std::defaultfloat
              << "  " << c.formula << "\n";
  }
  return kExitOk;
}

Vector load_gradient(const std::string& source, Rng& rng) {
  if (source.rfind("random:", 0) == 0) {
    const auto n = parse_int<Index>(std::string_view(source).substr(7));
    if (!n || *n < 1) throw ValidationError("bad size in '" + source + "'");
    std::normal_distribution<double> normal;
    Vector g(*n);
    for (Index i = 0; i < *n; ++i) g[i] = normal(rng);
    return g.normalized();
  }
  std::ifstream in(source);
  if (!in) throw IoError("cannot open gradient file '" + source + "'");
  std::vector<double> values;
  std::string tok;
  while (in >> tok) {
    const auto v = parse_double(tok);
    if (!v) throw ValidationError("bad number '" + tok + "' in '" + source + "'");
    values.push_back(*v);
  }
  Vector g = Eigen::Map<Vector>(values.data(), static_cast<Index>(values.size()));
  if (g.size() == 0 || !(g.norm() > 0.0)) throw ValidationError("gradient file is empty or zero");
  return g.normalized();
}

int cmd_readout(const ReadoutOptions& o) {
  if (o.reps < 1) throw ValidationError("--reps must be at least 1");
  Rng rng(o.seed);
  const Vector g = load_gradient(o.g, rng);
  const Index n = g.size();
  Vector sum = Vector::Zero(n), sum_sq = Vector::Zero(n);
  for (Index r = 0; r < o.reps; ++r) {
    const Vector est = simulate_full_readout(g, o.n_total, rng).g_hat;
    sum += est;
    sum_sq += est.cwiseAbs2();
  }
  const double reps = static_cast<double>(o.reps);
  const Vector mean = sum / reps;
  const Vector var = (sum_sq / reps - mean.cwiseAbs2()) * (reps / std::max(reps - 1.0, 1.0));
  const Vector bias = mean - g;

  std::cout << "N=" << n << " n_T=" << o.n_total << " reps=" << o.reps << "\n";
  if (n <= 32) {
    std::cout << "  i          g_i     mean(g_hat)        bias    variance\n";
    for (Index i = 0; i < n; ++i) {
      std::cout << std::setw(3) << i << std::setw(13) << g[i] << std::setw(16) << mean[i]
                << std::setw(12) << bias[i] << std::setw(12) << var[i] << "\n";
    }
  }
  std::cout << "max |bias| = " << bias.cwiseAbs().maxCoeff() << "  (standard error bound "
            << std::sqrt(static_cast<double>(n) / static_cast<double>(o.n_total) / reps)
            << ")\n";
  std::cout << "mean variance = " << var.mean() << "  (bound N/n_T = "
            << static_cast<double>(n) / static_cast<double>(o.n_total) << ")\n";
  return kExitOk;
}

int cmd_parse_check(const ParseCheckOptions& o) {
  const Dataset data = read_libsvm_file(o.data, o.covariates);
  std::cout << "observations: " << data.n_obs() << "\n"
            << "columns (with intercept): " << data.dim() << "\n"
            << "positive labels: " << data.labels.sum() << "\n";
  return kExitOk;
}

// CLI11 only reads config files for the top-level app, so a fit config is
// expanded into flags placed ahead of the user's own, which then win.
std::vector<std::string> expand_fit_config(std::vector<std::string> args) {
  if (args.size() < 2 || args[1] != "fit") return args;
  std::string path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::vector<std::string> flags;
  for (const auto& item : CLI::ConfigINI().from_config(in)) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    if (item.name == "config") throw ValidationError("config files cannot nest");
    flags.push_back("--" + item.fullname());
    flags.insert(flags.end(), item.inputs.begin(), item.inputs.end());
  }
  args.insert(args.begin() + 2, flags.begin(), flags.end());
  return args;
}

}  // namespace

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  try {
    args = expand_fit_config(std::move(args));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  std::vector<char*> expanded;
  for (auto& a : args) expanded.push_back(a.data());

  CLI::App app{"Regression-based natural-gradient variational Bayes"};
  app.require_subcommand(1);

  FitOptions fit;
  auto* f = app.add_subcommand("fit", "Fit a logistic-regression posterior");
  f->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;
  f->add_option("--config", config_path, "Flat key = value file mirroring the flags");
  f->add_option("--data", fit.data, "LIBSVM data file")->required();
  f->add_option("--covariates", fit.covariates, "Keep the first K covariates")
      ->capture_default_str();
  f->add_option("--family", fit.family, "gaussian | stiefel:K")->capture_default_str();
  f->add_option("--activation", fit.activation, "tanh | identity")->capture_default_str();
  f->add_option("--estimator", fit.estimator, "classical | full-readout | gauss-southwell")
      ->capture_default_str();
  f->add_option("--M", fit.samples, "Monte Carlo samples per iteration")->capture_default_str();
  f->add_option("--M-growth", fit.sample_growth, "Linear growth rate of M (0 = fixed)")
      ->capture_default_str();
  f->add_option("--nT", fit.n_total, "Readout measurements")->capture_default_str();
  f->add_option("--ae-shots", fit.ae_shots, "Amplitude-estimation shots (0 = exact)")
      ->capture_default_str();
  f->add_option("--omega", fit.omega, "Momentum weight")->capture_default_str();
  f->add_option("--alpha0", fit.alpha0, "Initial learning rate")->capture_default_str();
  f->add_option("--tau", fit.tau, "Learning-rate horizon")->capture_default_str();
  f->add_option("--clip", fit.clip, "Gradient clip threshold")->capture_default_str();
  f->add_option("--iters", fit.iters, "Total iterations")->capture_default_str();
  f->add_option("--patience", fit.patience, "Stale checks before stopping (0 = off)")
      ->capture_default_str();
  f->add_option("--window", fit.window, "Lower-bound smoothing window")->capture_default_str();
  f->add_option("--jitter", fit.jitter, "Initial Gram jitter")->capture_default_str();
  f->add_option("--prior-variance", fit.prior_variance, "Gaussian prior variance")
      ->capture_default_str();
  f->add_option("--seed", fit.seed, "Random seed")->capture_default_str();
  f->add_option("--trace-out", fit.trace_out, "Trace CSV output path");
  f->add_option("--checkpoint", fit.checkpoint, "Checkpoint path");
  f->add_option("--checkpoint-every", fit.checkpoint_every, "Checkpoint interval")
      ->capture_default_str();
  f->add_option("--resume", fit.resume, "Resume from this checkpoint");

  AdviseOptions adv;
  auto* a = app.add_subcommand("advise", "Suggest a pseudoinverse algorithm for a regime");
  a->add_option("--N", adv.n, "Number of variational parameters")->required();
  a->add_option("--M", adv.m, "Number of samples")->required();
  a->add_option("--kappa", adv.kappa, "Condition number of the design")->required();
  a->add_option("--epsilon", adv.epsilon, "Target precision")->capture_default_str();
  a->add_option("--frobenius", adv.frobenius, "Frobenius norm of the design")
      ->capture_default_str();

  ReadoutOptions ro;
  auto* r = app.add_subcommand("readout-sim", "Empirical bias/variance of the full readout");
  r->add_option("--g", ro.g, "Gradient file or random:N")->capture_default_str();
  r->add_option("--nT", ro.n_total, "Measurements per estimate")->capture_default_str();
  r->add_option("--reps", ro.reps, "Replicates")->capture_default_str();
  r->add_option("--seed", ro.seed, "Random seed")->capture_default_str();

  ParseCheckOptions pc;
  auto* p = app.add_subcommand("parse-check", "Validate a LIBSVM file");
  p->add_option("--data", pc.data, "LIBSVM data file")->required();
  p->add_option("--covariates", pc.covariates, "Keep the first K covariates")
      ->capture_default_str();

  try {
    app.parse(static_cast<int>(expanded.size()), expanded.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (f->parsed()) return cmd_fit(fit);
    if (a->parsed()) return cmd_advise(adv);
    if (r->parsed()) return cmd_readout(ro);
    return cmd_parse_check(pc);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace qnvb::io
