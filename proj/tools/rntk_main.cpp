// Command-line front end: chains synthetic generation, kernel computation,
// embedding, evaluation, and figure output.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rntk/dynamics.hpp"
#include "rntk/io.hpp"
#include "rntk/kernel.hpp"
#include "rntk/kpca.hpp"
#include "rntk/manifest.hpp"
#include "rntk/metrics.hpp"
#include "rntk/svg.hpp"
#include "rntk/tsne.hpp"
#include "rntk/types.hpp"
#include "rntk/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitAcceptance = 3;

struct AcceptanceFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit_manifest(rntk::RunManifest m, const fs::path& primary_output,
                   const rntk::Stopwatch& watch) {
  m.duration_ms = watch.elapsed_ms();
  rntk::write_manifest(m, rntk::manifest_path_for(primary_output));
}

/// Joins class labels onto an embedding by id from a sequence file.
void attach_labels(rntk::Embedding& emb, const fs::path& sequences_path) {
  const auto ds = rntk::read_sequences(sequences_path);
  std::unordered_map<std::string, std::optional<int>> by_id;
  for (const auto& ts : ds.series) by_id[ts.id] = ts.label;
  emb.labels.clear();
  emb.labels.reserve(emb.ids.size());
  for (const auto& id : emb.ids) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw rntk::ValidationError("label join: id '" + id + "' not present in " +
                                  sequences_path.string());
    emb.labels.push_back(it->second);
  }
}

void attach_labels_from_dataset(rntk::Embedding& emb, const rntk::Dataset& ds) {
  std::unordered_map<std::string, std::optional<int>> by_id;
  for (const auto& ts : ds.series) by_id[ts.id] = ts.label;
  emb.labels.clear();
  for (const auto& id : emb.ids) emb.labels.push_back(by_id.at(id));
}

// ---------------------------------------------------------------------------
// generate

struct GenerateOpts {
  std::string out;
  rntk::GenConfig cfg;
  std::string spread = "variance";
};

int run_generate(const GenerateOpts& o) {
  rntk::Stopwatch watch;
  rntk::GenConfig cfg = o.cfg;
  cfg.spread = o.spread == "stddev" ? rntk::SpreadKind::stddev : rntk::SpreadKind::variance;
  const auto specs = rntk::default_class_specs();
  const auto ds = rntk::make_dataset(specs, cfg);
  rntk::write_sequences(ds, o.out);

  rntk::RunManifest m;
  m.command = "generate";
  m.seed = static_cast<std::int64_t>(cfg.seed);
  m.config = {{"n_per_class", cfg.n_per_class}, {"seq_len", cfg.seq_len},
              {"drop_prob", cfg.drop_prob},     {"t_start", cfg.t_start},
              {"t_step", cfg.t_step},           {"substeps", cfg.substeps},
              {"x_init", cfg.x_init},           {"dx_init", cfg.dx_init},
              {"amp_log_std", cfg.amp_log_std}, {"spread", o.spread},
              {"seed", cfg.seed}};
  json classes = json::array();
  for (const auto& s : specs)
    classes.push_back({{"a0_mean", s.a0_mean},
                       {"a0_spread", s.a0_spread},
                       {"a1_mean", s.a1_mean},
                       {"a1_spread", s.a1_spread},
                       {"label", s.label}});
  m.config["classes"] = classes;
  m.outputs = {o.out};
  emit_manifest(m, o.out, watch);
  std::cout << "wrote " << ds.size() << " series to " << o.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gram

struct GramOpts {
  std::string in, out;
  std::string mode = "rntk-kernel";
  rntk::RntkParams params;
};

int run_gram(const GramOpts& o) {
  rntk::Stopwatch watch;
  const auto ds = rntk::read_sequences(o.in);
  std::optional<rntk::GramMatrix> result;
  if (o.mode == "rntk-kernel") {
    result = rntk::rntk_gram(ds, o.params);
  } else if (o.mode == "rntk-distance") {
    result = rntk::rntk_distance_matrix(rntk::rntk_gram(ds, o.params));
  } else if (o.mode == "euclid-padded") {
    result = rntk::euclidean_distance_matrix(rntk::zero_pad(ds));
  } else {
    throw CLI::ValidationError("--mode", "unknown mode '" + o.mode + "'");
  }
  rntk::write_matrix(*result, o.out);

  rntk::RunManifest m;
  m.command = "gram";
  m.config = {{"mode", o.mode},
              {"sigma_w", o.params.sigma_w},
              {"sigma_u", o.params.sigma_u},
              {"sigma_b", o.params.sigma_b}};
  m.inputs = {o.in};
  m.outputs = {o.out};
  emit_manifest(m, o.out, watch);
  std::cout << "wrote " << result->size() << "x" << result->size() << " "
            << rntk::to_string(result->kind()) << " matrix to " << o.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// pca / tsne

struct PcaOpts {
  std::string in, out, labels;
  int components = 2;
};

int run_pca(const PcaOpts& o) {
  rntk::Stopwatch watch;
  const auto gm = rntk::read_matrix(o.in);
  if (gm.kind() != rntk::MatrixKind::kernel)
    throw rntk::ValidationError("pca: input must be a kernel matrix (diagonal is zero)");
  auto result = rntk::kpca_fit(gm, o.components);
  if (result.truncated)
    std::cerr << "warning: only " << result.model.eigenvalues.size()
              << " components above tolerance (requested " << o.components << ")\n";
  if (!o.labels.empty()) attach_labels(result.embedding, o.labels);
  rntk::write_embedding(result.embedding, o.out);

  rntk::RunManifest m;
  m.command = "pca";
  m.config = {{"components", o.components}, {"truncated", result.truncated}};
  m.inputs = {o.in};
  if (!o.labels.empty()) m.inputs.push_back(o.labels);
  m.outputs = {o.out};
  emit_manifest(m, o.out, watch);
  std::cout << "wrote " << result.embedding.size() << "x" << result.embedding.dim()
            << " embedding to " << o.out << "\n";
  return kExitOk;
}

struct TsneOpts {
  std::string in, out, labels, loss_out;
  rntk::TsneConfig cfg;
};

int run_tsne(const TsneOpts& o) {
  rntk::Stopwatch watch;
  const auto gm = rntk::read_matrix(o.in);
  if (gm.kind() != rntk::MatrixKind::distance)
    throw rntk::ValidationError("tsne: input must be a distance matrix (zero diagonal)");
  auto result = rntk::tsne_embed(gm, o.cfg);
  for (auto row : result.uniform_fallback_rows)
    std::cerr << "warning: perplexity unreachable for row " << row << "; used a uniform row\n";
  if (!o.labels.empty()) attach_labels(result.embedding, o.labels);
  rntk::write_embedding(result.embedding, o.out);
  const fs::path loss_path = o.loss_out.empty() ? fs::path(o.out + ".loss.csv") : fs::path(o.loss_out);
  rntk::write_loss_trace(result.loss_trace, loss_path);

  rntk::RunManifest m;
  m.command = "tsne";
  m.seed = static_cast<std::int64_t>(o.cfg.seed);
  m.config = {{"perplexity", o.cfg.perplexity},
              {"iterations", o.cfg.iterations},
              {"learning_rate", o.cfg.learning_rate},
              {"output_dim", o.cfg.output_dim},
              {"seed", o.cfg.seed}};
  m.inputs = {o.in};
  if (!o.labels.empty()) m.inputs.push_back(o.labels);
  m.outputs = {o.out, loss_path.string()};
  emit_manifest(m, o.out, watch);
  std::cout << "wrote embedding to " << o.out << " (final KL " << result.loss_trace.back()
            << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval / plot

struct EvalOpts {
  std::string in, out;
  std::uint64_t seed = 0;
};

json eval_to_json(const rntk::EvalMetrics& metrics) {
  return json{{"one_nn_accuracy", metrics.one_nn_accuracy}, {"kmeans_ari", metrics.kmeans_ari}};
}

int run_eval(const EvalOpts& o) {
  rntk::Stopwatch watch;
  const auto emb = rntk::read_embedding(o.in);
  if (!emb.fully_labeled())
    throw rntk::ValidationError("eval: embedding must carry a label for every row");
  const auto metrics = rntk::evaluate_embedding(emb, o.seed);
  const json j = eval_to_json(metrics);
  std::cout << j.dump(2) << "\n";
  if (!o.out.empty()) {
    std::ofstream f(o.out);
    f << j.dump(2) << "\n";
    if (!f) throw rntk::ValidationError("write failed for '" + o.out + "'");
    rntk::RunManifest m;
    m.command = "eval";
    m.seed = static_cast<std::int64_t>(o.seed);
    m.inputs = {o.in};
    m.outputs = {o.out};
    emit_manifest(m, o.out, watch);
  }
  return kExitOk;
}

struct PlotOpts {
  std::string in, out, title;
};

int run_plot(const PlotOpts& o) {
  rntk::Stopwatch watch;
  const auto emb = rntk::read_embedding(o.in);
  rntk::write_scatter_svg(emb, o.out, o.title);
  rntk::RunManifest m;
  m.command = "plot";
  m.config = {{"title", o.title}};
  m.inputs = {o.in};
  m.outputs = {o.out};
  emit_manifest(m, o.out, watch);
  std::cout << "wrote " << o.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// reproduce-figure1

struct ReproduceOpts {
  std::string out_dir = "figure1";
  std::uint64_t seed = 7;
  rntk::RntkParams params;
  rntk::GenConfig gen;
  double perplexity = 30.0;
  int iterations = 1000;
  double min_accuracy = 0.85;
  double min_margin = 0.10;
};

/// Classical PCA on zero-padded sequences, phrased as kernel PCA with the
/// linear kernel of the padded vectors (the two coincide exactly).
rntk::GramMatrix linear_padded_gram(const rntk::Dataset& padded) {
  const auto n = static_cast<Eigen::Index>(padded.size());
  const Eigen::Index T = padded.series.front().length();
  const Eigen::Index m = padded.dim;
  Eigen::MatrixXd X(n, T * m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& S = padded.series[static_cast<std::size_t>(i)].steps;
    X.row(i) = Eigen::Map<const Eigen::RowVectorXd>(S.data(), S.size());
  }
  Eigen::MatrixXd K = X * X.transpose();
  // A tiny ridge keeps the kernel diagonal strictly positive for all-zero rows.
  K.diagonal().array() += 1e-12;
  std::vector<std::string> ids;
  for (const auto& ts : padded.series) ids.push_back(ts.id);
  return rntk::GramMatrix(std::move(ids), std::move(K), rntk::MatrixKind::kernel);
}

int run_reproduce(const ReproduceOpts& o) {
  rntk::Stopwatch watch;
  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);

  rntk::GenConfig gen = o.gen;
  gen.seed = o.seed;
  std::cout << "[1/6] generating dataset (" << 2 * gen.n_per_class << " series)\n";
  const auto ds = rntk::make_dataset(rntk::default_class_specs(), gen);
  rntk::write_sequences(ds, dir / "sequences.jsonl");

  std::cout << "[2/6] computing gram matrices\n";
  const auto kernel = rntk::rntk_gram(ds, o.params);
  const auto distance = rntk::rntk_distance_matrix(kernel);
  const auto padded = rntk::zero_pad(ds);
  const auto euclid = rntk::euclidean_distance_matrix(padded);
  const auto linear = linear_padded_gram(padded);
  rntk::write_matrix(kernel, dir / "rntk_kernel.csv");
  rntk::write_matrix(distance, dir / "rntk_distance.csv");
  rntk::write_matrix(euclid, dir / "euclid_distance.csv");
  rntk::write_matrix(linear, dir / "linear_kernel.csv");

  std::cout << "[3/6] embedding (pca + tsne, both kernels)\n";
  rntk::TsneConfig tcfg;
  tcfg.perplexity = o.perplexity;
  tcfg.iterations = o.iterations;

  struct Panel {
    std::string name;
    std::string title;
    rntk::Embedding embedding;
  };
  std::vector<Panel> panels;

  auto fit_pca = [&](const rntk::GramMatrix& K, const std::string& name, const std::string& title) {
    auto res = rntk::kpca_fit(K, 2);
    attach_labels_from_dataset(res.embedding, ds);
    panels.push_back(Panel{name, title, std::move(res.embedding)});
  };
  auto fit_tsne = [&](const rntk::GramMatrix& D, const std::string& name, const std::string& title,
                      std::uint64_t stream) {
    rntk::TsneConfig cfg = tcfg;
    cfg.seed = rntk::mix_seed(o.seed, {stream});
    auto res = rntk::tsne_embed(D, cfg);
    attach_labels_from_dataset(res.embedding, ds);
    rntk::write_loss_trace(res.loss_trace, dir / (name + ".loss.csv"));
    panels.push_back(Panel{name, title, std::move(res.embedding)});
  };

  fit_tsne(euclid, "tsne_euclid_padded", "t-SNE, zero-padded euclidean", 1);
  fit_tsne(distance, "tsne_rntk", "t-SNE, RNTK distance", 2);
  fit_pca(linear, "pca_euclid_padded", "PCA, zero-padded");
  fit_pca(kernel, "pca_rntk", "PCA, RNTK kernel");

  std::cout << "[4/6] evaluating\n";
  std::unordered_map<std::string, rntk::EvalMetrics> metrics;
  json results = json::object();
  for (auto& p : panels) {
    rntk::write_embedding(p.embedding, dir / (p.name + ".csv"));
    const auto m = rntk::evaluate_embedding(p.embedding, o.seed);
    metrics[p.name] = m;
    results[p.name] = eval_to_json(m);
    std::ofstream f(dir / (p.name + ".metrics.json"));
    f << eval_to_json(m).dump(2) << "\n";
  }

  std::cout << "[5/6] plotting\n";
  for (const auto& p : panels) rntk::write_scatter_svg(p.embedding, dir / (p.name + ".svg"), p.title);

  std::cout << "[6/6] checking separation thresholds\n";
  const double pca_rntk = metrics["pca_rntk"].one_nn_accuracy;
  const double pca_base = metrics["pca_euclid_padded"].one_nn_accuracy;
  const double tsne_rntk = metrics["tsne_rntk"].one_nn_accuracy;
  const double tsne_base = metrics["tsne_euclid_padded"].one_nn_accuracy;

  std::cout << "  1-NN accuracy: rntk-pca " << pca_rntk << " vs padded-pca " << pca_base << "\n"
            << "  1-NN accuracy: rntk-tsne " << tsne_rntk << " vs padded-tsne " << tsne_base
            << "\n";

  rntk::RunManifest m;
  m.command = "reproduce-figure1";
  m.seed = static_cast<std::int64_t>(o.seed);
  m.config = {{"perplexity", o.perplexity},
              {"iterations", o.iterations},
              {"sigma_w", o.params.sigma_w},
              {"sigma_u", o.params.sigma_u},
              {"sigma_b", o.params.sigma_b},
              {"min_accuracy", o.min_accuracy},
              {"min_margin", o.min_margin},
              {"results", results}};
  m.outputs = {(dir / "sequences.jsonl").string()};
  for (const auto& p : panels) m.outputs.push_back((dir / (p.name + ".svg")).string());
  emit_manifest(m, dir / "sequences.jsonl", watch);

  std::vector<std::string> failures;
  if (!(pca_rntk >= o.min_accuracy))
    failures.push_back("rntk-pca accuracy " + std::to_string(pca_rntk) + " < " +
                       std::to_string(o.min_accuracy));
  if (!(pca_rntk >= pca_base + o.min_margin))
    failures.push_back("rntk-pca margin over padded baseline below " + std::to_string(o.min_margin));
  if (!(tsne_rntk >= o.min_accuracy))
    failures.push_back("rntk-tsne accuracy " + std::to_string(tsne_rntk) + " < " +
                       std::to_string(o.min_accuracy));
  if (!(tsne_rntk >= tsne_base + o.min_margin))
    failures.push_back("rntk-tsne margin over padded baseline below " + std::to_string(o.min_margin));
  if (!failures.empty()) {
    std::string msg = "separation thresholds not met:";
    for (const auto& f : failures) msg += "\n  - " + f;
    throw AcceptanceFailure(msg);
  }
  std::cout << "all separation thresholds met; outputs in " << o.out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variable-length time-series dimensionality reduction via the recurrent neural tangent kernel"};
  app.set_version_flag("--version", rntk::kVersion);
  app.require_subcommand(1);

  GenerateOpts gen;
  auto* cmd_gen = app.add_subcommand("generate", "sample the synthetic two-class ODE dataset");
  cmd_gen->add_option("--out", gen.out, "output sequence file (jsonl)")->required();
  cmd_gen->add_option("--seed", gen.cfg.seed, "rng seed");
  cmd_gen->add_option("--n-per-class", gen.cfg.n_per_class, "sequences per class");
  cmd_gen->add_option("--seq-len", gen.cfg.seq_len, "samples per sequence before dropping");
  cmd_gen->add_option("--drop-prob", gen.cfg.drop_prob, "per-element drop probability");
  cmd_gen->add_option("--t-start", gen.cfg.t_start, "first sample time (> 0)");
  cmd_gen->add_option("--t-step", gen.cfg.t_step, "sample spacing");
  cmd_gen->add_option("--substeps", gen.cfg.substeps, "rk4 substeps per sample");
  cmd_gen->add_option("--x-init", gen.cfg.x_init, "initial value x(t_start)");
  cmd_gen->add_option("--dx-init", gen.cfg.dx_init, "initial slope x'(t_start)");
  cmd_gen->add_option("--amp-log-std", gen.cfg.amp_log_std,
                      "log-normal per-sequence amplitude spread (0 disables)");
  cmd_gen->add_option("--spread", gen.spread, "class parameter spread kind")
      ->check(CLI::IsMember({"variance", "stddev"}));

  GramOpts gram;
  auto* cmd_gram = app.add_subcommand("gram", "compute a pairwise kernel or distance matrix");
  cmd_gram->add_option("--in", gram.in, "input sequence file")->required();
  cmd_gram->add_option("--out", gram.out, "output matrix csv")->required();
  cmd_gram->add_option("--mode", gram.mode, "rntk-kernel | rntk-distance | euclid-padded")
      ->check(CLI::IsMember({"rntk-kernel", "rntk-distance", "euclid-padded"}));
  cmd_gram->add_option("--sigma-w", gram.params.sigma_w, "recurrent weight scale");
  cmd_gram->add_option("--sigma-u", gram.params.sigma_u, "input weight scale");
  cmd_gram->add_option("--sigma-b", gram.params.sigma_b, "bias scale");

  PcaOpts pca;
  auto* cmd_pca = app.add_subcommand("pca", "kernel PCA on a precomputed kernel matrix");
  cmd_pca->add_option("--in", pca.in, "kernel matrix csv")->required();
  cmd_pca->add_option("--out", pca.out, "output embedding csv")->required();
  cmd_pca->add_option("--components", pca.components, "embedding dimension");
  cmd_pca->add_option("--labels", pca.labels, "sequence file to join class labels from");

  TsneOpts tsne;
  auto* cmd_tsne = app.add_subcommand("tsne", "t-SNE on a precomputed distance matrix");
  cmd_tsne->add_option("--in", tsne.in, "distance matrix csv")->required();
  cmd_tsne->add_option("--out", tsne.out, "output embedding csv")->required();
  cmd_tsne->add_option("--perplexity", tsne.cfg.perplexity, "target perplexity");
  cmd_tsne->add_option("--iterations", tsne.cfg.iterations, "gradient descent iterations");
  cmd_tsne->add_option("--learning-rate", tsne.cfg.learning_rate, "gradient descent step size");
  cmd_tsne->add_option("--seed", tsne.cfg.seed, "rng seed for the initial layout");
  cmd_tsne->add_option("--labels", tsne.labels, "sequence file to join class labels from");
  cmd_tsne->add_option("--loss-out", tsne.loss_out, "loss trace csv (default <out>.loss.csv)");

  EvalOpts eval;
  auto* cmd_eval = app.add_subcommand("eval", "1-NN accuracy and k-means ARI of an embedding");
  cmd_eval->add_option("--in", eval.in, "labeled embedding csv")->required();
  cmd_eval->add_option("--out", eval.out, "metrics json (also printed)");
  cmd_eval->add_option("--seed", eval.seed, "k-means seed");

  PlotOpts plot;
  auto* cmd_plot = app.add_subcommand("plot", "svg scatter plot of a 2-D embedding");
  cmd_plot->add_option("--in", plot.in, "embedding csv")->required();
  cmd_plot->add_option("--out", plot.out, "output svg")->required();
  cmd_plot->add_option("--title", plot.title, "plot title");

  ReproduceOpts rep;
  auto* cmd_rep = app.add_subcommand(
      "reproduce-figure1", "run the full four-panel comparison and enforce separation thresholds");
  cmd_rep->add_option("--out-dir", rep.out_dir, "output directory");
  cmd_rep->add_option("--seed", rep.seed, "pipeline seed");
  cmd_rep->add_option("--sigma-w", rep.params.sigma_w, "recurrent weight scale");
  cmd_rep->add_option("--sigma-u", rep.params.sigma_u, "input weight scale");
  cmd_rep->add_option("--sigma-b", rep.params.sigma_b, "bias scale");
  cmd_rep->add_option("--perplexity", rep.perplexity, "t-SNE perplexity");
  cmd_rep->add_option("--iterations", rep.iterations, "t-SNE iterations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (cmd_gen->parsed()) return run_generate(gen);
    if (cmd_gram->parsed()) return run_gram(gram);
    if (cmd_pca->parsed()) return run_pca(pca);
    if (cmd_tsne->parsed()) return run_tsne(tsne);
    if (cmd_eval->parsed()) return run_eval(eval);
    if (cmd_plot->parsed()) return run_plot(plot);
    if (cmd_rep->parsed()) return run_reproduce(rep);
  } catch (const AcceptanceFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAcceptance;
  } catch (const rntk::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const rntk::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
