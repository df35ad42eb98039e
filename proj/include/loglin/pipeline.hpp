#pragma once

#include <atomic>
#include <cmath>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "loglin/combine.hpp"
#include "loglin/decompose.hpp"
#include "loglin/forest.hpp"
#include "loglin/select.hpp"

namespace loglin {

enum class Method { dgl, dgl_cv, dgl_f, dsf, dsf_aic, df };

inline Method method_from_tag(const std::string& tag) {
  if (tag == "dgl") return Method::dgl;
  if (tag == "dgl-cv") return Method::dgl_cv;
  if (tag == "dgl-f") return Method::dgl_f;
  if (tag == "dsf") return Method::dsf;
  if (tag == "dsf-aic") return Method::dsf_aic;
  if (tag == "df") return Method::df;
  throw ValidationError("unknown method tag '" + tag + "'");
}

inline std::string method_tag(Method m) {
  switch (m) {
    case Method::dgl: return "dgl";
    case Method::dgl_cv: return "dgl-cv";
    case Method::dgl_f: return "dgl-f";
    case Method::dsf: return "dsf";
    case Method::dsf_aic: return "dsf-aic";
    case Method::df: return "df";
  }
  throw ValidationError("bad method enum");
}

/// Per-table fit diagnostics carried into the model artifact.
struct FitMeta {
  std::vector<int> vars;
  std::string kind;    // "clique" or "separator"
  std::string method;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double s = std::numeric_limits<double>::quiet_NaN();
  bool converged = true;
  bool mle_exists = true;
  int iterations = 0;
  std::vector<std::string> warnings;
};

struct PipelineOptions {
  Method method = Method::dgl_cv;
  double lambda = std::numeric_limits<double>::quiet_NaN();  // dgl
  double s = std::numeric_limits<double>::quiet_NaN();       // dsf
  int cv_folds = 10;
  int grid_size = 30;
  int s_max = 10;
  ForestConfig forest;
  uint64_t seed = 0;
  int threads = 1;
  int64_t max_cells = kDefaultMaxCells;
  GroupLassoOptions lasso;
};

struct FitResult {
  DecompositionPlan plan;
  CombinedModel combined;  // normalized; thresholded when method = dgl_f
  double threshold = 0.0;  // dgl_f cutoff
  std::vector<FitMeta> fits;
  std::optional<ImportanceMatrices> importance;  // set by fit_pipeline
};

namespace detail {

inline std::pair<LogLinearModel, FitMeta> fit_table(
    const ContingencyTable& table, const PipelineOptions& opts,
    uint64_t table_stream) {
  FitMeta meta;
  meta.vars = table.vars;
  const Method m =
      opts.method == Method::dgl_f ? Method::dgl_cv : opts.method;
  meta.method = method_tag(opts.method);
  GroupLassoOptions lasso = opts.lasso;
  lasso.max_design_cells = std::min(lasso.max_design_cells, opts.max_cells);

  switch (m) {
    case Method::dgl: {
      if (!std::isfinite(opts.lambda) || opts.lambda < 0) {
        throw ValidationError("method dgl requires a nonnegative lambda");
      }
      auto fit = fit_group_lasso(table, opts.lambda, lasso);
      meta.lambda = opts.lambda;
      meta.converged = fit.converged;
      meta.iterations = fit.iterations;
      if (!fit.converged) {
        throw ConvergenceError("group lasso did not converge (objective " +
                               std::to_string(fit.objective) + ")");
      }
      return {std::move(fit.model), std::move(meta)};
    }
    case Method::dgl_cv: {
      const auto grid = default_lambda_grid(table, opts.grid_size, 1e-3, lasso);
      const auto cv = cross_validate_lambda(
          table, opts.cv_folds, grid,
          rng::derive_seed(opts.seed, 0xCF00 + table_stream), lasso);
      auto fit = fit_group_lasso(table, cv.selected_lambda, lasso);
      meta.lambda = cv.selected_lambda;
      meta.converged = fit.converged;
      meta.iterations = fit.iterations;
      if (!fit.converged) {
        throw ConvergenceError("group lasso did not converge (objective " +
                               std::to_string(fit.objective) + ")");
      }
      return {std::move(fit.model), std::move(meta)};
    }
    case Method::dsf:
    case Method::dsf_aic: {
      double s = opts.s;
      if (m == Method::dsf_aic) s = 2.0;
      if (!std::isfinite(s) || s < 0) {
        throw ValidationError("method dsf requires a nonnegative s");
      }
      auto fit = stepwise_forward(table, s, 1e-8, lasso.max_design_cells);
      meta.s = s;
      meta.warnings = fit.warnings;
      return {std::move(fit.model), std::move(meta)};
    }
    case Method::df: {
      Term full;
      for (int v = 0; v < table.schema.size(); ++v) full.push_back(v);
      auto fit = fit_mle(table, {full}, 1e-8, 20000, lasso.max_design_cells);
      meta.converged = fit.converged;
      meta.mle_exists = fit.mle_exists;
      meta.iterations = fit.iterations;
      if (!fit.converged) {
        throw ConvergenceError("IPF did not converge");
      }
      return {std::move(fit.model), std::move(meta)};
    }
    default:
      throw ValidationError("unsupported method");
  }
}

}  // namespace detail

/// Fits every clique and separator table of a plan with the configured
/// method, combines the fits, and normalizes. dgl-f additionally applies
/// the separator thresholding rule and re-normalizes.
inline FitResult fit_on_plan(const Dataset& data, DecompositionPlan plan,
                             const PipelineOptions& opts) {
  const auto tables = collapse_on_plan(data, plan, opts.max_cells);
  const size_t nc = tables.clique_tables.size();
  const size_t ns = tables.separator_tables.size();
  std::vector<LogLinearModel> clique_fits(nc), sep_fits(ns);
  std::vector<FitMeta> metas(nc + ns);

  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::string error_message;
  std::mutex error_mutex;
  const auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= nc + ns || failed.load()) break;
      try {
        const bool is_clique = i < nc;
        const auto& table =
            is_clique ? tables.clique_tables[i] : tables.separator_tables[i - nc];
        auto [model, meta] = detail::fit_table(table, opts, i);
        meta.kind = is_clique ? "clique" : "separator";
        if (is_clique) {
          clique_fits[i] = std::move(model);
        } else {
          sep_fits[i - nc] = std::move(model);
        }
        metas[i] = std::move(meta);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) {
          try {
            throw;
          } catch (const std::exception& e) {
            error_message = e.what();
          }
        }
      }
    }
  };
  const int threads = std::max(1, opts.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failed.load()) {
    // Re-raise with the collected message; convergence failures keep their
    // type via a string marker.
    if (error_message.find("did not converge") != std::string::npos) {
      throw ConvergenceError(error_message);
    }
    throw ValidationError(error_message);
  }

  FitResult res;
  res.plan = std::move(plan);
  res.combined = combine(res.plan, clique_fits, sep_fits, data.schema);
  res.fits = std::move(metas);
  if (opts.method == Method::dgl_f) {
    auto thr = threshold_separator_rule(res.combined);
    res.threshold = thr.threshold;
    res.combined = std::move(thr.model);
  }
  res.combined.model.log_partition =
      junction_normalize(res.combined.model, res.plan.final_decomp,
                         opts.max_cells);
  return res;
}

/// End-to-end run: node-wise importance, recursive decomposition, local
/// fits, combination. All randomness derives from opts.seed.
inline FitResult fit_pipeline(const Dataset& data, PipelineOptions opts) {
  opts.forest.seed = opts.seed;
  auto importance = importance_matrix(data, opts.forest, opts.threads);
  auto plan = decompose(importance.rtilde, opts.s_max);
  plan.names = data.schema.names;
  auto res = fit_on_plan(data, std::move(plan), opts);
  res.importance = std::move(importance);
  return res;
}

}  // namespace loglin
