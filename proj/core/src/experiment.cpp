#include "japan/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "japan/area.hpp"
#include "japan/baselines.hpp"
#include "japan/conformal.hpp"
#include "japan/errors.hpp"

namespace japan {

namespace {

using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& item : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return item.key() == k;
        }) == allowed.end()) {
      throw ConfigError("config: unknown key '" + item.key() + "' in " + where);
    }
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_fixed(double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config: invalid JSON");
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  check_keys(j,
             {"dataset", "methods", "epsilons", "seeds", "flow", "mc_samples",
              "mc_samples_per_context", "ridge_lambda", "knn_k", "splits", "out_dir",
              "destandardize", "area_context_cap", "timings", "cache_dir"},
             "top level");

  ExperimentConfig c;
  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    check_keys(d, {"kind", "name", "n", "noise", "path", "x_cols", "y_cols"}, "dataset");
    c.dataset.kind = d.value("kind", c.dataset.kind);
    c.dataset.name = d.value("name", c.dataset.name);
    c.dataset.n = d.value("n", c.dataset.n);
    c.dataset.noise = d.value("noise", c.dataset.noise);
    c.dataset.path = d.value("path", c.dataset.path);
    c.dataset.x_cols = d.value("x_cols", c.dataset.x_cols);
    c.dataset.y_cols = d.value("y_cols", c.dataset.y_cols);
  }
  if (j.contains("flow")) {
    const json& f = j["flow"];
    check_keys(f, {"epochs", "batch_size", "learning_rate", "decay", "layers", "hidden"}, "flow");
    c.flow.epochs = f.value("epochs", c.flow.epochs);
    c.flow.batch_size = f.value("batch_size", c.flow.batch_size);
    c.flow.learning_rate = f.value("learning_rate", c.flow.learning_rate);
    c.flow.decay = f.value("decay", c.flow.decay);
    c.flow.layers = f.value("layers", c.flow.layers);
    c.flow.hidden = f.value("hidden", c.flow.hidden);
  }
  c.methods = j.value("methods", c.methods);
  c.epsilons = j.value("epsilons", c.epsilons);
  c.seeds = j.value("seeds", c.seeds);
  c.mc_samples = j.value("mc_samples", c.mc_samples);
  c.mc_samples_per_context = j.value("mc_samples_per_context", c.mc_samples_per_context);
  c.ridge_lambda = j.value("ridge_lambda", c.ridge_lambda);
  c.knn_k = j.value("knn_k", c.knn_k);
  if (j.contains("splits")) {
    const auto s = j["splits"].get<std::vector<double>>();
    if (s.size() != 3) throw ConfigError("config: splits must have 3 entries");
    c.train_frac = s[0];
    c.cal_frac = s[1];
    c.test_frac = s[2];
  }
  c.out_dir = j.value("out_dir", c.out_dir);
  c.destandardize = j.value("destandardize", c.destandardize);
  c.area_context_cap = j.value("area_context_cap", c.area_context_cap);
  c.timings = j.value("timings", c.timings);
  c.cache_dir = j.value("cache_dir", c.cache_dir);

  if (c.methods.empty()) throw ConfigError("config: methods must be non-empty");
  if (c.epsilons.empty()) throw ConfigError("config: epsilons must be non-empty");
  if (c.seeds.empty()) throw ConfigError("config: seeds must be non-empty");
  for (double e : c.epsilons) {
    if (!(e > 0.0 && e < 1.0)) throw ConfigError("config: epsilon not in (0,1)");
  }
  const std::vector<std::string> known = {"original", "unconditional", "conditional",
                                          "posterior", "latent",        "tau_global",
                                          "tau_knn",  "rect",           "ellipse"};
  for (const auto& m : c.methods) {
    if (std::find(known.begin(), known.end(), m) == known.end()) {
      throw ConfigError("config: unknown method '" + m + "'");
    }
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

unsigned resolve_threads(unsigned requested) {
  unsigned n = requested > 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("JAPAN_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return std::max(1u, n);
}

Dataset build_dataset(const ExperimentConfig& config, std::uint64_t seed) {
  const DatasetSpec& spec = config.dataset;
  Dataset data;
  const bool generated = spec.kind == "toy" || spec.kind == "conditional";
  std::string cache_path;
  if (generated && !config.cache_dir.empty()) {
    std::ostringstream name;
    name << (spec.kind == "toy" ? spec.name : "conditional") << "_n" << spec.n << "_noise"
         << spec.noise << "_seed" << seed << ".csv";
    cache_path = (std::filesystem::path(config.cache_dir) / name.str()).string();
  }

  if (!cache_path.empty() && std::filesystem::exists(cache_path)) {
    const std::vector<std::string> x_cols =
        spec.kind == "conditional" ? std::vector<std::string>{"x0"} : std::vector<std::string>{};
    data = load_csv(cache_path, x_cols, {"y0", "y1"});
    data.name = spec.kind == "toy" ? spec.name : "conditional";
  } else if (spec.kind == "toy") {
    data = generate_toy({spec.name, spec.n, spec.noise, seed});
  } else if (spec.kind == "conditional") {
    data = generate_conditional(spec.n, seed);
  } else if (spec.kind == "csv") {
    data = load_csv(spec.path, spec.x_cols, spec.y_cols);
    data.name = std::filesystem::path(spec.path).stem().string();
  } else {
    throw ConfigError("config: unknown dataset kind '" + spec.kind + "'");
  }
  if (!cache_path.empty() && !std::filesystem::exists(cache_path)) {
    std::filesystem::create_directories(config.cache_dir);
    save_csv(data, cache_path);
  }
  split(data, config.train_frac, config.cal_frac, config.test_frac, seed);
  standardize(data);
  return data;
}

// ---------------------------------------------------------------------------
// Cell execution

namespace {

enum class MethodKind { Japan, Rect, Ellipse };

struct MethodInfo {
  MethodKind kind = MethodKind::Japan;
  Variant variant = Variant::Original;
};

MethodInfo method_info(const std::string& name) {
  if (name == "rect") return {MethodKind::Rect, Variant::Original};
  if (name == "ellipse") return {MethodKind::Ellipse, Variant::Original};
  if (name == "original") return {MethodKind::Japan, Variant::Original};
  if (name == "unconditional") return {MethodKind::Japan, Variant::Unconditional};
  if (name == "conditional") return {MethodKind::Japan, Variant::ConditionalOnPrediction};
  if (name == "posterior") return {MethodKind::Japan, Variant::Posterior};
  if (name == "latent") return {MethodKind::Japan, Variant::Latent};
  if (name == "tau_global") return {MethodKind::Japan, Variant::TauAdaptiveGlobal};
  if (name == "tau_knn") return {MethodKind::Japan, Variant::TauAdaptiveKnn};
  throw ConfigError("config: unknown method '" + name + "'");
}

// Which flow a variant scores with. Data = y | x, PredMarginal = ŷ marginal,
// OnPrediction = y | ŷ, Posterior = ŷ | y.
enum class FlowKind { Data, PredMarginal, OnPrediction, Posterior };

FlowKind flow_kind_for(Variant v) {
  switch (v) {
    case Variant::Unconditional: return FlowKind::PredMarginal;
    case Variant::ConditionalOnPrediction: return FlowKind::OnPrediction;
    case Variant::Posterior: return FlowKind::Posterior;
    default: return FlowKind::Data;
  }
}

bool needs_predictor(Variant v) {
  return v == Variant::Unconditional || v == Variant::ConditionalOnPrediction ||
         v == Variant::Posterior;
}

// Per-seed model store; flows are trained on first use and shared between
// the methods of one seed.
struct SeedModels {
  const ExperimentConfig& config;
  const Dataset& data;
  std::uint64_t seed;
  std::map<FlowKind, std::shared_ptr<const FlowModel>> flows;
  std::map<FlowKind, double> final_nll;
  std::shared_ptr<const BasePredictor> predictor;

  SeedModels(const ExperimentConfig& cfg, const Dataset& d, std::uint64_t s)
      : config(cfg), data(d), seed(s) {}

  std::shared_ptr<const BasePredictor> get_predictor() {
    if (!predictor) {
      predictor = std::make_shared<BasePredictor>(
          fit_base_predictor(data.train_x(), data.train_y(), config.ridge_lambda));
    }
    return predictor;
  }

  std::shared_ptr<const FlowModel> get_flow(FlowKind kind) {
    auto it = flows.find(kind);
    if (it != flows.end()) return it->second;

    TrainConfig tc = config.flow;
    tc.seed = Rng(seed).split(41 + static_cast<std::uint64_t>(kind)).next_u64();
    Matrix train_y, train_x;
    switch (kind) {
      case FlowKind::Data:
        train_y = data.train_y();
        train_x = data.train_x();
        break;
      case FlowKind::PredMarginal:
        train_y = get_predictor()->predict_batch(data.train_x());
        train_x = Matrix(train_y.rows(), 0);
        break;
      case FlowKind::OnPrediction:
        train_y = data.train_y();
        train_x = get_predictor()->predict_batch(data.train_x());
        break;
      case FlowKind::Posterior:
        train_y = get_predictor()->predict_batch(data.train_x());
        train_x = data.train_y();
        break;
    }
    TrainResult trained = train_nll(train_y, train_x, tc);
    auto flow = std::make_shared<const FlowModel>(std::move(trained.model));
    final_nll[kind] = trained.epoch_nll.back();
    flows[kind] = flow;
    return flow;
  }
};

struct CellOutput {
  std::vector<ExperimentResult> rows;
};

// Runs every ε for one (seed, method); models are reused across ε.
CellOutput run_cell(const ExperimentConfig& config, const Dataset& data, SeedModels& models,
                    const std::string& method, std::uint64_t seed, unsigned threads) {
  const MethodInfo info = method_info(method);
  CellOutput out;
  const Matrix test_x = data.test_x();
  const Matrix test_y = data.test_y();
  const std::uint64_t area_seed = Rng(seed).split(31).next_u64();
  const double unit = config.destandardize ? data.y_std_product() : 1.0;

  for (double eps : config.epsilons) {
    ExperimentResult r;
    r.dataset = data.name;
    r.method = method;
    r.variant = info.kind == MethodKind::Japan ? "japan" : "baseline";
    r.seed = seed;
    r.epsilon = eps;
    const auto started = std::chrono::steady_clock::now();
    try {
      if (info.kind == MethodKind::Rect) {
        const auto predictor = models.get_predictor();
        const RectRegion region = fit_rect(*predictor, data.cal_x(), data.cal_y(), eps);
        std::uint64_t hits = 0;
        for (std::size_t i = 0; i < test_y.rows(); ++i) {
          hits += region.contains(test_x.row_span(i), test_y.row_span(i)) ? 1 : 0;
        }
        r.coverage = static_cast<double>(hits) / static_cast<double>(test_y.rows());
        r.area = region.area() * unit;
        r.area_se = 0.0;
        r.train_nll = kNan;
      } else if (info.kind == MethodKind::Ellipse) {
        const auto predictor = models.get_predictor();
        const EllipseRegion region =
            fit_ellipse(*predictor, data.train_x(), data.train_y(), data.cal_x(), data.cal_y(), eps);
        std::uint64_t hits = 0;
        for (std::size_t i = 0; i < test_y.rows(); ++i) {
          hits += region.contains(test_x.row_span(i), test_y.row_span(i)) ? 1 : 0;
        }
        r.coverage = static_cast<double>(hits) / static_cast<double>(test_y.rows());
        r.area = region.area() * unit;
        r.area_se = 0.0;
        r.train_nll = kNan;
      } else {
        const FlowKind fk = flow_kind_for(info.variant);
        const auto flow = models.get_flow(fk);
        const auto predictor =
            needs_predictor(info.variant) ? models.get_predictor() : nullptr;
        const PredictionRegion region = make_region(info.variant, config.knn_k, flow, predictor,
                                                    data.cal_x(), data.cal_y(), eps);
        r.coverage = coverage(region, test_x, test_y);
        if (region.cal.k == 0) {
          // τ = -inf: the region is all of the output space.
          r.area = std::numeric_limits<double>::infinity();
          r.area_se = 0.0;
        } else {
          if (flow->y_dim() > 8) {
            std::cerr << "warning: " << method << " area estimate in " << flow->y_dim()
                      << " dimensions; importance weights degrade above 8\n";
          }
          const bool conditional = flow->context_dim() > 0;
          const std::uint64_t n_samples =
              conditional ? config.mc_samples_per_context : config.mc_samples;
          const AreaEstimate area = region_area(region, test_x, n_samples, area_seed, threads,
                                                config.area_context_cap);
          r.area = area.value * unit;
          r.area_se = area.std_error * unit;
        }
        r.train_nll = models.final_nll.at(fk);
      }
    } catch (const Error& e) {
      r.failed = true;
      r.error_message = e.what();
      r.coverage = kNan;
      r.area = kNan;
      r.area_se = kNan;
      r.train_nll = kNan;
    }
    const auto stopped = std::chrono::steady_clock::now();
    r.seconds = config.timings
                    ? std::chrono::duration<double>(stopped - started).count()
                    : 0.0;
    out.rows.push_back(std::move(r));
  }
  return out;
}

std::vector<ExperimentResult> run_all_cells(const ExperimentConfig& config, unsigned threads) {
  const unsigned n_threads = resolve_threads(threads);
  std::vector<ExperimentResult> results;
  std::mutex results_mutex;

  // Seeds are the parallel unit so that one seed's methods can share models.
  std::vector<std::uint64_t> seeds = config.seeds;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= seeds.size()) return;
      const std::uint64_t seed = seeds[i];
      std::vector<ExperimentResult> local;
      try {
        const Dataset data = build_dataset(config, seed);
        SeedModels models(config, data, seed);
        for (const auto& method : config.methods) {
          CellOutput cell = run_cell(config, data, models, method, seed, 1);
          for (auto& row : cell.rows) local.push_back(std::move(row));
        }
      } catch (const Error& e) {
        for (const auto& method : config.methods) {
          for (double eps : config.epsilons) {
            ExperimentResult r;
            r.dataset = config.dataset.kind == "toy" ? config.dataset.name : config.dataset.kind;
            r.method = method;
            r.variant = method_info(method).kind == MethodKind::Japan ? "japan" : "baseline";
            r.seed = seed;
            r.epsilon = eps;
            r.failed = true;
            r.error_message = e.what();
            r.coverage = kNan;
            r.area = kNan;
            r.area_se = kNan;
            r.train_nll = kNan;
            local.push_back(std::move(r));
          }
        }
      }
      const std::lock_guard<std::mutex> lock(results_mutex);
      for (auto& row : local) results.push_back(std::move(row));
    }
  };

  const unsigned pool_size = std::min<unsigned>(n_threads, seeds.size());
  if (pool_size <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(pool_size);
    for (unsigned t = 0; t < pool_size; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::sort(results.begin(), results.end(), [](const ExperimentResult& a, const ExperimentResult& b) {
    return std::tie(a.dataset, a.method, a.seed, a.epsilon) <
           std::tie(b.dataset, b.method, b.seed, b.epsilon);
  });
  return results;
}

std::string result_json_line(const ExperimentResult& r) {
  json j;
  j["dataset"] = r.dataset;
  j["method"] = r.method;
  j["variant"] = r.variant;
  j["seed"] = r.seed;
  j["epsilon"] = r.epsilon;
  if (r.failed) {
    j["error"] = r.error_message;
  } else {
    j["coverage"] = r.coverage;
    j["area"] = r.area;
    j["area_se"] = r.area_se;
    if (!std::isnan(r.train_nll)) j["train_nll"] = r.train_nll;
    j["seconds"] = r.seconds;
  }
  return j.dump();
}

}  // namespace

std::vector<ExperimentResult> run_experiment(const ExperimentConfig& config, unsigned threads,
                                             std::ostream* echo) {
  std::vector<ExperimentResult> results = run_all_cells(config, threads);
  if (echo) {
    for (const auto& r : results) (*echo) << result_json_line(r) << '\n';
  }
  return results;
}

std::vector<SweepRow> sweep_experiment(const ExperimentConfig& config, unsigned threads,
                                       std::ostream* echo) {
  if (config.epsilons.size() < 2) {
    throw ConfigError("sweep: at least two epsilon values are required");
  }
  const std::vector<ExperimentResult> results = run_all_cells(config, threads);

  std::vector<SweepRow> rows;
  for (const auto& method : config.methods) {
    for (double eps : config.epsilons) {
      SweepRow row;
      row.method = method;
      row.epsilon = eps;
      double cov = 0.0, area = 0.0, var = 0.0;
      std::size_t n = 0;
      for (const auto& r : results) {
        if (r.method == method && r.epsilon == eps && !r.failed) {
          row.dataset = r.dataset;
          row.variant = r.variant;
          cov += r.coverage;
          area += r.area;
          var += r.area_se * r.area_se;
          ++n;
        }
      }
      if (n == 0) continue;
      row.coverage = cov / static_cast<double>(n);
      row.area = area / static_cast<double>(n);
      row.area_se = std::sqrt(var) / static_cast<double>(n);
      rows.push_back(std::move(row));
    }
  }
  if (echo) {
    for (const auto& r : rows) {
      json j;
      j["dataset"] = r.dataset;
      j["method"] = r.method;
      j["epsilon"] = r.epsilon;
      j["coverage"] = r.coverage;
      j["area"] = r.area;
      (*echo) << j.dump() << '\n';
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV I/O

namespace {

std::string csv_value(double v) { return std::isnan(v) ? "nan" : format_double(v); }

}  // namespace

void write_results_csv(const std::vector<ExperimentResult>& results, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "dataset,method,variant,seed,epsilon,coverage,area,area_se,train_nll,seconds\n";
  for (const auto& r : results) {
    out << r.dataset << ',' << r.method << ',' << r.variant << ',' << r.seed << ','
        << format_double(r.epsilon) << ',' << csv_value(r.coverage) << ',' << csv_value(r.area)
        << ',' << csv_value(r.area_se) << ',' << csv_value(r.train_nll) << ','
        << format_fixed(r.seconds, 3) << '\n';
  }
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "dataset,method,variant,epsilon,coverage,area,area_se\n";
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.method << ',' << r.variant << ',' << format_double(r.epsilon)
        << ',' << csv_value(r.coverage) << ',' << csv_value(r.area) << ','
        << csv_value(r.area_se) << '\n';
  }
}

std::vector<CompareRow> compare_results(const std::string& results_csv) {
  std::ifstream in(results_csv);
  if (!in) throw ParseError("compare: cannot open " + results_csv);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("compare: empty file");

  auto split_fields = [](const std::string& s) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : s) {
      if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else if (ch != '\r') {
        cur.push_back(ch);
      }
    }
    fields.push_back(cur);
    return fields;
  };

  const std::vector<std::string> header = split_fields(line);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError("compare: column '" + name + "' missing");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_dataset = column("dataset");
  const std::size_t c_method = column("method");
  const std::size_t c_coverage = column("coverage");
  const std::size_t c_area = column("area");

  struct Bucket {
    std::vector<double> coverage, area;
  };
  std::map<std::pair<std::string, std::string>, Bucket> groups;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_fields(line);
    if (f.size() != header.size()) throw ParseError("compare: ragged row in " + results_csv);
    const double cov = std::strtod(f[c_coverage].c_str(), nullptr);
    const double area = std::strtod(f[c_area].c_str(), nullptr);
    if (std::isnan(cov) || std::isnan(area)) continue;  // error rows
    Bucket& b = groups[{f[c_dataset], f[c_method]}];
    b.coverage.push_back(cov);
    b.area.push_back(area);
  }

  auto mean_std = [](const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double std_dev = v.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    return std::pair<double, double>{mean, std_dev};
  };

  std::vector<CompareRow> rows;
  for (const auto& [key, bucket] : groups) {
    CompareRow row;
    row.dataset = key.first;
    row.method = key.second;
    row.runs = bucket.coverage.size();
    std::tie(row.coverage_mean, row.coverage_std) = mean_std(bucket.coverage);
    std::tie(row.area_mean, row.area_std) = mean_std(bucket.area);
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const CompareRow& a, const CompareRow& b) {
    return std::tie(a.dataset, a.area_mean, a.method) < std::tie(b.dataset, b.area_mean, b.method);
  });
  return rows;
}

void write_compare_csv(const std::vector<CompareRow>& rows, std::ostream& out) {
  out << "dataset,method,runs,coverage_mean,coverage_std,area_mean,area_std\n";
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.method << ',' << r.runs << ',' << format_double(r.coverage_mean)
        << ',' << format_double(r.coverage_std) << ',' << format_double(r.area_mean) << ','
        << format_double(r.area_std) << '\n';
  }
}

void print_compare_table(const std::vector<CompareRow>& rows, std::ostream& out) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-14s %-14s %5s %18s %20s", "dataset", "method", "runs",
                "coverage", "area");
  out << buf << '\n';
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-14s %-14s %5zu %9.4f ± %-7.4f %11.4f ± %-8.4f",
                  r.dataset.c_str(), r.method.c_str(), r.runs, r.coverage_mean, r.coverage_std,
                  r.area_mean, r.area_std);
    out << buf << '\n';
  }
}

}  // namespace japan
