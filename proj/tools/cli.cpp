#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "semtopo/semtopo.hpp"
#include "semtopo/service.hpp"

namespace fs = std::filesystem;

namespace semtopo::cli {
namespace {

std::size_t g_workers = default_worker_count();

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string absolute(const std::string& p) { return fs::weakly_canonical(fs::absolute(p)).string(); }

// Collects output paths relative to the output directory.
struct Outputs {
  fs::path dir;
  std::vector<std::string> files;

  fs::path operator()(const std::string& name) {
    files.push_back(name);
    return dir / name;
  }
};

void write_json(const fs::path& path, const Json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

Json summary_json(const Summary& s) {
  return Json{{"count", s.count}, {"mean", s.mean},     {"stddev", s.stddev}, {"min", s.min},
              {"q25", s.q25},     {"median", s.median}, {"q75", s.q75},       {"max", s.max}};
}

Json metrics_json(const MetricSummaries& m) {
  return Json{{"w1_h0", summary_json(m.w1_h0)},
              {"lt_max_h1", summary_json(m.lt_max_h1)},
              {"points_used", summary_json(m.points_used)}};
}

Json kde_json(std::span<const double> values, std::size_t samples) {
  const auto kde = gaussian_kde(values, samples);
  return Json{{"bandwidth", kde.bandwidth}, {"x", kde.x}, {"density", kde.density}};
}

std::string fmt(double v) { return format_number(v); }
std::string fmt(std::size_t v) { return std::to_string(v); }

std::string mean_iqr(const Summary& s) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.4f (IQR %.4f-%.4f)", s.mean, s.q25, s.q75);
  return buf;
}

std::vector<double> require_grid(const Json& grid) {
  auto g = grid.get<std::vector<double>>();
  if (g.empty()) throw InvalidArgument("epsilon grid is empty");
  if (!std::is_sorted(g.begin(), g.end())) throw InvalidArgument("epsilon grid must be ascending");
  for (double e : g)
    if (e < 0.0) throw InvalidArgument("epsilon values must be non-negative");
  return g;
}

std::vector<int> require_scenarios(const Json& j) {
  auto s = j.get<std::vector<int>>();
  if (s.empty()) throw InvalidArgument("no scenario selected");
  for (int v : s) validate_scenario(v);
  return s;
}

// ---------------------------------------------------------------------------
// Embedders

std::unique_ptr<Embedder> make_embedder(const Json& desc) {
  const auto kind = desc.at("kind").get<std::string>();
  if (kind == "mock")
    return std::make_unique<MockEmbedder>(desc.at("dimension").get<std::size_t>(), desc.at("seed").get<std::uint64_t>());
  if (kind == "service") {
    auto service = std::make_unique<ServiceEmbedder>(ServiceConfig::from_environment());
    const auto cache = desc.value("cache", std::string());
    if (cache.empty()) return service;
    return std::make_unique<CachingEmbedder>(std::move(service), cache);
  }
  throw InvalidArgument("unknown embedder '" + kind + "' (expected mock or service)");
}

// ---------------------------------------------------------------------------
// simulate

Json cmd_simulate(const Json& p, Outputs& files, std::ostream& out) {
  const auto config = scenario_config_from_json(p.at("config"));
  const auto scenarios = require_scenarios(p.at("scenarios"));
  const auto trials = p.at("trials").get<std::size_t>();

  CsvWriter csv(files("trials.csv"), {"trial_id", "scenario", "epsilon", "w1_h0", "lt_max_h1", "points_used"});
  Json summary{{"config", scenario_config_to_json(config)}, {"trials", trials}, {"scenarios", Json::object()}};
  std::map<int, MetricSummaries> by_scenario;
  for (int s : scenarios) {
    const auto run = run_simulation(config, s, trials, g_workers);
    for (std::size_t t = 0; t < run.trials.size(); ++t) {
      const auto& a = run.trials[t];
      csv.row({fmt(t), std::to_string(s), fmt(a.epsilon), fmt(a.w1_h0), fmt(a.lt_max_h1), fmt(a.points_used)});
    }
    summary["scenarios"][std::to_string(s)] = metrics_json(run.summary);
    by_scenario[s] = run.summary;
    out << "scenario " << s << ": W1(H0) " << mean_iqr(run.summary.w1_h0) << ", LT_max(H1) "
        << mean_iqr(run.summary.lt_max_h1) << "\n";
  }
  if (by_scenario.count(1) && by_scenario.count(2)) {
    const auto& a = by_scenario[1];
    const auto& b = by_scenario[2];
    summary["separation"] = {{"w1_h0", b.w1_h0.mean - a.w1_h0.mean},
                             {"lt_max_h1", b.lt_max_h1.mean - a.lt_max_h1.mean},
                             {"w1_h0_iqr_disjoint", iqr_disjoint(a.w1_h0, b.w1_h0)},
                             {"lt_max_h1_iqr_disjoint", iqr_disjoint(a.lt_max_h1, b.lt_max_h1)}};
    out << "scenario 2 - scenario 1: dW1(H0) = " << fmt(b.w1_h0.mean - a.w1_h0.mean)
        << ", dLT_max(H1) = " << fmt(b.lt_max_h1.mean - a.lt_max_h1.mean) << "\n";
  }
  write_json(files("summary.json"), summary);
  return summary;
}

// ---------------------------------------------------------------------------
// sweep

std::vector<std::string> summary_fields(const MetricSummaries& m) {
  return {fmt(m.w1_h0.mean),     fmt(m.w1_h0.q25),     fmt(m.w1_h0.median),     fmt(m.w1_h0.q75),
          fmt(m.lt_max_h1.mean), fmt(m.lt_max_h1.q25), fmt(m.lt_max_h1.median), fmt(m.lt_max_h1.q75),
          fmt(m.points_used.mean)};
}

const std::vector<std::string> kSummaryColumns = {"w1_h0_mean",     "w1_h0_q25",     "w1_h0_median",
                                                  "w1_h0_q75",      "lt_max_h1_mean", "lt_max_h1_q25",
                                                  "lt_max_h1_median", "lt_max_h1_q75", "points_used_mean"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void sweep_svgs(Outputs& files, const std::string& stem, const std::string& x_label,
                const std::map<std::string, std::vector<std::pair<double, MetricSummaries>>>& curves) {
  for (const bool w1 : {true, false}) {
    LinePlot plot;
    plot.title = w1 ? "W1(H0)" : "LT_max(H1)";
    plot.x_label = x_label;
    plot.y_label = plot.title;
    for (const auto& [label, pts] : curves) {
      PlotSeries s;
      s.label = label;
      for (const auto& [x, m] : pts) {
        const auto& sm = w1 ? m.w1_h0 : m.lt_max_h1;
        s.x.push_back(x);
        s.y.push_back(sm.mean);
        s.band_low.push_back(sm.q25);
        s.band_high.push_back(sm.q75);
      }
      plot.series.push_back(std::move(s));
    }
    auto f = open_output(files(stem + (w1 ? "_w1_h0.svg" : "_lt_max_h1.svg")));
    f << render_svg(plot);
  }
}

Json cmd_sweep(const Json& p, Outputs& files, std::ostream& out) {
  const auto config = scenario_config_from_json(p.at("config"));
  const auto trials = p.at("trials").get<std::size_t>();
  const auto mode = p.at("mode").get<std::string>();
  const bool svg = p.value("svg", false);
  Json summary{{"config", scenario_config_to_json(config)}, {"trials", trials}, {"mode", mode}};

  if (mode == "epsilon") {
    const auto scenarios = require_scenarios(p.at("scenarios"));
    const auto grid = require_grid(p.at("epsilon_grid"));
    CsvWriter csv(files("epsilon_sweep.csv"), concat({"scenario", "epsilon"}, kSummaryColumns));
    std::map<std::string, std::vector<std::pair<double, MetricSummaries>>> curves;
    for (int s : scenarios) {
      const auto pts = epsilon_sweep(config, s, grid, trials, g_workers);
      for (const auto& pt : pts) {
        csv.row(concat({std::to_string(s), fmt(pt.epsilon)}, summary_fields(pt.summary)));
        curves["scenario " + std::to_string(s)].push_back({pt.epsilon, pt.summary});
        summary["scenarios"][std::to_string(s)].push_back(
            Json{{"epsilon", pt.epsilon}, {"metrics", metrics_json(pt.summary)}});
      }
      out << "scenario " << s << ": " << pts.size() << " scales, W1(H0) " << fmt(pts.front().summary.w1_h0.mean)
          << " -> " << fmt(pts.back().summary.w1_h0.mean) << "\n";
    }
    if (svg) sweep_svgs(files, "epsilon_sweep", "epsilon", curves);
  } else if (mode == "dims") {
    const auto scenarios = require_scenarios(p.at("scenarios"));
    const auto dims = p.at("dims").get<std::vector<std::size_t>>();
    CsvWriter csv(files("projection.csv"),
                  concat({"scenario", "target_dimension"}, concat(kSummaryColumns, {"w1_h0_shift", "lt_max_h1_shift"})));
    std::map<std::string, std::vector<std::pair<double, MetricSummaries>>> curves;
    for (int s : scenarios) {
      const auto pts = projection_robustness(config, s, dims, trials, g_workers);
      const auto& base = pts.front().summary;
      for (const auto& pt : pts) {
        const double dw = pt.summary.w1_h0.mean - base.w1_h0.mean;
        const double dl = pt.summary.lt_max_h1.mean - base.lt_max_h1.mean;
        const auto d = pt.target_dimension == 0 ? config.dimension : pt.target_dimension;
        csv.row(concat({std::to_string(s), fmt(d)}, concat(summary_fields(pt.summary), {fmt(dw), fmt(dl)})));
        curves["scenario " + std::to_string(s)].push_back({static_cast<double>(d), pt.summary});
        summary["scenarios"][std::to_string(s)].push_back(Json{{"target_dimension", d},
                                                               {"baseline", pt.target_dimension == 0},
                                                               {"w1_h0_shift", dw},
                                                               {"lt_max_h1_shift", dl},
                                                               {"metrics", metrics_json(pt.summary)}});
        out << "scenario " << s << ", dim " << d << ": W1(H0) " << mean_iqr(pt.summary.w1_h0) << " shift " << fmt(dw)
            << "\n";
      }
    }
    if (svg) {
      for (auto& [label, pts] : curves) std::sort(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.first < b.first; });
      sweep_svgs(files, "projection", "target dimension", curves);
    }
  } else if (mode == "dimension_grid") {
    std::vector<ScenarioConfig> configs;
    for (const auto& c : p.at("configs")) configs.push_back(scenario_config_from_json(c));
    CsvWriter csv(files("dimension_grid.csv"), concat({"dimension", "topic_count", "n_parent", "scenario"}, kSummaryColumns));
    const auto rows = dimension_sweep(configs, trials, g_workers);
    for (const auto& r : rows) {
      for (const auto* run : {&r.scenario1, &r.scenario2})
        csv.row(concat({fmt(r.config.dimension), fmt(r.config.topic_count), fmt(r.config.n_parent),
                        std::to_string(run->scenario)},
                       summary_fields(run->summary)));
      summary["rows"].push_back(Json{{"config", scenario_config_to_json(r.config)},
                                     {"w1_h0_separation", r.w1_separation()},
                                     {"lt_max_h1_separation", r.lt_separation()},
                                     {"w1_h0_iqr_disjoint", r.w1_iqr_disjoint()},
                                     {"lt_max_h1_iqr_disjoint", r.lt_iqr_disjoint()}});
      out << "(" << r.config.dimension << "," << r.config.topic_count << "," << r.config.n_parent
          << "): dW1(H0) = " << fmt(r.w1_separation()) << (r.w1_iqr_disjoint() ? " (IQRs disjoint)" : " (IQRs overlap)")
          << ", dLT_max(H1) = " << fmt(r.lt_separation()) << "\n";
    }
  } else {
    throw InvalidArgument("unknown sweep mode '" + mode + "'");
  }
  write_json(files("summary.json"), summary);
  return summary;
}

// ---------------------------------------------------------------------------
// synth

Json cmd_synth(const Json& p, Outputs& files, std::ostream& out) {
  SyntheticCorpusConfig cfg;
  cfg.documents = p.at("documents").get<std::size_t>();
  cfg.topics = p.at("topics").get<std::size_t>();
  cfg.tokens_per_document = p.at("tokens_per_document").get<std::size_t>();
  cfg.single_topic_documents = p.at("single_topic").get<bool>();
  cfg.seed = p.at("seed").get<std::uint64_t>();
  const auto docs = synthetic_corpus(cfg);
  for (const auto& d : docs) {
    auto f = open_output(files(d.doc_id + ".txt"));
    f << d.text;
  }
  out << "wrote " << docs.size() << " documents to " << files.dir.string() << "\n";
  return Json{{"documents", docs.size()}};
}

// ---------------------------------------------------------------------------
// ingest

std::vector<Document> read_corpus_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("corpus directory " + dir.string() + " does not exist");
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename().string().front() != '.' && e.path().filename() != "manifest.json")
      paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw IoError("corpus directory " + dir.string() + " has no files");
  std::vector<Document> docs;
  for (const auto& path : paths) docs.push_back({path.filename().string(), read_file(path)});
  return docs;
}

Json cmd_ingest(const Json& p, Outputs& files, std::ostream& out) {
  const auto docs = read_corpus_dir(p.at("corpus_dir").get<std::string>());
  const auto granularities = p.at("granularities").get<std::vector<std::size_t>>();
  if (granularities.empty()) throw InvalidArgument("no chunk granularity given");
  auto embedder = make_embedder(p.at("embedder"));
  CsvWriter csv(files("ingest.csv"), {"granularity", "documents", "chunks", "tokens", "model_tag", "dimension"});
  Json summary{{"documents", docs.size()}, {"model_tag", embedder->model_tag()}};
  for (const auto t : granularities) {
    ChunkSet set;
    set.granularity = t;
    for (const auto& d : docs) {
      ChunkSet one;
      try {
        one = chunk_text(d, t);
      } catch (const DegenerateInput& e) {
        throw DegenerateInput("document " + d.doc_id + ": " + e.what());
      }
      for (auto& c : one.chunks) set.chunks.push_back(std::move(c));
    }
    const auto records = embed_chunks(set, *embedder);
    const std::string tag = "T" + std::to_string(t);
    write_chunks_jsonl(files("chunks_" + tag + ".jsonl"), set);
    write_embeddings_jsonl(files("embeddings_" + tag + ".jsonl"), records);
    std::size_t tokens = 0;
    for (const auto& c : set.chunks) tokens += c.token_count();
    const auto dim = records.front().vector.size();
    csv.row({fmt(t), fmt(docs.size()), fmt(set.size()), fmt(tokens), embedder->model_tag(), fmt(static_cast<std::size_t>(dim))});
    summary["granularities"].push_back(Json{{"T", t}, {"chunks", set.size()}, {"tokens", tokens}});
    out << "T=" << t << ": " << set.size() << " chunks, " << tokens << " tokens, dim " << dim << "\n";
  }
  write_json(files("summary.json"), summary);
  return summary;
}

// ---------------------------------------------------------------------------
// analyze

std::string direction_label(const fs::path& queries, const fs::path& corpus) {
  const auto stem = [](const fs::path& p) {
    auto s = p.stem().string();
    const std::string prefix = "embeddings_";
    return s.rfind(prefix, 0) == 0 ? s.substr(prefix.size()) : s;
  };
  return "Q=" + stem(queries) + ";C=" + stem(corpus);
}

Json direction_summary(const DirectionResult& r, std::size_t kde_samples) {
  Json j{{"label", r.label},
         {"queries", r.queries.size()},
         {"scored", r.count(QueryStatus::kScored)},
         {"not_contained", r.count(QueryStatus::kNotContained)},
         {"duplicate", r.count(QueryStatus::kDuplicate)},
         {"scales", Json::array()}};
  for (std::size_t g = 0; g < r.summary.size(); ++g) {
    std::vector<double> w1, lt;
    for (const auto& q : r.queries)
      if (q.status == QueryStatus::kScored) {
        w1.push_back(q.profile[g].w1_h0);
        lt.push_back(q.profile[g].lt_max_h1);
      }
    j["scales"].push_back(Json{{"epsilon", r.summary[g].epsilon},
                               {"metrics", metrics_json(r.summary[g].summary)},
                               {"kde", {{"w1_h0", kde_json(w1, kde_samples)}, {"lt_max_h1", kde_json(lt, kde_samples)}}}});
  }
  return j;
}

Json cmd_analyze(const Json& p, Outputs& files, std::ostream& out) {
  const fs::path qpath = p.at("queries").get<std::string>();
  const fs::path cpath = p.at("corpus").get<std::string>();
  ExperimentOptions opt;
  opt.k = p.at("k").get<std::size_t>();
  if (opt.k < 2) throw InvalidArgument("k must be at least 2");
  opt.epsilon_grid = require_grid(p.at("epsilon_grid"));
  opt.workers = g_workers;

  const auto queries = read_embeddings_jsonl(qpath);
  const auto corpus = read_embeddings_jsonl(cpath);
  if (queries.empty() || corpus.empty()) throw IoError("embedding files must not be empty");
  if (queries.front().vector.size() != corpus.front().vector.size())
    throw DimensionMismatch("query embeddings have dimension " + std::to_string(queries.front().vector.size()) +
                            " but corpus embeddings have " + std::to_string(corpus.front().vector.size()));

  std::vector<DirectionResult> results;
  results.push_back(retrieval_experiment(queries, VectorIndex(corpus), opt, direction_label(qpath, cpath)));
  if (p.value("both_directions", false))
    results.push_back(retrieval_experiment(corpus, VectorIndex(queries), opt, direction_label(cpath, qpath)));

  CsvWriter csv(files("scores.csv"),
                {"direction", "query_id", "doc_id", "chunk_id", "token_start", "token_end", "status", "top_doc_id",
                 "top_chunk_id", "epsilon", "w1_h0", "lt_max_h1", "points_used", "degenerate", "max_epsilon"});
  Json summary{{"k", opt.k}, {"epsilon_grid", opt.epsilon_grid}, {"directions", Json::array()}};
  for (const auto& r : results) {
    for (const auto& q : r.queries) {
      const std::vector<std::string> head{r.label,
                                          q.query.doc_id + "#" + std::to_string(q.query.chunk_id),
                                          q.query.doc_id,
                                          fmt(q.query.chunk_id),
                                          fmt(q.query.token_start),
                                          fmt(q.query.token_end),
                                          to_string(q.status),
                                          q.top.doc_id,
                                          fmt(q.top.chunk_id)};
      if (q.status != QueryStatus::kScored) {
        csv.row(concat(head, {"", "", "", "", "", ""}));
        continue;
      }
      for (const auto& a : q.profile)
        csv.row(concat(head, {fmt(a.epsilon), fmt(a.w1_h0), fmt(a.lt_max_h1), fmt(a.points_used),
                              a.degenerate ? "1" : "0", fmt(q.max_epsilon)}));
    }
    summary["directions"].push_back(direction_summary(r, 128));
    out << r.label << ": " << r.count(QueryStatus::kScored) << "/" << r.queries.size() << " queries scored ("
        << r.count(QueryStatus::kNotContained) << " not contained, " << r.count(QueryStatus::kDuplicate)
        << " duplicates)";
    if (!r.summary.empty())
      out << ", W1(H0) " << mean_iqr(r.summary.front().summary.w1_h0) << ", LT_max(H1) "
          << mean_iqr(r.summary.front().summary.lt_max_h1) << " at epsilon " << fmt(r.summary.front().epsilon);
    out << "\n";
  }
  write_json(files("summary.json"), summary);
  return summary;
}

// ---------------------------------------------------------------------------
// calibrate

Json cmd_calibrate(const Json& p, Outputs& files, std::ostream& out) {
  const auto chunks = read_chunks_jsonl(p.at("chunks").get<std::string>());
  const auto embeddings = read_embeddings_jsonl(p.at("embeddings").get<std::string>());
  if (chunks.size() != embeddings.size())
    throw InvalidArgument("chunk manifest has " + std::to_string(chunks.size()) + " records but embeddings have " +
                          std::to_string(embeddings.size()));
  for (std::size_t i = 0; i < chunks.size(); ++i)
    if (!(chunks.chunks[i].ref() == embeddings[i].chunk))
      throw InvalidArgument("chunk manifest and embeddings disagree at record " + std::to_string(i));
  auto embedder = make_embedder(p.at("embedder"));
  CalibrationOptions opt;
  opt.cluster_count = p.at("clusters").get<std::size_t>();
  opt.queries_per_group = p.at("queries_per_group").get<std::size_t>();
  opt.chunks_per_query = p.at("chunks_per_query").get<std::size_t>();
  opt.k = p.at("k").get<std::size_t>();
  opt.epsilon_grid = require_grid(p.at("epsilon_grid"));
  opt.seed = p.at("seed").get<std::uint64_t>();
  opt.workers = g_workers;
  const auto base = calibrate(chunks, embeddings, *embedder, opt);

  {
    CsvWriter csv(files("clusters.csv"), {"chunk_index", "doc_id", "chunk_id", "cluster"});
    for (std::size_t i = 0; i < chunks.size(); ++i)
      csv.row({fmt(i), chunks.chunks[i].doc_id, fmt(chunks.chunks[i].chunk_id), fmt(base.clustering.labels[i])});
  }
  CsvWriter csv(files("calibration.csv"), {"group", "query_index", "epsilon", "w1_h0", "lt_max_h1", "points_used"});
  Json summary{{"clusters", opt.cluster_count},
               {"cluster_sizes", Json::array()},
               {"kmeans_iterations", base.clustering.iterations},
               {"groups", Json::array()}};
  for (const auto& m : base.clustering.members()) summary["cluster_sizes"].push_back(m.size());
  for (const auto* g : base.groups()) {
    for (std::size_t q = 0; q < g->profiles.size(); ++q)
      for (const auto& a : g->profiles[q])
        csv.row({g->name, fmt(q), fmt(a.epsilon), fmt(a.w1_h0), fmt(a.lt_max_h1), fmt(a.points_used)});
    Json gj{{"name", g->name}, {"queries", g->profiles.size()}, {"skipped", g->skipped}, {"scales", Json::array()}};
    for (const auto& pt : g->summary) gj["scales"].push_back(Json{{"epsilon", pt.epsilon}, {"metrics", metrics_json(pt.summary)}});
    summary["groups"].push_back(gj);
    out << g->name << ": " << g->profiles.size() << " queries";
    if (!g->summary.empty()) out << ", W1(H0) " << mean_iqr(g->summary.front().summary.w1_h0);
    out << "\n";
  }
  write_json(files("summary.json"), summary);
  return summary;
}

// ---------------------------------------------------------------------------
// report

Json cmd_report(const Json& p, Outputs& files, std::ostream& out) {
  const auto table = read_csv(p.at("results").get<std::string>());
  if (table.rows.empty()) throw DegenerateInput("results file has no rows");
  std::string group_col = p.value("group_by", std::string());
  if (group_col.empty())
    for (const char* c : {"direction", "group", "scenario"})
      if (table.has_column(c)) {
        group_col = c;
        break;
      }
  const auto metrics = p.at("metrics").get<std::vector<std::string>>();
  const auto bins = p.at("bins").get<std::size_t>();
  const auto samples = p.at("kde_samples").get<std::size_t>();

  const bool has_status = table.has_column("status");
  const bool has_eps = table.has_column("epsilon");
  std::optional<double> epsilon;
  if (p.contains("epsilon") && !p["epsilon"].is_null()) epsilon = p["epsilon"].get<double>();

  // Group -> metric -> values, groups in first-seen order.
  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, std::vector<double>>> data;
  for (const auto& row : table.rows) {
    if (has_status && row[table.column("status")] != "scored") continue;
    if (has_eps) {
      const double e = parse_double(row[table.column("epsilon")]);
      if (!epsilon) epsilon = e;
      if (std::abs(e - *epsilon) > 1e-12) continue;
    }
    const std::string g = group_col.empty() ? "all" : row[table.column(group_col)];
    if (!data.count(g)) order.push_back(g);
    for (const auto& m : metrics) data[g][m].push_back(parse_double(row[table.column(m)]));
  }
  if (order.empty()) throw DegenerateInput("no usable rows in results file");

  CsvWriter hist_csv(files("histogram.csv"), {"group", "metric", "bin", "lower", "upper", "count"});
  CsvWriter kde_csv(files("kde.csv"), {"group", "metric", "bandwidth", "x", "density"});
  Json report{{"group_by", group_col}, {"groups", Json::object()}};
  if (epsilon) report["epsilon"] = *epsilon;
  std::map<std::string, LinePlot> plots;
  for (const auto& g : order) {
    for (const auto& m : metrics) {
      const auto& values = data[g][m];
      const auto h = histogram(values, bins);
      for (std::size_t b = 0; b < h.counts.size(); ++b)
        hist_csv.row({g, m, fmt(b), fmt(h.edges[b]), fmt(h.edges[b + 1]), fmt(h.counts[b])});
      const auto kde = gaussian_kde(values, samples);
      for (std::size_t i = 0; i < kde.x.size(); ++i)
        kde_csv.row({g, m, fmt(kde.bandwidth), fmt(kde.x[i]), fmt(kde.density[i])});
      report["groups"][g][m] = {{"summary", summary_json(summarize(values))}, {"bandwidth", kde.bandwidth}};
      auto& plot = plots[m];
      plot.title = "KDE of " + m;
      plot.x_label = m;
      plot.y_label = "density";
      plot.series.push_back({g, kde.x, kde.density, {}, {}});
      out << g << " " << m << ": n=" << values.size() << ", " << mean_iqr(summarize(values)) << "\n";
    }
  }
  if (p.value("svg", false))
    for (const auto& [m, plot] : plots) {
      auto f = open_output(files("kde_" + m + ".svg"));
      f << render_svg(plot);
    }
  write_json(files("report.json"), report);
  return report;
}

// ---------------------------------------------------------------------------

std::optional<std::uint64_t> master_seed(const std::string& command, const Json& p) {
  if (p.contains("config")) return p["config"].value("seed", std::uint64_t{0});
  if (p.contains("seed")) return p["seed"].get<std::uint64_t>();
  if (command == "ingest" && p.at("embedder").contains("seed")) return p["embedder"]["seed"].get<std::uint64_t>();
  return std::nullopt;
}

}  // namespace

void execute(const std::string& command, const Json& params, std::ostream& out) {
  Outputs files{params.at("out").get<std::string>(), {}};
  fs::create_directories(files.dir);
  const auto started = utc_now();
  Json result;
  if (command == "simulate") result = cmd_simulate(params, files, out);
  else if (command == "sweep") result = cmd_sweep(params, files, out);
  else if (command == "synth") result = cmd_synth(params, files, out);
  else if (command == "ingest") result = cmd_ingest(params, files, out);
  else if (command == "analyze") result = cmd_analyze(params, files, out);
  else if (command == "calibrate") result = cmd_calibrate(params, files, out);
  else if (command == "report") result = cmd_report(params, files, out);
  else throw InvalidArgument("unknown command '" + command + "'");

  Json manifest{{"tool", "semtopo"},
                {"manifest_version", 1},
                {"command", command},
                {"params", params},
                {"started_at", started},
                {"finished_at", utc_now()},
                {"outputs", files.files}};
  if (const auto seed = master_seed(command, params)) manifest["seed"] = *seed;
  write_json(files.dir / "manifest.json", manifest);
}

namespace {

struct Flags {
  std::string config_path;
  std::vector<int> scenarios;
  std::size_t trials = 200;
  std::optional<double> epsilon;
  std::optional<double> sigma;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> epsilon_grid;  // parsed by parse_grid; CLI11 reads "" as 0
  std::vector<std::size_t> dims;
  bool dimension_grid = false;
  bool svg = false;
  std::string out;

  std::string corpus_dir;
  std::vector<std::size_t> granularities{250, 750};
  std::string embedder = "mock";
  std::size_t mock_dimension = MockEmbedder::kDefaultDimension;
  std::uint64_t mock_seed = 0;
  std::string cache;

  std::string queries, corpus;
  std::size_t k = kDefaultNeighborCount;
  bool both = false;

  std::string chunks, embeddings;
  std::size_t clusters = 3;
  std::size_t queries_per_group = 50;
  std::size_t chunks_per_query = 3;

  std::string results;
  std::string group_by;
  std::size_t bins = 20;
  std::size_t kde_samples = 128;

  std::size_t documents = 12, topics = 8, tokens_per_document = 3000;
  bool single_topic = false;

  std::string manifest;
};

Json scenario_config_param(const Flags& f) {
  ScenarioConfig c;
  if (!f.config_path.empty()) c = scenario_config_from_json(Json::parse(read_file(f.config_path)));
  if (f.epsilon) c.epsilon = *f.epsilon;
  if (f.sigma) c.sigma_noise = *f.sigma;
  if (f.seed) c.seed = *f.seed;
  c.validate();
  return scenario_config_to_json(c);
}

Json embedder_param(const Flags& f) {
  if (f.embedder == "mock") return Json{{"kind", "mock"}, {"dimension", f.mock_dimension}, {"seed", f.mock_seed}};
  if (f.embedder == "service") {
    Json j{{"kind", "service"}, {"cache", f.cache.empty() ? std::string() : absolute(f.cache)}};
    if (const char* e = std::getenv("SEMTOPO_EMBED_ENDPOINT")) j["endpoint"] = e;
    if (const char* m = std::getenv("SEMTOPO_EMBED_MODEL")) j["model"] = m;
    return j;
  }
  throw InvalidArgument("--embedder must be mock or service");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"semtopo: query ambiguity from the persistent homology of embedding neighborhoods"};
  app.require_subcommand(1);
  Flags f;
  std::size_t workers = 0;
  app.add_option("--workers", workers, "worker threads (default: hardware concurrency)");

  const auto add_out = [&](CLI::App* sub) { sub->add_option("--out", f.out, "output directory")->required(); };
  const auto add_scenario = [&](CLI::App* sub) {
    sub->add_option("--config", f.config_path, "scenario config JSON")->check(CLI::ExistingFile);
    sub->add_option("--scenario", f.scenarios, "scenario ids (1, 2, 3); default 1,2")
        ->delimiter(',')
        ->check(CLI::Range(1, 3));
    sub->add_option("--trials", f.trials, "trials per scenario")->check(CLI::PositiveNumber);
    sub->add_option("--epsilon", f.epsilon, "neighborhood scale");
    sub->add_option("--sigma", f.sigma, "per-coordinate noise std");
    sub->add_option("--seed", f.seed, "master seed");
  };
  const auto add_embedder = [&](CLI::App* sub) {
    sub->add_option("--embedder", f.embedder, "mock or service")->check(CLI::IsMember({"mock", "service"}));
    sub->add_option("--mock-dim", f.mock_dimension, "mock embedder dimension");
    sub->add_option("--mock-seed", f.mock_seed, "mock embedder hash seed");
    sub->add_option("--cache", f.cache, "JSONL cache for service embeddings");
  };

  auto* simulate = app.add_subcommand("simulate", "run simulation scenarios");
  add_scenario(simulate);
  add_out(simulate);

  auto* sweep = app.add_subcommand("sweep", "sweep epsilon, projection dimension or the dimension grid");
  add_scenario(sweep);
  auto* grid_opt = sweep->add_option("--epsilon-grid", f.epsilon_grid, "comma-separated ascending scales")
                       ->delimiter(',')
                       ->allow_extra_args(false);
  auto* dims_opt = sweep->add_option("--dims", f.dims, "comma-separated projection dimensions")->delimiter(',');
  auto* grid_flag = sweep->add_flag("--dimension-grid", f.dimension_grid, "run the three-config dimension grid");
  grid_opt->excludes(dims_opt)->excludes(grid_flag);
  dims_opt->excludes(grid_flag);
  sweep->add_flag("--svg", f.svg, "also write SVG plots");
  add_out(sweep);

  auto* synth = app.add_subcommand("synth", "write a planted-topic synthetic text corpus");
  synth->add_option("--documents", f.documents)->check(CLI::PositiveNumber);
  synth->add_option("--topics", f.topics)->check(CLI::PositiveNumber);
  synth->add_option("--tokens", f.tokens_per_document, "tokens per document")->check(CLI::PositiveNumber);
  synth->add_flag("--single-topic", f.single_topic, "one topic per document");
  synth->add_option("--seed", f.seed);
  add_out(synth);

  auto* ingest = app.add_subcommand("ingest", "chunk and embed a directory of text files");
  ingest->add_option("--corpus", f.corpus_dir, "directory of plain-text documents")->required();
  ingest->add_option("-T,--granularity", f.granularities, "tokens per chunk, comma-separated")->delimiter(',');
  add_embedder(ingest);
  add_out(ingest);

  auto* analyze = app.add_subcommand("analyze", "score queries against a corpus");
  analyze->add_option("--queries", f.queries, "query embeddings JSONL")->required()->check(CLI::ExistingFile);
  analyze->add_option("--corpus", f.corpus, "corpus embeddings JSONL")->required()->check(CLI::ExistingFile);
  analyze->add_option("--k", f.k, "neighbors per query");
  analyze->add_option("--epsilon-grid", f.epsilon_grid, "comma-separated ascending scales (default 0.4)")->delimiter(',');
  analyze->add_flag("--both-directions", f.both, "also swap queries and corpus");
  add_out(analyze);

  auto* calibrate_cmd = app.add_subcommand("calibrate", "cluster-based baselines for a corpus");
  calibrate_cmd->add_option("--chunks", f.chunks, "chunk manifest JSONL")->required()->check(CLI::ExistingFile);
  calibrate_cmd->add_option("--embeddings", f.embeddings, "embeddings JSONL for the chunks")->required()->check(CLI::ExistingFile);
  calibrate_cmd->add_option("--clusters", f.clusters)->check(CLI::PositiveNumber);
  calibrate_cmd->add_option("--queries-per-group", f.queries_per_group);
  calibrate_cmd->add_option("--chunks-per-query", f.chunks_per_query);
  calibrate_cmd->add_option("--k", f.k);
  calibrate_cmd->add_option("--epsilon-grid", f.epsilon_grid)->delimiter(',');
  calibrate_cmd->add_option("--seed", f.seed);
  add_embedder(calibrate_cmd);
  add_out(calibrate_cmd);

  auto* report = app.add_subcommand("report", "histograms and KDE curves from a results CSV");
  report->add_option("--results", f.results, "scores.csv, trials.csv or calibration.csv")->required()->check(CLI::ExistingFile);
  report->add_option("--group-by", f.group_by, "grouping column (default: direction, group or scenario)");
  report->add_option("--epsilon", f.epsilon, "scale to report (default: first in file)");
  report->add_option("--bins", f.bins)->check(CLI::PositiveNumber);
  report->add_option("--kde-samples", f.kde_samples)->check(CLI::Range(2, 100000));
  report->add_flag("--svg", f.svg, "also write SVG plots");
  add_out(report);

  auto* replay = app.add_subcommand("replay", "re-run a command from its manifest.json");
  replay->add_option("--manifest", f.manifest, "manifest.json of an earlier run")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", f.out, "output directory (default: the original one)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (workers > 0) g_workers = workers;

  try {
    std::string command;
    Json p;
    const auto parse_grid = [&]() {
      if (f.epsilon_grid.empty()) throw InvalidArgument("--epsilon-grid is empty");
      std::vector<double> g;
      for (const auto& v : f.epsilon_grid) {
        if (v.empty()) throw InvalidArgument("--epsilon-grid has an empty entry");
        g.push_back(parse_double(v));
      }
      return g;
    };
    const auto grid_or = [&](std::vector<double> fallback) { return f.epsilon_grid.empty() ? fallback : parse_grid(); };
    const auto scenarios = f.scenarios.empty() ? std::vector<int>{1, 2} : f.scenarios;
    if (simulate->parsed()) {
      command = "simulate";
      p = {{"config", scenario_config_param(f)}, {"scenarios", scenarios}, {"trials", f.trials}};
    } else if (sweep->parsed()) {
      command = "sweep";
      p = {{"config", scenario_config_param(f)}, {"scenarios", scenarios}, {"trials", f.trials}, {"svg", f.svg}};
      if (grid_opt->count() > 0) {
        p["mode"] = "epsilon";
        p["epsilon_grid"] = require_grid(parse_grid());
      } else if (dims_opt->count() > 0) {
        p["mode"] = "dims";
        p["dims"] = f.dims;
      } else if (f.dimension_grid) {
        p["mode"] = "dimension_grid";
        Json configs = Json::array();
        for (const auto& c : default_dimension_grid(p["config"]["seed"].get<std::uint64_t>())) {
          auto cj = scenario_config_to_json(c);
          cj["topic_style"] = p["config"]["topic_style"];
          configs.push_back(cj);
        }
        p["configs"] = configs;
      } else {
        throw InvalidArgument("sweep needs --epsilon-grid, --dims or --dimension-grid");
      }
    } else if (synth->parsed()) {
      command = "synth";
      p = {{"documents", f.documents},
           {"topics", f.topics},
           {"tokens_per_document", f.tokens_per_document},
           {"single_topic", f.single_topic},
           {"seed", f.seed.value_or(0)}};
    } else if (ingest->parsed()) {
      command = "ingest";
      if (!fs::is_directory(f.corpus_dir)) throw IoError("corpus directory " + f.corpus_dir + " does not exist");
      p = {{"corpus_dir", absolute(f.corpus_dir)}, {"granularities", f.granularities}, {"embedder", embedder_param(f)}};
    } else if (analyze->parsed()) {
      command = "analyze";
      p = {{"queries", absolute(f.queries)},
           {"corpus", absolute(f.corpus)},
           {"k", f.k},
           {"epsilon_grid", grid_or({0.4})},
           {"both_directions", f.both}};
    } else if (calibrate_cmd->parsed()) {
      command = "calibrate";
      p = {{"chunks", absolute(f.chunks)},
           {"embeddings", absolute(f.embeddings)},
           {"clusters", f.clusters},
           {"queries_per_group", f.queries_per_group},
           {"chunks_per_query", f.chunks_per_query},
           {"k", f.k},
           {"epsilon_grid", grid_or({0.4})},
           {"seed", f.seed.value_or(0)},
           {"embedder", embedder_param(f)}};
    } else if (report->parsed()) {
      command = "report";
      p = {{"results", absolute(f.results)},
           {"group_by", f.group_by},
           {"metrics", {"w1_h0", "lt_max_h1"}},
           {"bins", f.bins},
           {"kde_samples", f.kde_samples},
           {"svg", f.svg}};
      p["epsilon"] = f.epsilon ? Json(*f.epsilon) : Json(nullptr);
    } else if (replay->parsed()) {
      const auto manifest = Json::parse(read_file(f.manifest));
      command = manifest.at("command").get<std::string>();
      p = manifest.at("params");
      if (!f.out.empty()) p["out"] = absolute(f.out);
      execute(command, p, out);
      return kExitOk;
    }
    p["out"] = absolute(f.out);
    execute(command, p, out);
    return kExitOk;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace semtopo::cli
