#include "amtm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "amtm/baselines.hpp"
#include "amtm/csv.hpp"
#include "amtm/metrics.hpp"

namespace amtm {

namespace {

namespace fs = std::filesystem;

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

std::vector<int> pick_sample_links(int nlinks, int count, std::uint64_t seed) {
  std::vector<int> ids(nlinks);
  for (int i = 0; i < nlinks; ++i) ids[i] = i;
  std::uint64_t state = seed * 0x9e3779b97f4a7c15ull + 1;
  auto next = [&]() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return state;
  };
  for (int i = nlinks - 1; i > 0; --i) {
    const int j = static_cast<int>(next() % (i + 1));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(std::min(count, nlinks));
  std::sort(ids.begin(), ids.end());
  return ids;
}

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// Observer computing lambda_star / lambda_hat alongside the engine run.
struct ConvergenceObserver {
  const SimConfig* cfg = nullptr;
  const PathSet* ps = nullptr;
  std::vector<double> capacity;
  int oracle_every = 10;
  bool stationary = false;

  std::vector<double> lambda_star;  // latest oracle solution
  std::vector<double> lambda_hat;
  std::vector<double> star_warm, hat_warm;
  bool have_star = false;

  struct Sample {
    double t;
    std::vector<double> lambda, star, hat;
    double rel_err;
  };
  std::vector<Sample> samples;

  void on_nipu(const NipuEvent& ev) {
    if (ev.active->empty()) return;
    const bool solve_now = (ev.round - 1) % oracle_every == 0;
    SolveOptions opt;
    opt.restrict_to_chosen = true;
    opt.tol_rel = cfg->solver.tol_rel;
    opt.max_iters = cfg->solver.max_iters;
    opt.parallel = cfg->parallel;

    if (solve_now && (!stationary || !have_star)) {
      opt.warm_lambda = star_warm;
      const NumSolution sol = solve_num(*ev.active, *ps, capacity, opt);
      lambda_star = sol.lambda;
      star_warm = sol.lambda;
      have_star = true;
    }
    if (solve_now) {
      opt.warm_lambda = hat_warm.empty() ? star_warm : hat_warm;
      const NumSolution sol = solve_num_with_backlog(*ev.active, *ps, capacity,
                                                     *ev.backlog_mbit, ev.n_gain, opt);
      lambda_hat = sol.lambda;
      hat_warm = sol.lambda;
    }
    if (!have_star) return;
    Sample s;
    s.t = ev.t;
    s.lambda = *ev.lambda;
    s.star = lambda_star;
    s.hat = lambda_hat.empty() ? lambda_star : lambda_hat;
    s.rel_err = rel_error(s.lambda, s.star);
    samples.push_back(std::move(s));
  }
};

ConvergenceVariantResult run_convergence_variant(const RunConfig& rc, bool stationary,
                                                 bool write_csv, const std::string& tag) {
  RunConfig vrc = rc;
  if (stationary) {
    vrc.arrival_rate_per_s = 0.0;
    if (vrc.preload_flows <= 0) vrc.preload_flows = 800;
  } else {
    vrc.preload_flows = 0;
  }
  SimConfig cfg = to_sim_config(vrc);
  const PathSet ps = build_pathset(cfg.network, cfg.k_paths);

  ConvergenceObserver obs;
  obs.cfg = &cfg;
  obs.ps = &ps;
  obs.capacity = cfg.network.capacities_mbps();
  obs.oracle_every = std::max(1, rc.oracle_every);
  obs.stationary = stationary;

  EngineHooks hooks;
  hooks.after_nipu = [&](const NipuEvent& ev) { obs.on_nipu(ev); };
  const SimReport rep = run(cfg, &hooks);

  ConvergenceVariantResult res;
  res.samples = static_cast<int>(obs.samples.size());
  if (!obs.samples.empty()) {
    res.final_rel_error = obs.samples.back().rel_err;
    double acc = 0.0;
    for (const auto& s : obs.samples) acc += s.rel_err;
    res.mean_tracking_error = acc / obs.samples.size();
  }
  if (!rep.nipu.empty()) {
    const auto& last = rep.nipu.back().backlog_per_link_mbit;
    for (double v : last) res.max_link_backlog_mbit = std::max(res.max_link_backlog_mbit, v);
  }
  res.backlog_bounded = rep.peak_queue_backlog_mbit < cfg.b_max_mbit;

  if (write_csv) {
    ensure_dir(rc.out_dir);
    const auto links = pick_sample_links(rep.nlinks, rc.sample_links, rc.seed);
    {
      CsvWriter w(rc.out_dir + "/prices_" + tag + ".csv",
                  {"t_s", "link", "lambda", "lambda_hat", "lambda_star", "rel_err"});
      for (const auto& s : obs.samples)
        for (int e : links)
          w.cell(s.t).cell(long(e)).cell(s.lambda[e]).cell(s.hat[e]).cell(s.star[e])
              .cell(s.rel_err), w.end_row();
    }
    {
      CsvWriter w(rc.out_dir + "/backlogs_" + tag + ".csv",
                  {"t_s", "link", "backlog_mbit"});
      for (const auto& ns : rep.nipu)
        for (int e : links)
          w.cell(ns.t).cell(long(e)).cell(ns.backlog_per_link_mbit[e]), w.end_row();
    }
    {
      CsvWriter w(rc.out_dir + "/summary_" + tag + ".csv",
                  {"final_rel_err", "mean_tracking_err", "max_link_backlog_mbit",
                   "peak_queue_backlog_mbit", "overflow_mbit", "samples"});
      w.cell(res.final_rel_error)
          .cell(res.mean_tracking_error)
          .cell(res.max_link_backlog_mbit)
          .cell(rep.peak_queue_backlog_mbit)
          .cell(rep.overflow_total_mbit)
          .cell(long(res.samples));
      w.end_row();
    }
  }
  return res;
}

int count_increases(const std::vector<double>& v, double rel_tol) {
  int inversions = 0;
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1] * (1.0 + rel_tol) + 1e-12) ++inversions;
  return inversions;
}

}  // namespace

ConvergenceResult cmd_convergence(const RunConfig& rc, bool write_csv) {
  ConvergenceResult res;
  res.stationary = run_convergence_variant(rc, true, write_csv, "stationary");
  res.dynamic = run_convergence_variant(rc, false, write_csv, "dynamic");
  return res;
}

NSweepResult cmd_n_sweep(const RunConfig& rc, bool write_csv) {
  if (rc.n_grid.empty()) throw std::invalid_argument("n-sweep: empty n grid");
  NSweepResult res;
  res.n_values = rc.n_grid;
  std::sort(res.n_values.begin(), res.n_values.end());
  res.mean_delay_s.resize(res.n_values.size());
  res.total_utility.resize(res.n_values.size());

  const SimConfig base = to_sim_config(rc);
  const std::vector<Flow> trace = make_trace(base);

  const int npts = static_cast<int>(res.n_values.size());
#pragma omp parallel for if (base.parallel) schedule(dynamic)
  for (int i = 0; i < npts; ++i) {
    SimConfig cfg = base;
    cfg.price.adaptive_n = false;
    cfg.price.n_gain = res.n_values[i];
    cfg.parallel = false;  // one engine per sweep point
    const SimReport rep = replay_flow_trace(cfg, trace);
    res.mean_delay_s[i] = queueing_delay_stats(rep, false, cfg.warmup_s).mean_s;
    res.total_utility[i] = network_utility_integral(rep, cfg.warmup_s);
  }
  res.delay_inversions = count_increases(res.mean_delay_s, 1e-3);
  res.utility_inversions = count_increases(res.total_utility, 1e-3);

  // Adaptive run.
  SimConfig cfg = base;
  cfg.price.adaptive_n = true;
  const SimReport arep = replay_flow_trace(cfg, trace);
  std::vector<double> wbars;
  for (const auto& s : arep.nipu) {
    res.adaptive_n_trace.push_back(s.n_gain);
    wbars.push_back(s.w_bar_s);
  }
  if (!wbars.empty()) {
    const size_t tail = std::max<size_t>(1, wbars.size() / 4);
    double acc = 0.0;
    for (size_t i = wbars.size() - tail; i < wbars.size(); ++i) acc += wbars[i];
    res.adaptive_terminal_w_bar_s = acc / tail;
  }

  if (write_csv) {
    ensure_dir(rc.out_dir);
    {
      CsvWriter w(rc.out_dir + "/n_sweep.csv",
                  {"n", "mean_queueing_s", "total_utility", "monotone_delay",
                   "monotone_utility"});
      for (size_t i = 0; i < res.n_values.size(); ++i) {
        w.cell(res.n_values[i])
            .cell(res.mean_delay_s[i])
            .cell(res.total_utility[i])
            .cell(std::string(res.delay_inversions <= 1 ? "pass" : "fail"))
            .cell(std::string(res.utility_inversions <= 1 ? "pass" : "fail"));
        w.end_row();
      }
    }
    {
      CsvWriter w(rc.out_dir + "/n_adaptive.csv", {"t_s", "n", "w_bar_s"});
      for (const auto& s : arep.nipu)
        w.cell(s.t).cell(s.n_gain).cell(s.w_bar_s), w.end_row();
    }
  }
  return res;
}

const CompareRow& CompareResult::row(double intensity, Scheme s) const {
  for (const auto& r : rows)
    if (r.intensity == intensity && r.scheme == s) return r;
  throw std::out_of_range("compare row not found");
}

CompareResult cmd_compare(const RunConfig& rc, bool write_csv) {
  if (rc.intensity_grid.empty()) throw std::invalid_argument("compare: empty intensity grid");
  CompareResult res;
  const Scheme schemes[] = {Scheme::centralized, Scheme::amtm, Scheme::semi_centralized};

  struct Point {
    double intensity;
    Scheme scheme;
  };
  std::vector<Point> points;
  for (double inten : rc.intensity_grid)
    for (Scheme s : schemes) points.push_back({inten, s});

  std::vector<CompareRow> rows(points.size());
  std::vector<std::vector<long>> msg_series(points.size());
  std::vector<std::vector<int>> msg_flows(points.size());

  const int npts = static_cast<int>(points.size());
#pragma omp parallel for if (rc.parallel) schedule(dynamic)
  for (int i = 0; i < npts; ++i) {
    SimConfig cfg = to_sim_config(rc);
    cfg.arrival_rate_per_s = points[i].intensity;
    cfg.scheme = points[i].scheme;
    cfg.parallel = false;  // one engine per sweep point
    const std::vector<Flow> trace = make_trace(cfg);  // identical across schemes
    const SimReport rep = replay_flow_trace(cfg, trace);

    CompareRow row;
    row.intensity = points[i].intensity;
    row.scheme = points[i].scheme;
    row.mean_utilization = link_utilization(rep, cfg.warmup_s).mean;
    row.utility_total = network_utility_integral(rep, cfg.warmup_s);
    row.utility_time_avg = row.utility_total / (cfg.duration_s - cfg.warmup_s);
    row.delay_mean_all_s = queueing_delay_stats(rep, false, cfg.warmup_s).mean_s;
    row.delay_mean_sensitive_s = queueing_delay_stats(rep, true, cfg.warmup_s).mean_s;
    row.admission_wait_mean_s = mean_admission_wait(rep, cfg.warmup_s);
    row.trace_flows = rep.trace_flows;
    if (points[i].scheme == Scheme::amtm) {
      row.messages_per_round = rep.nodes + rep.nlinks;
    } else {
      double acc = 0.0;
      int cnt = 0;
      for (const auto& p : rep.periods) {
        if (p.t0 < cfg.warmup_s) continue;
        acc += p.messages;
        ++cnt;
      }
      row.messages_per_round = cnt > 0 ? acc / cnt : 0.0;
    }
    rows[i] = row;
    for (const auto& p : rep.periods) {
      msg_series[i].push_back(p.messages);
      msg_flows[i].push_back(p.boundary_flows);
    }
  }
  res.rows = rows;

  if (write_csv) {
    ensure_dir(rc.out_dir);
    {
      CsvWriter w(rc.out_dir + "/compare.csv",
                  {"intensity_per_s", "scheme", "mean_utilization", "utility_total",
                   "utility_time_avg", "delay_mean_all_s", "delay_mean_sensitive_s",
                   "admission_wait_mean_s", "messages_per_round", "trace_flows"});
      for (const auto& r : res.rows) {
        w.cell(r.intensity)
            .cell(to_string(r.scheme))
            .cell(r.mean_utilization)
            .cell(r.utility_total)
            .cell(r.utility_time_avg)
            .cell(r.delay_mean_all_s)
            .cell(r.delay_mean_sensitive_s)
            .cell(r.admission_wait_mean_s)
            .cell(r.messages_per_round)
            .cell(r.trace_flows);
        w.end_row();
      }
    }
    {
      CsvWriter w(rc.out_dir + "/compare_messages.csv",
                  {"intensity_per_s", "scheme", "period", "messages", "boundary_flows"});
      for (int i = 0; i < npts; ++i)
        for (size_t k = 0; k < msg_series[i].size(); ++k) {
          w.cell(points[i].intensity)
              .cell(to_string(points[i].scheme))
              .cell(long(k))
              .cell(msg_series[i][k])
              .cell(long(msg_flows[i][k]));
          w.end_row();
        }
    }
  }
  return res;
}

SimReport cmd_single(const RunConfig& rc, bool write_csv) {
  const SimConfig cfg = to_sim_config(rc);
  const SimReport rep = run(cfg);
  if (write_csv) {
    ensure_dir(rc.out_dir);
    if (rc.topology_file.empty()) {
      std::ofstream topo(rc.out_dir + "/topology.json");
      topo << to_topology_json(cfg.network);
    }
    {
      CsvWriter w(rc.out_dir + "/periods.csv",
                  {"t0_s", "t1_s", "utility_integral", "mean_utilization", "messages",
                   "admissions", "admission_wait_sum_s", "active_at_end"});
      for (const auto& p : rep.periods) {
        w.cell(p.t0).cell(p.t1).cell(p.utility_integral).cell(p.mean_utilization)
            .cell(p.messages).cell(long(p.admissions)).cell(p.admission_wait_sum_s)
            .cell(long(p.active_at_end));
        w.end_row();
      }
    }
    {
      CsvWriter w(rc.out_dir + "/nipu.csv",
                  {"t_s", "n", "w_bar_s", "active_flows", "messages", "utility"});
      for (const auto& s : rep.nipu) {
        w.cell(s.t).cell(s.n_gain).cell(s.w_bar_s).cell(long(s.active_flows))
            .cell(long(s.messages)).cell(s.utility_instant);
        w.end_row();
      }
    }
    {
      CsvWriter w(rc.out_dir + "/flows.csv",
                  {"id", "class", "qos", "arrival_s", "admit_s", "end_s",
                   "mean_rate_mbps", "queueing_delay_s", "rejected"});
      for (const auto& f : rep.flows) {
        w.cell(long(f.id))
            .cell(long(f.cls))
            .cell(std::string(f.qos == QosKind::delay_sensitive ? "delay_sensitive"
                                                                : "delay_tolerant"))
            .cell(f.arrival_s)
            .cell(f.admit_s)
            .cell(f.end_s)
            .cell(f.mean_rate_mbps)
            .cell(f.queueing_delay_s)
            .cell(long(f.rejected ? 1 : 0));
        w.end_row();
      }
    }
    {
      CsvWriter w(rc.out_dir + "/summary.csv",
                  {"scheme", "duration_s", "utility_total", "peak_queue_backlog_mbit",
                   "overflow_mbit", "rejected", "trace_flows"});
      w.cell(to_string(rep.scheme))
          .cell(rep.duration_s)
          .cell(rep.utility_total)
          .cell(rep.peak_queue_backlog_mbit)
          .cell(rep.overflow_total_mbit)
          .cell(rep.rejected)
          .cell(rep.trace_flows);
      w.end_row();
    }
  }
  return rep;
}

}  // namespace amtm
