#include "amtm/engine.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace amtm {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::amtm: return "amtm";
    case Scheme::centralized: return "centralized";
    case Scheme::semi_centralized: return "semi-centralized";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "amtm") return Scheme::amtm;
  if (s == "centralized") return Scheme::centralized;
  if (s == "semi-centralized" || s == "semi_centralized") return Scheme::semi_centralized;
  throw std::invalid_argument("unknown scheme: " + s);
}

void SimConfig::validate() const {
  if (network.node_count() < 2) throw std::invalid_argument("config: network too small");
  if (k_paths < 1) throw std::invalid_argument("config: k_paths must be >= 1");
  if (duration_s <= 0.0) throw std::invalid_argument("config: duration must be positive");
  if (tick_s <= 0.0) throw std::invalid_argument("config: tick must be positive");
  if (tick_s > price.nipu_interval_s + 1e-12)
    throw std::invalid_argument("config: tick must not exceed the NIPU interval");
  if (price.nipu_interval_s > te_period_s + 1e-12)
    throw std::invalid_argument("config: NIPU interval must not exceed the TE period");
  if (b_max_mbit <= 0.0) throw std::invalid_argument("config: b_max must be positive");
  if (alpha < 0.0 || alpha == 1.0)
    throw std::invalid_argument("config: alpha must be nonnegative and != 1");
  if (warmup_s >= duration_s) throw std::invalid_argument("config: warmup exceeds duration");
  if (preload_flows < 0) throw std::invalid_argument("config: negative preload");
  validate_class_table(classes);
  price.validate();
}

std::vector<Flow> make_trace(const SimConfig& cfg) {
  cfg.validate();
  FlowGenerator gen(std::max(cfg.arrival_rate_per_s, 1e-9), cfg.classes,
                    cfg.network.node_count(), cfg.alpha, cfg.seed);
  std::vector<Flow> trace;
  if (cfg.preload_flows > 0) {
    const double life = cfg.preload_duration_s < 0.0 ? cfg.duration_s + 1.0
                                                     : cfg.preload_duration_s;
    trace = gen.stationary(cfg.preload_flows, life);
  }
  if (cfg.arrival_rate_per_s > 0.0) {
    auto arrivals = gen.generate(0.0, cfg.duration_s);
    trace.insert(trace.end(), arrivals.begin(), arrivals.end());
  }
  return trace;
}

namespace {

class Engine {
 public:
  Engine(const SimConfig& cfg, const EngineHooks* hooks)
      : cfg_(cfg), hooks_(hooks), ps_(build_pathset(cfg.network, cfg.k_paths)) {
    capacity_ = cfg.network.capacities_mbps();
    link_delay_ = cfg.network.delays_s();
    st_.init(ps_);
    lambda_.assign(ps_.nlinks, cfg.initial_price);
    q_est_.assign(ps_.nlinks, 0.0);
    price_ = cfg.price;
    ncls_ = static_cast<int>(cfg.classes.size());
    group_peak_now_.assign(static_cast<size_t>(ps_.nodes) * ps_.nodes * ncls_, 0.0);
    group_demand_int_ = group_peak_now_;
    bucket_members_.resize(group_peak_now_.size());
    pending_report_ = make_report(ps_, st_);
  }

  SimReport run(const std::vector<Flow>& trace);

 private:
  int tier_of(const Flow& f) const {
    return f.qos == QosKind::delay_sensitive ? kTierHigh : kTierLow;
  }
  int bucket_of(const Flow& f) const {
    return (f.src * ps_.nodes + f.dst) * ncls_ + f.cls;
  }

  void add_rates(const Flow& f, double sign) {
    const int tier = tier_of(f);
    for (size_t i = 0; i < f.path_ids.size(); ++i)
      st_.add_injected(f.path_ids[i], tier, sign * f.rates_mbps[i]);
  }

  void rebuild_injected() {
    st_.clear_injected();
    for (int idx : active_) add_rates(flows_[idx], 1.0);
    injected_dirty_ = true;
  }

  void recompute_utility() {
    double u = 0.0;
    for (int idx : active_) u += utility_value(flows_[idx].util, flows_[idx].total_rate());
    utility_sum_ = u;
  }

  void admit(int idx, double t) {
    Flow& f = flows_[idx];
    f.status = FlowStatus::active;
    f.admit_s = t;
    active_.push_back(idx);
    departures_.push({f.admit_s + f.duration_s, idx});
    add_rates(f, 1.0);
    utility_sum_ += utility_value(f.util, f.total_rate());
    injected_dirty_ = true;
    ++period_admissions_;
    period_wait_ += f.admit_s - f.arrival_s;
  }

  void retire(int idx) {
    Flow& f = flows_[idx];
    add_rates(f, -1.0);
    utility_sum_ -= utility_value(f.util, f.total_rate());
    injected_dirty_ = true;
    f.status = FlowStatus::finished;
    auto it = std::find(active_.begin(), active_.end(), idx);
    if (it != active_.end()) {
      *it = active_.back();
      active_.pop_back();
    }
  }

  void finalize_flow(int idx, double end_t) {
    const Flow& f = flows_[idx];
    FlowRecord r;
    r.id = f.id;
    r.cls = f.cls;
    r.qos = f.qos;
    r.arrival_s = f.arrival_s;
    r.admit_s = f.admit_s;
    r.end_s = end_t;
    r.rejected = f.status == FlowStatus::rejected;
    const double life = f.admit_s >= 0.0 ? end_t - f.admit_s : 0.0;
    if (life > 0.0) {
      r.mean_rate_mbps = rate_acc_[idx] / life;
      r.queueing_delay_s = delay_acc_[idx] / life;
    }
    rep_.flows.push_back(r);
  }

  // amtm -------------------------------------------------------------------
  void amtm_admit_arrival(int idx) {
    Flow& f = flows_[idx];
    const FdtcDecision d = fdtc_allocate(f, ps_, lambda_, link_delay_, q_est_);
    if (!d.admitted) {
      f.status = FlowStatus::rejected;
      ++rep_.rejected;
      finalize_flow(idx, f.arrival_s);
      return;
    }
    f.path_ids = {d.path_id};
    f.rates_mbps = {d.rate_mbps};
    admit(idx, f.arrival_s);  // zero admission latency
  }

  void amtm_nipu(double t, int round) {
    // One NIPU interval of control-plane staleness: the update consumes the
    // report of the previous window while this window's snapshot queues up.
    const StateReport consumed = std::move(pending_report_);
    pending_report_ = make_report(ps_, st_);
    reset_window(st_);

    NipuDeepResult deep{};
    switch (price_.regime) {
      case QueueRegime::flow_based: {
        std::vector<Flow> actives = active_snapshot();
        nipu_flow_based(lambda_, actives, ps_, capacity_, price_.mu, cfg_.parallel);
        break;
      }
      case QueueRegime::shallow:
        nipu_shallow(lambda_, consumed, ps_, price_.mu, cfg_.parallel);
        break;
      case QueueRegime::deep:
        deep = nipu_deep(lambda_, consumed, ps_, capacity_, price_, cfg_.parallel);
        break;
    }

    // Queueing estimates distributed with the prices, from the same report.
    for (int e = 0; e < ps_.nlinks; ++e) {
      double r = 0.0;
      for (int i = ps_.link_seg_first[e]; i < ps_.link_seg_first[e + 1]; ++i)
        r += consumed.backlog_mbit[ps_.link_seg[i]];
      q_est_[e] = r / capacity_[e];
    }

    // Re-meter every active flow at the new prices; routing stays fixed.
    const int na = static_cast<int>(active_.size());
#pragma omp parallel for if (cfg_.parallel) schedule(static)
    for (int i = 0; i < na; ++i) {
      Flow& f = flows_[active_[i]];
      const double price = ps_.path_sum(f.path_ids[0], lambda_);
      f.rates_mbps[0] = optimal_rate(f.util, price, f.peak_mbps);
    }
    rebuild_injected();
    recompute_utility();

    const int messages = ps_.nodes + ps_.nlinks;
    period_messages_ += messages;

    NipuSample sample;
    sample.t = t;
    sample.n_gain = price_.n_gain;
    sample.w_bar_s = deep.w_bar_s;
    sample.active_flows = na;
    sample.messages = messages;
    sample.utility_instant = utility_sum_;
    sample.lambda = lambda_;
    sample.backlog_per_link_mbit.assign(ps_.nlinks, 0.0);
    for (int e = 0; e < ps_.nlinks; ++e) {
      double r = 0.0;
      for (int i = ps_.link_seg_first[e]; i < ps_.link_seg_first[e + 1]; ++i)
        r += st_.backlog_total[ps_.link_seg[i]];
      sample.backlog_per_link_mbit[e] = r;
    }
    rep_.nipu.push_back(std::move(sample));

    if (hooks_ && hooks_->after_nipu) {
      const std::vector<Flow> actives = active_snapshot();
      NipuEvent ev;
      ev.t = t;
      ev.round = round;
      ev.active = &actives;
      ev.report = &consumed;
      ev.lambda = &lambda_;
      ev.backlog_mbit = &st_.backlog_total;
      ev.n_gain = price_.n_gain;
      ev.w_bar_s = deep.w_bar_s;
      hooks_->after_nipu(ev);
    }
  }

  std::vector<Flow> active_snapshot() const {
    std::vector<Flow> v;
    v.reserve(active_.size());
    for (int idx : active_) v.push_back(flows_[idx]);
    return v;
  }

  // centralized --------------------------------------------------------------
  void centralized_boundary(double t) {
    for (int idx : pending_) admit(idx, t);
    pending_.clear();
    if (active_.empty()) return;

    std::vector<Flow> actives = active_snapshot();
    period_boundary_flows_ = static_cast<int>(actives.size());
    SolveOptions opt = cfg_.solver;
    opt.parallel = cfg_.parallel;
    opt.warm_lambda = solver_warm_;
    const CentralizedOutcome out = centralized_period(actives, ps_, capacity_, opt);
    solver_warm_ = out.solution.lambda;
    for (size_t i = 0; i < active_.size(); ++i) {
      Flow& f = flows_[active_[i]];
      f.path_ids = actives[i].path_ids;
      f.rates_mbps = actives[i].rates_mbps;
    }
    period_messages_ += out.messages;
    rebuild_injected();
    recompute_utility();
  }

  // semi-centralized ----------------------------------------------------------
  void semi_boundary(double t) {
    (void)t;
    std::vector<double> demand(group_demand_int_.size());
    for (size_t g = 0; g < demand.size(); ++g)
      demand[g] = group_demand_int_[g] / cfg_.te_period_s;
    std::fill(group_demand_int_.begin(), group_demand_int_.end(), 0.0);

    semi_alloc_ = semi_centralized_period(demand, ps_, capacity_, cfg_.classes);
    period_messages_ += semi_alloc_.messages;

    for (size_t b = 0; b < bucket_members_.size(); ++b)
      if (!bucket_members_[b].empty()) recompute_bucket(static_cast<int>(b));
    rebuild_injected();
    recompute_utility();
  }

  void semi_admit_arrival(int idx) {
    Flow& f = flows_[idx];
    const auto [first, count] = ps_.candidates(f.src, f.dst);
    if (count == 0) {
      f.status = FlowStatus::rejected;
      ++rep_.rejected;
      finalize_flow(idx, f.arrival_s);
      return;
    }
    f.path_ids.clear();
    f.rates_mbps.clear();
    admit(idx, f.arrival_s);
    const int b = bucket_of(f);
    bucket_members_[b].push_back(idx);
    group_peak_now_[b] += f.peak_mbps;
    recompute_bucket(b);
  }

  void semi_retire(int idx) {
    const Flow& f = flows_[idx];
    const int b = bucket_of(f);
    auto& members = bucket_members_[b];
    members.erase(std::find(members.begin(), members.end(), idx));
    group_peak_now_[b] -= f.peak_mbps;
    retire(idx);
    recompute_bucket(b);
  }

  // Equal split of the bucket's budget among members (same class, same peak),
  // packed onto the budgeted paths in order.
  void recompute_bucket(int b) {
    auto& members = bucket_members_[b];
    if (members.empty()) return;
    if (semi_alloc_.budgets.empty()) {
      for (int idx : members) set_flow_rates(idx, {}, {});
      return;
    }
    const auto& slots = semi_alloc_.budgets[b];
    double total_budget = 0.0;
    for (const auto& s : slots) total_budget += s.budget_mbps;
    const double share =
        std::min(flows_[members.front()].peak_mbps,
                 total_budget / static_cast<double>(members.size()));

    std::vector<double> remaining(slots.size());
    for (size_t i = 0; i < slots.size(); ++i) remaining[i] = slots[i].budget_mbps;
    for (int idx : members) {
      std::vector<int> paths;
      std::vector<double> rates;
      double need = share;
      for (size_t i = 0; i < slots.size() && need > 1e-12; ++i) {
        const double take = std::min(need, remaining[i]);
        if (take <= 0.0) continue;
        paths.push_back(slots[i].path_id);
        rates.push_back(take);
        remaining[i] -= take;
        need -= take;
      }
      set_flow_rates(idx, std::move(paths), std::move(rates));
    }
  }

  void set_flow_rates(int idx, std::vector<int> paths, std::vector<double> rates) {
    Flow& f = flows_[idx];
    if (f.status == FlowStatus::active) {
      add_rates(f, -1.0);
      utility_sum_ -= utility_value(f.util, f.total_rate());
    }
    f.path_ids = std::move(paths);
    f.rates_mbps = std::move(rates);
    if (f.status == FlowStatus::active) {
      add_rates(f, 1.0);
      utility_sum_ += utility_value(f.util, f.total_rate());
      injected_dirty_ = true;
    }
  }

  const SimConfig& cfg_;
  const EngineHooks* hooks_;
  PathSet ps_;
  std::vector<double> capacity_, link_delay_;
  LinkDynamicsState st_;
  std::vector<double> lambda_, q_est_;
  PriceUpdateConfig price_;
  StateReport pending_report_;

  std::vector<Flow> flows_;
  std::vector<int> active_;
  std::vector<double> delay_acc_, rate_acc_;
  // (flow, arrival offset into the tick): the admission tick integrates the
  // full tick, so the pre-arrival fraction is backed out once rates are final.
  std::vector<std::pair<int, double>> admit_corrections_;
  using Departure = std::pair<double, int>;
  std::priority_queue<Departure, std::vector<Departure>, std::greater<>> departures_;
  std::vector<int> pending_;  // centralized: waiting for the boundary
  std::vector<double> solver_warm_;

  int ncls_ = 0;
  std::vector<double> group_peak_now_, group_demand_int_;
  std::vector<std::vector<int>> bucket_members_;
  SemiAllocation semi_alloc_;

  bool injected_dirty_ = true;
  double utility_sum_ = 0.0;

  SimReport rep_;
  double period_utility_ = 0.0;
  long period_messages_ = 0;
  int period_admissions_ = 0;
  double period_wait_ = 0.0;
  int period_boundary_flows_ = 0;
  std::vector<double> period_served_;
};

SimReport Engine::run(const std::vector<Flow>& trace) {
  for (size_t i = 1; i < trace.size(); ++i)
    if (trace[i].arrival_s < trace[i - 1].arrival_s)
      throw std::invalid_argument("replay_flow_trace: trace not sorted by arrival");

  flows_ = trace;
  delay_acc_.assign(flows_.size(), 0.0);
  rate_acc_.assign(flows_.size(), 0.0);

  rep_.scheme = cfg_.scheme;
  rep_.duration_s = cfg_.duration_s;
  rep_.tick_s = cfg_.tick_s;
  rep_.te_period_s = cfg_.te_period_s;
  rep_.warmup_s = cfg_.warmup_s;
  rep_.nodes = ps_.nodes;
  rep_.nlinks = ps_.nlinks;
  rep_.capacity_mbps = capacity_;
  rep_.link_served_integral.assign(ps_.nlinks, 0.0);
  rep_.trace_flows = static_cast<long>(flows_.size());
  period_served_.assign(ps_.nlinks, 0.0);

  const double dt = cfg_.tick_s;
  const long ticks = std::lround(cfg_.duration_s / dt);
  const long nipu_every = std::max(1L, std::lround(cfg_.price.nipu_interval_s / dt));
  const long period_every = std::max(1L, std::lround(cfg_.te_period_s / dt));
  rep_.tick_utility.reserve(ticks);

  size_t next_arrival = 0;
  double period_t0 = 0.0;
  int nipu_round = 0;

  for (long k = 0; k < ticks; ++k) {
    const double t = static_cast<double>(k) * dt;

    // Departures due by now.
    while (!departures_.empty() && departures_.top().first <= t + 1e-12) {
      const int idx = departures_.top().second;
      departures_.pop();
      if (flows_[idx].status != FlowStatus::active) continue;
      if (cfg_.scheme == Scheme::semi_centralized)
        semi_retire(idx);
      else
        retire(idx);
      finalize_flow(idx, t);
    }

    // Control plane.
    if (cfg_.scheme == Scheme::centralized && k % period_every == 0)
      centralized_boundary(t);
    if (cfg_.scheme == Scheme::semi_centralized && k % period_every == 0)
      semi_boundary(t);
    if (cfg_.scheme == Scheme::amtm && k > 0 && k % nipu_every == 0)
      amtm_nipu(t, ++nipu_round);

    // Arrivals within [t, t+dt).
    admit_corrections_.clear();
    while (next_arrival < flows_.size() && flows_[next_arrival].arrival_s < t + dt) {
      const int idx = static_cast<int>(next_arrival++);
      switch (cfg_.scheme) {
        case Scheme::amtm: amtm_admit_arrival(idx); break;
        case Scheme::centralized: pending_.push_back(idx); break;
        case Scheme::semi_centralized: semi_admit_arrival(idx); break;
      }
      if (flows_[idx].status == FlowStatus::active &&
          flows_[idx].arrival_s > t)
        admit_corrections_.push_back({idx, flows_[idx].arrival_s - t});
    }
    for (const auto& [idx, frac] : admit_corrections_)
      rate_acc_[idx] -= flows_[idx].total_rate() * frac;

    // Data plane.
    if (price_.regime == QueueRegime::shallow && cfg_.scheme == Scheme::amtm) {
      if (injected_dirty_) {
        propagate_shallow(ps_, capacity_, st_, cfg_.parallel);
        injected_dirty_ = false;
      }
    } else {
      step_deep(ps_, capacity_, st_, dt, cfg_.b_max_mbit, cfg_.parallel);
      injected_dirty_ = false;
    }

    // Metrics.
    rep_.tick_utility.push_back(utility_sum_);
    rep_.utility_total += utility_sum_ * dt;
    period_utility_ += utility_sum_ * dt;
    for (int e = 0; e < ps_.nlinks; ++e) {
      const double served = (capacity_[e] - st_.idle_mbps[e]) * dt;
      rep_.link_served_integral[e] += served;
      period_served_[e] += served;
    }
    const int na = static_cast<int>(active_.size());
#pragma omp parallel for if (cfg_.parallel) schedule(static)
    for (int i = 0; i < na; ++i) {
      const int idx = active_[i];
      const Flow& f = flows_[idx];
      const double x = f.total_rate();
      rate_acc_[idx] += x * dt;
      const int tier = tier_of(f);
      double q = 0.0;
      for (size_t pi = 0; pi < f.path_ids.size(); ++pi) {
        const int p = f.path_ids[pi];
        double path_q = 0.0;
        for (int seg = ps_.path_seg_first[p]; seg < ps_.path_seg_first[p + 1]; ++seg)
          path_q += st_.backlog[tier][seg] / capacity_[ps_.seg_link[seg]];
        const double w = x > 0.0 ? f.rates_mbps[pi] / x
                                 : 1.0 / static_cast<double>(f.path_ids.size());
        q += w * path_q;
      }
      delay_acc_[idx] += q * dt;
    }
    if (cfg_.scheme == Scheme::semi_centralized) {
      for (size_t g = 0; g < group_peak_now_.size(); ++g)
        if (group_peak_now_[g] > 0.0) group_demand_int_[g] += group_peak_now_[g] * dt;
    }

    // Close the TE period.
    if ((k + 1) % period_every == 0 || k + 1 == ticks) {
      PeriodSample psample;
      psample.t0 = period_t0;
      psample.t1 = (k + 1) * dt;
      psample.utility_integral = period_utility_;
      double util = 0.0;
      for (int e = 0; e < ps_.nlinks; ++e)
        util += period_served_[e] / (capacity_[e] * (psample.t1 - psample.t0));
      psample.mean_utilization = util / ps_.nlinks;
      psample.messages = period_messages_;
      psample.admissions = period_admissions_;
      psample.admission_wait_sum_s = period_wait_;
      psample.active_at_end = static_cast<int>(active_.size());
      psample.boundary_flows = period_boundary_flows_;
      psample.link_served_mbit = period_served_;
      rep_.periods.push_back(std::move(psample));
      period_t0 = rep_.periods.back().t1;
      period_utility_ = 0.0;
      period_messages_ = 0;
      period_admissions_ = 0;
      period_wait_ = 0.0;
      period_boundary_flows_ = 0;
      std::fill(period_served_.begin(), period_served_.end(), 0.0);
    }
  }

  // Flows still active or still waiting at the end of the run.
  for (size_t idx = 0; idx < flows_.size(); ++idx) {
    if (flows_[idx].status == FlowStatus::active)
      finalize_flow(static_cast<int>(idx), cfg_.duration_s);
    else if (flows_[idx].status == FlowStatus::pending && idx < next_arrival)
      finalize_flow(static_cast<int>(idx), cfg_.duration_s);
  }

  rep_.peak_queue_backlog_mbit = st_.peak_backlog_mbit;
  rep_.overflow_total_mbit = st_.total_overflow_mbit();
  return rep_;
}

}  // namespace

SimReport replay_flow_trace(const SimConfig& cfg, const std::vector<Flow>& trace,
                            const EngineHooks* hooks) {
  cfg.validate();
  Engine eng(cfg, hooks);
  return eng.run(trace);
}

SimReport run(const SimConfig& cfg, const EngineHooks* hooks) {
  return replay_flow_trace(cfg, make_trace(cfg), hooks);
}

}  // namespace amtm
