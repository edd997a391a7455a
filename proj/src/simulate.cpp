#include "cran/simulate.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>

namespace cran::sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// per-purpose streams of one replication
constexpr std::uint64_t kArrivalSalt = 0xA5A5A5A5ULL;
constexpr std::uint64_t kContentSalt = 0x5C5C5C5CULL;
constexpr std::uint64_t kServiceSalt = 0x3E3E3E3EULL;
constexpr std::uint64_t kRouteSalt = 0x7D7D7D7DULL;

double t_quantile_975(int dof) {
  if (dof < 1) return kInf;
  return boost::math::quantile(boost::math::students_t(dof), 0.975);
}

Interval interval_of(const std::vector<double>& values) {
  Interval iv;
  const auto n = static_cast<int>(values.size());
  if (n == 0) return iv;
  iv.value = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (n < 2) {
    iv.half_width = kInf;
    iv.std_error = kInf;
    return iv;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - iv.value) * (v - iv.value);
  iv.std_error = std::sqrt(ss / (n - 1) / n);
  iv.half_width = t_quantile_975(n - 1) * iv.std_error;
  return iv;
}

// Batch-means interval for a per-batch statistic.
template <class F>
Interval batch_means(const std::vector<BatchRecord>& batches, F stat) {
  const std::size_t n = batches.size();
  if (n == 0) return {};
  const std::size_t groups = std::min<std::size_t>(kBatchMeansGroups, n);
  std::vector<double> means;
  means.reserve(groups);
  double total = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t lo = g * n / groups, hi = (g + 1) * n / groups;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += stat(batches[i]);
    total += s;
    means.push_back(s / static_cast<double>(hi - lo));
  }
  Interval iv = interval_of(means);
  iv.value = total / static_cast<double>(n);
  return iv;
}

enum class EventKind { Arrival, CoreDone, PsDone, Deadline };

struct Event {
  double t;
  std::uint64_t seq;
  EventKind kind;
  int a;           // source / pool / batch slot
  int b;           // core
  std::uint64_t tag;  // generation or batch id

  bool operator>(const Event& o) const { return t != o.t ? t > o.t : seq > o.seq; }
};

struct Job {
  int batch = -1;
  double work = 0.0;     // service requirement, ms at unit speed
  double residual = 0.0; // processor sharing only
  double arrival = 0.0;
  double virtual_join = 0.0;
  int pool = 0;
  int core = -1;         // -1 while waiting
  int ps_index = -1;
  bool cancelled = false;
};

struct Batch {
  std::uint64_t id = 0;
  double arrival = 0.0;
  int remaining = 0;
  int record = -1;  // index into metrics.batches, -1 when not observed
  bool observed_jobs = false;
  std::vector<int> jobs;
};

struct Pool {
  int cores = 0;
  std::vector<int> running;            // job slot per core, -1 idle
  std::vector<std::uint64_t> generation;
  std::vector<int> idle;               // stack of idle cores
  std::deque<int> fifo;                // waiting job slots (may hold cancelled ones)
  int waiting_live = 0;
};

template <class T>
class SlotPool {
 public:
  int acquire() {
    if (!free_.empty()) {
      int s = free_.back();
      free_.pop_back();
      items_[s] = T{};
      return s;
    }
    items_.emplace_back();
    return static_cast<int>(items_.size()) - 1;
  }
  void release(int s) { free_.push_back(s); }
  T& operator[](int s) { return items_[s]; }

 private:
  std::vector<T> items_;
  std::vector<int> free_;
};

class Engine {
 public:
  Engine(const SimConfig& cfg, std::uint64_t seed)
      : cfg_(cfg),
        horizon_(cfg.horizon_ms),
        warmup_(cfg.warmup()),
        arrival_rng_(splitmix64(seed ^ kArrivalSalt)),
        content_rng_(splitmix64(seed ^ kContentSalt)),
        service_rng_(splitmix64(seed ^ kServiceSalt)),
        route_rng_(splitmix64(seed ^ kRouteSalt)) {
    const SystemSpec& sys = cfg.system;
    ps_ = std::holds_alternative<ProcessorSharing>(sys.discipline);
    if (const auto* d = std::get_if<Dedicated>(&sys.discipline)) {
      for (int c : d->partition) add_pool(c);
    } else if (!ps_) {
      add_pool(sys.cores);
    }
    if (const auto* dl = std::get_if<BatchDeadline>(&sys.impatience)) deadline_ = dl->deadline_ms;
    total_cores_ = sys.cores;
    radio_ = std::get_if<RadioWorkload>(&cfg.workload);
    workload_ = std::get_if<WorkloadSpec>(&cfg.workload);
  }

  SimMetrics run() {
    schedule_first_arrivals();
    while (!events_.empty()) {
      const Event ev = events_.top();
      events_.pop();
      if (ev.kind == EventKind::PsDone && ev.tag != ps_generation_) continue;  // superseded
      advance(ev.t);
      switch (ev.kind) {
        case EventKind::Arrival: on_arrival(ev); break;
        case EventKind::CoreDone: on_core_done(ev); break;
        case EventKind::PsDone: on_ps_done(); break;
        case EventKind::Deadline: on_deadline(ev); break;
      }
      if (ps_) ps_reschedule();
      audit();
    }
    return finish();
  }

 private:
  // -- setup --------------------------------------------------------------

  void add_pool(int cores) {
    Pool p;
    p.cores = cores;
    p.running.assign(cores, -1);
    p.generation.assign(cores, 0);
    for (int c = cores - 1; c >= 0; --c) p.idle.push_back(c);
    pools_.push_back(std::move(p));
  }

  void push(double t, EventKind kind, int a = 0, int b = 0, std::uint64_t tag = 0) {
    events_.push(Event{t, seq_++, kind, a, b, tag});
  }

  void schedule_first_arrivals() {
    if (radio_ && cfg_.radio_arrivals == RadioArrivals::TtiClock) {
      std::uniform_real_distribution<double> phase(0.0, radio_->tti_ms);
      for (int cell = 0; cell < radio_->n_cells; ++cell) {
        const double t = phase(arrival_rng_);
        if (t < horizon_) push(t, EventKind::Arrival, cell);
      }
      return;
    }
    const double t = next_poisson_gap();
    if (t < horizon_) push(t, EventKind::Arrival, 0);
  }

  double next_poisson_gap() {
    const double rate = radio_ ? radio_->n_cells / radio_->tti_ms : workload_->arrival_rate;
    std::exponential_distribution<double> gap(rate);
    return gap(arrival_rng_);
  }

  // -- time accounting ----------------------------------------------------

  void advance(double t) {
    const double lo = std::max(now_, warmup_), hi = std::min(t, horizon_);
    if (hi > lo) {
      const double dt = hi - lo;
      busy_integral_ += busy_capacity() * dt;
      jobs_integral_ += static_cast<double>(jobs_in_system_) * dt;
      if (occupancy_.size() <= static_cast<std::size_t>(jobs_in_system_)) occupancy_.resize(jobs_in_system_ + 1, 0.0);
      occupancy_[jobs_in_system_] += dt;
    }
    if (ps_) ps_advance(t);
    now_ = t;
  }

  double busy_capacity() const {
    if (ps_) return ps_jobs_.empty() ? 0.0 : static_cast<double>(total_cores_);
    int busy = 0;
    for (const Pool& p : pools_) busy += p.cores - static_cast<int>(p.idle.size());
    return busy;
  }

  // -- arrivals -----------------------------------------------------------

  std::vector<double> draw_job_works() {
    std::vector<double> works;
    if (workload_) {
      const int b = workload_->batch.sample(content_rng_);
      std::exponential_distribution<double> service(workload_->service_rate);
      works.reserve(b);
      for (int i = 0; i < b; ++i) works.push_back(service(service_rng_));
      return works;
    }
    const auto tbs = sample_subframe(*radio_, content_rng_);
    const auto bits = decompose(tbs, radio_->parallelism, radio_->cb_max_bits);
    std::exponential_distribution<double> unit(1.0);
    works.reserve(bits.size());
    for (auto b : bits) {
      double w = radio_->per_job_overhead_ms + static_cast<double>(b) / radio_->decode_rate_bits_per_ms;
      if (radio_->noise == ServiceNoise::Exponential) w *= unit(service_rng_);
      works.push_back(w);
    }
    return works;
  }

  int route(int source) {
    if (pools_.size() <= 1) return 0;
    if (radio_) {
      // TTI clock: source is the cell; Poisson radio: draw a cell uniformly
      int cell = source;
      if (cfg_.radio_arrivals == RadioArrivals::Poisson) {
        std::uniform_int_distribution<int> pick(0, radio_->n_cells - 1);
        cell = pick(route_rng_);
      }
      return cell % static_cast<int>(pools_.size());
    }
    // single source: thin proportionally to partition size
    std::uniform_int_distribution<int> pick(0, total_cores_ - 1);
    int core = pick(route_rng_);
    for (std::size_t p = 0; p < pools_.size(); ++p) {
      if (core < pools_[p].cores) return static_cast<int>(p);
      core -= pools_[p].cores;
    }
    return static_cast<int>(pools_.size()) - 1;
  }

  void on_arrival(const Event& ev) {
    // next arrival of this source
    const double next = radio_ && cfg_.radio_arrivals == RadioArrivals::TtiClock ? now_ + radio_->tti_ms
                                                                                : now_ + next_poisson_gap();
    if (next < horizon_) push(next, EventKind::Arrival, ev.a);

    std::vector<double> works = draw_job_works();
    const int pool = route(ev.a);
    const bool observed = now_ >= warmup_ && now_ < horizon_;

    const int slot = batches_.acquire();
    Batch& batch = batches_[slot];
    batch.id = next_batch_id_++;
    batch.arrival = now_;
    batch.remaining = static_cast<int>(works.size());
    batch.observed_jobs = observed;
    if (observed) {
      batch.record = static_cast<int>(records_.size());
      records_.push_back(BatchRecord{now_, 0.0, false});
      observed_jobs_ += static_cast<std::uint64_t>(works.size());
      for (double w : works) observed_work_ += w;
    }
    batch.jobs.reserve(works.size());

    if (deadline_) push(now_ + *deadline_, EventKind::Deadline, slot, 0, batch.id);

    for (double w : works) {
      const int j = jobs_.acquire();
      Job& job = jobs_[j];
      job.batch = slot;
      job.work = w;
      job.residual = w;
      job.arrival = now_;
      job.pool = pool;
      batches_[slot].jobs.push_back(j);
      ++jobs_in_system_;
      if (ps_) {
        job.virtual_join = ps_virtual_;
        job.ps_index = static_cast<int>(ps_jobs_.size());
        ps_jobs_.push_back(j);
      } else {
        pools_[pool].fifo.push_back(j);
        ++pools_[pool].waiting_live;
      }
    }
    if (!ps_) dispatch(pool);
  }

  // -- greedy FCFS pools ---------------------------------------------------

  void dispatch(int p) {
    Pool& pool = pools_[p];
    while (!pool.idle.empty() && !pool.fifo.empty()) {
      const int j = pool.fifo.front();
      pool.fifo.pop_front();
      if (jobs_[j].cancelled) {
        release_job(j);
        continue;
      }
      --pool.waiting_live;
      const int core = pool.idle.back();
      pool.idle.pop_back();
      pool.running[core] = j;
      jobs_[j].core = core;
      push(now_ + jobs_[j].work, EventKind::CoreDone, p, core, ++pool.generation[core]);
    }
  }

  void on_core_done(const Event& ev) {
    Pool& pool = pools_[ev.a];
    if (pool.generation[ev.b] != ev.tag || pool.running[ev.b] < 0) return;  // cancelled
    const int j = pool.running[ev.b];
    pool.running[ev.b] = -1;
    pool.idle.push_back(ev.b);
    finish_job(j);
    dispatch(ev.a);
  }

  // -- processor sharing ---------------------------------------------------

  void ps_advance(double t) {
    if (ps_jobs_.empty() || t <= now_) return;
    const double share = (t - now_) * total_cores_ / static_cast<double>(ps_jobs_.size());
    ps_virtual_ += share;
    for (int j : ps_jobs_) jobs_[j].residual -= share;
  }

  void ps_reschedule() {
    ++ps_generation_;
    if (ps_jobs_.empty()) return;
    double least = kInf;
    for (int j : ps_jobs_) least = std::min(least, jobs_[j].residual);
    const double dt = std::max(0.0, least) * static_cast<double>(ps_jobs_.size()) / total_cores_;
    push(now_ + dt, EventKind::PsDone, 0, 0, ps_generation_);
  }

  void ps_remove(int j) {
    const int idx = jobs_[j].ps_index;
    const int last = ps_jobs_.back();
    ps_jobs_[idx] = last;
    jobs_[last].ps_index = idx;
    ps_jobs_.pop_back();
    jobs_[j].ps_index = -1;
  }

  void on_ps_done() {
    if (ps_jobs_.empty()) return;
    int best = ps_jobs_.front();
    for (int j : ps_jobs_)
      if (jobs_[j].residual < jobs_[best].residual) best = j;
    jobs_[best].residual = 0.0;
    ps_remove(best);
    finish_job(best);
  }

  // -- completion and reneging --------------------------------------------

  void finish_job(int j) {
    const int slot = jobs_[j].batch;
    --jobs_in_system_;
    if (batches_[slot].observed_jobs) observed_job_time_ += now_ - jobs_[j].arrival;
    release_job(j);
    Batch& batch = batches_[slot];
    if (--batch.remaining == 0) complete_batch(slot);
  }

  void release_job(int j) {
    jobs_[j].batch = -1;
    jobs_.release(j);
  }

  void complete_batch(int slot) {
    Batch& batch = batches_[slot];
    if (batch.record >= 0) records_[batch.record].sojourn_ms = now_ - batch.arrival;
    batch.remaining = 0;
    batch.jobs.clear();
    batches_.release(slot);
  }

  void on_deadline(const Event& ev) {
    Batch& batch = batches_[ev.a];
    if (batch.id != ev.tag || batch.remaining == 0) return;
    std::vector<int> touched;
    for (int j : batch.jobs) {
      Job& job = jobs_[j];
      if (job.batch != ev.a || job.cancelled) continue;
      if (ps_) {
        if (job.ps_index < 0) continue;
        ps_remove(j);
      } else if (job.core >= 0) {
        Pool& pool = pools_[job.pool];
        if (pool.running[job.core] != j) continue;
        pool.running[job.core] = -1;
        ++pool.generation[job.core];
        pool.idle.push_back(job.core);
        touched.push_back(job.pool);
      } else {
        --pools_[job.pool].waiting_live;
        touched.push_back(job.pool);
      }
      --jobs_in_system_;
      if (batch.observed_jobs) observed_job_time_ += now_ - job.arrival;
      if (ps_ || job.core >= 0) {
        release_job(j);
      } else {
        job.cancelled = true;  // released lazily when popped from the FIFO
      }
    }
    if (batch.record >= 0) {
      records_[batch.record].sojourn_ms = now_ - batch.arrival;
      records_[batch.record].reneged = true;
    }
    batch.remaining = 0;
    batch.jobs.clear();
    batches_.release(ev.a);
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (int p : touched) dispatch(p);
  }

  // -- audits ---------------------------------------------------------------

  void audit() {
    if (ps_) {
      for (int j : ps_jobs_) {
        const Job& job = jobs_[j];
        const double attained = job.work - job.residual;
        ps_fairness_error_ = std::max(ps_fairness_error_, std::abs(attained - (ps_virtual_ - job.virtual_join)));
      }
      return;
    }
    for (const Pool& p : pools_)
      if (!p.idle.empty() && p.waiting_live > 0) ++violations_;
  }

  SimMetrics finish() {
    SimMetrics m;
    m.batches = std::move(records_);
    m.batches_observed = m.batches.size();
    std::size_t reneged = 0;
    for (const auto& b : m.batches) reneged += b.reneged ? 1 : 0;
    m.reneged_fraction = m.batches.empty() ? 0.0 : static_cast<double>(reneged) / m.batches.size();
    m.window_ms = horizon_ - warmup_;
    m.core_utilization = busy_integral_ / (total_cores_ * m.window_ms);
    m.mean_jobs_in_system = jobs_integral_ / m.window_ms;
    m.job_arrival_rate = static_cast<double>(observed_jobs_) / m.window_ms;
    m.mean_job_sojourn = observed_jobs_ == 0 ? 0.0 : observed_job_time_ / static_cast<double>(observed_jobs_);
    m.occupancy = std::move(occupancy_);
    for (double& v : m.occupancy) v /= m.window_ms;
    m.work_conservation_violations = violations_;
    m.ps_fairness_max_error = ps_fairness_error_;
    if (workload_) {
      m.offered_load = offered_load(*workload_, total_cores_).rho;
    } else {
      m.offered_load = observed_work_ / (total_cores_ * m.window_ms);
    }
    m.unstable = !(m.offered_load < 1.0);
    return m;
  }

  const SimConfig& cfg_;
  double horizon_, warmup_;
  Rng arrival_rng_, content_rng_, service_rng_, route_rng_;
  const RadioWorkload* radio_ = nullptr;
  const WorkloadSpec* workload_ = nullptr;
  std::optional<double> deadline_;
  bool ps_ = false;
  int total_cores_ = 0;

  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;

  std::vector<Pool> pools_;
  std::vector<int> ps_jobs_;
  double ps_virtual_ = 0.0;
  std::uint64_t ps_generation_ = 0;

  SlotPool<Job> jobs_;
  SlotPool<Batch> batches_;
  std::uint64_t next_batch_id_ = 1;
  std::vector<BatchRecord> records_;

  std::int64_t jobs_in_system_ = 0;
  double busy_integral_ = 0.0, jobs_integral_ = 0.0;
  std::vector<double> occupancy_;
  std::uint64_t observed_jobs_ = 0;
  double observed_job_time_ = 0.0, observed_work_ = 0.0;
  std::uint64_t violations_ = 0;
  double ps_fairness_error_ = 0.0;
};

}  // namespace

void SimConfig::validate() const {
  if (!(horizon_ms > 0.0) || !std::isfinite(horizon_ms)) throw ValidationError("horizon must be > 0");
  const double w = warmup();
  if (!(w >= 0.0) || !(horizon_ms > w)) throw ValidationError("need horizon > warmup >= 0");
  if (replications < 1) throw ValidationError("replications must be >= 1");
  if (const auto* r = std::get_if<RadioWorkload>(&workload)) r->validate();
}

Interval SimMetrics::exceedance(double x) const {
  return batch_means(batches, [x](const BatchRecord& b) { return b.reneged || b.sojourn_ms > x ? 1.0 : 0.0; });
}

Interval SimMetrics::mean_sojourn() const {
  return batch_means(batches, [](const BatchRecord& b) { return b.sojourn_ms; });
}

double SimMetrics::quantile(double p) const {
  if (batches.empty()) return 0.0;
  std::vector<double> xs;
  xs.reserve(batches.size());
  for (const auto& b : batches) xs.push_back(b.reneged ? kInf : b.sojourn_ms);
  const auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(xs.size()))) - 1;
  const auto idx = std::min(k, xs.size() - 1);
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(idx), xs.end());
  return xs[idx];
}

std::vector<std::pair<double, double>> SimMetrics::empirical_cdf(std::size_t max_points) const {
  std::vector<double> xs;
  for (const auto& b : batches)
    if (!b.reneged) xs.push_back(b.sojourn_ms);
  std::sort(xs.begin(), xs.end());
  std::vector<std::pair<double, double>> cdf;
  if (xs.empty() || max_points == 0) return cdf;
  const double n_total = static_cast<double>(batches.size());
  const std::size_t points = std::min(max_points, xs.size());
  for (std::size_t i = 1; i <= points; ++i) {
    const std::size_t rank = i * xs.size() / points;  // 1-based rank of the last sample counted
    cdf.emplace_back(xs[rank - 1], static_cast<double>(rank) / n_total);
  }
  return cdf;
}

analytic::SojournTail SimMetrics::tail(const std::vector<double>& grid) const {
  analytic::SojournTail t;
  t.grid = grid;
  t.method = analytic::TailMethod::MonteCarlo;
  for (double x : grid) t.survival.push_back(exceedance(x).value);
  return t;
}

SimMetrics run(const SimConfig& config) {
  config.validate();
  Engine engine(config, config.seed);
  return engine.run();
}

std::vector<ModeMetrics> run_radio(const SimConfig& config) {
  if (!std::holds_alternative<RadioWorkload>(config.workload))
    throw ValidationError("run_radio needs a radio workload");
  std::vector<ModeMetrics> out;
  for (auto mode : {Parallelism::Subframe, Parallelism::PerUE, Parallelism::PerCB}) {
    SimConfig c = config;
    std::get<RadioWorkload>(c.workload).parallelism = mode;
    out.push_back({mode, run(c)});
  }
  return out;
}

SimMetrics run_impatient(const SimConfig& config) {
  if (!std::holds_alternative<BatchDeadline>(config.system.impatience))
    throw ValidationError("run_impatient needs a BatchDeadline impatience policy");
  return run(config);
}

std::uint64_t replication_seed(std::uint64_t base, int index) {
  return splitmix64(base + static_cast<std::uint64_t>(index) * 0x9E3779B97F4A7C15ULL);
}

namespace {

std::vector<SimConfig> replication_configs(const SimConfig& config) {
  config.validate();
  if (config.replications < 2) throw ValidationError("replicate needs replications >= 2");
  std::vector<SimConfig> cfgs;
  std::set<std::uint64_t> seen;
  for (int i = 0; i < config.replications; ++i) {
    SimConfig c = config;
    c.seed = replication_seed(config.seed, i);
    if (!seen.insert(c.seed).second) throw std::logic_error("replication seeds collided");
    cfgs.push_back(std::move(c));
  }
  return cfgs;
}

template <class F>
Interval across(const std::vector<SimMetrics>& runs, F stat) {
  std::vector<double> v;
  v.reserve(runs.size());
  for (const auto& r : runs) v.push_back(stat(r));
  return interval_of(v);
}

}  // namespace

ReplicatedMetrics replicate_serial(const SimConfig& config) {
  const auto cfgs = replication_configs(config);
  ReplicatedMetrics out;
  for (const auto& c : cfgs) out.runs.push_back(run(c));
  return out;
}

ReplicatedMetrics replicate(const SimConfig& config) {
  const auto cfgs = replication_configs(config);
  ReplicatedMetrics out;
  out.runs.resize(cfgs.size());
  const int n = static_cast<int>(cfgs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) out.runs[i] = run(cfgs[i]);
  return out;
}

Interval ReplicatedMetrics::exceedance(double x) const {
  return across(runs, [x](const SimMetrics& m) { return m.exceedance(x).value; });
}
Interval ReplicatedMetrics::p99() const {
  return across(runs, [](const SimMetrics& m) { return m.p99(); });
}
Interval ReplicatedMetrics::mean_sojourn() const {
  return across(runs, [](const SimMetrics& m) { return m.mean_sojourn().value; });
}
Interval ReplicatedMetrics::reneged_fraction() const {
  return across(runs, [](const SimMetrics& m) { return m.reneged_fraction; });
}
Interval ReplicatedMetrics::core_utilization() const {
  return across(runs, [](const SimMetrics& m) { return m.core_utilization; });
}

}  // namespace cran::sim
