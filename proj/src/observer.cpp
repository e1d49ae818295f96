/* Copyright 2026 the amtbench authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "amtbench/observer.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>

#include "amtbench/clock.hpp"
#include "amtbench/errors.hpp"

namespace amt {

Observer::Observer(EnergyConfig energy, int num_localities,
                   LocalityTimeSource time_source)
    : num_localities_(num_localities),
      time_source_(std::move(time_source)),
      energy_(std::move(energy)) {
  if (num_localities_ < 1)
    throw ConfigError("observer needs at least one locality");
  if (!time_source_)
    throw ConfigError(
        "observer needs a locality time source (model energy fallback)");
}

Observer::~Observer() {
  {
    std::lock_guard<std::mutex> g(control_m_);
    control_stop_ = true;
  }
  control_cv_.notify_all();
  if (control_thread_.joinable()) control_thread_.join();
}

// ---------------------------------------------------------------------------
// Synchronous timers

void Observer::record_timer(const TimerEvent& event) {
  TimerShard& shard = timer_shards_[event.task_id % kTimerShards];

  auto sequencing_error = [&](const char* what) {
    const auto n = sequencing_errors_.fetch_add(1);
    if (n < 10)
      std::cerr << "amtbench: timer sequencing error: " << what << " (task "
                << event.task_id << ")\n";
  };

  switch (event.kind) {
    case TimerKind::kStart: {
      std::lock_guard<std::mutex> g(shard.m);
      auto [it, inserted] = shard.open.emplace(
          event.task_id, OpenTimer{event.label, event.timestamp_ns, 0, 0});
      (void)it;
      if (!inserted) sequencing_error("start on already started task");
      break;
    }
    case TimerKind::kYield: {
      std::lock_guard<std::mutex> g(shard.m);
      auto it = shard.open.find(event.task_id);
      if (it == shard.open.end() || it->second.yield_ns != 0) {
        sequencing_error("yield without running start");
        break;
      }
      it->second.yield_ns = event.timestamp_ns;
      break;
    }
    case TimerKind::kResume: {
      std::lock_guard<std::mutex> g(shard.m);
      auto it = shard.open.find(event.task_id);
      if (it == shard.open.end() || it->second.yield_ns == 0) {
        sequencing_error("resume without yield");
        break;
      }
      it->second.excluded_ns += event.timestamp_ns - it->second.yield_ns;
      it->second.yield_ns = 0;
      break;
    }
    case TimerKind::kStop: {
      OpenTimer timer;
      {
        std::lock_guard<std::mutex> g(shard.m);
        auto it = shard.open.find(event.task_id);
        if (it == shard.open.end()) {
          sequencing_error("stop without start");
          return;
        }
        if (it->second.yield_ns != 0) {
          sequencing_error("stop while yielded");
          shard.open.erase(it);
          return;
        }
        timer = std::move(it->second);
        shard.open.erase(it);
      }
      const std::uint64_t inclusive =
          event.timestamp_ns - timer.start_ns - timer.excluded_ns;
      ProfileShard& pshard =
          profile_shards_[std::hash<std::string>{}(timer.label) % kTimerShards];
      std::lock_guard<std::mutex> g(pshard.m);
      TaskProfile& p = pshard.profiles[timer.label];
      p.call_count += 1;
      p.total_inclusive_ns += inclusive;
      p.max_ns = std::max(p.max_ns, inclusive);
      break;
    }
  }
}

std::unordered_map<std::string, TaskProfile> Observer::profiles() const {
  std::unordered_map<std::string, TaskProfile> out;
  for (const auto& shard : profile_shards_) {
    std::lock_guard<std::mutex> g(shard.m);
    for (const auto& [label, p] : shard.profiles) out[label] = p;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Policy engine

int Observer::register_policy(Policy policy) {
  if (auto* period = std::get_if<std::uint64_t>(&policy.trigger)) {
    if (*period == 0) throw ConfigError("periodic policy period must be > 0");
  } else if (std::get<std::string>(policy.trigger).empty()) {
    throw ConfigError("triggered policy needs a nonempty event name");
  }
  if (!policy.action) throw ConfigError("policy action must be callable");

  PolicyRec rec;
  rec.trigger = std::move(policy.trigger);
  rec.action =
      std::make_shared<std::function<void()>>(std::move(policy.action));
  rec.invocations = std::make_shared<std::atomic<std::uint64_t>>(0);

  bool periodic = std::holds_alternative<std::uint64_t>(rec.trigger);
  if (periodic)
    rec.next_due_ns = now_ns() + std::get<std::uint64_t>(rec.trigger);

  int id;
  {
    std::lock_guard<std::mutex> g(policy_m_);
    id = static_cast<int>(policies_.size());
    rec.id = id;
    policies_.push_back(std::move(rec));
  }
  if (periodic) ensure_control_thread();
  return id;
}

void Observer::emit_event(const std::string& name) {
  // Snapshot in registration order; actions run outside the lock on the
  // emitter's thread. A throwing action does not stop the rest.
  std::vector<std::pair<std::shared_ptr<std::function<void()>>,
                        std::shared_ptr<std::atomic<std::uint64_t>>>>
      to_run;
  {
    std::lock_guard<std::mutex> g(policy_m_);
    for (const auto& rec : policies_) {
      const auto* event = std::get_if<std::string>(&rec.trigger);
      if (event && *event == name)
        to_run.emplace_back(rec.action, rec.invocations);
    }
  }
  for (auto& [action, invocations] : to_run) {
    invocations->fetch_add(1);
    try {
      (*action)();
    } catch (const std::exception& e) {
      std::cerr << "amtbench: policy action failed: " << e.what() << "\n";
    } catch (...) {
      std::cerr << "amtbench: policy action failed\n";
    }
  }
}

std::uint64_t Observer::policy_invocations(int id) const {
  std::lock_guard<std::mutex> g(policy_m_);
  if (id < 0 || static_cast<std::size_t>(id) >= policies_.size())
    throw QueryError("unknown policy id " + std::to_string(id));
  return policies_[id].invocations->load();
}

// ---------------------------------------------------------------------------
// Periodic sampler and control thread

void Observer::start_sampler(std::uint64_t period_ns,
                             std::vector<CounterQuery> queries,
                             const CounterRegistry* registry) {
  if (period_ns < 1000000)
    throw ConfigError("sampler period must be at least 1 ms");
  if (!queries.empty() && !registry)
    throw ConfigError("sampler queries need a counter registry");
  for (const auto& q : queries)
    if (!registry->installed(q.name()))
      throw ConfigError("unknown counter '" + q.name() + "' in sampler query");

  {
    std::lock_guard<std::mutex> g(sample_m_);
    sampler_queries_ = std::move(queries);
    sampler_registry_ = registry;
  }
  sampler_period_ns_.store(period_ns);
  ensure_control_thread();
}

void Observer::stop_sampler() { sampler_period_ns_.store(0); }

std::vector<SampleRow> Observer::samples() const {
  std::lock_guard<std::mutex> g(sample_m_);
  return sample_rows_;
}

void Observer::export_samples_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << "tick_ns,query,locality,value\n";
  std::lock_guard<std::mutex> g(sample_m_);
  for (const auto& row : sample_rows_)
    out << row.tick_ns << "," << row.query << "," << row.locality << ","
        << row.value << "\n";
}

void Observer::ensure_control_thread() {
  std::lock_guard<std::mutex> g(control_m_);
  if (!control_thread_.joinable())
    control_thread_ = std::thread([this] { control_loop(); });
}

void Observer::control_loop() {
  std::uint64_t next_sample_ns = 0;
  for (;;) {
    {
      std::unique_lock<std::mutex> g(control_m_);
      if (control_cv_.wait_for(g, std::chrono::milliseconds(1),
                               [&] { return control_stop_; }))
        return;
    }
    const std::uint64_t now = now_ns();

    // Sampler tick.
    const std::uint64_t period = sampler_period_ns_.load();
    if (period > 0) {
      if (next_sample_ns == 0) next_sample_ns = now + period;
      if (now >= next_sample_ns) {
        std::vector<SampleRow> batch;
        std::vector<CounterQuery> queries;
        const CounterRegistry* registry;
        {
          std::lock_guard<std::mutex> g(sample_m_);
          queries = sampler_queries_;
          registry = sampler_registry_;
        }
        for (const auto& q : queries) {
          try {
            for (const auto& s : registry->read(q, false))
              batch.push_back({now, to_string(q), s.locality,
                               static_cast<double>(s.value)});
          } catch (const std::exception& e) {
            std::cerr << "amtbench: sampler read failed: " << e.what() << "\n";
          }
        }
        batch.push_back({now, "observer/energy", -1, read_energy(false)});
        {
          std::lock_guard<std::mutex> g(sample_m_);
          sample_rows_.insert(sample_rows_.end(), batch.begin(), batch.end());
        }
        while (next_sample_ns <= now) next_sample_ns += period;
      }
    } else {
      next_sample_ns = 0;
    }

    // Periodic policies.
    std::vector<std::pair<std::shared_ptr<std::function<void()>>,
                          std::shared_ptr<std::atomic<std::uint64_t>>>>
        due;
    {
      std::lock_guard<std::mutex> g(policy_m_);
      for (auto& rec : policies_) {
        const auto* period_ns = std::get_if<std::uint64_t>(&rec.trigger);
        if (period_ns && now >= rec.next_due_ns) {
          due.emplace_back(rec.action, rec.invocations);
          while (rec.next_due_ns <= now) rec.next_due_ns += *period_ns;
        }
      }
    }
    for (auto& [action, invocations] : due) {
      invocations->fetch_add(1);
      try {
        (*action)();
      } catch (const std::exception& e) {
        std::cerr << "amtbench: policy action failed: " << e.what() << "\n";
      } catch (...) {
        std::cerr << "amtbench: policy action failed\n";
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Energy

double Observer::model_joules() const {
  double joules = 0.0;
  for (int l = 0; l < num_localities_; ++l) {
    const auto [busy_s, idle_s] = time_source_(l);
    joules += energy_.p_busy_watts * busy_s + energy_.p_idle_watts * idle_s;
  }
  return joules;
}

double Observer::platform_joules() {
  // Caller holds energy_m_.
  std::ifstream in(energy_.platform_path);
  double raw_uj = 0.0;
  if (!(in >> raw_uj)) {
    if (!platform_failed_) {
      platform_failed_ = true;
      std::cerr << "amtbench: energy file '" << energy_.platform_path
                << "' unreadable, falling back to model\n";
    }
    return model_joules();
  }
  if (!platform_initialized_) {
    platform_initialized_ = true;
    platform_last_raw_uj_ = raw_uj;
  }
  double delta = raw_uj - platform_last_raw_uj_;
  if (delta < 0) delta += energy_.wrap_range_uj;  // counter wrapped
  platform_accum_uj_ += delta;
  platform_last_raw_uj_ = raw_uj;
  return platform_accum_uj_ * 1e-6;
}

double Observer::read_energy(bool reset) {
  std::lock_guard<std::mutex> g(energy_m_);
  double cumulative;
  if (energy_.mode == EnergyConfig::Mode::kPlatform && !platform_failed_)
    cumulative = platform_joules();
  else
    cumulative = model_joules();
  const double value = cumulative - energy_baseline_j_;
  if (reset) energy_baseline_j_ = cumulative;
  return value < 0 ? 0.0 : value;
}

}  // namespace amt
