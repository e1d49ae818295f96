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

#include "amtbench/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <utility>

#include "amtbench/clock.hpp"
#include "amtbench/errors.hpp"

namespace amt {

namespace detail {

struct Task {
  std::uint64_t id = 0;
  std::string label;
  std::function<std::any()> body;
  int locality = 0;

  std::atomic<int> state{static_cast<int>(TaskState::kPending)};
  std::atomic<int> remaining_deps{0};

  std::mutex m;
  std::condition_variable cv;
  bool done = false;  // guarded by m
  std::vector<std::shared_ptr<Task>> successors;  // guarded by m until done
  std::any result;
  std::exception_ptr error;

  std::atomic<std::uint64_t> start_ns{0};
  std::atomic<std::uint64_t> complete_ns{0};
};

}  // namespace detail

using detail::Task;

namespace {
thread_local Runtime* t_runtime = nullptr;
thread_local Task* t_current_task = nullptr;
}  // namespace

std::uint64_t TaskHandle::id() const { return task_ ? task_->id : 0; }

TaskState TaskHandle::state() const {
  return task_ ? static_cast<TaskState>(task_->state.load())
               : TaskState::kPending;
}

std::uint64_t TaskHandle::start_ns() const {
  return task_ ? task_->start_ns.load() : 0;
}

std::uint64_t TaskHandle::complete_ns() const {
  return task_ ? task_->complete_ns.load() : 0;
}

std::uint64_t RuntimeStats::total_busy_ns() const {
  std::uint64_t total = 0;
  for (const auto& loc : workers)
    for (const auto& w : loc) total += w.busy_ns;
  return total;
}

Runtime::Runtime(int localities, int workers_per_locality, std::uint64_t seed)
    : num_localities_(localities), workers_per_locality_(workers_per_locality) {
  if (localities < 1 || workers_per_locality < 1)
    throw ConfigError("runtime needs at least one locality and one worker");

  locs_.reserve(localities);
  const std::uint64_t epoch = now_ns();
  for (int l = 0; l < localities; ++l) {
    auto loc = std::make_unique<LocalityState>();
    loc->slots.reserve(workers_per_locality);
    for (int w = 0; w < workers_per_locality; ++w) {
      auto slot = std::make_unique<WorkerSlot>();
      slot->epoch_start = epoch;
      slot->rng.seed(static_cast<std::uint32_t>(
          seed * 0x9e3779b97f4a7c15ull + l * 8191 + w + 1));
      loc->slots.push_back(std::move(slot));
    }
    locs_.push_back(std::move(loc));
  }

  threads_.reserve(static_cast<std::size_t>(localities) * workers_per_locality);
  for (int l = 0; l < localities; ++l)
    for (int w = 0; w < workers_per_locality; ++w)
      threads_.emplace_back([this, l, w] { worker_loop(l, w); });
}

Runtime::~Runtime() {
  if (!shut_down_.load()) {
    // Hard stop: do not wait for gated tasks that can never run.
    stopping_.store(true);
    for (auto& loc : locs_) {
      std::lock_guard<std::mutex> g(loc->m);
      loc->cv.notify_all();
    }
    for (auto& t : threads_)
      if (t.joinable()) t.join();
  }
}

void Runtime::set_task_event_hook(TaskEventHook hook) {
  hook_ = std::move(hook);
}

void Runtime::check_locality(int locality) const {
  if (locality < 0 || locality >= num_localities_)
    throw QueryError("unknown locality " + std::to_string(locality));
}

TaskHandle Runtime::spawn(int locality, std::string label,
                          std::function<std::any()> body,
                          const std::vector<TaskHandle>& deps) {
  if (draining_.load()) throw LifecycleError("spawn after shutdown began");
  check_locality(locality);

  auto task = std::make_shared<Task>();
  task->id = next_task_id_.fetch_add(1);
  task->label = std::move(label);
  task->body = std::move(body);
  task->locality = locality;
  // Guard value keeps the task gated while dependencies are being linked.
  task->remaining_deps.store(1);

  pending_.fetch_add(1);

  for (const auto& dep : deps) {
    if (!dep.task_) throw QueryError("invalid dependency handle");
    std::lock_guard<std::mutex> g(dep.task_->m);
    if (!dep.task_->done) {
      task->remaining_deps.fetch_add(1);
      dep.task_->successors.push_back(task);
    }
  }

  if (task->remaining_deps.fetch_sub(1) == 1) enqueue(task);
  return TaskHandle(task);
}

void Runtime::enqueue(const std::shared_ptr<Task>& task) {
  LocalityState& loc = *locs_[task->locality];
  const int target = static_cast<int>(loc.push_cursor.fetch_add(1) %
                                      workers_per_locality_);
  {
    std::lock_guard<std::mutex> g(loc.m);
    loc.slots[target]->queue.push_back(task);
  }
  loc.cv.notify_all();
}

void Runtime::run_task(const std::shared_ptr<Task>& task) {
  task->state.store(static_cast<int>(TaskState::kRunning));
  const std::uint64_t start = now_ns();
  task->start_ns.store(start);
  if (hook_) hook_(task->id, task->label, TaskEvent::kStart, start);

  Task* prev = t_current_task;
  t_current_task = task.get();
  try {
    task->result = task->body ? task->body() : std::any{};
  } catch (...) {
    task->error = std::current_exception();
  }
  t_current_task = prev;

  const std::uint64_t end = now_ns();
  task->complete_ns.store(end);
  if (hook_) hook_(task->id, task->label, TaskEvent::kStop, end);
  task->state.store(static_cast<int>(TaskState::kCompleted));

  std::vector<std::shared_ptr<Task>> successors;
  {
    std::lock_guard<std::mutex> g(task->m);
    task->done = true;
    successors.swap(task->successors);
  }
  task->cv.notify_all();
  task->body = nullptr;

  for (auto& succ : successors)
    if (succ->remaining_deps.fetch_sub(1) == 1) enqueue(succ);

  completed_.fetch_add(1);
  if (pending_.fetch_sub(1) == 1) {
    std::lock_guard<std::mutex> g(drain_m_);
    drain_cv_.notify_all();
  }
}

void Runtime::worker_loop(int locality, int worker) {
  t_runtime = this;
  LocalityState& loc = *locs_[locality];
  WorkerSlot& self = *loc.slots[worker];

  std::uniform_int_distribution<int> victim_dist(0, workers_per_locality_ - 1);
  std::uint64_t mark = now_ns();

  for (;;) {
    std::shared_ptr<Task> task;
    {
      std::unique_lock<std::mutex> g(loc.m);
      if (!self.queue.empty()) {
        task = std::move(self.queue.front());
        self.queue.pop_front();
      } else if (workers_per_locality_ > 1) {
        const int start = victim_dist(self.rng);
        for (int k = 0; k < workers_per_locality_ && !task; ++k) {
          const int v = (start + k) % workers_per_locality_;
          if (v == worker) continue;
          auto& vq = loc.slots[v]->queue;
          if (!vq.empty()) {
            task = std::move(vq.back());
            vq.pop_back();
            loc.steals.fetch_add(1);
          }
        }
      }
      if (!task && !stopping_.load())
        loc.cv.wait_for(g, std::chrono::microseconds(500));
    }

    const std::uint64_t t = now_ns();
    self.idle_ns.fetch_add(t - mark);
    mark = t;

    if (task) {
      run_task(task);
      const std::uint64_t t2 = now_ns();
      self.busy_ns.fetch_add(t2 - mark);
      mark = t2;
    } else if (stopping_.load()) {
      break;
    }
  }
}

std::any Runtime::wait(const TaskHandle& handle) {
  if (!handle.task_) throw QueryError("invalid task handle");
  Task& task = *handle.task_;
  std::unique_lock<std::mutex> g(task.m);
  task.cv.wait(g, [&] { return task.done; });
  if (task.error) std::rethrow_exception(task.error);
  return task.result;
}

void Runtime::yield() {
  Task* task = t_current_task;
  if (!task || t_runtime != this) return;
  task->state.store(static_cast<int>(TaskState::kYielded));
  if (hook_) hook_(task->id, task->label, TaskEvent::kYield, now_ns());
  std::this_thread::yield();
  if (hook_) hook_(task->id, task->label, TaskEvent::kResume, now_ns());
  task->state.store(static_cast<int>(TaskState::kRunning));
}

double Runtime::idle_rate(int locality, bool reset) {
  check_locality(locality);
  LocalityState& loc = *locs_[locality];
  double sum = 0.0;
  for (auto& slot : loc.slots) {
    const std::uint64_t busy = slot->busy_ns.load() - slot->busy_base.load();
    const std::uint64_t idle = slot->idle_ns.load() - slot->idle_base.load();
    const std::uint64_t total = busy + idle;
    sum += total == 0 ? 1.0 : static_cast<double>(idle) / total;
    if (reset) {
      slot->busy_base.store(slot->busy_ns.load());
      slot->idle_base.store(slot->idle_ns.load());
    }
  }
  return 100.0 * sum / static_cast<double>(loc.slots.size());
}

std::uint64_t Runtime::steal_count(int locality, bool reset) {
  check_locality(locality);
  LocalityState& loc = *locs_[locality];
  const std::uint64_t value = loc.steals.load() - loc.steal_base.load();
  if (reset) loc.steal_base.store(loc.steals.load());
  return value;
}

std::uint64_t Runtime::total_busy_ns() const {
  std::uint64_t total = 0;
  for (const auto& loc : locs_)
    for (const auto& slot : loc->slots) total += slot->busy_ns.load();
  return total;
}

std::pair<double, double> Runtime::locality_busy_idle_seconds(
    int locality) const {
  check_locality(locality);
  const LocalityState& loc = *locs_[locality];
  double busy = 0.0, idle = 0.0;
  for (const auto& slot : loc.slots) {
    busy += static_cast<double>(slot->busy_ns.load());
    idle += static_cast<double>(slot->idle_ns.load());
  }
  const double n = static_cast<double>(loc.slots.size());
  return {busy / n * 1e-9, idle / n * 1e-9};
}

RuntimeStats Runtime::shutdown() {
  if (shut_down_.exchange(true)) throw LifecycleError("runtime already shut down");
  draining_.store(true);

  {
    std::unique_lock<std::mutex> g(drain_m_);
    drain_cv_.wait(g, [&] { return pending_.load() == 0; });
  }

  stopping_.store(true);
  for (auto& loc : locs_) {
    std::lock_guard<std::mutex> g(loc->m);
    loc->cv.notify_all();
  }
  for (auto& t : threads_)
    if (t.joinable()) t.join();

  RuntimeStats stats;
  stats.tasks_completed = completed_.load();
  stats.workers.resize(num_localities_);
  for (int l = 0; l < num_localities_; ++l) {
    stats.steals += locs_[l]->steals.load();
    for (auto& slot : locs_[l]->slots)
      stats.workers[l].push_back(
          {slot->busy_ns.load(), slot->idle_ns.load()});
  }
  return stats;
}

}  // namespace amt
