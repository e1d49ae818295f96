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

#ifndef AMTBENCH_RUNTIME_HPP
#define AMTBENCH_RUNTIME_HPP

#include <any>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace amt {

enum class TaskState : int { kPending, kRunning, kYielded, kCompleted };

// Timer event kinds emitted to the observer hook around task execution.
enum class TaskEvent : int { kStart, kStop, kYield, kResume };

using TaskEventHook = std::function<void(
    std::uint64_t task_id, const std::string& label, TaskEvent kind,
    std::uint64_t timestamp_ns)>;

namespace detail {
struct Task;
}

// Shared reference to a spawned task; copyable and transferable between
// threads. A default-constructed handle is invalid.
class TaskHandle {
 public:
  TaskHandle() = default;

  bool valid() const noexcept { return task_ != nullptr; }
  std::uint64_t id() const;
  TaskState state() const;
  // Timestamps are 0 until the corresponding transition happened.
  std::uint64_t start_ns() const;
  std::uint64_t complete_ns() const;

 private:
  friend class Runtime;
  explicit TaskHandle(std::shared_ptr<detail::Task> t) : task_(std::move(t)) {}
  std::shared_ptr<detail::Task> task_;
};

struct WorkerStats {
  std::uint64_t busy_ns = 0;
  std::uint64_t idle_ns = 0;
};

struct RuntimeStats {
  std::uint64_t tasks_completed = 0;
  std::uint64_t steals = 0;
  // Indexed [locality][worker].
  std::vector<std::vector<WorkerStats>> workers;

  std::uint64_t total_busy_ns() const;
};

// Multi-locality, multi-worker task scheduler. Localities are in-process
// scheduler partitions; each has a fixed set of worker threads with their
// own run queues. Work stealing happens only within a locality, victim
// selection is uniform random from a per-worker seeded RNG.
//
// Per-worker busy/idle time is accounted by chaining monotonic-clock
// timestamps across the find-work / run-task transitions of the worker
// loop, so busy_ns + idle_ns tracks wall time closely.
class Runtime {
 public:
  Runtime(int localities, int workers_per_locality, std::uint64_t seed = 0);
  ~Runtime();

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  // Enqueues a task on the given locality. It becomes runnable once every
  // dependency has completed. Throws LifecycleError after shutdown began.
  TaskHandle spawn(int locality, std::string label,
                   std::function<std::any()> body,
                   const std::vector<TaskHandle>& deps = {});

  // Blocks until the task completed and returns its payload; rethrows the
  // task body's exception if it failed. Call from a controller thread, not
  // from inside a task body.
  std::any wait(const TaskHandle& handle);

  // Cooperatively yields the calling task (valid only inside a task body);
  // emits yield/resume events to the hook.
  void yield();

  // 100 x mean over the locality's workers of idle/(busy+idle) since the
  // last reset. Workers that have accumulated nothing in the window count
  // as fully idle.
  double idle_rate(int locality, bool reset = false);

  std::uint64_t steal_count(int locality, bool reset = false);

  // Drains all enqueued work, stops the workers and returns final totals.
  // Throws LifecycleError on a second call.
  RuntimeStats shutdown();

  int localities() const noexcept { return num_localities_; }
  int workers_per_locality() const noexcept { return workers_per_locality_; }

  // Cumulative (never reset) totals, readable while running; these feed
  // the AGAS overhead denominator and the energy model.
  std::uint64_t total_busy_ns() const;
  // Mean over the locality's workers of cumulative busy/idle seconds.
  std::pair<double, double> locality_busy_idle_seconds(int locality) const;

  // Install the observer callback for task start/stop/yield/resume events.
  // Must be set before the first spawn; pass nullptr-like {} to disable.
  void set_task_event_hook(TaskEventHook hook);

 private:
  struct WorkerSlot {
    std::deque<std::shared_ptr<detail::Task>> queue;
    std::atomic<std::uint64_t> busy_ns{0};
    std::atomic<std::uint64_t> idle_ns{0};
    std::atomic<std::uint64_t> busy_base{0};
    std::atomic<std::uint64_t> idle_base{0};
    std::uint64_t epoch_start = 0;
    std::mt19937 rng;
  };

  struct LocalityState {
    std::mutex m;
    std::condition_variable cv;
    std::vector<std::unique_ptr<WorkerSlot>> slots;
    std::atomic<std::uint64_t> steals{0};
    std::atomic<std::uint64_t> steal_base{0};
    std::atomic<std::uint32_t> push_cursor{0};
  };

  void worker_loop(int locality, int worker);
  void enqueue(const std::shared_ptr<detail::Task>& task);
  void run_task(const std::shared_ptr<detail::Task>& task);
  void check_locality(int locality) const;

  int num_localities_;
  int workers_per_locality_;
  std::vector<std::unique_ptr<LocalityState>> locs_;
  std::vector<std::thread> threads_;

  TaskEventHook hook_;

  std::atomic<std::uint64_t> next_task_id_{1};
  std::atomic<std::uint64_t> pending_{0};
  std::atomic<std::uint64_t> completed_{0};
  std::atomic<bool> draining_{false};
  std::atomic<bool> stopping_{false};
  std::atomic<bool> shut_down_{false};
  std::mutex drain_m_;
  std::condition_variable drain_cv_;
};

}  // namespace amt

#endif  // AMTBENCH_RUNTIME_HPP
