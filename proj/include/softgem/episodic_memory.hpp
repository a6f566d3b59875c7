#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "softgem/dataset.hpp"
#include "softgem/random.hpp"

namespace softgem {

struct MemorySlot {
  Eigen::VectorXd input;
  int task_id = 0;
  int label = 0;

  bool operator==(const MemorySlot &) const = default;
};

enum class Sampling { WithReplacement, WithoutReplacement };

// Per-task, per-class FIFO ring buffers of raw training samples.
//
// Each task owns `classes_per_task` rings of capacity `budget_per_class`;
// once a ring is full the oldest sample of that class is overwritten. A task
// is written exactly once, after its training epoch, and is read-only from
// then on.
class EpisodicMemory {
public:
  EpisodicMemory(int budget_per_class, int classes_per_task);

  // Streams `task_data` in column order through the task's rings.
  void add_task(const Dataset &task_data, int task_id);

  bool has_task(int task_id) const { return rings_.contains(task_id); }
  std::vector<int> tasks() const;
  // Slots of one task, class by class, oldest first within a class.
  std::vector<MemorySlot> slots(int task_id) const;
  std::size_t size(int task_id) const;
  // Number of stored slots over tasks with id < current_task.
  std::size_t available_before(int current_task) const;

  int budget_per_class() const { return budget_per_class_; }
  int classes_per_task() const { return classes_per_task_; }
  std::size_t capacity_per_task() const {
    return static_cast<std::size_t>(budget_per_class_) * static_cast<std::size_t>(classes_per_task_);
  }

  // Binary snapshot: "SGEM" magic, u32 version, u32 budget, u32 classes,
  // u32 task count, then per task u32 id and u32 slot count, then per slot
  // i32 label, u32 dim and dim little-endian f64 values.
  void save(std::ostream &out) const;
  static EpisodicMemory load(std::istream &in);

private:
  struct Ring {
    std::vector<MemorySlot> items;
    std::size_t next = 0; // overwrite position once full
  };
  using TaskRings = std::vector<Ring>;

  void push(Ring &ring, MemorySlot slot) const;
  std::vector<const MemorySlot *> union_before(int current_task) const;

  int budget_per_class_;
  int classes_per_task_;
  std::map<int, TaskRings> rings_;

  friend std::vector<MemorySlot> sample_reference_batch(const EpisodicMemory &, int, int, Rng &,
                                                        Sampling);
  friend std::map<int, std::vector<MemorySlot>> per_task_batches(const EpisodicMemory &, int, int,
                                                                 Rng &, Sampling);
};

// Value-returning form of EpisodicMemory::add_task.
EpisodicMemory update_memory(EpisodicMemory store, const Dataset &task_data, int task_id);

// Uniform draw from the union of all tasks with id < current_task.
std::vector<MemorySlot> sample_reference_batch(const EpisodicMemory &store, int current_task,
                                               int batch_size, Rng &rng,
                                               Sampling sampling = Sampling::WithReplacement);

// One independent draw per earlier task, keyed by task id.
std::map<int, std::vector<MemorySlot>> per_task_batches(const EpisodicMemory &store,
                                                        int current_task, int batch_size,
                                                        Rng &rng,
                                                        Sampling sampling = Sampling::WithReplacement);

Batch make_batch(std::span<const MemorySlot> slots);

} // namespace softgem
