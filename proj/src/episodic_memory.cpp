#include "softgem/episodic_memory.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "softgem/errors.hpp"

namespace softgem {

EpisodicMemory::EpisodicMemory(int budget_per_class, int classes_per_task)
    : budget_per_class_(budget_per_class), classes_per_task_(classes_per_task) {
  if (budget_per_class < 1)
    throw BudgetZero("budget_per_class must be >= 1, got " + std::to_string(budget_per_class));
  if (classes_per_task < 1)
    throw InvalidLabel("classes_per_task must be >= 1, got " + std::to_string(classes_per_task));
}

void EpisodicMemory::push(Ring &ring, MemorySlot slot) const {
  const auto cap = static_cast<std::size_t>(budget_per_class_);
  if (ring.items.size() < cap) {
    ring.items.push_back(std::move(slot));
    return;
  }
  ring.items[ring.next] = std::move(slot);
  ring.next = (ring.next + 1) % cap;
}

void EpisodicMemory::add_task(const Dataset &task_data, int task_id) {
  if (task_id < 1)
    throw UnknownTask("task ids start at 1, got " + std::to_string(task_id));
  if (has_task(task_id))
    throw TaskAlreadyStored("task " + std::to_string(task_id) + " is already in memory");
  TaskRings rings(static_cast<std::size_t>(classes_per_task_));
  for (Eigen::Index i = 0; i < task_data.size(); ++i) {
    const int label = task_data.labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= classes_per_task_)
      throw InvalidLabel("label " + std::to_string(label) + " outside [0, " +
                         std::to_string(classes_per_task_) + ")");
    push(rings[static_cast<std::size_t>(label)], MemorySlot{task_data.inputs.col(i), task_id, label});
  }
  rings_.emplace(task_id, std::move(rings));
}

std::vector<int> EpisodicMemory::tasks() const {
  std::vector<int> ids;
  for (const auto &[id, _] : rings_)
    ids.push_back(id);
  return ids;
}

std::vector<MemorySlot> EpisodicMemory::slots(int task_id) const {
  std::vector<MemorySlot> out;
  const auto it = rings_.find(task_id);
  if (it == rings_.end())
    return out;
  for (const Ring &ring : it->second) {
    const std::size_t n = ring.items.size();
    for (std::size_t k = 0; k < n; ++k)
      out.push_back(ring.items[(ring.next + k) % n]);
  }
  return out;
}

std::size_t EpisodicMemory::size(int task_id) const {
  const auto it = rings_.find(task_id);
  if (it == rings_.end())
    return 0;
  std::size_t n = 0;
  for (const Ring &ring : it->second)
    n += ring.items.size();
  return n;
}

std::size_t EpisodicMemory::available_before(int current_task) const {
  std::size_t n = 0;
  for (const auto &[id, _] : rings_)
    if (id < current_task)
      n += size(id);
  return n;
}

std::vector<const MemorySlot *> EpisodicMemory::union_before(int current_task) const {
  std::vector<const MemorySlot *> pool;
  for (const auto &[id, rings] : rings_) {
    if (id >= current_task)
      break;
    for (const Ring &ring : rings)
      for (const MemorySlot &s : ring.items)
        pool.push_back(&s);
  }
  return pool;
}

EpisodicMemory update_memory(EpisodicMemory store, const Dataset &task_data, int task_id) {
  store.add_task(task_data, task_id);
  return store;
}

namespace {

std::vector<MemorySlot> draw(const std::vector<const MemorySlot *> &pool, int batch_size, Rng &rng,
                             Sampling sampling) {
  if (batch_size < 1)
    throw EmptyBatch("reference batch size must be >= 1");
  std::vector<MemorySlot> out;
  if (sampling == Sampling::WithReplacement) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    out.reserve(static_cast<std::size_t>(batch_size));
    for (int i = 0; i < batch_size; ++i)
      out.push_back(*pool[pick(rng)]);
    return out;
  }
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t n = std::min(order.size(), static_cast<std::size_t>(batch_size));
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
    std::swap(order[i], order[pick(rng)]);
    out.push_back(*pool[order[i]]);
  }
  return out;
}

} // namespace

std::vector<MemorySlot> sample_reference_batch(const EpisodicMemory &store, int current_task,
                                               int batch_size, Rng &rng, Sampling sampling) {
  const auto pool = store.union_before(current_task);
  if (pool.empty())
    throw EmptyMemory("no stored samples for tasks before " + std::to_string(current_task));
  return draw(pool, batch_size, rng, sampling);
}

std::map<int, std::vector<MemorySlot>> per_task_batches(const EpisodicMemory &store,
                                                        int current_task, int batch_size, Rng &rng,
                                                        Sampling sampling) {
  std::map<int, std::vector<MemorySlot>> out;
  for (const auto &[id, rings] : store.rings_) {
    if (id >= current_task)
      break;
    std::vector<const MemorySlot *> pool;
    for (const auto &ring : rings)
      for (const MemorySlot &s : ring.items)
        pool.push_back(&s);
    if (!pool.empty())
      out.emplace(id, draw(pool, batch_size, rng, sampling));
  }
  if (out.empty())
    throw EmptyMemory("no stored samples for tasks before " + std::to_string(current_task));
  return out;
}

Batch make_batch(std::span<const MemorySlot> slots) {
  Batch b;
  if (slots.empty())
    return b;
  b.inputs.resize(slots.front().input.size(), static_cast<Eigen::Index>(slots.size()));
  for (std::size_t i = 0; i < slots.size(); ++i) {
    b.inputs.col(static_cast<Eigen::Index>(i)) = slots[i].input;
    b.task_ids.push_back(slots[i].task_id);
    b.labels.push_back(slots[i].label);
  }
  return b;
}

// --- snapshot -------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'S', 'G', 'E', 'M'};
constexpr std::uint32_t kSnapshotVersion = 1;

void put_u64(std::ostream &out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i)
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

void put_u32(std::ostream &out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i)
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 4);
}

std::uint64_t get_u(std::istream &in, int width) {
  unsigned char bytes[8] = {};
  in.read(reinterpret_cast<char *>(bytes), width);
  if (in.gcount() != width)
    throw TruncatedFile("memory snapshot ended early");
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i)
    v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

} // namespace

void EpisodicMemory::save(std::ostream &out) const {
  out.write(kMagic, 4);
  put_u32(out, kSnapshotVersion);
  put_u32(out, static_cast<std::uint32_t>(budget_per_class_));
  put_u32(out, static_cast<std::uint32_t>(classes_per_task_));
  put_u32(out, static_cast<std::uint32_t>(rings_.size()));
  for (const auto &[id, _] : rings_) {
    const auto task_slots = slots(id);
    put_u32(out, static_cast<std::uint32_t>(id));
    put_u32(out, static_cast<std::uint32_t>(task_slots.size()));
    for (const MemorySlot &s : task_slots) {
      put_u32(out, static_cast<std::uint32_t>(s.label));
      put_u32(out, static_cast<std::uint32_t>(s.input.size()));
      for (Eigen::Index i = 0; i < s.input.size(); ++i)
        put_u64(out, std::bit_cast<std::uint64_t>(s.input(i)));
    }
  }
  if (!out)
    throw IoError("failed writing memory snapshot");
}

EpisodicMemory EpisodicMemory::load(std::istream &in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4)
    throw TruncatedFile("memory snapshot ended early");
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw BadMagic("not a memory snapshot");
  const auto version = static_cast<std::uint32_t>(get_u(in, 4));
  if (version != kSnapshotVersion)
    throw BadMagic("unsupported snapshot version " + std::to_string(version));
  const auto budget = static_cast<int>(get_u(in, 4));
  const auto classes = static_cast<int>(get_u(in, 4));
  EpisodicMemory store(budget, classes);
  const auto task_count = get_u(in, 4);
  for (std::uint64_t t = 0; t < task_count; ++t) {
    const auto id = static_cast<int>(get_u(in, 4));
    const auto count = get_u(in, 4);
    TaskRings rings(static_cast<std::size_t>(classes));
    for (std::uint64_t k = 0; k < count; ++k) {
      MemorySlot s;
      s.task_id = id;
      s.label = static_cast<int>(static_cast<std::int32_t>(get_u(in, 4)));
      if (s.label < 0 || s.label >= classes)
        throw InvalidLabel("snapshot label " + std::to_string(s.label) + " out of range");
      const auto dim = static_cast<Eigen::Index>(get_u(in, 4));
      s.input.resize(dim);
      for (Eigen::Index i = 0; i < dim; ++i)
        s.input(i) = std::bit_cast<double>(get_u(in, 8));
      store.push(rings[static_cast<std::size_t>(s.label)], std::move(s));
    }
    store.rings_.emplace(id, std::move(rings));
  }
  return store;
}

} // namespace softgem
