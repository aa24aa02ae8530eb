#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "bcmg/error.hpp"

namespace bcmg {

/// Device index of the coordinator's scratch arena. Staging buffers and
/// coordinator-side solver workspace live here.
inline constexpr int kScratchDevice = -1;

inline constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

/// Address-space identifier. A handle only resolves in the context that
/// created or imported it.
using ContextId = std::uint32_t;
inline constexpr ContextId kCoordinatorContext = 0;

struct BufferHandle {
  int device = 0;
  std::uint64_t id = 0;
  std::size_t length = 0;
  ContextId context = kCoordinatorContext;

  friend bool operator==(const BufferHandle&, const BufferHandle&) = default;
};

/// One entry of the mesh copy log. Offsets are arena addresses, not
/// offsets within the allocation.
struct CopyRecord {
  int src_device = 0;
  std::size_t src_offset = 0;
  int dst_device = 0;
  std::size_t dst_offset = 0;
  std::size_t length = 0;

  friend bool operator==(const CopyRecord&, const CopyRecord&) = default;
};

/// Writes the copy log as CSV: src_device,src_offset,dst_device,dst_offset,length.
void write_copy_log_csv(std::ostream& os, std::span<const CopyRecord> log, bool header = true);

// Zero-initialised, 64-byte aligned byte storage.
class AlignedBytes {
 public:
  AlignedBytes() = default;
  explicit AlignedBytes(std::size_t n);

  std::byte* data() noexcept { return ptr_.get(); }
  const std::byte* data() const noexcept { return ptr_.get(); }
  std::size_t size() const noexcept { return size_; }

 private:
  struct Deleter {
    void operator()(std::byte* p) const noexcept;
  };
  std::unique_ptr<std::byte, Deleter> ptr_;
  std::size_t size_ = 0;
};

/// Memory of one simulated device. Allocations get non-overlapping
/// addresses in [0, capacity) by first fit.
class DeviceArena {
 public:
  struct Allocation {
    std::size_t offset = 0;
    std::size_t length = 0;
    AlignedBytes storage;
    bool staging = false;
    bool staged = false;  // staging buffer holds content not yet forwarded
  };

  DeviceArena(int device, std::size_t capacity);

  int device() const noexcept { return device_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t used() const;

  std::uint64_t allocate(std::size_t length, bool staging = false);
  void release(std::uint64_t id);
  Allocation* find(std::uint64_t id);
  const Allocation* find(std::uint64_t id) const;

  /// Allocations ordered by address.
  std::vector<std::pair<std::uint64_t, const Allocation*>> allocations() const;

 private:
  int device_;
  std::size_t capacity_;
  std::size_t used_ = 0;
  std::uint64_t next_id_ = 1;
  std::map<std::uint64_t, Allocation> by_id_;
  std::map<std::size_t, std::uint64_t> by_offset_;
  mutable std::mutex mutex_;
};

/// Serialised handle as carried over an inter-context channel.
struct IpcToken {
  int device = 0;
  std::uint64_t id = 0;
  std::size_t length = 0;
  std::uint64_t key = 0;
};

std::vector<std::byte> serialize(const IpcToken& token);
IpcToken deserialize_token(std::span<const std::byte> bytes);

/// Contents of every live allocation, keyed by (device, arena address).
class MeshSnapshot {
 public:
  using Key = std::pair<int, std::size_t>;

  std::map<Key, std::vector<std::byte>>& regions() noexcept { return regions_; }
  const std::map<Key, std::vector<std::byte>>& regions() const noexcept { return regions_; }

  /// The bytes [offset, offset + length) of device's arena; the range must
  /// lie inside one allocation.
  std::span<std::byte> range(int device, std::size_t offset, std::size_t length);

  friend bool operator==(const MeshSnapshot&, const MeshSnapshot&) = default;

 private:
  std::map<Key, std::vector<std::byte>> regions_;
};

/// Replays copy records against a snapshot, in order.
void replay(MeshSnapshot& snapshot, std::span<const CopyRecord> log);

/// Counts writes to device memory that land on a range whose original
/// content has not been read yet. Writes into the scratch arena are exempt.
/// Ranges are keyed by their exact (device, address, length).
std::size_t count_overwrite_violations(std::span<const CopyRecord> log);

/// Ordered set of simulated devices plus the coordinator scratch arena.
class DeviceMesh {
 public:
  explicit DeviceMesh(std::size_t num_devices, std::size_t capacity = kUnlimited);

  DeviceMesh(const DeviceMesh&) = delete;
  DeviceMesh& operator=(const DeviceMesh&) = delete;

  std::size_t num_devices() const noexcept { return arenas_.size(); }

  /// device may be kScratchDevice.
  DeviceArena& arena(int device);
  const DeviceArena& arena(int device) const;

  BufferHandle allocate(int device, std::size_t length, ContextId context = kCoordinatorContext);

  /// A one-slot staging buffer in the scratch arena. peer_copy enforces
  /// write-then-read alternation on it and raises staging_misuse otherwise.
  BufferHandle allocate_staging(std::size_t length);

  void release(const BufferHandle& handle);

  std::span<std::byte> resolve(const BufferHandle& handle, ContextId context);
  std::span<const std::byte> resolve(const BufferHandle& handle, ContextId context) const;

  /// Arena address of the allocation behind handle.
  std::size_t address_of(const BufferHandle& handle) const;

  /// Bit-exact copy between two coordinator-context handles, possibly on
  /// different devices. Overlapping ranges within one allocation are
  /// rejected. Every call is appended to the copy log.
  void peer_copy(const BufferHandle& src, std::size_t src_offset, const BufferHandle& dst, std::size_t dst_offset,
                 std::size_t length);

  IpcToken export_handle(const BufferHandle& handle, ContextId owner);
  BufferHandle import_handle(const IpcToken& token, ContextId context);

  const std::vector<CopyRecord>& copy_log() const noexcept { return copy_log_; }
  void clear_copy_log() noexcept { copy_log_.clear(); }

  MeshSnapshot snapshot() const;

 private:
  DeviceArena::Allocation& checked(const BufferHandle& handle, ContextId context);
  const DeviceArena::Allocation& checked(const BufferHandle& handle, ContextId context) const;

  std::vector<std::unique_ptr<DeviceArena>> arenas_;
  std::unique_ptr<DeviceArena> scratch_;
  std::vector<CopyRecord> copy_log_;

  std::mutex ipc_mutex_;
  std::uint64_t next_ipc_key_ = 0x5eed;
  std::map<std::uint64_t, std::pair<int, std::uint64_t>> exported_;
};

/// RAII owner of a coordinator-context allocation.
class ScopedBuffer {
 public:
  ScopedBuffer() = default;
  ScopedBuffer(DeviceMesh& mesh, BufferHandle handle) : mesh_(&mesh), handle_(handle) {}
  ScopedBuffer(ScopedBuffer&& other) noexcept
      : mesh_(std::exchange(other.mesh_, nullptr)), handle_(other.handle_) {}
  ScopedBuffer& operator=(ScopedBuffer&& other) noexcept {
    if (this != &other) {
      reset();
      mesh_ = std::exchange(other.mesh_, nullptr);
      handle_ = other.handle_;
    }
    return *this;
  }
  ~ScopedBuffer() { reset(); }

  const BufferHandle& get() const noexcept { return handle_; }
  const BufferHandle& operator*() const noexcept { return handle_; }
  const BufferHandle* operator->() const noexcept { return &handle_; }

  void reset() noexcept;
  /// Gives up ownership without freeing.
  BufferHandle release() noexcept {
    mesh_ = nullptr;
    return handle_;
  }

 private:
  DeviceMesh* mesh_ = nullptr;
  BufferHandle handle_;
};

enum class CoordinationMode {
  shared_address,  // SPMD: one worker thread per device, one address space
  isolated,        // MPMD: per-device address spaces, handles cross via IPC tokens
};

/// "spmd" / "mpmd".
std::string_view to_string(CoordinationMode mode) noexcept;
std::optional<CoordinationMode> parse_mode(std::string_view name) noexcept;

template <class T>
class Channel {
 public:
  void send(T value) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(value));
    }
    cv_.notify_one();
  }

  std::optional<T> try_receive() {
    std::lock_guard lock(mutex_);
    if (queue_.empty()) return std::nullopt;
    T v = std::move(queue_.front());
    queue_.pop_front();
    return v;
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<T> queue_;
};

/// Per-array table of device buffer handles that the coordinator needs.
/// In shared_address mode handles are stored directly. In isolated mode a
/// publish exports the handle to an IPC token, sends it over a channel, and
/// the coordinator side re-materialises it in its own context.
class HandleRegistry {
 public:
  HandleRegistry(DeviceMesh& mesh, CoordinationMode mode);

  HandleRegistry(const HandleRegistry&) = delete;
  HandleRegistry& operator=(const HandleRegistry&) = delete;

  CoordinationMode mode() const noexcept { return mode_; }

  /// Safe to call concurrently from every worker.
  void publish(int device, const BufferHandle& handle);

  bool complete() const;

  /// Coordinator-context handles, one per device. Throws
  /// incomplete_registry if any slot is empty.
  std::vector<BufferHandle> handles();

 private:
  void drain();

  DeviceMesh* mesh_;
  CoordinationMode mode_;
  mutable std::mutex mutex_;
  std::vector<bool> claimed_;
  std::vector<std::optional<BufferHandle>> slots_;
  Channel<std::pair<int, std::vector<std::byte>>> channel_;
};

/// Execution context of one device worker.
class Worker {
 public:
  Worker(DeviceMesh& mesh, int device, ContextId context) : mesh_(&mesh), device_(device), context_(context) {}

  int device() const noexcept { return device_; }
  ContextId context() const noexcept { return context_; }

  BufferHandle allocate(std::size_t length) { return mesh_->allocate(device_, length, context_); }
  std::span<std::byte> bytes(const BufferHandle& handle) { return mesh_->resolve(handle, context_); }

  template <class T>
  std::span<T> view(const BufferHandle& handle) {
    auto b = bytes(handle);
    return {reinterpret_cast<T*>(b.data()), b.size() / sizeof(T)};
  }

  void publish(HandleRegistry& registry, const BufferHandle& handle) { registry.publish(device_, handle); }

 private:
  DeviceMesh* mesh_;
  int device_;
  ContextId context_;
};

/// The single context allowed to touch every device buffer.
class Coordinator {
 public:
  Coordinator(DeviceMesh& mesh, std::vector<std::vector<BufferHandle>> handles)
      : mesh_(&mesh), handles_(std::move(handles)) {}

  DeviceMesh& mesh() noexcept { return *mesh_; }
  std::size_t num_devices() const noexcept { return mesh_->num_devices(); }

  /// Handles of the i-th registry passed to run_coordinated.
  const std::vector<BufferHandle>& handles(std::size_t registry) const { return handles_.at(registry); }

  std::span<std::byte> bytes(const BufferHandle& handle) { return mesh_->resolve(handle, kCoordinatorContext); }

  template <class T>
  std::span<T> view(const BufferHandle& handle) {
    auto b = bytes(handle);
    return {reinterpret_cast<T*>(b.data()), b.size() / sizeof(T)};
  }

  void peer_copy(const BufferHandle& src, std::size_t src_offset, const BufferHandle& dst, std::size_t dst_offset,
                 std::size_t length) {
    mesh_->peer_copy(src, src_offset, dst, dst_offset, length);
  }

  ScopedBuffer allocate(int device, std::size_t length) { return {*mesh_, mesh_->allocate(device, length)}; }
  ScopedBuffer allocate_staging(std::size_t length) { return {*mesh_, mesh_->allocate_staging(length)}; }

 private:
  DeviceMesh* mesh_;
  std::vector<std::vector<BufferHandle>> handles_;
};

class WorkerGroup {
 public:
  WorkerGroup() = default;
  WorkerGroup(WorkerGroup&&) = default;
  WorkerGroup& operator=(WorkerGroup&&) = default;
  ~WorkerGroup();

  /// Waits for every worker and rethrows the first worker exception.
  void join();

 private:
  friend class DeviceRuntime;
  std::vector<std::thread> threads_;
  std::shared_ptr<std::vector<std::exception_ptr>> errors_;
};

/// A mesh plus the worker/coordinator protocol around it: workers set up
/// and publish shards concurrently, then exactly one coordinator body runs
/// with every handle available while the workers are idle.
class DeviceRuntime {
 public:
  DeviceRuntime(std::size_t num_devices, CoordinationMode mode, std::size_t arena_capacity = kUnlimited);

  DeviceRuntime(const DeviceRuntime&) = delete;
  DeviceRuntime& operator=(const DeviceRuntime&) = delete;

  DeviceMesh& mesh() noexcept { return mesh_; }
  const DeviceMesh& mesh() const noexcept { return mesh_; }
  CoordinationMode mode() const noexcept { return mode_; }
  std::size_t num_devices() const noexcept { return mesh_.num_devices(); }

  ContextId worker_context(int device) const noexcept {
    return mode_ == CoordinationMode::shared_address ? kCoordinatorContext : static_cast<ContextId>(device + 1);
  }

  /// Starts one thread per device running fn.
  WorkerGroup launch_workers(std::function<void(Worker&)> fn);
  void run_workers(std::function<void(Worker&)> fn) { launch_workers(std::move(fn)).join(); }

  std::size_t active_workers() const noexcept { return active_workers_.load(); }

  template <class Body>
  decltype(auto) run_coordinated(std::initializer_list<HandleRegistry*> registries, Body&& body) {
    if (active_workers_.load() != 0) throw Error(Errc::not_quiescent, "device workers are still running");
    if (coordinator_active_.exchange(true)) throw Error(Errc::coordinator_busy, "a coordinator is already active");
    struct Release {
      std::atomic<bool>& flag;
      ~Release() { flag.store(false); }
    } release{coordinator_active_};

    std::vector<std::vector<BufferHandle>> handles;
    handles.reserve(registries.size());
    for (HandleRegistry* r : registries) handles.push_back(r->handles());
    Coordinator coordinator(mesh_, std::move(handles));
    return body(coordinator);
  }

 private:
  DeviceMesh mesh_;
  CoordinationMode mode_;
  std::atomic<std::size_t> active_workers_{0};
  std::atomic<bool> coordinator_active_{false};
};

}  // namespace bcmg
