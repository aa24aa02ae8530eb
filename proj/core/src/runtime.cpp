#include "bcmg/runtime.hpp"

#include <algorithm>
#include <cstring>
#include <new>
#include <ostream>
#include <set>
#include <string>
#include <tuple>

namespace bcmg {

namespace {

constexpr std::size_t kAlignment = 64;

bool ranges_overlap(std::size_t a, std::size_t b, std::size_t len) {
  return a < b + len && b < a + len;
}

}  // namespace

void write_copy_log_csv(std::ostream& os, std::span<const CopyRecord> log, bool header) {
  if (header) os << "src_device,src_offset,dst_device,dst_offset,length\n";
  for (const auto& r : log) {
    os << r.src_device << ',' << r.src_offset << ',' << r.dst_device << ',' << r.dst_offset << ',' << r.length
       << '\n';
  }
}

AlignedBytes::AlignedBytes(std::size_t n) : size_(n) {
  if (n == 0) return;
  auto* p = static_cast<std::byte*>(::operator new(n, std::align_val_t{kAlignment}, std::nothrow));
  if (p == nullptr) throw Error(Errc::out_of_memory, "host allocation of " + std::to_string(n) + " bytes failed");
  std::memset(p, 0, n);
  ptr_.reset(p);
}

void AlignedBytes::Deleter::operator()(std::byte* p) const noexcept {
  ::operator delete(p, std::align_val_t{kAlignment});
}

// --- DeviceArena ---------------------------------------------------------

DeviceArena::DeviceArena(int device, std::size_t capacity) : device_(device), capacity_(capacity) {}

std::size_t DeviceArena::used() const {
  std::lock_guard lock(mutex_);
  return used_;
}

std::uint64_t DeviceArena::allocate(std::size_t length, bool staging) {
  std::lock_guard lock(mutex_);
  if (length > capacity_ - used_) {
    throw Error(Errc::out_of_memory, "device " + std::to_string(device_) + ": requested " + std::to_string(length) +
                                         " bytes, " + std::to_string(capacity_ - used_) + " available");
  }
  // First fit over the address-ordered allocation list.
  std::size_t offset = 0;
  for (const auto& [start, id] : by_offset_) {
    if (start - offset >= length) break;
    offset = std::max(offset, start + by_id_.at(id).length);
  }
  if (offset > capacity_ || capacity_ - offset < length) {
    throw Error(Errc::out_of_memory, "device " + std::to_string(device_) + ": no contiguous range of " +
                                         std::to_string(length) + " bytes");
  }
  const std::uint64_t id = next_id_++;
  Allocation a;
  a.offset = offset;
  a.length = length;
  a.storage = AlignedBytes(length);
  a.staging = staging;
  by_id_.emplace(id, std::move(a));
  // Zero-length allocations share an address with their neighbour; keep
  // them out of the address index so first fit stays well defined.
  if (length > 0) by_offset_.emplace(offset, id);
  used_ += length;
  return id;
}

void DeviceArena::release(std::uint64_t id) {
  std::lock_guard lock(mutex_);
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw Error(Errc::stale_handle, "release of unknown allocation");
  if (it->second.length > 0) by_offset_.erase(it->second.offset);
  used_ -= it->second.length;
  by_id_.erase(it);
}

DeviceArena::Allocation* DeviceArena::find(std::uint64_t id) {
  std::lock_guard lock(mutex_);
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &it->second;
}

const DeviceArena::Allocation* DeviceArena::find(std::uint64_t id) const {
  std::lock_guard lock(mutex_);
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &it->second;
}

std::vector<std::pair<std::uint64_t, const DeviceArena::Allocation*>> DeviceArena::allocations() const {
  std::lock_guard lock(mutex_);
  std::vector<std::pair<std::uint64_t, const Allocation*>> out;
  out.reserve(by_id_.size());
  for (const auto& [id, a] : by_id_) out.emplace_back(id, &a);
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return std::tie(x.second->offset, x.first) < std::tie(y.second->offset, y.first);
  });
  return out;
}

// --- IPC tokens ----------------------------------------------------------

std::vector<std::byte> serialize(const IpcToken& token) {
  std::vector<std::byte> out(sizeof(std::int32_t) + 3 * sizeof(std::uint64_t));
  auto put = [&out](std::size_t at, auto value) { std::memcpy(out.data() + at, &value, sizeof(value)); };
  put(0, static_cast<std::int32_t>(token.device));
  put(4, token.id);
  put(12, static_cast<std::uint64_t>(token.length));
  put(20, token.key);
  return out;
}

IpcToken deserialize_token(std::span<const std::byte> bytes) {
  if (bytes.size() != 28) throw Error(Errc::format_error, "malformed IPC token");
  auto get = [&bytes]<class V>(std::size_t at, V& value) { std::memcpy(&value, bytes.data() + at, sizeof(value)); };
  std::int32_t device = 0;
  std::uint64_t length = 0;
  IpcToken t;
  get(0, device);
  get(4, t.id);
  get(12, length);
  get(20, t.key);
  t.device = device;
  t.length = static_cast<std::size_t>(length);
  return t;
}

// --- Snapshots and audits -------------------------------------------------

std::span<std::byte> MeshSnapshot::range(int device, std::size_t offset, std::size_t length) {
  auto it = regions_.upper_bound({device, offset});
  if (it == regions_.begin()) throw Error(Errc::out_of_range, "address outside any snapshot region");
  --it;
  const auto& [key, bytes] = *it;
  if (key.first != device || offset < key.second || offset - key.second + length > bytes.size()) {
    throw Error(Errc::out_of_range, "address outside any snapshot region");
  }
  return {it->second.data() + (offset - key.second), length};
}

void replay(MeshSnapshot& snapshot, std::span<const CopyRecord> log) {
  for (const auto& r : log) {
    auto src = snapshot.range(r.src_device, r.src_offset, r.length);
    auto dst = snapshot.range(r.dst_device, r.dst_offset, r.length);
    std::memmove(dst.data(), src.data(), r.length);
  }
}

std::size_t count_overwrite_violations(std::span<const CopyRecord> log) {
  using Range = std::tuple<int, std::size_t, std::size_t>;
  std::set<Range> read;
  std::size_t violations = 0;
  for (const auto& r : log) {
    read.emplace(r.src_device, r.src_offset, r.length);
    if (r.dst_device == kScratchDevice) continue;
    if (!read.contains(Range{r.dst_device, r.dst_offset, r.length})) ++violations;
  }
  return violations;
}

// --- DeviceMesh ----------------------------------------------------------

DeviceMesh::DeviceMesh(std::size_t num_devices, std::size_t capacity) {
  if (num_devices == 0) throw Error(Errc::invalid_argument, "a mesh needs at least one device");
  arenas_.reserve(num_devices);
  for (std::size_t d = 0; d < num_devices; ++d) arenas_.push_back(std::make_unique<DeviceArena>(int(d), capacity));
  scratch_ = std::make_unique<DeviceArena>(kScratchDevice, capacity);
}

DeviceArena& DeviceMesh::arena(int device) {
  if (device == kScratchDevice) return *scratch_;
  if (device < 0 || static_cast<std::size_t>(device) >= arenas_.size()) {
    throw Error(Errc::unknown_device, "device " + std::to_string(device));
  }
  return *arenas_[static_cast<std::size_t>(device)];
}

const DeviceArena& DeviceMesh::arena(int device) const {
  return const_cast<DeviceMesh*>(this)->arena(device);
}

BufferHandle DeviceMesh::allocate(int device, std::size_t length, ContextId context) {
  auto& a = arena(device);
  return {device, a.allocate(length), length, context};
}

BufferHandle DeviceMesh::allocate_staging(std::size_t length) {
  return {kScratchDevice, scratch_->allocate(length, true), length, kCoordinatorContext};
}

void DeviceMesh::release(const BufferHandle& handle) {
  arena(handle.device).release(handle.id);
}

DeviceArena::Allocation& DeviceMesh::checked(const BufferHandle& handle, ContextId context) {
  if (handle.context != context) {
    throw Error(Errc::foreign_handle, "handle of context " + std::to_string(handle.context) +
                                          " used from context " + std::to_string(context));
  }
  auto* a = arena(handle.device).find(handle.id);
  if (a == nullptr || a->length != handle.length) {
    throw Error(Errc::stale_handle, "device " + std::to_string(handle.device) + " allocation " +
                                        std::to_string(handle.id) + " is not live");
  }
  return *a;
}

const DeviceArena::Allocation& DeviceMesh::checked(const BufferHandle& handle, ContextId context) const {
  return const_cast<DeviceMesh*>(this)->checked(handle, context);
}

std::span<std::byte> DeviceMesh::resolve(const BufferHandle& handle, ContextId context) {
  auto& a = checked(handle, context);
  return {a.storage.data(), a.length};
}

std::span<const std::byte> DeviceMesh::resolve(const BufferHandle& handle, ContextId context) const {
  const auto& a = checked(handle, context);
  return {a.storage.data(), a.length};
}

std::size_t DeviceMesh::address_of(const BufferHandle& handle) const {
  return checked(handle, handle.context).offset;
}

void DeviceMesh::peer_copy(const BufferHandle& src, std::size_t src_offset, const BufferHandle& dst,
                           std::size_t dst_offset, std::size_t length) {
  auto& s = checked(src, kCoordinatorContext);
  auto& d = checked(dst, kCoordinatorContext);
  if (src_offset > s.length || length > s.length - src_offset || dst_offset > d.length ||
      length > d.length - dst_offset) {
    throw Error(Errc::out_of_range, "peer copy of " + std::to_string(length) + " bytes exceeds buffer bounds");
  }
  if (&s == &d && ranges_overlap(src_offset, dst_offset, length)) {
    throw Error(Errc::overlapping_copy, "source and destination ranges overlap");
  }
  if (s.staging) {
    if (!s.staged) throw Error(Errc::staging_misuse, "read from an empty staging buffer");
    s.staged = false;
  }
  if (d.staging) {
    if (d.staged) throw Error(Errc::staging_misuse, "staging buffer overwritten before it was forwarded");
    d.staged = true;
  }
  if (length > 0) std::memcpy(d.storage.data() + dst_offset, s.storage.data() + src_offset, length);
  copy_log_.push_back({src.device, s.offset + src_offset, dst.device, d.offset + dst_offset, length});
}

IpcToken DeviceMesh::export_handle(const BufferHandle& handle, ContextId owner) {
  checked(handle, owner);
  std::lock_guard lock(ipc_mutex_);
  const std::uint64_t key = next_ipc_key_++;
  exported_.emplace(key, std::pair{handle.device, handle.id});
  return {handle.device, handle.id, handle.length, key};
}

BufferHandle DeviceMesh::import_handle(const IpcToken& token, ContextId context) {
  {
    std::lock_guard lock(ipc_mutex_);
    auto it = exported_.find(token.key);
    if (it == exported_.end() || it->second != std::pair{token.device, token.id}) {
      throw Error(Errc::stale_handle, "IPC token was never exported");
    }
  }
  BufferHandle h{token.device, token.id, token.length, context};
  const auto* a = arena(token.device).find(token.id);
  if (a == nullptr || a->length != token.length) throw Error(Errc::stale_handle, "IPC token refers to freed memory");
  return h;
}

MeshSnapshot DeviceMesh::snapshot() const {
  MeshSnapshot snap;
  auto add = [&snap](const DeviceArena& arena) {
    for (const auto& [id, a] : arena.allocations()) {
      if (a->length == 0) continue;
      snap.regions()[{arena.device(), a->offset}] =
          std::vector<std::byte>(a->storage.data(), a->storage.data() + a->length);
    }
  };
  add(*scratch_);
  for (const auto& a : arenas_) add(*a);
  return snap;
}

void ScopedBuffer::reset() noexcept {
  if (mesh_ != nullptr) {
    try {
      mesh_->release(handle_);
    } catch (...) {
    }
    mesh_ = nullptr;
  }
}

// --- Coordination --------------------------------------------------------

std::string_view to_string(CoordinationMode mode) noexcept {
  return mode == CoordinationMode::shared_address ? "spmd" : "mpmd";
}

std::optional<CoordinationMode> parse_mode(std::string_view name) noexcept {
  if (name == "spmd") return CoordinationMode::shared_address;
  if (name == "mpmd") return CoordinationMode::isolated;
  return std::nullopt;
}

HandleRegistry::HandleRegistry(DeviceMesh& mesh, CoordinationMode mode)
    : mesh_(&mesh), mode_(mode), claimed_(mesh.num_devices(), false), slots_(mesh.num_devices()) {}

void HandleRegistry::publish(int device, const BufferHandle& handle) {
  if (device < 0 || static_cast<std::size_t>(device) >= slots_.size()) {
    throw Error(Errc::unknown_device, "publish for device " + std::to_string(device));
  }
  if (handle.device != device) throw Error(Errc::invalid_argument, "handle belongs to another device");
  {
    std::lock_guard lock(mutex_);
    if (claimed_[std::size_t(device)]) {
      throw Error(Errc::double_publish, "device " + std::to_string(device) + " already published");
    }
    claimed_[std::size_t(device)] = true;
    if (mode_ == CoordinationMode::shared_address) {
      slots_[std::size_t(device)] = handle;
      return;
    }
  }
  const IpcToken token = mesh_->export_handle(handle, handle.context);
  channel_.send({device, serialize(token)});
}

bool HandleRegistry::complete() const {
  std::lock_guard lock(mutex_);
  return std::all_of(claimed_.begin(), claimed_.end(), [](bool b) { return b; });
}

void HandleRegistry::drain() {
  while (auto msg = channel_.try_receive()) {
    const IpcToken token = deserialize_token(msg->second);
    BufferHandle local = mesh_->import_handle(token, kCoordinatorContext);
    std::lock_guard lock(mutex_);
    slots_[std::size_t(msg->first)] = local;
  }
}

std::vector<BufferHandle> HandleRegistry::handles() {
  drain();
  std::lock_guard lock(mutex_);
  std::vector<BufferHandle> out;
  out.reserve(slots_.size());
  for (std::size_t d = 0; d < slots_.size(); ++d) {
    if (!slots_[d]) throw Error(Errc::incomplete_registry, "device " + std::to_string(d) + " has not published");
    out.push_back(*slots_[d]);
  }
  return out;
}

WorkerGroup::~WorkerGroup() {
  for (auto& t : threads_) {
    if (t.joinable()) t.join();
  }
}

void WorkerGroup::join() {
  for (auto& t : threads_) {
    if (t.joinable()) t.join();
  }
  if (errors_) {
    for (auto& e : *errors_) {
      if (e) std::rethrow_exception(std::exchange(e, nullptr));
    }
  }
}

DeviceRuntime::DeviceRuntime(std::size_t num_devices, CoordinationMode mode, std::size_t arena_capacity)
    : mesh_(num_devices, arena_capacity), mode_(mode) {}

WorkerGroup DeviceRuntime::launch_workers(std::function<void(Worker&)> fn) {
  WorkerGroup group;
  const std::size_t n = num_devices();
  group.errors_ = std::make_shared<std::vector<std::exception_ptr>>(n);
  auto shared_fn = std::make_shared<std::function<void(Worker&)>>(std::move(fn));
  active_workers_ += n;
  for (std::size_t d = 0; d < n; ++d) {
    group.threads_.emplace_back([this, d, shared_fn, errors = group.errors_] {
      try {
        Worker w(mesh_, int(d), worker_context(int(d)));
        (*shared_fn)(w);
      } catch (...) {
        (*errors)[d] = std::current_exception();
      }
      active_workers_.fetch_sub(1);
    });
  }
  return group;
}

}  // namespace bcmg
