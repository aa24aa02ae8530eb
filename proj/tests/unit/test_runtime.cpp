#include <gtest/gtest.h>

#include <atomic>
#include <cstring>
#include <sstream>

#include "bcmg/runtime.hpp"
#include "bcmg/generate.hpp"

namespace bcmg {
namespace {

template <class F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::invalid_argument;
}

void fill(DeviceMesh& mesh, const BufferHandle& h, std::byte v) {
  auto b = mesh.resolve(h, h.context);
  std::memset(b.data(), std::to_integer<int>(v), b.size());
}

TEST(ArenaTest, AllocationsAreZeroedAndDisjoint) {
  DeviceMesh mesh(2, 1024);
  const auto a = mesh.allocate(0, 100);
  const auto b = mesh.allocate(0, 200);
  const auto c = mesh.allocate(1, 100);
  for (auto x : mesh.resolve(a, 0)) ASSERT_EQ(x, std::byte{0});
  const auto aa = mesh.address_of(a);
  const auto ba = mesh.address_of(b);
  EXPECT_TRUE(aa + 100 <= ba || ba + 200 <= aa);
  EXPECT_EQ(mesh.address_of(c), 0u);
  EXPECT_EQ(mesh.arena(0).used(), 300u);
}

TEST(ArenaTest, OutOfMemory) {
  DeviceMesh mesh(1, 256);
  const auto a = mesh.allocate(0, 200);
  EXPECT_EQ(code_of([&] { mesh.allocate(0, 57); }), Errc::out_of_memory);
  EXPECT_NO_THROW(mesh.allocate(0, 56));
  mesh.release(a);
  EXPECT_NO_THROW(mesh.allocate(0, 200));
}

TEST(ArenaTest, FragmentationReportsNoContiguousRange) {
  DeviceMesh mesh(1, 300);
  const auto a = mesh.allocate(0, 100);
  mesh.allocate(0, 100);
  const auto c = mesh.allocate(0, 100);
  mesh.release(a);
  mesh.release(c);
  EXPECT_EQ(code_of([&] { mesh.allocate(0, 150); }), Errc::out_of_memory);
  EXPECT_NO_THROW(mesh.allocate(0, 100));
}

TEST(ArenaTest, FirstFitReusesHoles) {
  DeviceMesh mesh(1);
  const auto a = mesh.allocate(0, 64);
  mesh.allocate(0, 64);
  const auto addr = mesh.address_of(a);
  mesh.release(a);
  EXPECT_EQ(mesh.address_of(mesh.allocate(0, 32)), addr);
}

TEST(ArenaTest, UnknownDevice) {
  DeviceMesh mesh(2);
  EXPECT_EQ(code_of([&] { mesh.allocate(2, 8); }), Errc::unknown_device);
  EXPECT_EQ(code_of([&] { DeviceMesh bad(0); }), Errc::invalid_argument);
}

TEST(PeerCopyTest, CopiesBytesAcrossDevicesAndLogsArenaAddresses) {
  DeviceMesh mesh(2);
  mesh.allocate(0, 16);
  const auto src = mesh.allocate(0, 32);
  const auto dst = mesh.allocate(1, 32);
  fill(mesh, src, std::byte{7});
  mesh.peer_copy(src, 4, dst, 8, 16);
  auto d = mesh.resolve(dst, 0);
  for (std::size_t i = 0; i < 32; ++i) EXPECT_EQ(d[i], (i >= 8 && i < 24) ? std::byte{7} : std::byte{0}) << i;
  ASSERT_EQ(mesh.copy_log().size(), 1u);
  EXPECT_EQ(mesh.copy_log()[0], (CopyRecord{0, mesh.address_of(src) + 4, 1, 8, 16}));
}

TEST(PeerCopyTest, SameBufferNonOverlappingAllowed) {
  DeviceMesh mesh(1);
  const auto h = mesh.allocate(0, 32);
  EXPECT_NO_THROW(mesh.peer_copy(h, 0, h, 16, 16));
  EXPECT_EQ(code_of([&] { mesh.peer_copy(h, 0, h, 8, 16); }), Errc::overlapping_copy);
}

TEST(PeerCopyTest, BoundsChecked) {
  DeviceMesh mesh(2);
  const auto a = mesh.allocate(0, 16);
  const auto b = mesh.allocate(1, 16);
  EXPECT_EQ(code_of([&] { mesh.peer_copy(a, 8, b, 0, 9); }), Errc::out_of_range);
  EXPECT_EQ(code_of([&] { mesh.peer_copy(a, 0, b, 17, 0); }), Errc::out_of_range);
  EXPECT_TRUE(mesh.copy_log().empty());
}

TEST(PeerCopyTest, StaleHandleRejected) {
  DeviceMesh mesh(2);
  const auto a = mesh.allocate(0, 16);
  const auto b = mesh.allocate(1, 16);
  mesh.release(a);
  EXPECT_EQ(code_of([&] { mesh.peer_copy(a, 0, b, 0, 8); }), Errc::stale_handle);
  EXPECT_EQ(code_of([&] { mesh.release(a); }), Errc::stale_handle);
}

TEST(PeerCopyTest, ForeignContextRejected) {
  DeviceMesh mesh(2);
  const auto worker_side = mesh.allocate(0, 16, 1);
  const auto b = mesh.allocate(1, 16);
  EXPECT_EQ(code_of([&] { mesh.peer_copy(worker_side, 0, b, 0, 8); }), Errc::foreign_handle);
  EXPECT_EQ(code_of([&] { mesh.resolve(worker_side, kCoordinatorContext); }), Errc::foreign_handle);
  EXPECT_NO_THROW(mesh.resolve(worker_side, 1));
}

TEST(StagingTest, MustAlternateWriteAndRead) {
  DeviceMesh mesh(1);
  const auto col = mesh.allocate(0, 64);
  const auto s = mesh.allocate_staging(32);
  EXPECT_EQ(s.device, kScratchDevice);
  EXPECT_EQ(code_of([&] { mesh.peer_copy(s, 0, col, 0, 32); }), Errc::staging_misuse);
  mesh.peer_copy(col, 0, s, 0, 32);
  EXPECT_EQ(code_of([&] { mesh.peer_copy(col, 32, s, 0, 32); }), Errc::staging_misuse);
  mesh.peer_copy(s, 0, col, 32, 32);
  EXPECT_NO_THROW(mesh.peer_copy(col, 0, s, 0, 32));
}

TEST(AuditTest, OverwriteViolationsCounted) {
  // Column at device 0 address 0 is overwritten before anyone read it.
  std::vector<CopyRecord> bad{{0, 64, 0, 0, 64}, {0, 0, 1, 0, 64}};
  EXPECT_EQ(count_overwrite_violations(bad), 2u);
  // Read first, then overwrite; scratch destinations are exempt.
  std::vector<CopyRecord> good{{0, 0, kScratchDevice, 0, 64}, {0, 64, 0, 0, 64}, {kScratchDevice, 0, 0, 64, 64}};
  EXPECT_EQ(count_overwrite_violations(good), 0u);
}

TEST(AuditTest, ReplayReproducesCopies) {
  DeviceMesh mesh(2);
  const auto a = mesh.allocate(0, 32);
  const auto b = mesh.allocate(1, 32);
  fill(mesh, a, std::byte{3});
  MeshSnapshot before = mesh.snapshot();
  mesh.peer_copy(a, 0, b, 16, 16);
  mesh.peer_copy(b, 16, a, 0, 8);
  replay(before, mesh.copy_log());
  EXPECT_EQ(before, mesh.snapshot());
}

TEST(AuditTest, CsvFormat) {
  std::ostringstream os;
  std::vector<CopyRecord> log{{0, 8, -1, 0, 16}};
  write_copy_log_csv(os, log);
  EXPECT_EQ(os.str(), "src_device,src_offset,dst_device,dst_offset,length\n0,8,-1,0,16\n");
}

TEST(IpcTest, TokenIsTwentyEightBytesAndRoundTrips) {
  const IpcToken t{3, 0x1122334455667788ULL, 4096, 0xdeadbeefULL};
  const auto bytes = serialize(t);
  ASSERT_EQ(bytes.size(), 28u);
  const auto back = deserialize_token(bytes);
  EXPECT_EQ(back.device, 3);
  EXPECT_EQ(back.id, t.id);
  EXPECT_EQ(back.length, 4096u);
  EXPECT_EQ(back.key, t.key);
  EXPECT_EQ(code_of([&] { deserialize_token(std::span(bytes).first(27)); }), Errc::format_error);
}

TEST(IpcTest, ImportOnlyExportedLiveHandles) {
  DeviceMesh mesh(2);
  const auto h = mesh.allocate(1, 64, 2);
  const auto token = mesh.export_handle(h, 2);
  const auto imported = mesh.import_handle(token, kCoordinatorContext);
  EXPECT_EQ(imported.context, kCoordinatorContext);
  EXPECT_EQ(mesh.resolve(imported, kCoordinatorContext).data(), mesh.resolve(h, 2).data());
  IpcToken forged = token;
  forged.key += 100;
  EXPECT_EQ(code_of([&] { mesh.import_handle(forged, 0); }), Errc::stale_handle);
  mesh.release(h);
  EXPECT_EQ(code_of([&] { mesh.import_handle(token, 0); }), Errc::stale_handle);
}

class RegistryTest : public ::testing::TestWithParam<CoordinationMode> {};

TEST_P(RegistryTest, CompleteAfterEveryWorkerPublishes) {
  DeviceRuntime rt(4, GetParam());
  HandleRegistry reg(rt.mesh(), rt.mode());
  EXPECT_FALSE(reg.complete());
  rt.run_workers([&](Worker& w) {
    const auto h = w.allocate(8);
    w.view<std::uint64_t>(h)[0] = 100 + std::uint64_t(w.device());
    w.publish(reg, h);
  });
  EXPECT_TRUE(reg.complete());
  const std::uint64_t sum = rt.run_coordinated({&reg}, [](Coordinator& c) {
    std::uint64_t s = 0;
    for (const auto& h : c.handles(0)) s += c.view<std::uint64_t>(h)[0];
    return s;
  });
  EXPECT_EQ(sum, 100u + 101 + 102 + 103);
}

TEST_P(RegistryTest, DoublePublishRejected) {
  DeviceRuntime rt(1, GetParam());
  HandleRegistry reg(rt.mesh(), rt.mode());
  EXPECT_THROW(rt.run_workers([&](Worker& w) {
    w.publish(reg, w.allocate(8));
    w.publish(reg, w.allocate(8));
  }),
               Error);
  DeviceMesh& mesh = rt.mesh();
  EXPECT_EQ(code_of([&] { reg.publish(0, mesh.allocate(0, 8, rt.worker_context(0))); }), Errc::double_publish);
}

TEST_P(RegistryTest, UnknownDeviceRejected) {
  DeviceRuntime rt(2, GetParam());
  HandleRegistry reg(rt.mesh(), rt.mode());
  EXPECT_EQ(code_of([&] { reg.publish(5, BufferHandle{5, 1, 8, 0}); }), Errc::unknown_device);
  EXPECT_EQ(code_of([&] { reg.publish(-1, BufferHandle{-1, 1, 8, 0}); }), Errc::unknown_device);
}

TEST_P(RegistryTest, IncompleteRegistryBlocksCoordinator) {
  DeviceRuntime rt(3, GetParam());
  HandleRegistry reg(rt.mesh(), rt.mode());
  rt.run_workers([&](Worker& w) {
    if (w.device() != 1) w.publish(reg, w.allocate(8));
  });
  EXPECT_FALSE(reg.complete());
  bool ran = false;
  EXPECT_EQ(code_of([&] { rt.run_coordinated({&reg}, [&](Coordinator&) { ran = true; }); }),
            Errc::incomplete_registry);
  EXPECT_FALSE(ran);
}

INSTANTIATE_TEST_SUITE_P(Modes, RegistryTest,
                         ::testing::Values(CoordinationMode::shared_address, CoordinationMode::isolated),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(IsolationTest, WorkerHandlesDoNotResolveInCoordinatorContext) {
  DeviceRuntime rt(2, CoordinationMode::isolated);
  HandleRegistry reg(rt.mesh(), rt.mode());
  std::vector<BufferHandle> raw(2);
  rt.run_workers([&](Worker& w) {
    raw[std::size_t(w.device())] = w.allocate(16);
    w.publish(reg, raw[std::size_t(w.device())]);
  });
  rt.run_coordinated({&reg}, [&](Coordinator& c) {
    EXPECT_EQ(code_of([&] { c.bytes(raw[0]); }), Errc::foreign_handle);
    EXPECT_NE(c.handles(0)[0], raw[0]);
    EXPECT_NO_THROW(c.peer_copy(c.handles(0)[0], 0, c.handles(0)[1], 0, 16));
  });
}

TEST(CoordinationTest, NotQuiescentWhileWorkersRun) {
  DeviceRuntime rt(2, CoordinationMode::shared_address);
  HandleRegistry reg(rt.mesh(), rt.mode());
  std::atomic<bool> release{false};
  auto group = rt.launch_workers([&](Worker& w) {
    w.publish(reg, w.allocate(8));
    while (!release.load()) std::this_thread::yield();
  });
  EXPECT_EQ(code_of([&] { rt.run_coordinated({&reg}, [](Coordinator&) {}); }), Errc::not_quiescent);
  release = true;
  group.join();
  EXPECT_NO_THROW(rt.run_coordinated({&reg}, [](Coordinator&) {}));
}

TEST(CoordinationTest, OneCoordinatorAtATime) {
  DeviceRuntime rt(1, CoordinationMode::shared_address);
  HandleRegistry reg(rt.mesh(), rt.mode());
  rt.run_workers([&](Worker& w) { w.publish(reg, w.allocate(8)); });
  rt.run_coordinated({&reg}, [&](Coordinator&) {
    EXPECT_EQ(code_of([&] { rt.run_coordinated({&reg}, [](Coordinator&) {}); }), Errc::coordinator_busy);
  });
  EXPECT_NO_THROW(rt.run_coordinated({&reg}, [](Coordinator&) {}));
}

TEST(CoordinationTest, WorkerExceptionsPropagate) {
  DeviceRuntime rt(3, CoordinationMode::isolated);
  EXPECT_THROW(rt.run_workers([](Worker& w) {
    if (w.device() == 2) throw Error(Errc::invalid_argument, "boom");
  }),
               Error);
  EXPECT_EQ(rt.active_workers(), 0u);
}

TEST(CoordinationTest, ModesProduceIdenticalMemory) {
  auto run = [](CoordinationMode mode) {
    DeviceRuntime rt(3, mode);
    HandleRegistry reg(rt.mesh(), rt.mode());
    rt.run_workers([&](Worker& w) {
      const auto h = w.allocate(64);
      SplitMix64 g(std::uint64_t(w.device()) + 1);
      for (auto& x : w.view<std::uint64_t>(h)) x = g.next();
      w.publish(reg, h);
    });
    return rt.run_coordinated({&reg}, [](Coordinator& c) {
      const auto& h = c.handles(0);
      c.peer_copy(h[0], 0, h[1], 32, 32);
      c.peer_copy(h[2], 8, h[0], 0, 16);
      return std::pair{c.mesh().snapshot(), c.mesh().copy_log()};
    });
  };
  const auto spmd = run(CoordinationMode::shared_address);
  const auto mpmd = run(CoordinationMode::isolated);
  EXPECT_EQ(spmd.first, mpmd.first);
  EXPECT_EQ(spmd.second, mpmd.second);
}

TEST(ModeNamesTest, RoundTrip) {
  EXPECT_EQ(parse_mode("spmd"), CoordinationMode::shared_address);
  EXPECT_EQ(parse_mode("mpmd"), CoordinationMode::isolated);
  EXPECT_FALSE(parse_mode("mpi").has_value());
}

}  // namespace
}  // namespace bcmg
