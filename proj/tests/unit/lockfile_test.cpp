#include <gtest/gtest.h>

#include <atomic>
#include <thread>
#include <vector>

#include "irds/lockfile.hpp"
#include "test_support.hpp"

namespace irds {
namespace {

namespace fs = std::filesystem;
using namespace std::chrono_literals;

TEST(LockFile, ExclusiveUntilReleased) {
  testing::TempDir dir;
  auto first = LockFile::try_acquire(dir / "x.lock");
  ASSERT_TRUE(first.held());
  EXPECT_TRUE(fs::exists(dir / "x.lock"));
  EXPECT_FALSE(LockFile::try_acquire(dir / "x.lock").held());
  first.release();
  EXPECT_FALSE(fs::exists(dir / "x.lock"));
  EXPECT_TRUE(LockFile::try_acquire(dir / "x.lock").held());
}

TEST(LockFile, MoveTransfersOwnership) {
  testing::TempDir dir;
  LockFile outer;
  {
    auto inner = LockFile::acquire(dir / "m.lock");
    outer = std::move(inner);
  }
  EXPECT_TRUE(outer.held());
  EXPECT_TRUE(fs::exists(dir / "m.lock"));
}

TEST(LockFile, StaleLockIsTakenOver) {
  testing::TempDir dir;
  testing::write_file(dir / "s.lock", "12345");
  fs::last_write_time(dir / "s.lock", fs::file_time_type::clock::now() - 2h);
  EXPECT_FALSE(LockFile::try_acquire(dir / "s.lock", 24h).held());
  EXPECT_TRUE(LockFile::try_acquire(dir / "s.lock", 1h).held());
}

TEST(LockFile, SerializesThreads) {
  testing::TempDir dir;
  std::atomic<int> inside{0};
  std::atomic<int> max_inside{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 5; ++i) {
        auto lock = LockFile::acquire(dir / "t.lock", 15min, 1ms);
        const int now = ++inside;
        int seen = max_inside.load();
        while (now > seen && !max_inside.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(1ms);
        --inside;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(max_inside.load(), 1);
}

}  // namespace
}  // namespace irds
