// Copyright 2026 The wbc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef WBC_CLOCK_HPP_
#define WBC_CLOCK_HPP_

#include <chrono>
#include <thread>

namespace wbc {

// Monotonic time in seconds.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double Now() const = 0;
  virtual void SleepUntil(double t) = 0;
};

// Time moves only when told to.
class VirtualClock : public Clock {
 public:
  explicit VirtualClock(double start = 0.0) : now_(start) {}
  double Now() const override { return now_; }
  void SleepUntil(double t) override {
    if (t > now_) now_ = t;
  }
  void Set(double t) { now_ = t; }

 private:
  double now_;
};

class SteadyClock : public Clock {
 public:
  SteadyClock() : epoch_(std::chrono::steady_clock::now()) {}
  double Now() const override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_).count();
  }
  void SleepUntil(double t) override {
    std::this_thread::sleep_until(epoch_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                               std::chrono::duration<double>(t)));
  }

 private:
  std::chrono::steady_clock::time_point epoch_;
};

}  // namespace wbc

#endif  // WBC_CLOCK_HPP_
