// Copyright 2026 The prm-vision Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <stdexcept>

#include "prm/camera.hpp"

namespace prm::camera {

SamplingPolicy SamplingPolicy::every_frames(std::uint32_t f) {
  SamplingPolicy p;
  p.mode = SamplingMode::every_f_frames;
  p.f = f;
  check_policy(p);
  return p;
}

SamplingPolicy SamplingPolicy::every_seconds(double t) {
  SamplingPolicy p;
  p.mode = SamplingMode::every_t_seconds;
  p.t = t;
  check_policy(p);
  return p;
}

void check_policy(const SamplingPolicy& policy) {
  if (policy.mode == SamplingMode::every_f_frames && policy.f == 0) {
    throw std::invalid_argument("frame interval must be at least 1");
  }
  if (policy.mode == SamplingMode::every_t_seconds && !(policy.t > 0.0 && std::isfinite(policy.t))) {
    throw std::invalid_argument("sampling period must be a positive number of seconds");
  }
}

bool should_sample(std::uint64_t counter, const SamplingPolicy& policy, Timestamp now,
                   std::optional<Timestamp> last_sample_time) {
  if (policy.mode == SamplingMode::every_f_frames) {
    return policy.f != 0 && counter % policy.f == 0;
  }
  if (!last_sample_time) return true;
  const auto period = std::chrono::duration_cast<Timestamp>(
      std::chrono::duration<double>(policy.t));
  return now - *last_sample_time >= period;
}

}  // namespace prm::camera
