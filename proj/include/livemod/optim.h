// Copyright 2026-present the livemod project
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

#pragma once

#include <Eigen/Dense>

namespace livemod {

/// Adam over one flat parameter vector.
class Adam {
public:
    explicit Adam(Eigen::Index size,
                  double lr,
                  double beta1 = 0.9,
                  double beta2 = 0.999,
                  double eps = 1e-8);

    void
    step(Eigen::Ref<Eigen::VectorXd> theta, const Eigen::VectorXd& grad);

    double
    lr() const {
        return lr_;
    }

private:
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    long t_{0};
    Eigen::VectorXd m_;
    Eigen::VectorXd v_;
};

}  // namespace livemod
