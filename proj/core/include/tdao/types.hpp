// Copyright 2026 The tdao Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TDAO_TYPES_HPP_
#define TDAO_TYPES_HPP_

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace tdao {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One vector per agent, indexed by agent id.
using AgentVectors = std::vector<Vec>;

using Iteration = std::int64_t;

}  // namespace tdao

#endif  // TDAO_TYPES_HPP_
