// Copyright 2026 The rcx Authors.
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


#ifndef RCX_PARALLEL_HPP_
#define RCX_PARALLEL_HPP_

#include <functional>

namespace rcx {

// Worker cap for parallel_for. Defaults to RCX_THREADS if set, else the
// hardware concurrency.
int num_threads();
void set_num_threads(int n);

// Runs body(i) for i in [0, n) on up to num_threads() threads, in contiguous
// static chunks. Bodies must write only to slots owned by i; callers reduce in
// index order afterwards so results do not depend on the thread count.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace rcx

#endif  // RCX_PARALLEL_HPP_
