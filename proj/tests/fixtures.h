/*
 * Copyright 2026 The semcf Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Synthetic bundles checked in under tests/data. Regenerate with
//
//   build/tests/semcf_make_fixtures tests/data
//
// The fixtures test fails whenever the generator and the checked-in files
// drift apart.

#ifndef SEMCF_TESTS_FIXTURES_H_
#define SEMCF_TESTS_FIXTURES_H_

#include <filesystem>

#include "semcf/bundle.h"

namespace semcf::fixtures {

// One 2x2x4 image and a gap_linear head.
Bundle MinimalBundle();

// Five hand-annotated cases on a 2x2 grid for the metrics golden suite;
// traces are written next to the bundle under traces/.
Bundle GoldenBundle();

// 2x2 grid, two distractors. The most decisive distractor cell is the
// semantically wrong one for the "mis" queries.
Bundle PlantedBundle();

// 3x3 grid, three classes of three images, every optional annotation.
Bundle ToyBundle();

// 7x7 grid, d = 64, d' = 32, 200 classes; one query of class_000 followed
// by five images of class_001.
Bundle BenchmarkBundle();

// Writes every fixture under `root`: minimal/, corrupted/, golden/,
// planted/, toy/, benchmark/.
void WriteAll(const std::filesystem::path& root);

}  // namespace semcf::fixtures

#endif  // SEMCF_TESTS_FIXTURES_H_
