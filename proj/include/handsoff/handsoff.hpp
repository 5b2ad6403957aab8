/*
 Copyright 2026 The handsoff Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef HANDSOFF_HANDSOFF_HPP
#define HANDSOFF_HANDSOFF_HPP

#include "handsoff/lti.hpp"
#include "handsoff/prox.hpp"
#include "handsoff/solver.hpp"
#include "handsoff/certify.hpp"
#include "handsoff/analysis.hpp"
#include "handsoff/io.hpp"
#include "handsoff/experiments.hpp"

#endif // HANDSOFF_HANDSOFF_HPP
