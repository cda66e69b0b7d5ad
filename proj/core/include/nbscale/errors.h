// core/include/nbscale/errors.h

// Copyright 2026  nbscale authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef NBSCALE_ERRORS_H_
#define NBSCALE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace nbscale {

// Malformed or inconsistent input data (files, corpora, degenerate WERs).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A regression whose design matrix cannot identify the requested parameter.
class IdentifiabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nbscale

#endif  // NBSCALE_ERRORS_H_
