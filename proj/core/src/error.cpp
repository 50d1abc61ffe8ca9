// Copyright 2026 The pplmark Authors.
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

#include "pplmark/error.hpp"

namespace pplmark {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedChat: return "MalformedChat";
    case ErrorKind::EmptyTranscript: return "EmptyTranscript";
    case ErrorKind::MissingClassDirectory: return "MissingClassDirectory";
    case ErrorKind::DuplicateSession: return "DuplicateSession";
    case ErrorKind::EmptyGroup: return "EmptyGroup";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::InvalidOrder: return "InvalidOrder";
    case ErrorKind::OutOfVocabularyTraining: return "OutOfVocabularyTraining";
    case ErrorKind::UnknownWord: return "UnknownWord";
    case ErrorKind::ZeroLength: return "ZeroLength";
    case ErrorKind::InfinitePerplexity: return "InfinitePerplexity";
    case ErrorKind::ScorerStartFailure: return "ScorerStartFailure";
    case ErrorKind::TrainingFailure: return "TrainingFailure";
    case ErrorKind::ScoringFailure: return "ScoringFailure";
    case ErrorKind::ScorerCrashed: return "ScorerCrashed";
    case ErrorKind::ProtocolViolation: return "ProtocolViolation";
    case ErrorKind::InsufficientGroup: return "InsufficientGroup";
    case ErrorKind::DegenerateGroup: return "DegenerateGroup";
    case ErrorKind::SubjectMismatch: return "SubjectMismatch";
    case ErrorKind::NonPositiveInput: return "NonPositiveInput";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace pplmark
