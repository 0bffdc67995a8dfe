#include "srcsel/error.hpp"
#include "srcsel/seed.hpp"

namespace srcsel {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::MissingValueRejected: return "MissingValueRejected";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::TooFewExamples: return "TooFewExamples";
    case ErrorCode::NotEnoughRows: return "NotEnoughRows";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::SingleClassUnregularized: return "SingleClassUnregularized";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptySource: return "EmptySource";
    case ErrorCode::GroupVocabularyMismatch: return "GroupVocabularyMismatch";
    case ErrorCode::DegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::AbsoluteContinuityViolation: return "AbsoluteContinuityViolation";
    case ErrorCode::PlanExceedsData: return "PlanExceedsData";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::NoEligibleGroups: return "NoEligibleGroups";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::EmptyResults: return "EmptyResults";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t index) {
  std::uint64_t h = splitmix64(root);
  h = splitmix64(h ^ fnv1a(tag));
  return splitmix64(h ^ index);
}

}  // namespace srcsel
