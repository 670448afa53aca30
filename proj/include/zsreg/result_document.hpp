#pragma once

#include "zsreg/registration.hpp"
#include "zsreg/uncertainty.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace zsreg {

inline constexpr int kResultSchemaVersion = 1;

// Plain "key = value" lines. Keys, in order:
//   schema, version
//   params.{a11,a12,tx,a21,a22,ty}
//   before.{dice,ssim,mi,mse}, after.{dice,ssim,mi,mse}
//   correspondences, iterations (iterative runs only)
//   timing.{preprocess,conv,com,estimate,warp,metrics,total}_ms, wall_ms
//   uncertainty.trials, uncertainty.var.{a11,...,ty} (when requested)
struct ResultDocument {
  RegistrationResult result;
  double wall_ms = 0.0;
  std::optional<int> iterations;
  std::optional<UncertaintyReport> uncertainty;
};

void write_result_document(std::ostream& out, const ResultDocument& doc);

// Parses "key = value" lines; blank lines and '#' comments are skipped.
std::map<std::string, std::string> parse_key_values(std::istream& in);

}  // namespace zsreg
