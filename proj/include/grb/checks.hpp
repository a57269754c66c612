#pragma once

#include <grb/superalg.hpp>

#include <string>
#include <vector>

namespace grb {

enum class Verdict { Pass, Fail, Skip };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Skip: return "SKIP";
  }
  return "?";
}

struct Check {
  std::string id;
  Verdict verdict = Verdict::Pass;
  std::string detail;
  std::string residual;  // rendered polynomial, empty when not applicable
  std::string weight;    // rendered weight, empty when not applicable
};

/// Ordered list of verdicts; order is the order checks were added.
struct CheckList {
  std::vector<Check> checks;

  bool ok() const {
    for (auto& c : checks)
      if (c.verdict == Verdict::Fail) return false;
    return true;
  }
  const Check* find(const std::string& id) const {
    for (auto& c : checks)
      if (c.id == id) return &c;
    return nullptr;
  }
  Check& add(std::string id, bool pass, std::string detail = {}) {
    checks.push_back({std::move(id), pass ? Verdict::Pass : Verdict::Fail,
                      std::move(detail), {}, {}});
    return checks.back();
  }
  void append(const CheckList& o, const std::string& prefix = {}) {
    for (auto c : o.checks) {
      c.id = prefix + c.id;
      checks.push_back(std::move(c));
    }
  }
};

}  // namespace grb
