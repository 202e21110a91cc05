#include <cmath>

#include "ecosched/types.hpp"

namespace ecosched {

namespace {

void require(bool ok, const std::string& site_id, const char* what) {
  if (!ok) {
    throw InvalidArgument("site '" + site_id + "': " + what);
  }
}

}  // namespace

double CloudSite::cop_value() const {
  if (!cop) {
    throw InvalidArgument("site '" + id + "': COP has not been set");
  }
  return *cop;
}

CloudSite CloudSite::with_cop(double value) const {
  CloudSite copy = *this;
  copy.cop = value;
  validate(copy);
  return copy;
}

void validate(const CloudSite& s) {
  require(!s.id.empty(), s.id, "id must be non-empty");
  require(std::isfinite(s.carbon_rate) && s.carbon_rate >= 0.0, s.id, "carbon_rate must be >= 0");
  require(std::isfinite(s.energy_price) && s.energy_price >= 0.0, s.id,
          "energy_price must be >= 0");
  if (s.cop) {
    require(*s.cop > 0.0 && !std::isnan(*s.cop), s.id, "cop must be > 0");
  }
  require(std::isfinite(s.beta) && s.beta >= 0.0, s.id, "beta must be >= 0");
  require(std::isfinite(s.alpha) && s.alpha > 0.0, s.id, "alpha must be > 0");
  require(std::isfinite(s.f_min) && s.f_min > 0.0, s.id, "f_min must be > 0");
  require(std::isfinite(s.f_max) && s.f_min < s.f_max, s.id, "f_min must be < f_max");
  require(std::isfinite(s.exec_price) && s.exec_price >= 0.0, s.id, "exec_price must be >= 0");
  require(s.cpu_count >= 1, s.id, "cpu_count must be >= 1");
}

std::string_view to_string(Urgency urgency) {
  return urgency == Urgency::High ? "HU" : "LU";
}

void validate(const Job& job) {
  const std::string id = std::to_string(job.id);
  if (job.n_cpus < 1) throw InvalidArgument("job " + id + ": n_cpus must be >= 1");
  if (!(job.base_runtime > 0.0)) throw InvalidArgument("job " + id + ": runtime must be > 0");
  if (!(job.gamma >= 0.0 && job.gamma <= 1.0)) {
    throw InvalidArgument("job " + id + ": gamma must lie in [0, 1]");
  }
  if (job.deadline < job.submit_time + job.base_runtime) {
    throw InvalidArgument("job " + id + ": deadline earlier than submit + runtime");
  }
}

}  // namespace ecosched
