#pragma once

// CSV and JSON exports. Scalars are written at full context precision.

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fwlb/dynamics.hpp"
#include "fwlb/fwcore.hpp"
#include "fwlb/numeric.hpp"
#include "fwlb/worstcase.hpp"

namespace fwlb::io {

using json = nlohmann::ordered_json;

/// Minimal CSV emitter; quotes fields containing separators or quotes.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& os_;
};

std::string format_double(double v);

template <class S>
std::string opt(const Context<S>& ctx, const std::optional<S>& v) {
  return v ? ctx.format(*v) : std::string();
}

/// `t,r,theta,s,gamma,gap`; undefined entries are empty fields.
template <class S>
void write_trajectory(std::ostream& os, const Context<S>& ctx, const fwcore::Trajectory<S>& traj) {
  CsvWriter w(os);
  w.row({"t", "r", "theta", "s", "gamma", "gap"});
  for (const auto& rec : traj.records) {
    w.row({std::to_string(rec.t), ctx.format(rec.r), opt(ctx, rec.theta), opt(ctx, rec.s), opt(ctx, rec.gamma),
           ctx.format(rec.gap)});
  }
}

/// `t,gap`
template <class S>
void write_gap(std::ostream& os, const Context<S>& ctx, const fwcore::Trajectory<S>& traj) {
  CsvWriter w(os);
  w.row({"t", "gap"});
  for (const auto& rec : traj.records) w.row({std::to_string(rec.t), ctx.format(rec.gap)});
}

/// `t,r,s`
template <class S>
void write_rs_trace(std::ostream& os, const Context<S>& ctx, const std::vector<dynamics::RSState<S>>& trace) {
  CsvWriter w(os);
  w.row({"t", "r", "s"});
  for (std::size_t t = 0; t < trace.size(); ++t) {
    w.row({std::to_string(t), ctx.format(trace[t].r), ctx.format(trace[t].s)});
  }
}

/// `r,s`
template <class S>
void write_rs_points(std::ostream& os, const Context<S>& ctx, const std::vector<dynamics::RSState<S>>& pts) {
  CsvWriter w(os);
  w.row({"r", "s"});
  for (const auto& p : pts) w.row({ctx.format(p.r), ctx.format(p.s)});
}

/// `t,x,y` for planar trajectories with recorded points.
template <class S>
void write_points_2d(std::ostream& os, const Context<S>& ctx, const fwcore::Trajectory<S>& traj) {
  CsvWriter w(os);
  w.row({"t", "x", "y"});
  for (const auto& rec : traj.records) {
    if (!rec.x || rec.x->size() < 2) continue;
    w.row({std::to_string(rec.t), ctx.format((*rec.x)[0]), ctx.format((*rec.x)[1])});
  }
}

json precision_json(const PrecisionConfig& cfg);
json rule_json(fwcore::RuleKind kind);

template <class S>
json instance_json(const Context<S>& ctx, const fwcore::BallInstance<S>& inst, fwcore::RuleKind rule) {
  json j;
  j["kind"] = "ball";
  j["dimension"] = inst.dimension();
  json p = json::array();
  for (const auto& v : inst.p) p.push_back(ctx.format(v));
  j["p"] = p;
  j["radius"] = ctx.format(inst.radius);
  j["mu"] = ctx.format(inst.mu);
  j["target_scale"] = ctx.format(inst.target_scale);
  j["rule"] = rule_json(rule);
  j["precision"] = precision_json(ctx.config());
  return j;
}

template <class S>
json instance_json(const Context<S>& ctx, const fwcore::EllipsoidInstance<S>& inst, fwcore::RuleKind rule) {
  json j;
  j["kind"] = "ellipsoid";
  j["dimension"] = inst.A.n;
  json a = json::array();
  for (std::size_t i = 0; i < inst.A.n; ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < inst.A.n; ++k) row.push_back(ctx.format(inst.A(i, k)));
    a.push_back(row);
  }
  j["A"] = a;
  j["alpha"] = ctx.format(inst.alpha);
  json c = json::array();
  for (const auto& v : inst.c) c.push_back(ctx.format(v));
  j["c"] = c;
  j["rule"] = rule_json(rule);
  j["precision"] = precision_json(ctx.config());
  return j;
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class S>
json certificate_json(const Context<S>& ctx, const worstcase::LowerBoundCertificate<S>& cert) {
  json j;
  j["passes"] = cert.passes();
  j["r0"] = ctx.format(cert.r0);
  j["s0"] = ctx.format(cert.s0);
  j["T_hat"] = cert.t_hat;
  j["T"] = cert.horizon;
  j["monotone_s"] = cert.monotone_s;
  j["first_decrease"] = cert.first_decrease ? json(*cert.first_decrease) : json(nullptr);
  j["residual_bound_ok"] = cert.residual_bound_ok;
  j["first_residual_violation"] =
      cert.first_residual_violation ? json(*cert.first_residual_violation) : json(nullptr);
  j["c_range_ok"] = cert.c_range_ok;
  j["c_min"] = number_or_null(cert.c_min);
  j["c_max"] = number_or_null(cert.c_max);
  j["c_samples"] = cert.c_samples;
  j["roundtrip_max_err"] = cert.roundtrip_max_err ? json(ctx.format(*cert.roundtrip_max_err)) : json(nullptr);
  j["slope_estimate"] = number_or_null(cert.slope_estimate);
  j["r0_floor_ok"] = cert.r0_floor_ok;
  return j;
}

/// Creates parent directories, then writes `text`. Throws Error on failure.
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace fwlb::io
