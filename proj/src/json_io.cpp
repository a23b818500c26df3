#include "iqm/json_io.hpp"

#include <cstdio>
#include <sstream>

namespace iqm {
namespace {

Json ratios(const std::vector<Ratio>& v) {
  Json out = Json::array();
  for (const auto& r : v) out.push_back(to_string(r));
  return out;
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

Json to_json(const Ratio& r) { return {{"exact", to_string(r)}, {"value", to_double(r)}}; }

Json to_json(const SpacetimeDomain& d) {
  return {{"box_min", d.box_min}, {"box_max", d.box_max}, {"t_start", d.t_start}, {"t_end", d.t_end}};
}

SpacetimeDomain domain_from_json(const Json& j) {
  SpacetimeDomain d;
  d.box_min = j.at("box_min").get<Point3>();
  d.box_max = j.at("box_max").get<Point3>();
  d.t_start = j.at("t_start").get<double>();
  d.t_end = j.at("t_end").get<double>();
  return d;
}

Json to_json(const FrequencyTable& t) {
  return {{"generation", t.generation}, {"grid", t.grid},         {"codes", t.codes},
          {"counts", t.counts},         {"total", t.total},       {"half_counts", t.half_counts},
          {"half_total", t.half_total}, {"seed", t.seed}};
}

Json to_json(const ProbabilityLaw& law) {
  return {{"generation", law.generation},
          {"grid", law.grid},
          {"codes", law.codes},
          {"counts", law.counts},
          {"total", law.total},
          {"frequencies", ratios(law.frequencies())},
          {"frequencies_decimal", law.frequencies_double()},
          {"convergence", law.convergence},
          {"epsilon", law.epsilon},
          {"converged", law.converged},
          {"wilson_half_width", law.wilson_half_width}};
}

Json to_json(const ValidationReport& v) {
  Json checks = Json::array();
  for (const auto& c : v.checks)
    checks.push_back({{"axiom", c.axiom}, {"passed", c.passed}, {"instances", c.instances}, {"witness", c.witness}});
  return {{"passed", v.passed()}, {"checks", checks}};
}

Json to_json(const DependenceReport& d) {
  return {{"p_a", to_json(d.p_a)},
          {"p_b", to_json(d.p_b)},
          {"p_ab", to_json(d.p_ab)},
          {"product", to_json(d.product)},
          {"difference", to_json(d.difference)},
          {"independent", d.independent},
          {"empirically_independent", d.empirically_independent}};
}

Json to_json(const Branch& b) {
  Json channels = Json::array();
  for (const auto& ch : b.channels) {
    Json c = {{"id", ch.id}, {"grid", ch.grid->name()}, {"apparatus", ch.apparatus_id},
              {"branch_domain", to_json(ch.branch_domain)}};
    if (ch.subsystem) c["subsystem"] = *ch.subsystem;
    channels.push_back(std::move(c));
  }
  Json laws = Json::array();
  for (const auto& l : b.laws) laws.push_back(to_json(l));
  return {{"trunk", {{"generation", b.trunk.generation}, {"trunk_domain", to_json(b.trunk.trunk_domain)}}},
          {"grids", b.grid_names()},
          {"channels", channels},
          {"branch_domain", to_json(b.branch_domain)},
          {"seed", b.seed},
          {"space",
           {{"universe", b.space.labels()},
            {"counts", b.space.counts()},
            {"total", b.space.total()},
            {"explicit_algebra", b.space.explicit_algebra()}}},
          {"laws", laws},
          {"validation", to_json(b.validation)},
          {"oracle", {{"joint", b.exact_joint}, {"laws", b.exact_laws}}}};
}

Json to_json(const ProbabilityTree& t) {
  Json branches = Json::array();
  for (const auto& b : t.branches) branches.push_back(to_json(b));
  return {{"trunk",
           {{"generation", t.trunk.generation},
            {"trunk_domain", to_json(t.trunk.trunk_domain)},
            {"t0", t.trunk.t0},
            {"tG", t.trunk.tG}}},
          {"trials_per_branch", t.trials_per_branch},
          {"exemplars_generated", t.exemplars_generated},
          {"seed", t.seed},
          {"valid", t.valid()},
          {"branches", branches}};
}

Json to_json(const MetaDependenceReport& m) {
  return {{"grid_x", m.grid_x},
          {"grid_y", m.grid_y},
          {"branch_x", m.branch_x},
          {"branch_y", m.branch_y},
          {"dispersion_x", m.dispersion_x},
          {"dispersion_y", m.dispersion_y},
          {"exact_dispersion_x", m.exact_dispersion_x},
          {"exact_dispersion_y", m.exact_dispersion_y},
          {"commuting", m.commuting},
          {"extremal_witness", m.extremal_witness},
          {"sharp_grid", m.sharp_grid},
          {"both_exactly_sharp", m.both_exactly_sharp},
          {"consequence_holds", m.consequence_holds}};
}

Json to_json(const DeficitReport& d) {
  return {{"grid", d.grid},
          {"codes", d.codes},
          {"weights", {to_string(d.w1), to_string(d.w2)}},
          {"law1", to_json(d.law1)},
          {"law2", to_json(d.law2)},
          {"law12", to_json(d.law12)},
          {"deficit", ratios(d.deficit)},
          {"raw_residual", ratios(d.raw_residual)},
          {"mixture_total", to_string(d.mixture_total)},
          {"max_abs_deficit", d.max_abs_deficit},
          {"significant", d.significant},
          {"any_significant", d.any_significant},
          {"deficit_sigma", d.deficit_sigma},
          {"oracle",
           {{"p1", d.exact_p1},
            {"p2", d.exact_p2},
            {"p12", d.exact_p12},
            {"deficit", d.exact_deficit},
            {"raw_residual", d.exact_raw_residual}}}};
}

Json to_json(const MeasurementRecord& r) {
  Json marks = Json::array();
  for (const auto& m : r.marks) marks.push_back({{"position", m.position}, {"time", m.time}});
  return {{"channel", r.channel}, {"grid", r.grid}, {"marks", marks}, {"index", r.index}, {"value", r.value},
          {"label", r.value_label}, {"trial", r.trial}, {"t0", r.t0}, {"tG", r.tG}, {"tX", r.tX}};
}

Json to_json(const TimeOfFlight& t) { return {{"momentum", t.momentum}, {"magnitude", t.magnitude}}; }

std::string to_csv(const FrequencyTable& t) {
  std::ostringstream out;
  out << "grid,value_code,count,frequency\n";
  for (std::size_t j = 0; j < t.counts.size(); ++j) {
    const double f = t.total == 0 ? 0.0 : static_cast<double>(t.counts[j]) / static_cast<double>(t.total);
    out << t.grid << ',' << format_double(t.codes[j]) << ',' << t.counts[j] << ',' << format_double(f) << '\n';
  }
  return out.str();
}

}  // namespace iqm
