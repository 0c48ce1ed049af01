// gcv: batch CLI for the generalized-critical-value and thinness toolkit.
// Every subcommand emits a JSON report embedding the full configuration
// (defaults included) and the tool version; clouds go to CSV. All randomness
// flows from --seed through named sub-streams, so identical invocations
// produce byte-identical reports.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gcv/critical.hpp"
#include "gcv/error.hpp"
#include "gcv/io.hpp"
#include "gcv/pointcloud.hpp"
#include "gcv/puiseux.hpp"
#include "gcv/thin.hpp"
#include "gcv/version.hpp"

namespace {

using gcv::json;

std::vector<double> parse_double_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw gcv::ParseError(std::string(flag) + ": malformed number '" + item + "'", 0);
    }
  }
  if (out.empty()) throw gcv::ParseError(std::string(flag) + ": empty list", 0);
  return out;
}

void emit_report(const json& report, const std::string& out_path) {
  std::string text = report.dump(2);
  text += '\n';
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw gcv::Error("cannot write to " + out_path);
    out << text;
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw gcv::Error("cannot write to " + path);
  out << text;
}

gcv::PointCloud load_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gcv::Error("cannot open file: " + path);
  return gcv::read_cloud_csv(in);
}

json base_report(const char* subcommand, json config) {
  json report;
  report["version"] = std::string(gcv::kToolName) + " " + gcv::kVersion;
  config["subcommand"] = subcommand;
  report["config"] = std::move(config);
  return report;
}

struct MapDomainFlags {
  std::string map_path;
  std::string domain_path;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string cloud_out;
  std::size_t samples = 4096;
  std::size_t starts = 48;
  int iters = 200;
};

void add_common(CLI::App* sub, MapDomainFlags& f, bool with_domain,
                bool domain_required = false) {
  sub->add_option("--map", f.map_path, "map JSON file")->required();
  if (with_domain) {
    auto* opt = sub->add_option("--domain", f.domain_path, "domain JSON file");
    if (domain_required) opt->required();
  }
  sub->add_option("--seed", f.seed, "64-bit seed for all sub-streams");
  sub->add_option("--out", f.out_path, "report file (default stdout)");
  sub->add_option("--cloud-out", f.cloud_out, "witness CSV file");
  sub->add_option("--samples", f.samples, "sample budget");
  sub->add_option("--starts", f.starts, "simplex multi-starts");
  sub->add_option("--iters", f.iters, "simplex iterations per start");
}

json common_config(const MapDomainFlags& f, bool with_domain) {
  json c;
  c["map"] = f.map_path;
  if (with_domain) c["domain"] = f.domain_path;
  c["seed"] = f.seed;
  c["out"] = f.out_path;
  c["cloud_out"] = f.cloud_out;
  c["samples"] = f.samples;
  c["starts"] = f.starts;
  c["iters"] = f.iters;
  return c;
}

gcv::Domain default_box_for(const gcv::PolynomialMap& map) {
  gcv::Domain d;
  d.box.assign(map.n(), {-2.0, 2.0});
  return d;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generalized critical values, thinness and Puiseux toolkit"};
  app.set_version_flag("--version", std::string(gcv::kToolName) + " " + gcv::kVersion);
  app.require_subcommand(1);

  // ---- nu ----------------------------------------------------------------
  auto* nu_cmd = app.add_subcommand("nu", "Rabier nu and (1+|x|)nu at a point");
  struct {
    std::string map_path, point, out_path;
  } nu_flags;
  nu_cmd->add_option("--map", nu_flags.map_path, "map JSON file")->required();
  nu_cmd->add_option("--point", nu_flags.point, "comma-separated point")->required();
  nu_cmd->add_option("--out", nu_flags.out_path, "report file (default stdout)");
  nu_cmd->callback([&] {
    auto map = gcv::load_map(nu_flags.map_path);
    auto x = parse_double_list(nu_flags.point, "--point");
    json config{{"map", nu_flags.map_path}, {"point", nu_flags.point}, {"out", nu_flags.out_path}};
    auto report = base_report("nu", config);
    report["nu"] = gcv::nu_at(map, x);
    report["kos"] = gcv::kos_weight(map, x);
    emit_report(report, nu_flags.out_path);
  });

  // ---- parse ---------------------------------------------------------------
  auto* parse_cmd = app.add_subcommand("parse", "parse a map and print it with its Jacobian");
  struct {
    std::string map_path, out_path;
  } parse_flags;
  parse_cmd->add_option("--map", parse_flags.map_path, "map JSON file")->required();
  parse_cmd->add_option("--out", parse_flags.out_path, "report file (default stdout)");
  parse_cmd->callback([&] {
    auto map = gcv::load_map(parse_flags.map_path);
    auto jac = gcv::differentiate(map);
    json config{{"map", parse_flags.map_path}, {"out", parse_flags.out_path}};
    auto report = base_report("parse", config);
    report["map"] = gcv::map_to_json(map);
    report["jacobian"] = json::array();
    for (std::size_t i = 0; i < jac.rows; ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < jac.cols; ++j)
        row.push_back(gcv::to_string(jac.entry(i, j), map.vars));
      report["jacobian"].push_back(std::move(row));
    }
    emit_report(report, parse_flags.out_path);
  });

  // ---- critical ------------------------------------------------------------
  auto* crit_cmd = app.add_subcommand("critical", "sample the z-critical set c_z(f)");
  MapDomainFlags crit_flags;
  double crit_z = 0.0;
  add_common(crit_cmd, crit_flags, /*with_domain=*/true);
  crit_cmd->add_option("--z", crit_z, "threshold z > 0")->required();
  crit_cmd->callback([&] {
    auto map = gcv::load_map(crit_flags.map_path);
    auto domain = crit_flags.domain_path.empty()
                      ? default_box_for(map)
                      : gcv::load_domain(crit_flags.domain_path, map.vars);
    gcv::SampleBudget budget{crit_flags.samples, crit_flags.starts, crit_flags.iters};
    auto cloud = gcv::find_z_critical(map, domain, crit_z, budget, crit_flags.seed);
    json config = common_config(crit_flags, true);
    config["z"] = crit_z;
    auto report = base_report("critical", config);
    report["count"] = cloud.size();
    report["meta"] = cloud.meta;
    if (!crit_flags.cloud_out.empty()) {
      std::ostringstream csv;
      gcv::write_critical_cloud_csv(csv, cloud, map, crit_z);
      write_file(crit_flags.cloud_out, csv.str());
      report["cloud_csv"] = crit_flags.cloud_out;
    }
    emit_report(report, crit_flags.out_path);
  });

  // ---- k0 --------------------------------------------------------------------
  auto* k0_cmd = app.add_subcommand("k0", "estimate the classical critical values K0");
  MapDomainFlags k0_flags;
  double k0_tol = 1e-6, k0_cluster_rel = 0.05;
  add_common(k0_cmd, k0_flags, /*with_domain=*/true);
  k0_cmd->add_option("--tol", k0_tol, "nu tolerance for minimizers");
  k0_cmd->add_option("--cluster-rel", k0_cluster_rel, "cluster threshold as a diameter fraction");
  k0_cmd->callback([&] {
    auto map = gcv::load_map(k0_flags.map_path);
    auto domain = k0_flags.domain_path.empty()
                      ? default_box_for(map)
                      : gcv::load_domain(k0_flags.domain_path, map.vars);
    gcv::SampleBudget budget{k0_flags.samples, k0_flags.starts, k0_flags.iters};
    auto estimate = gcv::estimate_K0(map, domain, k0_tol, budget, k0_flags.seed, k0_cluster_rel);
    json config = common_config(k0_flags, true);
    config["tol"] = k0_tol;
    config["cluster_rel"] = k0_cluster_rel;
    auto report = base_report("k0", config);
    report["estimate"] = estimate;
    if (!k0_flags.cloud_out.empty()) {
      std::ostringstream csv;
      gcv::write_witness_csv(csv, estimate, map.n(), map.k());
      write_file(k0_flags.cloud_out, csv.str());
      report["cloud_csv"] = k0_flags.cloud_out;
    }
    emit_report(report, k0_flags.out_path);
  });

  // ---- kinf / k1 ---------------------------------------------------------------
  struct ScheduleFlags {
    MapDomainFlags common;
    std::string scales;
    int i = 2;
    std::size_t witness_cap = 512;
    double cluster_rel = 0.05;
  };

  auto make_schedule = [](const ScheduleFlags& f) {
    gcv::Schedule schedule;
    schedule.i = f.i;
    schedule.scales = parse_double_list(f.scales, "--scales");
    schedule.samples_per_scale = f.common.samples;
    schedule.seed = f.common.seed;
    schedule.minimizer_starts = f.common.starts;
    schedule.minimizer_iters = f.common.iters;
    schedule.witness_cap = f.witness_cap;
    return schedule;
  };

  auto schedule_config = [](const ScheduleFlags& f, bool with_domain) {
    json c = common_config(f.common, with_domain);
    c["scales"] = f.scales;
    c["i"] = f.i;
    c["witness_cap"] = f.witness_cap;
    c["cluster_rel"] = f.cluster_rel;
    return c;
  };

  auto* kinf_cmd = app.add_subcommand("kinf", "estimate asymptotic critical values at infinity");
  ScheduleFlags kinf_flags;
  add_common(kinf_cmd, kinf_flags.common, /*with_domain=*/false);
  kinf_cmd->add_option("--scales", kinf_flags.scales, "increasing sphere radii, e.g. 10,100,1000")->required();
  kinf_cmd->add_option("--i", kinf_flags.i, "threshold exponent parameter");
  kinf_cmd->add_option("--witness-cap", kinf_flags.witness_cap, "retained witnesses per scale");
  kinf_cmd->add_option("--cluster-rel", kinf_flags.cluster_rel, "cluster threshold as a diameter fraction");
  kinf_cmd->callback([&] {
    auto map = gcv::load_map(kinf_flags.common.map_path);
    auto estimate = gcv::estimate_Kinf(map, make_schedule(kinf_flags), kinf_flags.cluster_rel);
    auto report = base_report("kinf", schedule_config(kinf_flags, false));
    report["estimate"] = estimate;
    if (!kinf_flags.common.cloud_out.empty()) {
      std::ostringstream csv;
      gcv::write_witness_csv(csv, estimate, map.n(), map.k());
      write_file(kinf_flags.common.cloud_out, csv.str());
      report["cloud_csv"] = kinf_flags.common.cloud_out;
    }
    emit_report(report, kinf_flags.common.out_path);
  });

  auto* k1_cmd = app.add_subcommand("k1", "estimate asymptotic critical values at the frontier");
  ScheduleFlags k1_flags;
  add_common(k1_cmd, k1_flags.common, /*with_domain=*/true, /*domain_required=*/true);
  k1_cmd->add_option("--scales", k1_flags.scales, "decreasing shell widths, e.g. 0.1,0.01,0.001")->required();
  k1_cmd->add_option("--i", k1_flags.i, "threshold exponent parameter");
  k1_cmd->add_option("--witness-cap", k1_flags.witness_cap, "retained witnesses per scale");
  k1_cmd->add_option("--cluster-rel", k1_flags.cluster_rel, "cluster threshold as a diameter fraction");
  k1_cmd->callback([&] {
    auto map = gcv::load_map(k1_flags.common.map_path);
    auto domain = gcv::load_domain(k1_flags.common.domain_path, map.vars);
    auto estimate = gcv::estimate_K1(map, domain, make_schedule(k1_flags), k1_flags.cluster_rel);
    auto report = base_report("k1", schedule_config(k1_flags, true));
    report["estimate"] = estimate;
    if (!k1_flags.common.cloud_out.empty()) {
      std::ostringstream csv;
      gcv::write_witness_csv(csv, estimate, map.n(), map.k());
      write_file(k1_flags.common.cloud_out, csv.str());
      report["cloud_csv"] = k1_flags.common.cloud_out;
    }
    emit_report(report, k1_flags.common.out_path);
  });

  // ---- sard -----------------------------------------------------------------
  auto* sard_cmd = app.add_subcommand("sard", "thinness of f(c_z(f)) along a decreasing z schedule");
  MapDomainFlags sard_flags;
  std::string sard_z_schedule;
  double sard_delta = 5e-3;
  std::size_t sard_projections = 8;
  add_common(sard_cmd, sard_flags, /*with_domain=*/true);
  sard_cmd->add_option("--z-schedule", sard_z_schedule, "decreasing z values, e.g. 0.5,0.25,0.125")->required();
  sard_cmd->add_option("--delta", sard_delta, "fattening resolution");
  sard_cmd->add_option("--projections", sard_projections, "random projections per score");
  sard_cmd->callback([&] {
    auto map = gcv::load_map(sard_flags.map_path);
    auto domain = sard_flags.domain_path.empty()
                      ? default_box_for(map)
                      : gcv::load_domain(sard_flags.domain_path, map.vars);
    gcv::SampleBudget budget{sard_flags.samples, sard_flags.starts, sard_flags.iters};
    auto zs = parse_double_list(sard_z_schedule, "--z-schedule");
    auto result = gcv::sard_experiment(map, domain, zs, budget, sard_delta,
                                       sard_projections, sard_flags.seed);
    json config = common_config(sard_flags, true);
    config["z_schedule"] = sard_z_schedule;
    config["delta"] = sard_delta;
    config["projections"] = sard_projections;
    auto report = base_report("sard", config);
    report["result"] = result;
    if (!sard_flags.cloud_out.empty()) {
      std::ostringstream csv;
      gcv::write_sard_cloud_csv(csv, result, map);
      write_file(sard_flags.cloud_out, csv.str());
      report["cloud_csv"] = sard_flags.cloud_out;
    }
    emit_report(report, sard_flags.out_path);
  });

  // ---- thin -----------------------------------------------------------------
  auto* thin_cmd = app.add_subcommand("thin", "thinness score of a point cloud");
  struct {
    std::string cloud_path, out_path;
    std::size_t k = 0;
    double delta = 0.02;
    std::size_t projections = 8;
    std::uint64_t seed = 0;
    double z = 0.0;
    bool has_z = false;
  } thin_flags;
  thin_cmd->add_option("--cloud", thin_flags.cloud_path, "cloud CSV (header x1..xd)")->required();
  thin_cmd->add_option("--k", thin_flags.k, "projection target dimension")->required();
  thin_cmd->add_option("--delta", thin_flags.delta, "fattening resolution");
  thin_cmd->add_option("--projections", thin_flags.projections, "number of random projections");
  thin_cmd->add_option("--seed", thin_flags.seed, "seed for the projections");
  auto* thin_z_opt = thin_cmd->add_option("--z", thin_flags.z, "emit the z-thin verdict");
  thin_cmd->add_option("--out", thin_flags.out_path, "report file (default stdout)");
  thin_cmd->callback([&] {
    thin_flags.has_z = thin_z_opt->count() > 0;
    auto cloud = load_cloud(thin_flags.cloud_path);
    auto thin = gcv::thinness_score(cloud, thin_flags.k, thin_flags.delta,
                                    thin_flags.projections, thin_flags.seed);
    json config{{"cloud", thin_flags.cloud_path}, {"k", thin_flags.k},
                {"delta", thin_flags.delta}, {"projections", thin_flags.projections},
                {"seed", thin_flags.seed}, {"out", thin_flags.out_path}};
    if (thin_flags.has_z) config["z"] = thin_flags.z;
    auto report = base_report("thin", config);
    report["thin"] = thin;
    if (thin_flags.has_z) report["verdict"] = thin.verdict(thin_flags.z);
    emit_report(report, thin_flags.out_path);
  });

  // ---- dim ------------------------------------------------------------------
  auto* dim_cmd = app.add_subcommand("dim", "box-counting dimension of a point cloud");
  struct {
    std::string cloud_path, scales, out_path;
  } dim_flags;
  dim_cmd->add_option("--cloud", dim_flags.cloud_path, "cloud CSV (header x1..xd)")->required();
  dim_cmd->add_option("--scales", dim_flags.scales, "box sizes (default: diameter/{4,8,16,32})");
  dim_cmd->add_option("--out", dim_flags.out_path, "report file (default stdout)");
  dim_cmd->callback([&] {
    auto cloud = load_cloud(dim_flags.cloud_path);
    std::vector<double> scales;
    if (!dim_flags.scales.empty()) {
      scales = parse_double_list(dim_flags.scales, "--scales");
    } else {
      double diam = 0.0;
      for (std::size_t a = 0; a < cloud.size(); ++a)
        for (std::size_t b = a + 1; b < cloud.size(); ++b)
          diam = std::max(diam, gcv::dist(cloud.points[a], cloud.points[b]));
      if (diam == 0.0) diam = 1.0;
      scales = {diam / 4.0, diam / 8.0, diam / 16.0, diam / 32.0};
    }
    json config{{"cloud", dim_flags.cloud_path}, {"scales", dim_flags.scales},
                {"out", dim_flags.out_path}};
    auto report = base_report("dim", config);
    report["scales"] = scales;
    report["box_dimension"] = gcv::box_dimension(cloud, scales);
    emit_report(report, dim_flags.out_path);
  });

  // ---- family ---------------------------------------------------------------
  auto* family_cmd = app.add_subcommand("family", "thinness sweep of a parametrized family");
  struct {
    std::string manifest_path, z_of_t, out_path;
    std::size_t k = 0;
    double delta = 0.02;
    std::size_t projections = 8;
    std::uint64_t seed = 0;
  } family_flags;
  family_cmd->add_option("--manifest", family_flags.manifest_path,
                         "JSON manifest [{\"t\": 0.1, \"cloud\": \"path.csv\"}, ...]")->required();
  family_cmd->add_option("--k", family_flags.k, "projection target dimension")->required();
  family_cmd->add_option("--delta", family_flags.delta, "fattening resolution");
  family_cmd->add_option("--projections", family_flags.projections, "random projections per score");
  family_cmd->add_option("--seed", family_flags.seed, "seed for the projections");
  family_cmd->add_option("--z-of-t", family_flags.z_of_t,
                         "per-fiber z values aligned with the manifest order");
  family_cmd->add_option("--out", family_flags.out_path, "report file (default stdout)");
  family_cmd->callback([&] {
    auto manifest = gcv::load_json_file(family_flags.manifest_path);
    if (!manifest.is_array()) throw gcv::ParseError("family manifest must be a JSON array", 0);
    auto base_dir = std::filesystem::path(family_flags.manifest_path).parent_path();
    std::vector<std::pair<double, gcv::PointCloud>> family;
    for (const auto& entry : manifest) {
      double t = entry.at("t").get<double>();
      std::filesystem::path p = entry.at("cloud").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      family.emplace_back(t, load_cloud(p.string()));
    }
    std::vector<double> zs;
    if (!family_flags.z_of_t.empty()) zs = parse_double_list(family_flags.z_of_t, "--z-of-t");
    auto sweep = gcv::family_sweep(family, family_flags.k, family_flags.delta,
                                   family_flags.projections, family_flags.seed,
                                   zs.empty() ? nullptr : &zs);
    json config{{"manifest", family_flags.manifest_path}, {"k", family_flags.k},
                {"delta", family_flags.delta}, {"projections", family_flags.projections},
                {"seed", family_flags.seed}, {"z_of_t", family_flags.z_of_t},
                {"out", family_flags.out_path}};
    auto report = base_report("family", config);
    report["sweep"] = sweep;
    emit_report(report, family_flags.out_path);
  });

  // ---- puiseux ----------------------------------------------------------------
  auto* puiseux_cmd = app.add_subcommand("puiseux", "evaluate a Puiseux series expression");
  struct {
    std::string expr_path, out_path;
    long long trunc = gcv::kDefaultTruncOrder;
  } puiseux_flags;
  puiseux_cmd->add_option("--expr", puiseux_flags.expr_path,
                          "JSON expression file; leaves are [[q, c], ...] term lists")->required();
  puiseux_cmd->add_option("--trunc", puiseux_flags.trunc, "truncation order");
  puiseux_cmd->add_option("--out", puiseux_flags.out_path, "report file (default stdout)");
  puiseux_cmd->callback([&] {
    auto expr = gcv::load_json_file(puiseux_flags.expr_path);
    auto series = gcv::puiseux_from_json(expr, gcv::Rational(puiseux_flags.trunc));
    json config{{"expr", puiseux_flags.expr_path}, {"trunc", puiseux_flags.trunc},
                {"out", puiseux_flags.out_path}};
    auto report = base_report("puiseux", config);
    report["series"] = gcv::puiseux_to_json(series);
    emit_report(report, puiseux_flags.out_path);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors are exit 1; --help/--version are 0
  } catch (const gcv::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const gcv::DimensionError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const gcv::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const gcv::RankDeficientError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const gcv::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
