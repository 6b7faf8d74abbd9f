#include "prefine/bench.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "prefine/container.hpp"
#include "prefine/work_pool.hpp"

namespace prefine::bench {

namespace fs = std::filesystem;

std::string InitSource::label() const {
  switch (kind) {
    case InitKind::Zero: return "zero";
    case InitKind::File: return "file";
    case InitKind::Coarse:
      return "coarse" + std::to_string(factor) +
             (coarse_operator == pipeline::CoarseOperator::Rediscretized ? "-rediscretized" : "");
  }
  return "unknown";
}

void BenchmarkSpec::validate() const {
  if (models.empty()) throw InvalidArgument("benchmark needs at least one model");
  if (tols.empty()) throw InvalidArgument("benchmark needs at least one tolerance");
  if (inits.empty()) throw InvalidArgument("benchmark needs at least one init source");
  for (double t : tols) {
    if (!(t > 0.0)) throw InvalidArgument("benchmark tolerances must be positive");
  }
  solver.validate();
}

BenchmarkSpec spec_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  BenchmarkSpec spec;
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  int index = 0;
  for (const auto& m : j.at("models")) {
    ModelSource src;
    src.name = m.value("name", "model" + std::to_string(index));
    src.resolution = m.value("n", src.resolution);
    src.poisson_ratio = m.value("nu", src.poisson_ratio);
    if (m.contains("path")) src.path = resolve(m.at("path").get<std::string>());
    if (m.contains("init_file")) src.init_file = resolve(m.at("init_file").get<std::string>());
    if (m.contains("grf")) {
      const auto& g = m.at("grf");
      geometry::GrfSpec grf;
      grf.target_porosity = g.at("porosity").get<double>();
      grf.seed = g.value("seed", std::uint64_t{0});
      grf.wave_count = g.value("waves", grf.wave_count);
      src.grf = grf;
    } else if (!src.path) {
      src.family = geometry::parse_family(m.value("family", std::string("gyroid")));
      src.network = geometry::parse_network(m.value("network", std::string("solid")));
      src.volume_fraction = m.at("vf").get<double>();
    }
    spec.models.push_back(std::move(src));
    ++index;
  }
  if (j.contains("tols")) spec.tols = j.at("tols").get<std::vector<double>>();
  if (j.contains("inits")) {
    spec.inits.clear();
    for (const auto& i : j.at("inits")) {
      InitSource s;
      if (i.is_string()) {
        const auto name = i.get<std::string>();
        if (name == "zero") s.kind = InitKind::Zero;
        else if (name == "file") s.kind = InitKind::File;
        else if (name == "coarse") s.kind = InitKind::Coarse;
        else throw InvalidArgument("unknown init source '" + name + "'");
      } else if (i.contains("coarse")) {
        s.kind = InitKind::Coarse;
        s.factor = i.at("coarse").get<int>();
        const auto op = i.value("operator", std::string("galerkin"));
        if (op == "rediscretized") s.coarse_operator = pipeline::CoarseOperator::Rediscretized;
        else if (op != "galerkin") throw InvalidArgument("unknown coarse operator '" + op + "'");
      } else {
        throw InvalidArgument("init sources are \"zero\", \"file\", \"coarse\" or {\"coarse\": factor}");
      }
      spec.inits.push_back(s);
    }
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    if (s.contains("method")) spec.solver.method = solvers::parse_method(s.at("method").get<std::string>());
    if (s.contains("preconditioner")) {
      spec.solver.preconditioner = solvers::parse_preconditioner(s.at("preconditioner").get<std::string>());
    }
    spec.solver.max_iters = s.value("max_iters", spec.solver.max_iters);
  }
  spec.coarse_tol = j.value("coarse_tol", spec.coarse_tol);
  spec.validate();
  return spec;
}

const GroupMean* BenchResult::group(const std::string& init, double tol) const {
  for (const auto& g : groups) {
    if (g.init == init && g.tol == tol) return &g;
  }
  return nullptr;
}

std::optional<double> BenchResult::ratio(const std::string& init, double tol) const {
  for (const auto& p : ratio_curve) {
    if (p.init == init && p.tol == tol) return p.ratio;
  }
  return std::nullopt;
}

namespace {

geometry::VoxelModel build_model(const ModelSource& src) {
  if (src.path) return io::read_model(*src.path).model;
  if (src.grf) return geometry::generate_grf(*src.grf, src.resolution, src.poisson_ratio).model;
  const auto level = geometry::solve_level_for_fraction(src.family, src.network,
                                                        src.volume_fraction, src.resolution);
  return geometry::voxelize({src.family, src.network, level.level}, src.resolution,
                            src.poisson_ratio);
}

}  // namespace

BenchResult bench_warmstart(const BenchmarkSpec& spec) {
  spec.validate();
  const std::size_t per_model = spec.tols.size() * spec.inits.size();
  BenchResult result;
  result.cells.resize(spec.models.size() * per_model);

  parallel_for(spec.models.size(), [&](std::size_t m) {
    const auto& src = spec.models[m];
    auto cell_at = [&](std::size_t t, std::size_t i) -> BenchCell& {
      return result.cells[m * per_model + t * spec.inits.size() + i];
    };
    for (std::size_t t = 0; t < spec.tols.size(); ++t)
      for (std::size_t i = 0; i < spec.inits.size(); ++i) {
        auto& cell = cell_at(t, i);
        cell.model = src.name;
        cell.tol = spec.tols[t];
        cell.init = spec.inits[i].label();
      }

    std::optional<geometry::VoxelModel> model;
    try {
      model = build_model(src);
    } catch (const std::exception& e) {
      for (auto& cell : result.cells) {
        if (cell.model == src.name) {
          cell.ok = false;
          cell.error = e.what();
        }
      }
      return;
    }
    const fem::LinearSystem system(*model);

    for (std::size_t i = 0; i < spec.inits.size(); ++i) {
      const auto& init = spec.inits[i];
      std::optional<fem::DisplacementFields> guess;
      int coarse_iterations = 0;
      std::string init_error;
      try {
        if (init.kind == InitKind::File) {
          if (!src.init_file) throw InvalidArgument("model '" + src.name + "' has no init_file");
          guess = io::import_initial_guess(*src.init_file, model->resolution());
        } else if (init.kind == InitKind::Coarse) {
          auto coarse = pipeline::coarse_prolongation_guess(system, init.factor, spec.coarse_tol,
                                                            init.coarse_operator);
          coarse_iterations = coarse.coarse_iterations;
          guess = std::move(coarse.fields);
        }
      } catch (const std::exception& e) {
        init_error = e.what();
      }
      for (std::size_t t = 0; t < spec.tols.size(); ++t) {
        auto& cell = cell_at(t, i);
        if (!init_error.empty()) {
          cell.ok = false;
          cell.error = init_error;
          continue;
        }
        try {
          auto config = spec.solver;
          config.tol = spec.tols[t];
          const auto run = pipeline::homogenize(system, config, guess ? &*guess : nullptr);
          cell.total_iterations = run.total_iterations();
          cell.mean_iterations = run.mean_iterations();
          cell.converged = run.all_converged;
          cell.coarse_iterations = coarse_iterations;
          double residual = 0.0;
          for (const auto& r : run.reports) {
            cell.wall_time_s += r.wall_time_s;
            residual += r.initial_residual;
            cell.case_iterations.push_back(r.iterations);
            cell.history_lengths.push_back(static_cast<int>(r.residual_history.size()));
          }
          cell.mean_initial_residual = residual / fem::kLoadCases;
        } catch (const std::exception& e) {
          cell.ok = false;
          cell.error = e.what();
        }
      }
    }
  });

  for (const auto& init : spec.inits) {
    for (double tol : spec.tols) {
      GroupMean g{init.label(), tol, 0.0, 0.0, 0};
      for (const auto& c : result.cells) {
        if (c.ok && c.init == g.init && c.tol == tol) {
          g.mean_iterations += c.mean_iterations;
          g.mean_wall_time_s += c.wall_time_s;
          ++g.cells;
        }
      }
      if (g.cells) {
        g.mean_iterations /= g.cells;
        g.mean_wall_time_s /= g.cells;
      }
      result.groups.push_back(g);
    }
  }
  for (const auto& g : result.groups) {
    if (g.init == "zero" || g.cells == 0) continue;
    const auto* cold = result.group("zero", g.tol);
    if (!cold || cold->cells == 0 || cold->mean_iterations == 0.0) continue;
    result.ratio_curve.push_back({g.init, g.tol, g.mean_iterations / cold->mean_iterations});
  }
  return result;
}

nlohmann::json to_json(const BenchResult& result) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : result.cells) {
    nlohmann::json j = {{"model", c.model},
                        {"tol", c.tol},
                        {"init", c.init},
                        {"ok", c.ok},
                        {"mean_iterations", c.mean_iterations},
                        {"total_iterations", c.total_iterations},
                        {"case_iterations", c.case_iterations},
                        {"wall_time_s", c.wall_time_s},
                        {"mean_initial_residual", c.mean_initial_residual},
                        {"coarse_iterations", c.coarse_iterations},
                        {"converged", c.converged}};
    if (!c.ok) j["error"] = c.error;
    cells.push_back(j);
  }
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : result.groups) {
    groups.push_back({{"init", g.init},
                      {"tol", g.tol},
                      {"mean_iterations", g.mean_iterations},
                      {"mean_wall_time_s", g.mean_wall_time_s},
                      {"cells", g.cells}});
  }
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : result.ratio_curve) {
    curve.push_back({{"init", p.init}, {"tol", p.tol}, {"iteration_ratio", p.ratio}});
  }
  return {{"cells", cells}, {"groups", groups}, {"ratio_curve", curve}};
}

std::string cells_csv(const BenchResult& result) {
  std::ostringstream out;
  out << "model,tol,init,ok,mean_iterations,total_iterations,wall_time_s,mean_initial_residual,"
         "coarse_iterations,converged\n";
  char buf[64];
  for (const auto& c : result.cells) {
    std::snprintf(buf, sizeof buf, "%.3e", c.tol);
    out << c.model << ',' << buf << ',' << c.init << ',' << (c.ok ? 1 : 0) << ',';
    std::snprintf(buf, sizeof buf, "%.4f", c.mean_iterations);
    out << buf << ',' << c.total_iterations << ',';
    std::snprintf(buf, sizeof buf, "%.6f", c.wall_time_s);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.6e", c.mean_initial_residual);
    out << buf << ',' << c.coarse_iterations << ',' << (c.converged ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string ratio_csv(const BenchResult& result) {
  std::ostringstream out;
  out << "init,tol,iteration_ratio\n";
  char buf[64];
  for (const auto& p : result.ratio_curve) {
    std::snprintf(buf, sizeof buf, "%.3e,%.6f", p.tol, p.ratio);
    out << p.init << ',' << buf << '\n';
  }
  return out.str();
}

void write_outputs(const fs::path& out_dir, const BenchResult& result) {
  fs::create_directories(out_dir);
  io::write_json(out_dir / "bench.json", to_json(result));
  std::ofstream(out_dir / "bench.csv") << cells_csv(result);
  std::ofstream(out_dir / "ratio_curve.csv") << ratio_csv(result);
}

}  // namespace prefine::bench
