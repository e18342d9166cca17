#include "kreinkit/runner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace kreinkit::runner {

namespace {

using extensions::ExtensionRealization;
using extensions::ExtensionSpec;
using models::ModelPtr;
using numlin::ComplexMatrix;
using numlin::ComplexVector;
using numlin::GridFun;
using numlin::KernelOperator;
using numlin::RealVector;
using numlin::SubspaceBasis;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

Complex parse_complex(const std::string& token, int line) {
  // accepted forms: "-1", "2.5", "i", "-i", "3i", "1+2i", "0.5-3i"
  std::string s = trim(token);
  if (s.empty()) throw ConfigError(line, "empty complex token");
  if (s.back() != 'i') {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return Complex(v, 0.0);
    } catch (...) {
      throw ConfigError(line, "cannot parse real token '" + token + "'");
    }
  }
  s.pop_back();  // drop the trailing i
  if (s.empty()) return Complex(0.0, 1.0);
  if (s == "-") return Complex(0.0, -1.0);
  if (s == "+") return Complex(0.0, 1.0);
  // split at the last +/- that is not an exponent sign
  std::size_t pos = std::string::npos;
  for (std::size_t k = s.size(); k-- > 1;) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      pos = k;
      break;
    }
  }
  try {
    if (pos == std::string::npos) return Complex(0.0, std::stod(s));
    const double re = std::stod(s.substr(0, pos));
    std::string imtok = s.substr(pos);
    if (imtok == "+") imtok = "1";
    if (imtok == "-") imtok = "-1";
    return Complex(re, std::stod(imtok));
  } catch (...) {
    throw ConfigError(line, "cannot parse complex token '" + token + "'");
  }
}

double parse_p(const std::string& token, int line) {
  if (token == "inf" || token == "infinity")
    return std::numeric_limits<double>::infinity();
  try {
    return std::stod(token);
  } catch (...) {
    throw ConfigError(line, "cannot parse exponent '" + token + "'");
  }
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  cfg.extension_specs.clear();
  std::istringstream is(text);
  std::string raw;
  std::string section = "run";
  std::string ext_name;
  std::map<std::string, std::map<std::string, std::pair<std::string, int>>> ext_kv;
  std::vector<std::string> ext_order;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(line, "unterminated section header");
      const std::string head = trim(s.substr(1, s.size() - 2));
      if (head == "model" || head == "run") {
        section = head;
      } else if (head.rfind("extension", 0) == 0) {
        section = "extension";
        ext_name = trim(head.substr(9));
        if (ext_name.empty())
          throw ConfigError(line, "extension section needs a name");
        if (!ext_kv.count(ext_name)) ext_order.push_back(ext_name);
      } else {
        throw ConfigError(line, "unknown section '" + head + "'");
      }
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "empty key");

    try {
      if (section == "model") {
        if (key == "kind") cfg.model_kind = value;
        else if (key == "n") cfg.n = std::stol(value);
        else if (key == "L") cfg.halfline_length = std::stod(value);
        else if (key == "parts") cfg.dsum_parts = split_ws(value);
        else throw ConfigError(line, "unknown model key '" + key + "'");
      } else if (section == "run") {
        if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "out") cfg.out_dir = value;
        else if (key == "jmax") cfg.jmax = std::stoi(value);
        else if (key == "trials") cfg.trial_count = std::stoi(value);
        else if (key == "tol_scale") cfg.tol_scale = std::stod(value);
        else if (key == "p") {
          cfg.p_list.clear();
          for (const auto& t : split_ws(value)) cfg.p_list.push_back(parse_p(t, line));
        } else if (key == "z") {
          cfg.z_list.clear();
          for (const auto& t : split_ws(value)) cfg.z_list.push_back(parse_complex(t, line));
        } else {
          throw ConfigError(line, "unknown run key '" + key + "'");
        }
      } else {
        ext_kv[ext_name][key] = {value, line};
      }
    } catch (const ConfigError&) {
      throw;
    } catch (...) {
      throw ConfigError(line, "cannot parse value for key '" + key + "'");
    }
  }

  for (const auto& name : ext_order) {
    const auto& kv = ext_kv[name];
    auto get = [&](const std::string& k) -> const std::pair<std::string, int>* {
      auto it = kv.find(k);
      return it == kv.end() ? nullptr : &it->second;
    };
    const auto* kind = get("kind");
    if (kind == nullptr)
      throw ConfigError("extension '" + name + "' is missing 'kind'");
    ExtensionConfig ec;
    ec.name = name;
    if (kind->first == "friedrichs") {
      ec.spec = ExtensionSpec::friedrichs();
    } else if (kind->first == "krein") {
      ec.spec = ExtensionSpec::krein();
    } else if (kind->first == "param") {
      const auto* w = get("w");
      const auto* b = get("b");
      if (w == nullptr || b == nullptr)
        throw ConfigError("extension '" + name + "' needs 'w' and 'b'");
      std::vector<int> widx;
      for (const auto& t : split_ws(w->first)) widx.push_back(std::stoi(t));
      const auto toks = split_ws(b->first);
      const auto rp = static_cast<Eigen::Index>(widx.size());
      if (static_cast<Eigen::Index>(toks.size()) != 2 * rp * rp)
        throw ConfigError(b->second,
                          "b needs re/im pairs for an r' x r' matrix");
      ComplexMatrix bm(rp, rp);
      for (Eigen::Index r = 0; r < rp; ++r)
        for (Eigen::Index c = 0; c < rp; ++c) {
          const std::size_t k = static_cast<std::size_t>(2 * (r * rp + c));
          bm(r, c) = Complex(std::stod(toks[k]), std::stod(toks[k + 1]));
        }
      ec.spec = ExtensionSpec::param(bm, widx);
    } else if (kind->first == "boundary") {
      const auto* rows = get("rows");
      if (rows == nullptr)
        throw ConfigError("extension '" + name + "' needs 'rows'");
      const auto toks = split_ws(rows->first);
      // r x 2r real rows; r inferred from the count: 2 r^2 entries
      const double rd = std::sqrt(static_cast<double>(toks.size()) / 2.0);
      const auto r = static_cast<Eigen::Index>(std::lround(rd));
      if (2 * r * r != static_cast<Eigen::Index>(toks.size()))
        throw ConfigError(rows->second, "rows must hold r x 2r entries");
      ComplexMatrix m(r, 2 * r);
      for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < 2 * r; ++j)
          m(i, j) = std::stod(toks[static_cast<std::size_t>(i * 2 * r + j)]);
      ec.spec = ExtensionSpec::boundary(m);
    } else {
      throw ConfigError("extension '" + name + "' has unknown kind '" +
                        kind->first + "'");
    }
    cfg.extension_specs.push_back(std::move(ec));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

ModelPtr RunConfig::build_model() const {
  if (model_kind == "interval") return models::interval_laplacian(n);
  if (model_kind == "halfline")
    return models::halfline_schroedinger(n, halfline_length);
  if (model_kind == "dsum") {
    std::vector<ModelPtr> parts;
    for (const auto& kind : dsum_parts) {
      if (kind == "interval") parts.push_back(models::interval_laplacian(n));
      else if (kind == "halfline")
        parts.push_back(models::halfline_schroedinger(n, halfline_length));
      else throw ConfigError("unknown direct-sum part '" + kind + "'");
    }
    return models::direct_sum(parts);
  }
  throw ConfigError("unknown model kind '" + model_kind + "'");
}

std::vector<ExtensionConfig> RunConfig::resolved_extensions(
    int deficiency_index) const {
  if (!extension_specs.empty()) return extension_specs;
  std::vector<ExtensionConfig> out;
  out.push_back({"friedrichs", ExtensionSpec::friedrichs()});
  out.push_back({"krein", ExtensionSpec::krein()});
  const auto r = static_cast<Eigen::Index>(deficiency_index);
  std::vector<int> all(static_cast<std::size_t>(r));
  for (int k = 0; k < r; ++k) all[static_cast<std::size_t>(k)] = k;
  out.push_back({"b_eye", ExtensionSpec::param(
                              ComplexMatrix::Identity(r, r), all)});
  return out;
}

bool RunReport::all_pass() const {
  return std::all_of(records.begin(), records.end(),
                     [](const CheckRecord& r) { return r.pass; });
}

int RunReport::failures() const {
  return static_cast<int>(std::count_if(
      records.begin(), records.end(),
      [](const CheckRecord& r) { return !r.pass; }));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string to_json(const RunReport& report) {
  nlohmann::ordered_json j;
  j["environment"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.environment) j["environment"][k] = v;
  j["summary"] = {{"checks", report.records.size()},
                  {"failures", report.failures()},
                  {"all_pass", report.all_pass()}};
  j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : report.records) {
    nlohmann::ordered_json jr;
    jr["id"] = r.id;
    jr["claim"] = r.claim;
    jr["status"] = r.pass ? "pass" : "fail";
    jr["residual"] = r.residual;
    jr["tolerance"] = r.tolerance;
    if (!r.note.empty()) jr["note"] = r.note;
    j["records"].push_back(std::move(jr));
  }
  return j.dump(2) + "\n";
}

std::string to_csv(const CsvTable& table) {
  std::ostringstream os;
  for (std::size_t c = 0; c < table.header.size(); ++c)
    os << table.header[c] << (c + 1 < table.header.size() ? "," : "");
  os << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      os << row[c] << (c + 1 < row.size() ? "," : "");
    os << "\n";
  }
  return os.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path().empty()
                                          ? "."
                                          : path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// verification battery
// ---------------------------------------------------------------------------
namespace {

struct Battery {
  RunReport report;
  double tol_scale = 1.0;

  void add(const std::string& id, const std::string& claim, double residual,
           double tolerance, const std::string& note = {}) {
    CheckRecord r;
    r.id = id;
    r.claim = claim;
    r.residual = residual;
    r.tolerance = tolerance * tol_scale;
    r.pass = residual <= r.tolerance;
    r.note = note;
    report.records.push_back(std::move(r));
  }

  template <class F>
  void guarded(const std::string& id, const std::string& claim, F&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      CheckRecord r;
      r.id = id;
      r.claim = claim;
      r.pass = false;
      r.residual = std::numeric_limits<double>::infinity();
      r.tolerance = 0.0;
      r.note = std::string("exception: ") + e.what();
      report.records.push_back(std::move(r));
    }
  }
};

double opnorm(const ComplexMatrix& m) { return m.norm(); }

GridFun random_smooth(const ModelPtr& model, std::mt19937_64& rng) {
  return model->sample_domain_element(rng);
}

}  // namespace

CommandResult cmd_verify(const RunConfig& config) {
  CommandResult result;
  Battery b;
  b.tol_scale = config.tol_scale;

  ModelPtr model;
  try {
    model = config.build_model();
  } catch (const std::exception& e) {
    for (const char* id : {"model-construction", "operator-suite", "formula-suite"}) {
      CheckRecord r;
      r.id = id;
      r.claim = "plumbing";
      r.pass = false;
      r.residual = std::numeric_limits<double>::infinity();
      r.tolerance = 0.0;
      r.note = std::string("grid too coarse or invalid model: ") + e.what();
      b.report.records.push_back(std::move(r));
    }
    result.report = std::move(b.report);
    result.exit_code = 1;
    return result;
  }

  const auto space = model->space();
  const Eigen::Index n = space->size();
  const int r = model->deficiency_index();
  const double eps = model->epsilon();
  std::mt19937_64 rng(config.seed);

  b.report.environment["model"] = model->kind();
  b.report.environment["n"] = std::to_string(n);
  b.report.environment["deficiency_index"] = std::to_string(r);
  b.report.environment["epsilon"] = format_double(eps);
  b.report.environment["seed"] = std::to_string(config.seed);
  b.report.environment["version"] = "0.1.0";

  // --- realizations shared across checks -----------------------------------
  auto ext_configs = config.resolved_extensions(r);
  std::vector<std::pair<std::string, std::shared_ptr<ExtensionRealization>>> exts;
  for (const auto& ec : ext_configs) {
    b.guarded("extension-" + ec.name, "plumbing", [&] {
      exts.emplace_back(ec.name,
                        std::make_shared<ExtensionRealization>(model, ec.spec));
      b.add("extension-" + ec.name, "plumbing", 0.0, 0.0, "realized");
    });
  }
  auto find_ext = [&](ExtensionSpec::Kind kind) -> std::shared_ptr<ExtensionRealization> {
    for (auto& [name, e] : exts)
      if (e->spec().kind == kind) return e;
    return nullptr;
  };
  auto extF = find_ext(ExtensionSpec::Kind::Friedrichs);
  auto extK = find_ext(ExtensionSpec::Kind::Krein);
  if (!extF) {
    exts.emplace_back("friedrichs", std::make_shared<ExtensionRealization>(
                                        model, ExtensionSpec::friedrichs()));
    extF = exts.back().second;
  }
  if (!extK) {
    exts.emplace_back("krein", std::make_shared<ExtensionRealization>(
                                   model, ExtensionSpec::krein()));
    extK = exts.back().second;
  }

  // --- grid & kernel structure ---------------------------------------------
  b.guarded("space-mass", "plumbing", [&] {
    const GridFun one = numlin::sample(space, [](double) { return 1.0; });
    const double mass = std::abs(numlin::inner(one, one));
    b.add("space-mass", "plumbing",
          std::abs(mass - space->domain().length()),
          1e-10 * space->domain().length());
  });

  b.guarded("kernel-projector", "kernel-identity", [&] {
    const KernelOperator p = extensions::kernel_projector(*model);
    b.add("kernel-projector-idempotent", "kernel-identity",
          opnorm(ComplexMatrix(p.matrix * p.matrix - p.matrix)), 1e-10);
    b.add("kernel-projector-selfadjoint", "kernel-identity",
          numlin::hermitian_defect(p), 1e-10);
    const RealVector pev = numlin::hermitian_eigenvalues(p);
    const int rank = static_cast<int>((pev.array() > 0.5).count());
    b.add("kernel-projector-rank", "kernel-identity",
          std::abs(rank - r), 0.0);
  });

  b.guarded("kernel-annihilation", "kernel-identity", [&] {
    double worst = 0.0;
    const auto& kb = model->kernel_basis();
    for (Eigen::Index k = 0; k < kb.dim(); ++k) {
      const GridFun out = model->apply_adjoint(kb.column(k));
      worst = std::max(worst, numlin::norm(out));
    }
    b.add("kernel-annihilation", "kernel-identity", worst, 1e-6);
  });

  b.guarded("strict-positivity", "lower-bound", [&] {
    double worst = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 50; ++t) {
      const GridFun v = random_smooth(model, rng);
      const ComplexVector sv = model->apply_adjoint_minimal(v.values);
      const double num =
          std::real(numlin::inner(v, GridFun(space, sv)));
      worst = std::min(worst, num);  // samples are unit norm
    }
    b.add("strict-positivity", "lower-bound",
          std::max(0.0, 0.99 * eps - worst) / eps, 0.0,
          "min sampled Rayleigh quotient " + format_double(worst));
  });

  b.guarded("deficiency-residuals", "deficiency-dimension", [&] {
    double worst = 0.0;
    int dim_defect = 0;
    for (Complex z : {Complex(0, 1), Complex(0, -1), Complex(-1, 0), Complex(-10, 0)}) {
      const SubspaceBasis basis = model->deficiency_basis_at(z);
      dim_defect = std::max(dim_defect, std::abs(static_cast<int>(basis.dim()) - r));
      for (Eigen::Index c = 0; c < basis.dim(); ++c) {
        GridFun col = basis.column(c);
        GridFun su = model->apply_adjoint(col);
        ComplexVector res = su.values - z * col.values;
        for (auto row : model->flagged_rows()) res(row) = 0.0;
        worst = std::max(worst, numlin::norm(GridFun(space, res)) /
                                    numlin::norm(col));
      }
    }
    b.add("deficiency-residuals", "deficiency-dimension", worst, 1e-6);
    b.add("deficiency-dimension-constancy", "deficiency-dimension",
          dim_defect, 0.0);
  });

  b.guarded("friedrichs-resolvent", "friedrichs-resolvent", [&] {
    double worst_res = 0.0, worst_trace = 0.0;
    const Complex z(-1.0, 0.0);
    for (int t = 0; t < 10; ++t) {
      const GridFun f = random_smooth(model, rng);
      const ComplexVector u = extF->apply_resolvent(z, f.values);
      GridFun su = model->apply_adjoint(GridFun(space, u));
      ComplexVector res = su.values - z * u - f.values;
      for (auto row : model->flagged_rows()) res(row) = 0.0;
      worst_res = std::max(worst_res, numlin::norm(GridFun(space, res)) /
                                          numlin::norm(f));
      worst_trace = std::max(
          worst_trace,
          model->pde_face_values(u, f.values, z).cwiseAbs().maxCoeff());
    }
    b.add("friedrichs-resolvent-residual", "friedrichs-resolvent", worst_res,
          1e-6);
    b.add("friedrichs-resolvent-trace", "friedrichs-resolvent", worst_trace,
          1e-8);
  });

  b.guarded("resolvent-identity", "resolvent-identity", [&] {
    const Complex z1(-1.0, 0.0), z2(-2.0, 0.0);
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
      const GridFun f = random_smooth(model, rng);
      const ComplexVector lhs = extF->apply_resolvent(z1, f.values) -
                                extF->apply_resolvent(z2, f.values);
      const ComplexVector rhs =
          (z1 - z2) *
          extF->apply_resolvent(z1, extF->apply_resolvent(z2, f.values));
      worst = std::max(worst, numlin::norm(GridFun(space, ComplexVector(lhs - rhs))));
    }
    b.add("resolvent-identity", "resolvent-identity", worst, 1e-8);
  });

  // --- reduced inverse and blocks -------------------------------------------
  b.guarded("block-decomposition", "reduced-inverse-identity", [&] {
    const auto blocks = ideals::block_decompose(*model);
    b.add("block-reconstruction", "block-decomposition",
          blocks.reconstruction_defect, 1e-10);
    b.add("block-offdiag-adjoint", "block-decomposition",
          blocks.adjoint_defect, 1e-10);
    const KernelOperator reduced = extensions::krein_reduced_inverse(*model);
    b.add("reduced-inverse-identity", "reduced-inverse-identity",
          opnorm(ComplexMatrix(blocks.qq.matrix - reduced.matrix)), 1e-12);
  });

  // --- ordering, parametrization --------------------------------------------
  b.guarded("resolvent-order", "resolvent-order", [&] {
    double worst = 0.0;
    for (double a : {0.5, 1.0, 10.0}) {
      for (auto& [name, e] : exts) {
        const auto lo = extensions::order_check(*extF, *e, a);
        const auto hi = extensions::order_check(*e, *extK, a);
        worst = std::min(worst, std::min(lo.min_eigenvalue, hi.min_eigenvalue));
      }
    }
    b.add("resolvent-order-sandwich", "resolvent-order", -worst, 1e-8);
  });

  b.guarded("order-self", "resolvent-order", [&] {
    const auto self = extensions::order_check(*extF, *extF, 1.0);
    b.add("resolvent-order-self", "resolvent-order",
          std::abs(self.min_eigenvalue), 1e-10);
  });

  b.guarded("kernel-of-extension", "kernel-of-extension", [&] {
    int defect = std::abs(extK->kernel_dim() - r) + extF->kernel_dim();
    ExtensionRealization full_b(
        model, ExtensionSpec::param(ComplexMatrix::Identity(r, r),
                                    [&] {
                                      std::vector<int> all;
                                      for (int k = 0; k < r; ++k) all.push_back(k);
                                      return all;
                                    }()));
    defect += full_b.kernel_dim();
    if (r >= 2) {
      ComplexMatrix diag01 = ComplexMatrix::Zero(r, r);
      for (int k = 1; k < r; ++k) diag01(k, k) = 1.0;
      ExtensionRealization partial(
          model, ExtensionSpec::param(diag01, [&] {
            std::vector<int> all;
            for (int k = 0; k < r; ++k) all.push_back(k);
            return all;
          }()));
      defect += std::abs(partial.kernel_dim() - 1);
    }
    b.add("kernel-of-extension", "kernel-of-extension", defect, 0.0);
  });

  b.guarded("krein-parametrization", "krein-parametrization", [&] {
    std::vector<int> all;
    for (int k = 0; k < r; ++k) all.push_back(k);
    ExtensionRealization zero_b(
        model, ExtensionSpec::param(ComplexMatrix::Zero(r, r), all));
    // row-space comparison of the derived conditions with the soft rows
    const ComplexMatrix a = zero_b.bc();
    const ComplexMatrix c = model->krein_bc();
    Eigen::JacobiSVD<ComplexMatrix> sa(a.adjoint(), Eigen::ComputeThinU);
    Eigen::JacobiSVD<ComplexMatrix> sc(c.adjoint(), Eigen::ComputeThinU);
    const ComplexMatrix pa = sa.matrixU() * sa.matrixU().adjoint();
    const ComplexMatrix pc = sc.matrixU() * sc.matrixU().adjoint();
    b.add("krein-parametrization-rowspace", "krein-parametrization",
          (pa - pc).norm(), 1e-6);
    ExtensionRealization big_b(
        model,
        ExtensionSpec::param(ComplexMatrix::Identity(r, r) * 1e6, all));
    b.add("param-large-b-friedrichs-limit", "krein-parametrization",
          opnorm(ComplexMatrix(big_b.resolvent_dense(Complex(-1, 0)) -
                               extF->resolvent_dense(Complex(-1, 0)))),
          1e-3);
  });

  // --- forms -----------------------------------------------------------------
  if (model->kind() == "interval") {
    b.guarded("form-value", "form-decomposition", [&] {
      const GridFun g = numlin::sample(
          space, [](double x) { return std::sin(M_PI * x); });
      const auto fv = extensions::form_value(model, ExtensionSpec::krein(), g,
                                             ComplexVector::Zero(r));
      b.add("form-sin", "form-decomposition",
            std::abs(fv.value - M_PI * M_PI / 2.0), 1e-4);
      const GridFun zero = numlin::sample(space, [](double) { return 0.0; });
      std::vector<int> all;
      for (int k = 0; k < r; ++k) all.push_back(k);
      ComplexVector e1 = ComplexVector::Zero(r);
      e1(0) = 1.0;
      const auto fb = extensions::form_value(
          model, ExtensionSpec::param(ComplexMatrix::Identity(r, r), all),
          zero, e1);
      b.add("form-boundary-part", "form-decomposition",
            std::abs(fb.value - 1.0), 1e-12);
      const auto fk = extensions::form_value(model, ExtensionSpec::krein(),
                                             zero, e1);
      b.add("form-kernel-killed", "form-decomposition", std::abs(fk.value),
            1e-12);
    });

    b.guarded("sup-form", "soft-form-sup", [&] {
      const GridFun u = numlin::sample(
          space, [](double x) { return std::sin(M_PI * x); });
      const double sup = extensions::krein_sup_form(*model, u,
                                                    config.trial_count,
                                                    config.seed);
      const double target = M_PI * M_PI / 2.0;
      b.add("sup-form-lower-bound", "soft-form-sup",
            std::max(0.0, 0.95 * target - sup) / target, 0.0,
            "best trial " + format_double(sup));
      b.add("sup-form-below-sup", "soft-form-sup",
            std::max(0.0, sup - target * (1.0 + 1e-8)) / target, 0.0);
      const GridFun ker = model->kernel_basis().column(0);
      b.add("sup-form-kernel-zero", "soft-form-sup",
            extensions::krein_sup_form(*model, ker, 200, config.seed), 1e-10);
    });
  }

  b.guarded("shift-commutation", "shift-commutation", [&] {
    const auto sc = extensions::shift_noncommute_check(model, 1.0);
    b.add("shift-friedrichs-commutes", "shift-commutation",
          sc.friedrichs_residual, 1e-8);
    b.add("shift-krein-gap", "shift-commutation",
          std::max(0.0, 1e-3 - sc.krein_gap), 0.0,
          "gap " + format_double(sc.krein_gap));
  });

  b.guarded("relatively-prime", "relatively-prime", [&] {
    const bool fk = extensions::relatively_prime_check(*extF, *extK);
    const bool self = extensions::relatively_prime_check(*extF, *extF);
    b.add("relatively-prime-hard-soft", "relatively-prime", fk ? 0.0 : 1.0, 0.0);
    b.add("relatively-prime-self", "relatively-prime", self ? 1.0 : 0.0, 0.0);
  });

  b.guarded("domain-splits", "domain-splits", [&] {
    // elements of the soft domain decompose into dom(S) + kernel
    const GridFun f = random_smooth(model, rng);
    const ComplexVector u = extK->apply_resolvent(Complex(-1, 0), f.values);
    const auto& kb = model->kernel_basis();
    // match u at the flagged cells with a kernel combination
    const auto& flagged = model->flagged_rows();
    ComplexMatrix a(static_cast<Eigen::Index>(flagged.size()), kb.dim());
    ComplexVector rhs(static_cast<Eigen::Index>(flagged.size()));
    for (std::size_t i = 0; i < flagged.size(); ++i) {
      rhs(static_cast<Eigen::Index>(i)) = u(flagged[i]);
      for (Eigen::Index c = 0; c < kb.dim(); ++c)
        a(static_cast<Eigen::Index>(i), c) = kb.columns(flagged[i], c);
    }
    const ComplexVector combo = a.fullPivLu().solve(rhs);
    ComplexVector fpart = u - kb.columns * combo;
    double res = 0.0;
    for (auto row : flagged) res = std::max(res, std::abs(fpart(row)));
    b.add("domain-split-soft", "domain-splits",
          res / std::max(1e-300, u.cwiseAbs().maxCoeff()), 1e-6);
  });

  // --- M-operator machinery ---------------------------------------------------
  const SubspaceBasis& nplus = model->nplus_basis();

  b.guarded("m-at-i", "m-at-i", [&] {
    double worst = 0.0;
    for (auto& [name, e] : exts) {
      const auto m = moperator::donoghue_m(*e, nplus, Complex(0, 1));
      worst = std::max(
          worst, (m.matrix - Complex(0, 1) * ComplexMatrix::Identity(r, r)).norm());
    }
    b.add("m-at-i", "m-at-i", worst, 1e-10);
  });

  b.guarded("herglotz-bound", "herglotz-bound", [&] {
    std::uniform_real_distribution<double> ur(-3.0, 3.0);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      Complex z(ur(rng), 0.0);
      double im = ur(rng);
      if (std::abs(im) < 0.1) im = (im >= 0 ? 0.1 : -0.1);
      z += Complex(0.0, im);
      const auto m = moperator::donoghue_m(*extF, nplus, z);
      ComplexMatrix imm = (m.matrix - m.matrix.adjoint()) / Complex(0, 2);
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(imm / z.imag());
      const double bound =
          2.0 / ((std::norm(z) + 1.0) +
                 std::sqrt(std::pow(std::norm(z) - 1.0, 2) +
                           4.0 * z.real() * z.real()));
      worst = std::max(worst, bound - es.eigenvalues().minCoeff());
      const auto mc = moperator::donoghue_m(*extF, nplus, std::conj(z));
      worst = std::max(worst, (mc.matrix - m.matrix.adjoint()).norm());
    }
    b.add("herglotz-bound", "herglotz-bound", worst, 1e-10);
  });

  b.guarded("cayley", "cayley-transform", [&] {
    GridFun u = random_smooth(model, rng);
    const GridFun cu = moperator::cayley(*extF, u);
    b.add("cayley-isometry", "cayley-transform",
          std::abs(numlin::norm(cu) - numlin::norm(u)), 1e-8);
    const SubspaceBasis nminus = model->deficiency_basis_at(Complex(0, -1));
    const GridFun cm = moperator::cayley(*extF, nminus.column(0));
    GridFun scm = model->apply_adjoint(cm);
    ComplexVector res = scm.values - Complex(0, 1) * cm.values;
    for (auto row : model->flagged_rows()) res(row) = 0.0;
    b.add("cayley-maps-deficiency", "cayley-transform",
          numlin::norm(GridFun(space, res)) / numlin::norm(cm), 1e-6);
  });

  b.guarded("u-transform", "u-transform-law", [&] {
    GridFun u = random_smooth(model, rng);
    const GridFun same = moperator::u_transform(*extF, Complex(0, 1),
                                                Complex(0, 1), u);
    b.add("u-transform-identity", "u-transform-law",
          numlin::norm(GridFun(space, ComplexVector(same.values - u.values))),
          1e-12);
    const Complex z0(0, 1), z1(0, 2), z2(-1, 0);
    const GridFun local_chain = moperator::u_transform(
        *extF, z0, z1, moperator::u_transform(*extF, z1, z2, u));
    const GridFun direct = moperator::u_transform(*extF, z0, z2, u);
    b.add("u-transform-composition", "u-transform-law",
          numlin::norm(GridFun(space, ComplexVector(local_chain.values -
                                                    direct.values))),
          1e-8);
    const GridFun mapped = moperator::u_transform(
        *extF, Complex(0, 2), Complex(0, 1), nplus.column(0));
    GridFun sm = model->apply_adjoint(mapped);
    ComplexVector res = sm.values - Complex(0, 2) * mapped.values;
    for (auto row : model->flagged_rows()) res(row) = 0.0;
    b.add("u-transform-deficiency-mapping", "u-transform-law",
          numlin::norm(GridFun(space, res)) / numlin::norm(mapped), 1e-6);
  });

  b.guarded("alpha-tangent", "alpha-tangent", [&] {
    const auto alpha_fk = moperator::alpha_of_pair(*extF, *extK);
    const auto m0 = moperator::donoghue_m(*extF, nplus, Complex(0.0));
    b.add("alpha-tangent", "alpha-tangent",
          (alpha_fk.tan_matrix() - m0.matrix).norm(), 1e-6);
    const auto alpha_kf = moperator::alpha_of_pair(*extK, *extF);
    b.add("alpha-swap-antisymmetry", "alpha-tangent",
          (alpha_kf.tan_matrix() + alpha_fk.tan_matrix()).norm(), 1e-6);
    b.add("alpha-unitary", "alpha-tangent", alpha_fk.unitary_defect(), 1e-8);
  });

  b.guarded("lft", "linear-fractional-law", [&] {
    const auto alpha_fk = moperator::alpha_of_pair(*extF, *extK);
    const auto alpha_kf = moperator::alpha_of_pair(*extK, *extF);
    const Complex z(-1.0, 0.0);
    const auto m1 = moperator::donoghue_m(*extF, nplus, z);
    const auto predicted = moperator::lft_transform(m1, alpha_fk);
    const auto direct = moperator::donoghue_m(*extK, nplus, z);
    b.add("lft-prediction", "linear-fractional-law",
          (predicted.matrix - direct.matrix).norm(), 1e-6);
    const auto back = moperator::lft_transform(predicted, alpha_kf);
    b.add("lft-roundtrip", "linear-fractional-law",
          (back.matrix - m1.matrix).norm(), 1e-8);
    moperator::MOperatorSample mi;
    mi.z = Complex(0, 1);
    mi.matrix = Complex(0, 1) * ComplexMatrix::Identity(r, r);
    const auto lifted = moperator::lft_transform(mi, alpha_fk);
    b.add("lft-fixes-i", "linear-fractional-law",
          (lifted.matrix - mi.matrix).norm(), 1e-10);
  });

  // --- resolvent formulas ------------------------------------------------------
  b.guarded("krein-formula", "krein-formula", [&] {
    double worst_general = 0.0, worst_fk = 0.0, worst_rev = 0.0;
    for (Complex z : config.z_list) {
      const auto rhs_fk = kreinformula::krein_fk_rhs(*model, z);
      const ComplexMatrix direct_k = extK->resolvent_dense(z);
      worst_fk = std::max(worst_fk, opnorm(ComplexMatrix(rhs_fk.matrix - direct_k)) /
                                        opnorm(direct_k));
      const auto rhs_rev = kreinformula::reversed_krein_rhs(*model, z);
      const ComplexMatrix direct_f = extF->resolvent_dense(z);
      worst_rev = std::max(worst_rev, opnorm(ComplexMatrix(rhs_rev.matrix - direct_f)) /
                                          opnorm(direct_f));
      const auto rhs_gen = kreinformula::general_krein_rhs(*extK, *extF, z);
      worst_general =
          std::max(worst_general, opnorm(ComplexMatrix(rhs_gen.matrix - direct_f)) /
                                      opnorm(direct_f));
    }
    b.add("krein-formula-fk", "krein-formula-fk", worst_fk, 1e-6);
    b.add("krein-formula-reversed", "krein-formula-reversed", worst_rev, 1e-6);
    b.add("krein-formula-general", "krein-formula-general", worst_general, 1e-6);
  });

  b.guarded("formula-resolvent-identity", "resolvent-identity", [&] {
    const Complex z1(-1.0, 0.0), z2(1.0, 2.0);
    const auto r1 = kreinformula::krein_fk_rhs(*model, z1);
    const auto r2 = kreinformula::krein_fk_rhs(*model, z2);
    std::mt19937_64 local(config.seed + 7);
    double worst = 0.0;
    for (int t = 0; t < 5; ++t) {
      const GridFun f = random_smooth(model, local);
      const ComplexVector lhs = r1.matrix * f.values - r2.matrix * f.values;
      const ComplexVector rhs =
          (z1 - z2) * (r1.matrix * (r2.matrix * f.values).eval());
      worst = std::max(worst,
                       numlin::norm(GridFun(space, ComplexVector(lhs - rhs))));
    }
    b.add("formula-resolvent-identity", "resolvent-identity", worst, 1e-7);
  });

  b.guarded("rank-structure", "rank-structure", [&] {
    // reference extension relatively prime to both endpoints
    ComplexMatrix rows = ComplexMatrix::Zero(r, 2 * r);
    for (int p = 0; p < r; ++p) {
      rows(p, 2 * p) = 1.0;
      rows(p, 2 * p + 1) = (p % 2 == 0) ? -1.0 : 1.0;  // Robin-type mixing
    }
    ExtensionRealization robin(model, ExtensionSpec::boundary(rows));
    const auto report = kreinformula::resolvent_diff_ideal_check(
        robin, *extF, *extK, Complex(0, 1));
    const double sig_ratio =
        report.sigma_difference(std::min<Eigen::Index>(
            r, report.sigma_difference.size() - 1)) /
        report.sigma_difference(0);
    b.add("rank-structure", "rank-structure", sig_ratio, 1e-9);
    b.add("rank-match", "rank-structure",
          std::abs(report.rank_difference - report.rank_exponential), 0.0);
    b.add("difference-factorization", "difference-factorization",
          report.factorization_residual, 1e-7);
  });

  b.guarded("laurent", "laurent-principal-part", [&] {
    const auto rep = kreinformula::laurent_limit_check(
        model, {Complex(1e-2, 0), Complex(1e-3, 0)});
    double ratio_defect = 0.0;
    for (double q : rep.ratios)
      ratio_defect = std::max(ratio_defect, std::abs(q - 1.0));
    b.add("laurent-linear-decay", "laurent-principal-part", ratio_defect, 0.2);
    b.add("laurent-richardson", "laurent-principal-part",
          rep.richardson_defect, 1e-4);
  });

  b.guarded("small-z", "small-z-series", [&] {
    const auto at_zero = kreinformula::small_z_series(*model, Complex(0.0), 0);
    const auto reduced = extensions::krein_reduced_inverse(*model);
    b.add("small-z-at-zero", "small-z-series",
          opnorm(ComplexMatrix(at_zero.matrix - reduced.matrix)), 1e-10);
    const Complex z(-0.05 * eps, 0.0);
    const auto series = kreinformula::small_z_series(*model, z, 30);
    const KernelOperator proj = extensions::kernel_projector(*model);
    const ComplexMatrix direct =
        extK->resolvent_dense(z) *
        (ComplexMatrix::Identity(n, n) - proj.matrix);
    b.add("small-z-matches-resolvent", "small-z-series",
          opnorm(ComplexMatrix(series.matrix - direct)) / opnorm(direct), 1e-7);
  });

  b.guarded("m-derivative", "m-derivative-identity", [&] {
    const double d = 1e-3;
    const auto mp = moperator::donoghue_m(*extF, nplus, Complex(d, 0));
    const auto mm = moperator::donoghue_m(*extF, nplus, Complex(-d, 0));
    const ComplexMatrix fd = (mp.matrix - mm.matrix) / (2.0 * d);
    // I + P G^2 P restricted to the deficiency basis
    ComplexMatrix target = ComplexMatrix::Identity(r, r);
    const auto& w = space->weights();
    ComplexMatrix gv(n, r);
    for (Eigen::Index c = 0; c < r; ++c)
      gv.col(c) = extF->apply_resolvent(
          0.0, extF->apply_resolvent(0.0, ComplexVector(nplus.columns.col(c))));
    target += nplus.columns.adjoint() * w.cast<Complex>().asDiagonal() * gv;
    b.add("m-derivative-identity", "m-derivative-identity",
          (fd - target).norm(), 1e-5);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(
        ComplexMatrix(0.5 * (target + target.adjoint())));
    b.add("m-derivative-lower-bound", "m-derivative-identity",
          std::max(0.0, 1.0 - 1e-6 - es.eigenvalues().minCoeff()), 0.0);
  });

  // --- spectral counting and trace ideals --------------------------------------
  b.guarded("eigenvalue-interlacing", "eigenvalue-interlacing", [&] {
    const auto rep = ideals::eigen_inequality_check(*model, config.jmax);
    b.add("eigenvalue-interlacing", "eigenvalue-interlacing",
          -rep.max_violation, 0.0,
          "mu_F(1)=" + format_double(rep.mu_friedrichs(0)));
  });

  b.guarded("schatten-suite", "schatten-equivalence", [&] {
    std::vector<double> ps;
    for (double p : config.p_list)
      if (!std::isinf(p)) ps.push_back(p);
    for (const auto& rep : ideals::schatten_equivalence_sweep(*model, ps)) {
      const std::string tag = "-p" + format_double(rep.p);
      b.add("schatten-i-vs-ii" + tag, "schatten-equivalence", rep.i_vs_ii,
            1e-12 * std::max(1.0, rep.reduced_inverse_norm));
      b.add("schatten-iii-sq-vs-ii" + tag, "schatten-equivalence",
            rep.iii_sq_vs_ii, 1e-8);
      b.add("schatten-iii-vs-iv" + tag, "schatten-equivalence", rep.iii_vs_iv,
            1e-8 * std::max(1.0, rep.halfpower_left_norm));
    }
  });

  b.guarded("schatten-monotonic", "schatten-monotonic", [&] {
    const KernelOperator green = models::friedrichs_green(*model, 0.0);
    double prev = std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (double p : {1.0, 2.0, 4.0, numlin::schatten_infinity}) {
      const double v = numlin::schatten_norm(green, p);
      worst = std::max(worst, v - prev);
      prev = v;
    }
    b.add("schatten-monotonic", "schatten-monotonic", std::max(0.0, worst),
          1e-12);
    // Hilbert-Schmidt consistency with the weighted entry sum
    const auto& w = space->weights();
    double frob2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        frob2 += w(i) * std::norm(green.matrix(i, j)) / w(j);
    const double hs = numlin::schatten_norm(green, 2.0);
    b.add("hilbert-schmidt-consistency", "schatten-monotonic",
          std::abs(hs * hs - frob2) / std::max(1e-300, frob2), 1e-8);
  });

  b.guarded("singular-value-domination", "singular-value-domination", [&] {
    const auto rep = ideals::compactness_transfer_check(*model, 1.0, config.jmax);
    b.add("singular-value-domination", "singular-value-domination",
          rep.dominated ? 0.0 : 1.0, 0.0,
          "||reduced||_1=" + format_double(rep.reduced_norm_p));
  });

  if (model->kind() == "interval") {
    b.guarded("green-closed-forms", "green-closed-forms", [&] {
      const KernelOperator green = models::friedrichs_green(*model, 0.0);
      const double tr = green.matrix.trace().real();
      b.add("green-trace", "green-closed-forms", std::abs(tr - 1.0 / 6.0), 1e-5);
      b.add("green-hilbert-schmidt", "green-closed-forms",
            std::abs(numlin::schatten_norm(green, 2.0) - 1.0 / std::sqrt(90.0)),
            1e-5);
    });
  }

  // --- boundary classification --------------------------------------------------
  b.guarded("boundary-classification", "boundary-classification", [&] {
    const auto fdiag = moperator::boundary_behavior(
        *extF, nplus, moperator::BoundaryMode::FriedrichsTest);
    b.add("boundary-hard-diverges-down", "boundary-classification",
          (fdiag.monotone && fdiag.diverged) ? 0.0 : 1.0, 0.0,
          "final " + format_double(fdiag.final_value));
    const auto kdiag = moperator::boundary_behavior(
        *extK, nplus, moperator::BoundaryMode::KreinTest);
    b.add("boundary-soft-diverges-up", "boundary-classification",
          (kdiag.monotone && kdiag.diverged) ? 0.0 : 1.0, 0.0,
          "final " + format_double(kdiag.final_value));
    std::vector<int> all;
    for (int k = 0; k < r; ++k) all.push_back(k);
    ExtensionRealization invertible_b(
        model, ExtensionSpec::param(ComplexMatrix::Identity(r, r), all));
    const auto bdiag = moperator::boundary_behavior(
        invertible_b, nplus, moperator::BoundaryMode::KreinTest);
    b.add("boundary-invertible-b-bounded", "boundary-classification",
          bdiag.bounded ? 0.0 : 1.0, 0.0,
          "final " + format_double(bdiag.final_value));
    b.add("boundary-partial-sum-growth", "boundary-classification",
          (fdiag.sum_up_fine > 1.5 * fdiag.sum_up_coarse) ? 0.0 : 1.0, 0.0);
  });

  // --- spectral measure (run at a moderate size) ---------------------------------
  b.guarded("herglotz-representation", "herglotz-representation", [&] {
    ModelPtr small = model;
    std::shared_ptr<ExtensionRealization> f_small = extF;
    if (n > 512 && model->kind() != "conjugated") {
      small = model->resized(512);
      f_small = std::make_shared<ExtensionRealization>(
          small, ExtensionSpec::friedrichs());
    }
    const auto rep = moperator::herglotz_rep_check(
        *f_small, small->nplus_basis(),
        {Complex(1, 1), Complex(-2, 0.5)});
    b.add("herglotz-normalization", "herglotz-representation",
          rep.normalization_defect, 0.02);
    double worst = 0.0;
    for (const auto& [z, d] : rep.reconstruction_defects)
      worst = std::max(worst, d);
    b.add("herglotz-reconstruction", "herglotz-representation", worst, 1e-4);
    b.add("herglotz-mass-growth", "herglotz-representation",
          rep.mass_growth() >= 1.5 ? 0.0 : 1.0, 0.0,
          "growth " + format_double(rep.mass_growth()));
  });

  b.guarded("p12", "p12-structure", [&] {
    ModelPtr small = (n > 512 && model->kind() != "conjugated")
                         ? model->resized(512)
                         : model;
    ExtensionRealization f_small(small, ExtensionSpec::friedrichs());
    ExtensionRealization k_small(small, ExtensionSpec::krein());
    const SubspaceBasis& np_small = small->nplus_basis();
    const auto p12i = moperator::p12(f_small, k_small, Complex(0, 1));
    // vanishes on the orthogonal complement of N_+
    std::mt19937_64 local(config.seed + 11);
    GridFun probe = small->sample_domain_element(local);
    const GridFun proj = numlin::project(np_small, probe);
    ComplexVector perp = probe.values - proj.values;
    const double off =
        numlin::norm(GridFun(small->space(), ComplexVector(p12i.matrix * perp))) /
        numlin::norm(GridFun(small->space(), perp));
    b.add("p12-vanishes-off-nplus", "p12-structure", off, 1e-8);
    const auto alpha = moperator::alpha_of_pair(f_small, k_small);
    const auto& ws = small->space()->weights();
    const ComplexMatrix lhs =
        np_small.columns.adjoint() * ws.cast<Complex>().asDiagonal() *
        (p12i.matrix * np_small.columns);
    const ComplexMatrix rhs =
        (Complex(0, 1) / 2.0) *
        (ComplexMatrix::Identity(lhs.rows(), lhs.cols()) -
         alpha.restricted_unitary);
    b.add("p12-at-i-angle-form", "p12-structure", (lhs - rhs).norm(), 1e-8);
    int rank_lo = 0, rank_hi = 0;
    for (Complex z : {Complex(0, 1), Complex(-1, 0), Complex(0, 2)}) {
      const auto p12z = moperator::p12(f_small, k_small, z);
      const ComplexMatrix sec =
          np_small.columns.adjoint() * ws.cast<Complex>().asDiagonal() *
          (p12z.matrix * np_small.columns);
      Eigen::JacobiSVD<ComplexMatrix> svd(sec);
      int rank = 0;
      for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-10) ++rank;
      rank_lo = (rank_lo == 0) ? rank : std::min(rank_lo, rank);
      rank_hi = std::max(rank_hi, rank);
    }
    b.add("p12-range-constancy", "p12-structure", rank_hi - rank_lo, 0.0);
  });

  // --- symmetry transport ---------------------------------------------------------
  if (model->kind() == "interval") {
    b.guarded("unitary-transport", "unitary-transport", [&] {
      ComplexMatrix refl = ComplexMatrix::Zero(n, n);
      for (Eigen::Index i = 0; i < n; ++i) refl(i, n - 1 - i) = 1.0;
      const KernelOperator u(space, refl, false);
      const ComplexMatrix rk = extK->resolvent_dense(Complex(-1, 0));
      b.add("reflection-commutes-soft", "unitary-transport",
            opnorm(ComplexMatrix(refl * rk * refl - rk)), 1e-8);
      const ComplexMatrix rf = extF->resolvent_dense(Complex(-1, 0));
      b.add("reflection-commutes-hard", "unitary-transport",
            opnorm(ComplexMatrix(refl * rf * refl - rf)), 1e-8);
      const auto conj = models::unitary_conjugate(model, u);
      ExtensionRealization conj_k(conj, ExtensionSpec::krein());
      b.add("conjugated-soft-transport", "unitary-transport",
            opnorm(ComplexMatrix(conj_k.resolvent_dense(Complex(-1, 0)) -
                                 refl * rk * refl)),
            1e-8);
    });
  }

  if (model->kind().rfind("dsum", 0) == 0) {
    b.guarded("direct-sum-transport", "direct-sum-transport", [&] {
      // the soft extension of the sum must act blockwise as the sum of the
      // parts' soft extensions
      const ComplexMatrix rk = extK->resolvent_dense(Complex(-1, 0));
      double block_defect = 0.0, offblock = 0.0;
      Eigen::Index offset = 0;
      for (const auto& kind : config.dsum_parts) {
        RunConfig part_cfg = config;
        part_cfg.model_kind = kind;
        const ModelPtr part = part_cfg.build_model();
        const Eigen::Index pn = part->space()->size();
        ExtensionRealization part_k(part, ExtensionSpec::krein());
        const ComplexMatrix part_rk = part_k.resolvent_dense(Complex(-1, 0));
        block_defect = std::max(
            block_defect, opnorm(ComplexMatrix(
                              rk.block(offset, offset, pn, pn) - part_rk)));
        if (offset > 0) {
          offblock = std::max(
              offblock,
              rk.block(offset, 0, pn, offset).cwiseAbs().maxCoeff() +
                  rk.block(0, offset, offset, pn).cwiseAbs().maxCoeff());
        }
        offset += pn;
      }
      b.add("direct-sum-soft-blockdiag", "direct-sum-transport", block_defect,
            1e-8);
      b.add("direct-sum-off-blocks-vanish", "direct-sum-transport", offblock,
            1e-12);
    });
  }

  result.report = std::move(b.report);
  result.exit_code = result.report.all_pass() ? 0 : 1;
  return result;
}

// ---------------------------------------------------------------------------
// CSV commands
// ---------------------------------------------------------------------------
CommandResult cmd_spectra(const RunConfig& config) {
  CommandResult result;
  result.table.header = {"j", "mu_F", "mu_K", "mu_K_over_mu_F"};
  ModelPtr model = config.build_model();
  try {
    const auto rep = ideals::eigen_inequality_check(*model, config.jmax);
    for (int j = 0; j < config.jmax; ++j) {
      result.table.rows.push_back(
          {std::to_string(j + 1), format_double(rep.mu_friedrichs(j)),
           format_double(rep.mu_reduced_krein(j)),
           format_double(rep.mu_reduced_krein(j) / rep.mu_friedrichs(j))});
    }
    result.exit_code = 0;
  } catch (const std::exception& e) {
    result.table.rows.push_back({"error", e.what(), "", ""});
    result.exit_code = 1;
  }
  return result;
}

CommandResult cmd_mfun(const RunConfig& config) {
  CommandResult result;
  ModelPtr model = config.build_model();
  const int r = model->deficiency_index();
  result.table.header = {"re_z", "im_z", "status"};
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) {
      result.table.header.push_back("m" + std::to_string(i) + std::to_string(j) + "_re");
      result.table.header.push_back("m" + std::to_string(i) + std::to_string(j) + "_im");
    }
  ExtensionRealization ext(model, ExtensionSpec::friedrichs());
  const SubspaceBasis& nplus = model->nplus_basis();

  std::vector<Complex> contour;
  for (int k = 0; k < 15; ++k) {
    const double t = 0.1 * std::pow(100.0, k / 14.0);  // 0.1 .. 10 log-spaced
    contour.push_back(Complex(-1.0, t));
  }
  contour.push_back(Complex(0, 1));
  for (Complex z : config.z_list) contour.push_back(z);

  for (Complex z : contour) {
    std::vector<std::string> row{format_double(z.real()),
                                 format_double(z.imag())};
    if (!ext.in_resolvent_set(z, 1e-9)) {
      row.push_back("skipped");
      for (int k = 0; k < 2 * r * r; ++k) row.push_back("");
      result.table.rows.push_back(std::move(row));
      continue;
    }
    const auto m = moperator::donoghue_m(ext, nplus, z);
    row.push_back("ok");
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        row.push_back(format_double(m.matrix(i, j).real()));
        row.push_back(format_double(m.matrix(i, j).imag()));
      }
    result.table.rows.push_back(std::move(row));
  }
  result.exit_code = 0;
  return result;
}

CommandResult cmd_schatten(const RunConfig& config) {
  CommandResult result;
  result.table.header = {"p",           "n",          "reduced_inverse",
                         "compressed",  "halfpower",  "halfpower_adjoint",
                         "richardson"};
  if (config.p_list.empty()) {
    result.table.rows.push_back({"error", "empty exponent list", "", "", "", "", ""});
    result.exit_code = 2;
    return result;
  }
  try {
    const std::vector<Eigen::Index> sizes = {
        std::max<Eigen::Index>(config.n / 4, 64),
        std::max<Eigen::Index>(config.n / 2, 128), config.n};
    for (double p : config.p_list) {
      if (std::isinf(p)) continue;
      std::vector<double> values;
      for (Eigen::Index nn : sizes) {
        RunConfig local = config;
        local.n = nn;
        ModelPtr model = local.build_model();
        const auto rep = ideals::schatten_equivalence_suite(*model, p);
        values.push_back(rep.compressed_inverse_norm);
        result.table.rows.push_back(
            {format_double(p), std::to_string(nn),
             format_double(rep.reduced_inverse_norm),
             format_double(rep.compressed_inverse_norm),
             format_double(rep.halfpower_left_norm),
             format_double(rep.halfpower_right_norm), ""});
      }
      // second-order Richardson from the two finest grids
      const double extrap =
          values[2] + (values[2] - values[1]) / 3.0;
      result.table.rows.back().back() = format_double(extrap);
    }
    result.exit_code = 0;
  } catch (const std::exception& e) {
    result.table.rows.push_back({"error", e.what(), "", "", "", "", ""});
    result.exit_code = 1;
  }
  return result;
}

}  // namespace kreinkit::runner
