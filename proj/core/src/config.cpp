#include "byzfed/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <type_traits>

#include "byzfed/error.hpp"

namespace byzfed {
namespace {

using nlohmann::json;

// Reads fields of one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        out = number(v, key);
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
        out = v.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_unsigned()) {
            out = v.get<T>();
          } else {
            if (v.get<long long>() < 0) throw ConfigError("");
            out = static_cast<T>(v.get<long long>());
          }
        } else {
          out = v.get<T>();
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("");
        out = v.get<std::string>();
      } else {
        static_assert(sizeof(T) == 0, "unsupported field type");
      }
    } catch (const ConfigError&) {
      throw ConfigError(where() + "." + key + " has the wrong type");
    } catch (const json::exception&) {
      throw ConfigError(where() + "." + key + " has the wrong type");
    }
  }

  std::optional<std::string> text(const char* key) {
    if (!has(key)) return std::nullopt;
    std::string s;
    get(key, s);
    return s;
  }

  std::optional<Section> child(const char* key) {
    if (!has(key)) return std::nullopt;
    return Section(j_.at(key), path_ + "." + key);
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown key " + where() + "." + k);
    }
  }

  std::string where() const { return path_; }

 private:
  static double number(const json& v, const char* key) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    }
    (void)key;
    throw ConfigError("");
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json number_out(double x) {
  if (std::isinf(x)) return x > 0 ? json("inf") : json("-inf");
  return x;
}

std::string adversary_name(AdversaryKind k) {
  return k == AdversaryKind::ScaledBernoulli ? "scaled_bernoulli" : "shared_scaled_bernoulli";
}

AdversaryKind parse_adversary(const std::string& s) {
  if (s == "scaled_bernoulli") return AdversaryKind::ScaledBernoulli;
  if (s == "shared_scaled_bernoulli") return AdversaryKind::SharedScaledBernoulli;
  throw ConfigError("unknown fleet.adversary '" + s + "'");
}

std::string attack_name(AttackKind k) {
  switch (k) {
    case AttackKind::None: return "none";
    case AttackKind::OwnCorruptData: return "own_corrupt_data";
    case AttackKind::SignFlip: return "sign_flip";
    case AttackKind::RandomGauss: return "random_gauss";
    case AttackKind::ConstantVector: return "constant";
  }
  return "none";
}

AttackKind parse_attack(const std::string& s) {
  for (auto k : {AttackKind::None, AttackKind::OwnCorruptData, AttackKind::SignFlip, AttackKind::RandomGauss,
                 AttackKind::ConstantVector}) {
    if (attack_name(k) == s) return k;
  }
  throw ConfigError("unknown attack.kind '" + s + "'");
}

std::string header_name(HeaderMode h) {
  return h == HeaderMode::Auto ? "auto" : h == HeaderMode::Present ? "present" : "absent";
}

HeaderMode parse_header(const std::string& s) {
  if (s == "auto") return HeaderMode::Auto;
  if (s == "present") return HeaderMode::Present;
  if (s == "absent") return HeaderMode::Absent;
  throw ConfigError("unknown ingest.header '" + s + "'");
}

}  // namespace

json config_to_json(const PipelineConfig& c) {
  json j;
  j["source"] = c.source == DataSource::Synthetic ? "synthetic" : "ingest";
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  j["threads"] = c.threads;
  j["out_dir"] = c.out_dir;
  j["fleet"] = {{"m", c.fleet.m},
                {"n", c.fleet.n},
                {"d", c.fleet.d},
                {"K", c.fleet.K},
                {"alpha", c.fleet.alpha},
                {"sigma", c.fleet.sigma},
                {"adversary", adversary_name(c.fleet.adversary)},
                {"adversary_scale", c.fleet.adversary_scale}};
  const auto& in = c.ingest;
  j["ingest"] = {{"path", in.path},
                 {"format", in.format == IngestFormat::Csv ? "csv" : "svmlight"},
                 {"delimiter", std::string(1, in.csv.delimiter)},
                 {"header", header_name(in.csv.header)},
                 {"label_column", in.csv.label_column},
                 {"gamma", in.spec.gamma},
                 {"min_cluster", in.spec.min_cluster},
                 {"shard_size", in.spec.shard_size},
                 {"n_adv", in.spec.n_adv},
                 {"adv_offset", in.spec.adv_noise.offset},
                 {"adv_scale", in.spec.adv_noise.scale}};
  j["solver"] = {{"kind", to_string(c.solver.kind)},
                 {"gd_iters", c.solver.gd_iters},
                 {"gd_step", c.solver.gd_step},
                 {"ogd_lambda", c.solver.ogd.lambda},
                 {"ogd_radius", c.solver.ogd.radius}};
  const auto& cl = c.cluster;
  j["cluster"] = {{"method", to_string(cl.kind)},
                  {"init", to_string(cl.init)},
                  {"warm_fraction", cl.warm_fraction},
                  {"max_iter", cl.max_iter},
                  {"C", number_out(cl.C)},
                  {"sigma_hat", cl.sigma_hat},
                  {"trim_scale", cl.trim_scale == TrimScale::Pooled ? "pooled" : "per_bucket"},
                  {"geomedian_tol", cl.geomedian.tol},
                  {"geomedian_max_iter", cl.geomedian.max_iter},
                  {"gamma", cl.gamma},
                  {"min_cluster", cl.min_cluster},
                  {"batches", cl.batches},
                  {"filter_bound", cl.filter.variance_bound},
                  {"filter_max_rounds", cl.filter.max_rounds}};
  const auto& o = c.opt;
  j["opt"] = {{"method", to_string(o.kind)},
              {"beta", o.beta},
              {"step", o.step},
              {"max_rounds", o.max_rounds},
              {"local_steps", o.local_steps},
              {"stop_tol", o.stop_tol},
              {"geomedian_tol", o.geomedian.tol},
              {"geomedian_max_iter", o.geomedian.max_iter},
              {"filter_bound", o.filter.variance_bound},
              {"filter_max_rounds", o.filter.max_rounds}};
  json constant = json::array();
  for (Eigen::Index i = 0; i < c.attack.constant.size(); ++i) constant.push_back(c.attack.constant[i]);
  j["attack"] = {{"kind", attack_name(c.attack.kind)},
                 {"scale", c.attack.scale},
                 {"constant", constant},
                 {"seed", c.attack.seed}};
  json gc = json::array();
  for (auto k : c.grid_clusterers) gc.push_back(to_string(k));
  json go = json::array();
  for (auto k : c.grid_optimizers) go.push_back(to_string(k));
  j["grid"] = {{"clusterers", gc}, {"optimizers", go}};
  return j;
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  Section root(j, "config");
  if (auto s = root.text("source")) {
    if (*s == "synthetic") {
      c.source = DataSource::Synthetic;
    } else if (*s == "ingest") {
      c.source = DataSource::Ingest;
    } else {
      throw ConfigError("unknown source '" + *s + "'");
    }
  }
  root.get("seed", c.seed);
  root.get("trials", c.trials);
  root.get("threads", c.threads);
  root.get("out_dir", c.out_dir);

  if (auto f = root.child("fleet")) {
    f->get("m", c.fleet.m);
    f->get("n", c.fleet.n);
    f->get("d", c.fleet.d);
    f->get("K", c.fleet.K);
    f->get("alpha", c.fleet.alpha);
    f->get("sigma", c.fleet.sigma);
    if (auto a = f->text("adversary")) c.fleet.adversary = parse_adversary(*a);
    f->get("adversary_scale", c.fleet.adversary_scale);
    f->finish();
  }
  if (auto in = root.child("ingest")) {
    auto& g = c.ingest;
    in->get("path", g.path);
    if (auto fmt = in->text("format")) {
      if (*fmt == "csv") {
        g.format = IngestFormat::Csv;
      } else if (*fmt == "svmlight") {
        g.format = IngestFormat::SvmLight;
      } else {
        throw ConfigError("unknown ingest.format '" + *fmt + "'");
      }
    }
    if (auto dl = in->text("delimiter")) {
      if (dl->size() != 1) throw ConfigError("ingest.delimiter must be one character");
      g.csv.delimiter = (*dl)[0];
    }
    if (auto h = in->text("header")) g.csv.header = parse_header(*h);
    in->get("label_column", g.csv.label_column);
    in->get("gamma", g.spec.gamma);
    in->get("min_cluster", g.spec.min_cluster);
    in->get("shard_size", g.spec.shard_size);
    in->get("n_adv", g.spec.n_adv);
    in->get("adv_offset", g.spec.adv_noise.offset);
    in->get("adv_scale", g.spec.adv_noise.scale);
    in->finish();
  }
  if (auto s = root.child("solver")) {
    if (auto k = s->text("kind")) c.solver.kind = parse_solver(*k);
    s->get("gd_iters", c.solver.gd_iters);
    s->get("gd_step", c.solver.gd_step);
    s->get("ogd_lambda", c.solver.ogd.lambda);
    s->get("ogd_radius", c.solver.ogd.radius);
    s->finish();
  }
  if (auto s = root.child("cluster")) {
    auto& cl = c.cluster;
    if (auto k = s->text("method")) cl.kind = parse_clusterer(*k);
    if (auto k = s->text("init")) cl.init = parse_init(*k);
    s->get("warm_fraction", cl.warm_fraction);
    s->get("max_iter", cl.max_iter);
    s->get("C", cl.C);
    s->get("sigma_hat", cl.sigma_hat);
    if (auto ts = s->text("trim_scale")) {
      if (*ts == "pooled") {
        cl.trim_scale = TrimScale::Pooled;
      } else if (*ts == "per_bucket") {
        cl.trim_scale = TrimScale::PerBucket;
      } else {
        throw ConfigError("unknown cluster.trim_scale '" + *ts + "'");
      }
    }
    s->get("geomedian_tol", cl.geomedian.tol);
    s->get("geomedian_max_iter", cl.geomedian.max_iter);
    s->get("gamma", cl.gamma);
    s->get("min_cluster", cl.min_cluster);
    s->get("batches", cl.batches);
    s->get("filter_bound", cl.filter.variance_bound);
    s->get("filter_max_rounds", cl.filter.max_rounds);
    s->finish();
  }
  if (auto s = root.child("opt")) {
    auto& o = c.opt;
    if (auto k = s->text("method")) o.kind = parse_optimizer(*k);
    s->get("beta", o.beta);
    s->get("step", o.step);
    s->get("max_rounds", o.max_rounds);
    s->get("local_steps", o.local_steps);
    s->get("stop_tol", o.stop_tol);
    s->get("geomedian_tol", o.geomedian.tol);
    s->get("geomedian_max_iter", o.geomedian.max_iter);
    s->get("filter_bound", o.filter.variance_bound);
    s->get("filter_max_rounds", o.filter.max_rounds);
    s->finish();
  }
  if (auto s = root.child("attack")) {
    if (auto k = s->text("kind")) c.attack.kind = parse_attack(*k);
    s->get("scale", c.attack.scale);
    if (s->has("constant")) {
      const json& v = s->raw("constant");
      if (!v.is_array()) throw ConfigError("attack.constant must be an array of numbers");
      c.attack.constant.resize(static_cast<Eigen::Index>(v.size()));
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ConfigError("attack.constant must be an array of numbers");
        c.attack.constant[static_cast<Eigen::Index>(i)] = v[i].get<double>();
      }
    }
    s->get("seed", c.attack.seed);
    s->finish();
  }
  if (auto s = root.child("grid")) {
    auto list = [&](const char* key) {
      std::vector<std::string> out;
      if (!s->has(key)) return out;
      const json& v = s->raw(key);
      if (!v.is_array()) throw ConfigError(std::string("grid.") + key + " must be an array of names");
      for (const auto& e : v) {
        if (!e.is_string()) throw ConfigError(std::string("grid.") + key + " must be an array of names");
        out.push_back(e.get<std::string>());
      }
      return out;
    };
    for (const auto& n : list("clusterers")) c.grid_clusterers.push_back(parse_clusterer(n));
    for (const auto& n : list("optimizers")) c.grid_optimizers.push_back(parse_optimizer(n));
    s->finish();
  }
  root.finish();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace byzfed
