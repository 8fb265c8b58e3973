#include "ddpmctl/app/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace ddpmctl::app {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_ensemble_csv(const std::filesystem::path& path, const Ensemble& e) {
  std::string text;
  for (Eigen::Index k = 0; k < e.dim(); ++k) text += (k ? ",x" : "x") + std::to_string(k);
  text += '\n';
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    for (Eigen::Index k = 0; k < e.dim(); ++k) {
      if (k) text += ',';
      text += format_double(e.states(k, i));
    }
    text += '\n';
  }
  write_text(path, text);
}

Ensemble read_ensemble_csv(const std::filesystem::path& path, double time) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  const auto dim = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') + 1);
  std::vector<double> values;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    Eigen::Index fields = 0;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p <= end) {
      const char* comma = std::find(p, end, ',');
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(p, comma, v);
      if (ec != std::errc() || ptr != comma) {
        throw ParseError(path.string() + ":" + std::to_string(row) + ": bad number");
      }
      values.push_back(v);
      ++fields;
      p = comma + 1;
    }
    if (fields != dim) throw ParseError(path.string() + ":" + std::to_string(row) + ": wrong column count");
  }
  if (values.empty()) throw ParseError(path.string() + ": no particles");
  const auto count = static_cast<Eigen::Index>(values.size()) / dim;
  Ensemble e(Eigen::Map<Eigen::MatrixXd>(values.data(), dim, count), time);
  e.validate();
  return e;
}

namespace {

Eigen::VectorXd json_vector(const json& a, const char* what) {
  if (!a.is_array()) throw ParseError(std::string("checkpoint: ") + what + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw ParseError(std::string("checkpoint: ") + what + " must hold numbers");
    v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  }
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  // Numbers are written by hand so every double carries 17 significant digits.
  std::string params;
  const auto& theta = ckpt.policy.params();
  for (Eigen::Index i = 0; i < theta.size(); ++i) params += (i ? "," : "") + format_double(theta[i]);
  std::string sizes;
  for (std::size_t i = 0; i < ckpt.policy.layer_sizes().size(); ++i) {
    sizes += (i ? "," : "") + std::to_string(ckpt.policy.layer_sizes()[i]);
  }
  std::string text = "{\n  \"layer_sizes\": [" + sizes + "],\n  \"activation\": \"tanh\",\n  \"params\": [" + params + "]";
  if (ckpt.optimizer) {
    const auto& opt = *ckpt.optimizer;
    auto list = [](const Eigen::VectorXd& v) {
      std::string s;
      for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
      return s;
    };
    text += ",\n  \"next_epoch\": " + std::to_string(ckpt.next_epoch);
    text += ",\n  \"adam\": {\"lr\": " + format_double(opt.lr) + ", \"beta1\": " + format_double(opt.beta1) +
            ", \"beta2\": " + format_double(opt.beta2) + ", \"eps\": " + format_double(opt.eps) +
            ", \"step\": " + std::to_string(opt.step) + ",\n    \"m\": [" + list(opt.m) + "],\n    \"v\": [" + list(opt.v) +
            "]}";
  }
  text += "\n}\n";
  write_text(path, text);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(path.string() + ": checkpoint must be a JSON object");
  for (const char* key : {"layer_sizes", "params"}) {
    if (!j.contains(key)) throw ParseError(path.string() + ": missing \"" + key + "\"");
  }
  if (j.value("activation", std::string("tanh")) != "tanh") throw ParseError(path.string() + ": only tanh is supported");

  std::vector<int> sizes;
  try {
    sizes = j.at("layer_sizes").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": layer_sizes: " + e.what());
  }
  if (sizes.size() < 2) throw ParseError(path.string() + ": need at least two layer sizes");
  for (int s : sizes) {
    if (s < 1) throw ParseError(path.string() + ": layer sizes must be positive");
  }
  Checkpoint ckpt;
  ckpt.policy = MlpPolicy(sizes);
  const Eigen::VectorXd theta = json_vector(j.at("params"), "params");
  if (static_cast<std::size_t>(theta.size()) != MlpPolicy::parameter_count(sizes)) {
    throw ParseError(path.string() + ": parameter count does not match layer_sizes");
  }
  ckpt.policy.set_params(theta);

  if (j.contains("adam")) {
    const json& a = j.at("adam");
    try {
      AdamState st;
      st.lr = a.at("lr").get<double>();
      st.beta1 = a.at("beta1").get<double>();
      st.beta2 = a.at("beta2").get<double>();
      st.eps = a.at("eps").get<double>();
      st.step = a.at("step").get<std::uint64_t>();
      st.m = json_vector(a.at("m"), "adam.m");
      st.v = json_vector(a.at("v"), "adam.v");
      if (st.m.size() != theta.size() || st.v.size() != theta.size()) {
        throw ParseError(path.string() + ": optimizer moments do not match the parameters");
      }
      ckpt.optimizer = std::move(st);
      ckpt.next_epoch = j.at("next_epoch").get<std::size_t>();
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": adam: " + e.what());
    }
  }
  return ckpt;
}

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history) {
  std::string text = "epoch,cost,final_kl\n";
  for (const auto& r : history.epochs) {
    text += std::to_string(r.epoch) + "," + format_double(r.cost) + "," + format_double(r.final_kl) + "\n";
  }
  write_text(path, text);
}

void write_timing_csv(const std::filesystem::path& path, const TrainHistory& history) {
  std::string text = "epoch,seconds\n";
  for (const auto& r : history.epochs) text += std::to_string(r.epoch) + "," + format_double(r.seconds) + "\n";
  write_text(path, text);
}

}  // namespace ddpmctl::app
