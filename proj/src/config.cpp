#include "wafl/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace wafl {

std::string to_string(AttackKind k) {
    switch (k) {
        case AttackKind::None: return "none";
        case AttackKind::Rmp: return "rmp";
        case AttackKind::Ssc: return "ssc";
        case AttackKind::Sdc: return "sdc";
        case AttackKind::Cod: return "cod";
    }
    return "none";
}

AttackKind attack_kind_from_string(const std::string& s) {
    if (s == "none") return AttackKind::None;
    if (s == "rmp") return AttackKind::Rmp;
    if (s == "ssc") return AttackKind::Ssc;
    if (s == "sdc") return AttackKind::Sdc;
    if (s == "cod") return AttackKind::Cod;
    throw InputError("unknown attack kind '" + s + "' (expected none|rmp|ssc|sdc|cod)");
}

std::string to_string(Precision p) { return p == Precision::F32 ? "f32" : "f64"; }

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw InputError("config: " + msg); };
    if (train_images.empty() || train_labels.empty()) fail("train_images/train_labels not set");
    if (test_images.empty() || test_labels.empty()) fail("test_images/test_labels not set");
    if (output_dir.empty()) fail("output_dir not set");
    if (num_nodes < 2) fail("num_nodes must be >= 2");
    if (topology != "static_line") fail("topology must be static_line");
    if (!(lambda > 0.0) || lambda > 1.0) fail("lambda must lie in (0,1]");
    if (learning_rate < 0.0) fail("learning_rate must be >= 0");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (total_epochs < 0) fail("total_epochs must be >= 0");
    if (eval_interval < 1) fail("eval_interval must be >= 1");
    if (self_train_epochs < 0) fail("self_train_epochs must be >= 0");
    if (!(subset_fraction > 0.0) || subset_fraction > 1.0)
        fail("subset_fraction must lie in (0,1]");
    if (confusion_interval < 0) fail("confusion_interval must be >= 0");
    if (snapshot_interval < 0) fail("snapshot_interval must be >= 0");
    if (attack_kind != AttackKind::None) {
        if (attack_start < 0) fail("attack_start must be >= 0");
        if (attack_end < attack_start)
            fail("attack_end (" + std::to_string(attack_end) + ") is before attack_start (" +
                 std::to_string(attack_start) + ")");
        if (attack_end > total_epochs) fail("attack_end exceeds total_epochs");
        if (attack_mount_node < 0 || attack_mount_node >= num_nodes)
            fail("attack_mount_node outside [0," + std::to_string(num_nodes - 1) + "]");
        if ((attack_kind == AttackKind::Ssc || attack_kind == AttackKind::Sdc) &&
            attack_pair_a == attack_pair_b)
            fail("attack_pair classes must differ");
        if (attack_kind == AttackKind::Cod && attack_target == attack_override)
            fail("attack_target must differ from attack_override");
    }
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw InputError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& source_name) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    std::map<std::string, int> seen;

    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError(source_name + ":" + std::to_string(lineno) +
                             ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw InputError(source_name + ":" + std::to_string(lineno) + ": empty key or value");
        if (seen.count(key))
            throw InputError(source_name + ":" + std::to_string(lineno) + ": duplicate key '" +
                             key + "' (first at line " + std::to_string(seen[key]) + ")");
        seen[key] = lineno;

        auto bad_value = [&](const std::string& what) {
            return InputError(source_name + ":" + std::to_string(lineno) + ": key '" + key +
                              "': " + what);
        };
        try {
            if (key == "train_images") cfg.train_images = val;
            else if (key == "train_labels") cfg.train_labels = val;
            else if (key == "test_images") cfg.test_images = val;
            else if (key == "test_labels") cfg.test_labels = val;
            else if (key == "output_dir") cfg.output_dir = val;
            else if (key == "num_nodes") cfg.num_nodes = std::stoi(val);
            else if (key == "topology") cfg.topology = val;
            else if (key == "lambda") cfg.lambda = std::stod(val);
            else if (key == "learning_rate") cfg.learning_rate = std::stod(val);
            else if (key == "batch_size") cfg.batch_size = std::stoi(val);
            else if (key == "total_epochs") cfg.total_epochs = std::stoi(val);
            else if (key == "eval_interval") cfg.eval_interval = std::stoi(val);
            else if (key == "master_seed") cfg.master_seed = std::stoull(val);
            else if (key == "precision") {
                if (val == "f32") cfg.precision = Precision::F32;
                else if (val == "f64") cfg.precision = Precision::F64;
                else throw bad_value("expected f32 or f64");
            }
            else if (key == "attack_kind") cfg.attack_kind = attack_kind_from_string(val);
            else if (key == "attack_pair") {
                const auto comma = val.find(',');
                if (comma == std::string::npos) throw bad_value("expected 'a,b'");
                cfg.attack_pair_a = std::stoi(trim(val.substr(0, comma)));
                cfg.attack_pair_b = std::stoi(trim(val.substr(comma + 1)));
            }
            else if (key == "attack_target") cfg.attack_target = std::stoi(val);
            else if (key == "attack_override") cfg.attack_override = std::stoi(val);
            else if (key == "attack_mount_node") cfg.attack_mount_node = std::stoi(val);
            else if (key == "attack_start") cfg.attack_start = std::stoi(val);
            else if (key == "attack_end") cfg.attack_end = std::stoi(val);
            else if (key == "poison_model_path") cfg.poison_model_path = val;
            else if (key == "attack_seed") cfg.attack_seed = std::stoull(val);
            else if (key == "shared_init") cfg.shared_init = parse_bool(val, key);
            else if (key == "reset_optimizer_per_epoch")
                cfg.reset_optimizer_per_epoch = parse_bool(val, key);
            else if (key == "self_train_epochs") cfg.self_train_epochs = std::stoi(val);
            else if (key == "subset_fraction") cfg.subset_fraction = std::stod(val);
            else if (key == "confusion_interval") cfg.confusion_interval = std::stoi(val);
            else if (key == "snapshot_interval") cfg.snapshot_interval = std::stoi(val);
            else
                throw InputError(source_name + ":" + std::to_string(lineno) +
                                 ": unknown key '" + key + "'");
        } catch (const std::invalid_argument& e) {
            if (dynamic_cast<const InputError*>(&e)) throw;
            throw bad_value("cannot parse '" + val + "'");
        } catch (const std::out_of_range&) {
            throw bad_value("value '" + val + "' out of range");
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot open config file " + path.string());
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return parse_config_text(text, path.string());
}

}  // namespace wafl
