#include "melseq/train/config.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace melseq::train {

void TrainConfig::validate() const {
    if (lr <= 0.0) throw std::invalid_argument("config: lr must be positive");
    if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    if (!(0.0 <= tf_end && tf_end <= tf_start && tf_start <= 1.0))
        throw std::invalid_argument("config: need 0 <= tf_end <= tf_start <= 1");
    if (guided_weight < 0.0) throw std::invalid_argument("config: guided_weight must be >= 0");
    if (guided_g <= 0.0) throw std::invalid_argument("config: guided_g must be positive");
    if (d < 1 || r < 1) throw std::invalid_argument("config: d and r must be positive");
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

TrainConfig parse_train_config(const std::string& text) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected `key = value`, got: " + line);
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "lr") cfg.lr = std::stod(val);
            else if (key == "batch_size") cfg.batch_size = std::stoi(val);
            else if (key == "epochs") cfg.epochs = std::stoi(val);
            else if (key == "tf_start") cfg.tf_start = std::stod(val);
            else if (key == "tf_end") cfg.tf_end = std::stod(val);
            else if (key == "tf_anneal_epochs") cfg.tf_anneal_epochs = std::stoi(val);
            else if (key == "guided_weight") cfg.guided_weight = std::stod(val);
            else if (key == "guided_g") cfg.guided_g = std::stod(val);
            else if (key == "grad_clip") cfg.grad_clip = std::stod(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "d") cfg.d = std::stoi(val);
            else if (key == "r") cfg.r = std::stoi(val);
            else if (key == "checkpoint_interval") cfg.checkpoint_interval = std::stoi(val);
            else
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": unknown key `" + key + "`");
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception&) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": bad value for `" + key + "`: " + val);
        }
    }
    cfg.validate();
    return cfg;
}

TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_train_config(buf.str());
}

std::string format_train_config(const TrainConfig& cfg) {
    std::ostringstream out;
    out.precision(17);
    out << "lr = " << cfg.lr << "\n"
        << "batch_size = " << cfg.batch_size << "\n"
        << "epochs = " << cfg.epochs << "\n"
        << "tf_start = " << cfg.tf_start << "\n"
        << "tf_end = " << cfg.tf_end << "\n"
        << "tf_anneal_epochs = " << cfg.tf_anneal_epochs << "\n"
        << "guided_weight = " << cfg.guided_weight << "\n"
        << "guided_g = " << cfg.guided_g << "\n"
        << "grad_clip = " << cfg.grad_clip << "\n"
        << "seed = " << cfg.seed << "\n"
        << "d = " << cfg.d << "\n"
        << "r = " << cfg.r << "\n"
        << "checkpoint_interval = " << cfg.checkpoint_interval << "\n";
    return out.str();
}

}  // namespace melseq::train
