#include "melseq/eval/mos.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace melseq::eval {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<Rating> parse_ratings(const std::string& text) {
    std::vector<Rating> out;
    std::set<std::pair<std::string, std::string>> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        auto c1 = line.find(',');
        auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos)
            throw std::invalid_argument("ratings line " + std::to_string(lineno) +
                                        ": expected `sample_id,rater_id,rating`");
        Rating r;
        r.sample_id = trim(line.substr(0, c1));
        r.rater_id = trim(line.substr(c1 + 1, c2 - c1 - 1));
        std::string val = trim(line.substr(c2 + 1));
        std::size_t used = 0;
        try {
            r.rating = std::stoi(val, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != val.size() || r.rating < 1 || r.rating > 5)
            throw std::invalid_argument("ratings line " + std::to_string(lineno) +
                                        ": rating must be an integer in [1,5], got `" + val + "`");
        if (!seen.insert({r.sample_id, r.rater_id}).second)
            throw std::invalid_argument("ratings line " + std::to_string(lineno) +
                                        ": duplicate pair (" + r.sample_id + ", " + r.rater_id +
                                        ")");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<Rating> load_ratings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open ratings file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_ratings(buf.str());
}

MosStats mos_stats(std::span<const Rating> ratings) {
    if (ratings.empty()) throw std::invalid_argument("mos_stats: no ratings");
    MosStats s;
    s.n = static_cast<int>(ratings.size());
    for (const Rating& r : ratings) s.mean += r.rating;
    s.mean /= s.n;
    if (s.n > 1) {
        double ss = 0.0;
        for (const Rating& r : ratings) ss += (r.rating - s.mean) * (r.rating - s.mean);
        s.sigma = std::sqrt(ss / (s.n - 1));
    }
    s.halfwidth = 1.96 * s.sigma / std::sqrt(static_cast<double>(s.n));
    return s;
}

std::string format_mos(const MosStats& s) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f ± %.3f", s.mean, s.halfwidth);
    return buf;
}

}  // namespace melseq::eval
